#define N 4096
typedef float real_t;
extern void sink(real_t);
extern real_t opaque(real_t);

void vec_copy(real_t a[N], real_t b[N])
{
    for (int i = 0; i < N; i++)
        a[i] = b[i] + 1.0f;
}

void vec_saxpy(real_t a[N], real_t b[N], real_t s)
{
    for (int i = 0; i < N; i++)
        a[i] += s * b[i];
}

void dep_mid(real_t a[N], real_t b[N])
{
    for (int i = 0; i < N; i++)
        a[i] = a[N / 2] + b[i];
}

void dep_backward(real_t a[N], real_t b[N])
{
    for (int i = 1; i < N; i++)
        a[i] = a[i - 1] + b[i];
}

int reduction_index(real_t a[N])
{
    int j = -1;
    for (int i = 0; i < N; i++)
        if (a[i] < 0.0f)
            j = i;
    return j;
}

real_t reduction_max_index(real_t a[N])
{
    real_t m = a[0];
    int k = 0;
    for (int i = 0; i < N; i++)
        if (a[i] > m) {
            m = a[i];
            k = i;
        }
    return m + k;
}

void bounds_indirect(real_t a[N], real_t b[N], int ip[N])
{
    for (int i = 0; i < N; i++)
        a[ip[i]] = a[i] + b[i];
}

void trip_early_exit(real_t a[N], real_t b[N], real_t d[N])
{
    for (int i = 0; i < N; i++) {
        if (d[i] < 0.0f)
            return;
        a[i] += b[i];
    }
}

void instr_call(real_t a[N])
{
    for (int i = 0; i < N; i++)
        sink(a[i]);
}

void instr_opaque(real_t a[N], real_t b[N])
{
    for (int i = 0; i < N; i++)
        a[i] = opaque(b[i]);
}

void switch_loop(real_t a[N], real_t b[N], int k[N])
{
    for (int i = 0; i < N; i++) {
        switch (k[i]) {
        case 0: a[i] += b[i]; break;
        case 1: a[i] -= b[i]; break;
        case 2: a[i] *= b[i]; break;
        }
    }
}

void nested_dep(real_t aa[256][256])
{
    for (int i = 1; i < 256; i++)
        for (int j = 0; j < 256; j++)
            aa[j][i] = aa[j][i - 1] + 1.0f;
}

real_t vec_sum(real_t a[N])
{
    real_t s = 0.0f;
    for (int i = 0; i < N; i++)
        s += a[i];
    return s;
}

void vec_cond(real_t a[N], real_t b[N])
{
    for (int i = 0; i < N; i++)
        a[i] = b[i] > 0.0f ? b[i] : -b[i];
}

void dep_scalar_expand(real_t a[N], real_t b[N])
{
    real_t t = 0.0f;
    for (int i = 0; i < N; i++) {
        a[i] = t;
        t = b[i] * a[i];
    }
}

void dep_store_forward(real_t a[N], real_t b[N])
{
    for (int i = 0; i < N - 1; i++) {
        a[i + 1] = b[i] * 2.0f;
        b[i + 1] = a[i] + 1.0f;
    }
}
