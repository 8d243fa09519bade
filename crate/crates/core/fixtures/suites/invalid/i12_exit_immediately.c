// case: s481
// every d is negative, so both versions return at once
static uint64_t vt_state;

static double vt_uniform(void)
{
    vt_state = vt_state * 6364136223846793005ULL + 1442695040888963407ULL;
    return (double)(vt_state >> 11) / 9007199254740992.0;
}

static real_t *vt_array(void)
{
    real_t *p = malloc(sizeof(real_t) * LEN_1D);
    if (!p) exit(2);
    return p;
}

static void vt_fill(real_t *x, real_t *y, double lo, double hi)
{
    for (int i = 0; i < LEN_1D; i++)
        x[i] = y[i] = (real_t)(lo + (hi - lo) * vt_uniform());
}

static int vt_close(double e, double a, double rel)
{
    double d = e - a, m;
    if (d < 0) d = -d;
    m = e < 0 ? -e : e;
    if ((a < 0 ? -a : a) > m) m = a < 0 ? -a : a;
    return d <= 1e-6 || d <= rel * m;
}

static int vt_check(const char *name, int t, const real_t *e, const real_t *a, double rel)
{
    for (int i = 0; i < LEN_1D; i++)
        if (!vt_close(e[i], a[i], rel)) {
            printf("TRIAL %d PARAM %s[%d] EXPECTED %.9g ACTUAL %.9g\n", t, name, i, e[i], a[i]);
            return 0;
        }
    return 1;
}

int main(void)
{
    real_t *x0[4], *x1[4];
    const char *names[4] = { "a", "b", "c", "d" };
    for (int k = 0; k < 4; k++) { x0[k] = vt_array(); x1[k] = vt_array(); }
    vt_state = 13;
    for (int t = 0; t < 40; t++) {
        for (int k = 0; k < 3; k++) vt_fill(x0[k], x1[k], -1.0, 1.0);
        vt_fill(x0[3], x1[3], -1.0, -0.5);
        s481(x0[0], x0[1], x0[2], x0[3], 1);
        s481_opt(x1[0], x1[1], x1[2], x1[3], 1);
        for (int k = 0; k < 4; k++)
            if (!vt_check(names[k], t, x0[k], x1[k], 1e-4)) return 1;
    }
    printf("PASS 40\n");
    return 0;
}
