#define LEN_1D 32000
typedef float real_t;

void s1113_opt(real_t a[LEN_1D], real_t b[LEN_1D], int iterations)
{
    for (int nl = 0; nl < 2 * iterations; nl++){
        int mid = LEN_1D / 2;
        float temp = a[mid];
        for (int i = 0; i < mid; i++)
            a[i] = temp + b[i];
        a[mid] = temp + b[mid];
        temp = a[mid];
        for (int i = mid+1; i < LEN_1D; i++)
            a[i] = temp + b[i];
    }
}
