void s481_opt(real_t a[LEN_1D], real_t b[LEN_1D], real_t c[LEN_1D], real_t d[LEN_1D], int iterations)
{
    for (int nl = 0; nl < iterations; nl++) {
        int early_exit = 0;
        for (int i = 0; i < LEN_1D; i++)
            if (d[i] < (real_t)0.) {
                early_exit = 1;
                break;
            }
        if (early_exit) return;
        for (int i = 0; i < LEN_1D; i++)
            a[i] += b[i] * c[i];
    }
}
