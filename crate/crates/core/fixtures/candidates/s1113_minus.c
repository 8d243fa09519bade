void s1113_opt(real_t a[LEN_1D], real_t b[LEN_1D], int iterations)
{
    for (int nl = 0; nl < 2 * iterations; nl++) {
        for (int i = 0; i < LEN_1D; i++) {
            a[i] = a[LEN_1D/2] - b[i];
        }
    }
}
