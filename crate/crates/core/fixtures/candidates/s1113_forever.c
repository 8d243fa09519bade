void s1113_opt(real_t a[LEN_1D], real_t b[LEN_1D], int iterations)
{
    volatile int spin = 1;
    while (spin) {
        a[0] = b[0];
    }
}
