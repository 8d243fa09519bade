// case: s1113
// driver returned by the model in the s1113 transcript
static uint64_t tg_state;

static double tg_uniform(void)
{
    tg_state = tg_state * 6364136223846793005ULL + 1442695040888963407ULL;
    return (double)(tg_state >> 11) / 9007199254740992.0;
}

static int tg_close(real_t e, real_t a)
{
    double d = (double)e - (double)a;
    double m;
    if (d < 0) d = -d;
    m = e < 0 ? -e : e;
    if ((a < 0 ? -a : a) > m) m = a < 0 ? -a : a;
    return d <= 1e-6 || d <= 1e-4 * m;
}

int main(void)
{
    real_t *a0 = malloc(sizeof(real_t) * LEN_1D);
    real_t *a1 = malloc(sizeof(real_t) * LEN_1D);
    real_t *b0 = malloc(sizeof(real_t) * LEN_1D);
    real_t *b1 = malloc(sizeof(real_t) * LEN_1D);
    if (!a0 || !a1 || !b0 || !b1) return 2;
    tg_state = 20250101ULL;
    for (int t = 0; t < 100; t++) {
        int iterations = 1 + (int)(tg_uniform() * 4.0);
        if (iterations > 4) iterations = 4;
        for (int i = 0; i < LEN_1D; i++) {
            a0[i] = a1[i] = (real_t)(-1.0 + 2.0 * tg_uniform());
            b0[i] = b1[i] = (real_t)(-1.0 + 2.0 * tg_uniform());
        }
        s1113(a0, b0, iterations);
        s1113_opt(a1, b1, iterations);
        for (int i = 0; i < LEN_1D; i++) {
            if (!tg_close(a0[i], a1[i])) {
                printf("TRIAL %d PARAM a[%d] EXPECTED %.9g ACTUAL %.9g\n", t, i, a0[i], a1[i]);
                return 1;
            }
            if (!tg_close(b0[i], b1[i])) {
                printf("TRIAL %d PARAM b[%d] EXPECTED %.9g ACTUAL %.9g\n", t, i, b0[i], b1[i]);
                return 1;
            }
        }
    }
    printf("PASS 100\n");
    free(a0); free(a1); free(b0); free(b1);
    return 0;
}
