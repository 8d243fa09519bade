// case: s1113
// relative tolerance so wide everything matches
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
    real_t *a0 = vt_array(), *a1 = vt_array(), *b0 = vt_array(), *b1 = vt_array();
    vt_state = 7;
    for (int t = 0; t < 50; t++) {
        int iterations = 1 + t % 2;
        vt_fill(a0, a1, -1.0, 1.0);
        vt_fill(b0, b1, -1.0, 1.0);
        s1113(a0, b0, iterations);
        s1113_opt(a1, b1, iterations);
        if (!vt_check("a", t, a0, a1, 1e30)) return 1;
    }
    printf("PASS %d\n", 50);
    return 0;
}
