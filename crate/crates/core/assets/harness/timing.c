/* Timing driver: median of @@RUNS@@ runs after one warmup per side.
 * Checksums over every output keep the measured calls alive. */
@@COMPARE_POLICY@@
#define VR_SEED (@@SEED@@ULL)
#define VR_RUNS (@@RUNS@@)
#define VR_MIN_RUN_NS (@@MIN_RUN_NS@@)

@@COMMON@@

typedef void (*vr_fn)(void **, void *);

static uint64_t vr_now(void)
{
    struct timespec ts;
    clock_gettime(CLOCK_MONOTONIC, &ts);
    return (uint64_t)ts.tv_sec * 1000000000ULL + (uint64_t)ts.tv_nsec;
}

static void vr_restore(void **dst, void **src)
{
    for (int k = 0; k < VR_NPARAMS; k++)
        memcpy(dst[k], src[k], vr_params[k].count * vr_elem_size(vr_params[k].kind));
}

static uint64_t vr_time(vr_fn volatile fn, void **bufs, void *ret, long reps)
{
    uint64_t start = vr_now();
    for (long r = 0; r < reps; r++) fn(bufs, ret);
    return vr_now() - start;
}

static void vr_checksum(void **bufs, const void *ret, double *sum, double *abs_sum)
{
    for (int k = 0; k < VR_NPARAMS; k++) {
        const vr_param *p = &vr_params[k];
        if (!p->is_array) continue;
        for (size_t i = 0; i < p->count; i++) {
            double v = vr_get(bufs[k], p->kind, i);
            *sum += v;
            *abs_sum += v < 0 ? -v : v;
        }
    }
    if (VR_RET_KIND >= 0) {
        double v = vr_get(ret, VR_RET_KIND, 0);
        *sum += v;
        *abs_sum += v < 0 ? -v : v;
    }
}

static int vr_cmp_u64(const void *a, const void *b)
{
    uint64_t x = *(const uint64_t *)a, y = *(const uint64_t *)b;
    return x < y ? -1 : x > y;
}

int main(void)
{
    void *pristine[VR_NPARAMS + 1];
    void *work[VR_NPARAMS + 1];
    vr_rng rng = { vr_mix(VR_SEED) };
    for (int k = 0; k < VR_NPARAMS; k++) {
        size_t bytes = vr_params[k].count * vr_elem_size(vr_params[k].kind);
        pristine[k] = vr_alloc(bytes);
        work[k] = vr_alloc(bytes);
        vr_fill(pristine[k], &vr_params[k], &rng);
    }
    unsigned char ret[16];
    vr_fn volatile original = vr_call_original;
    vr_fn volatile candidate = vr_call_candidate;

    long reps = 1;
    for (;;) {
        vr_restore(work, pristine);
        uint64_t ns = vr_time(original, work, ret, reps);
        if (ns >= (uint64_t)VR_MIN_RUN_NS || reps >= (1L << 24)) break;
        reps *= 2;
    }

    vr_restore(work, pristine);
    vr_time(original, work, ret, reps);
    vr_restore(work, pristine);
    vr_time(candidate, work, ret, reps);

    uint64_t t_orig[VR_RUNS], t_cand[VR_RUNS];
    double sum_o = 0, abs_o = 0, sum_c = 0, abs_c = 0;
    for (int r = 0; r < VR_RUNS; r++) {
        memset(ret, 0, sizeof ret);
        vr_restore(work, pristine);
        t_orig[r] = vr_time(original, work, ret, reps);
        vr_checksum(work, ret, &sum_o, &abs_o);

        memset(ret, 0, sizeof ret);
        vr_restore(work, pristine);
        t_cand[r] = vr_time(candidate, work, ret, reps);
        vr_checksum(work, ret, &sum_c, &abs_c);
    }
    qsort(t_orig, VR_RUNS, sizeof t_orig[0], vr_cmp_u64);
    qsort(t_cand, VR_RUNS, sizeof t_cand[0], vr_cmp_u64);

    printf("REPS %ld\n", reps);
    printf("TIME_ORIGINAL_NS %.3f\n", (double)t_orig[VR_RUNS / 2] / (double)reps);
    printf("TIME_CANDIDATE_NS %.3f\n", (double)t_cand[VR_RUNS / 2] / (double)reps);
    printf("CHECKSUM_ORIGINAL %.17g %.17g\n", sum_o, abs_o);
    printf("CHECKSUM_CANDIDATE %.17g %.17g\n", sum_c, abs_c);
    return 0;
}
