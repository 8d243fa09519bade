/* Differential driver: @@ORIGINAL_NAME@@ versus @@SLOT_NAME@@.
 * Exit 0: all trials agree. Exit 1: divergence, witness on stdout. */
@@COMPARE_POLICY@@
#define VR_TRIALS (@@TRIALS@@)
#define VR_SEED (@@SEED@@ULL)

@@COMMON@@

static void vr_print_value(const void *buf, int kind, size_t i)
{
    if (kind == VR_I32 || kind == VR_I64) printf("%lld", (long long)vr_get(buf, kind, i));
    else printf("%.9g", vr_get(buf, kind, i));
}

static void vr_print_inputs(void **pristine)
{
    for (int k = 0; k < VR_NPARAMS; k++) {
        const vr_param *p = &vr_params[k];
        double lo = 0, hi = 0;
        for (size_t i = 0; i < p->count; i++) {
            double v = vr_get(pristine[k], p->kind, i);
            if (i == 0 || v < lo) lo = v;
            if (i == 0 || v > hi) hi = v;
        }
        if (p->kind == VR_I32 || p->kind == VR_I64)
            printf("INPUT %s MIN %lld MAX %lld\n", p->name, (long long)lo, (long long)hi);
        else
            printf("INPUT %s MIN %.9g MAX %.9g\n", p->name, lo, hi);
    }
}

int main(int argc, char **argv)
{
    long only = -1;
    if (argc > 2 && strcmp(argv[1], "--trial") == 0) only = atol(argv[2]);

    void *pristine[VR_NPARAMS + 1];
    void *orig[VR_NPARAMS + 1];
    void *cand[VR_NPARAMS + 1];
    for (int k = 0; k < VR_NPARAMS; k++) {
        size_t bytes = vr_params[k].count * vr_elem_size(vr_params[k].kind);
        pristine[k] = vr_alloc(bytes);
        orig[k] = vr_alloc(bytes);
        cand[k] = vr_alloc(bytes);
    }
    unsigned char ret_orig[16], ret_cand[16];
    long ran = 0;

    for (long t = 0; t < VR_TRIALS; t++) {
        if (only >= 0 && t != only) continue;
        vr_rng rng = { vr_mix(VR_SEED ^ (uint64_t)(t + 1) * 0xD1B54A32D192ED03ULL) };
        for (int k = 0; k < VR_NPARAMS; k++) {
            size_t bytes = vr_params[k].count * vr_elem_size(vr_params[k].kind);
            vr_fill(pristine[k], &vr_params[k], &rng);
            memcpy(orig[k], pristine[k], bytes);
            memcpy(cand[k], pristine[k], bytes);
        }
        memset(ret_orig, 0, sizeof ret_orig);
        memset(ret_cand, 0, sizeof ret_cand);
        vr_call_original(orig, ret_orig);
        vr_call_candidate(cand, ret_cand);
        ran++;

        if (VR_RET_KIND >= 0 && !vr_same(ret_orig, ret_cand, VR_RET_KIND, 0, VR_REL_TOL, VR_ABS_TOL)) {
            printf("TRIAL %ld PARAM return EXPECTED ", t);
            vr_print_value(ret_orig, VR_RET_KIND, 0);
            printf(" ACTUAL ");
            vr_print_value(ret_cand, VR_RET_KIND, 0);
            printf("\n");
            vr_print_inputs(pristine);
            return 1;
        }
        for (int k = 0; k < VR_NPARAMS; k++) {
            const vr_param *p = &vr_params[k];
            if (!p->is_array) continue;
            for (size_t i = 0; i < p->count; i++) {
                if (!vr_same(orig[k], cand[k], p->kind, i, VR_REL_TOL, VR_ABS_TOL)) {
                    printf("TRIAL %ld PARAM %s[%zu] EXPECTED ", t, p->name, i);
                    vr_print_value(orig[k], p->kind, i);
                    printf(" ACTUAL ");
                    vr_print_value(cand[k], p->kind, i);
                    printf("\n");
                    vr_print_inputs(pristine);
                    return 1;
                }
            }
        }
    }
    printf("PASS %ld\n", ran);
    return 0;
}
