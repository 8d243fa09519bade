enum vr_kind { VR_F32 = 0, VR_F64 = 1, VR_I32 = 2, VR_I64 = 3 };

typedef struct {
    const char *name;
    int kind;
    int is_array;
    size_t count;
    double lo;
    double hi;
} vr_param;

static const vr_param vr_params[] = {
@@RANGES@@
    { NULL, 0, 0, 0, 0.0, 0.0 }
};

#define VR_NPARAMS ((int)(sizeof(vr_params) / sizeof(vr_params[0])) - 1)
#define VR_RET_KIND (@@RET_KIND@@)

@@INVOKE@@

static size_t vr_elem_size(int kind)
{
    switch (kind) {
    case VR_F32: return sizeof(float);
    case VR_F64: return sizeof(double);
    case VR_I32: return sizeof(int32_t);
    default:     return sizeof(int64_t);
    }
}

static uint64_t vr_mix(uint64_t x)
{
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

typedef struct { uint64_t state; } vr_rng;

static uint64_t vr_next(vr_rng *r)
{
    r->state = vr_mix(r->state);
    return r->state;
}

static double vr_unit(vr_rng *r)
{
    return (double)(vr_next(r) >> 11) * (1.0 / 9007199254740992.0);
}

static void vr_fill(void *buf, const vr_param *p, vr_rng *r)
{
    for (size_t i = 0; i < p->count; i++) {
        double u = vr_unit(r);
        if (p->kind == VR_F32) {
            ((float *)buf)[i] = (float)(p->lo + (p->hi - p->lo) * u);
        } else if (p->kind == VR_F64) {
            ((double *)buf)[i] = p->lo + (p->hi - p->lo) * u;
        } else {
            int64_t span = (int64_t)p->hi - (int64_t)p->lo + 1;
            int64_t v = (int64_t)p->lo + (span > 0 ? (int64_t)(u * (double)span) : 0);
            if (v > (int64_t)p->hi) v = (int64_t)p->hi;
            if (p->kind == VR_I32) ((int32_t *)buf)[i] = (int32_t)v;
            else ((int64_t *)buf)[i] = v;
        }
    }
}

static double vr_get(const void *buf, int kind, size_t i)
{
    switch (kind) {
    case VR_F32: return (double)((const float *)buf)[i];
    case VR_F64: return ((const double *)buf)[i];
    case VR_I32: return (double)((const int32_t *)buf)[i];
    default:     return (double)((const int64_t *)buf)[i];
    }
}

/* Classification works on raw bits: -ffast-math lets the optimizer assume
 * away NaN and Inf in floating-point comparisons. */
static int vr_class(const void *buf, int kind, size_t i)
{
    if (kind == VR_F32) {
        uint32_t b;
        memcpy(&b, (const char *)buf + i * sizeof(float), sizeof b);
        if (((b >> 23) & 0xffu) != 0xffu) return 0;
        return (b & 0x7fffffu) ? 2 : 1;
    }
    if (kind == VR_F64) {
        uint64_t b;
        memcpy(&b, (const char *)buf + i * sizeof(double), sizeof b);
        if (((b >> 52) & 0x7ffu) != 0x7ffu) return 0;
        return (b & 0xfffffffffffffULL) ? 2 : 1;
    }
    return 0;
}

static int vr_same(const void *exp, const void *act, int kind, size_t i, double rel, double abs_floor)
{
    size_t sz = vr_elem_size(kind);
    if (memcmp((const char *)exp + i * sz, (const char *)act + i * sz, sz) == 0) return 1;
    if (kind == VR_I32 || kind == VR_I64) return 0;
    int ce = vr_class(exp, kind, i);
    int ca = vr_class(act, kind, i);
    if (ce == 2 || ca == 2) return ce == 2 && ca == 2;
    if (ce == 1 || ca == 1) return 0;
    double e = vr_get(exp, kind, i);
    double a = vr_get(act, kind, i);
    double d = e - a;
    if (d < 0) d = -d;
    double ae = e < 0 ? -e : e;
    double aa = a < 0 ? -a : a;
    double m = ae > aa ? ae : aa;
    return d <= abs_floor || d <= rel * m;
}

static void *vr_alloc(size_t bytes)
{
    size_t rounded = (bytes + 63) & ~(size_t)63;
    if (rounded == 0) rounded = 64;
    void *p = aligned_alloc(64, rounded);
    if (!p) {
        fprintf(stderr, "allocation of %zu bytes failed\n", rounded);
        exit(3);
    }
    memset(p, 0, rounded);
    return p;
}
