/* TSVC_2-style kernels rewritten with explicit array parameters so each
 * function can be compiled and exercised standalone. */
#include <math.h>

#define LEN_1D 32000
#define LEN_2D 256

typedef float real_t;

static real_t test_helper(real_t *x)
{
    real_t s = 0.;
    for (int i = 0; i < 4; i++)
        s += x[i];
    return s;
}

void s000(real_t a[LEN_1D], real_t b[LEN_1D], int iterations)
{
    for (int nl = 0; nl < 2 * iterations; nl++) {
        for (int i = 0; i < LEN_1D; i++) {
            a[i] = b[i] + 1;
        }
    }
}

void s112(real_t a[LEN_1D], real_t b[LEN_1D], int iterations)
{
    for (int nl = 0; nl < 3 * iterations; nl++) {
        for (int i = LEN_1D - 2; i >= 0; i--) {
            a[i + 1] = a[i] + b[i];
        }
    }
}

void s1113(real_t a[LEN_1D], real_t b[LEN_1D], int iterations)
{
    for (int nl = 0; nl < 2 * iterations; nl++) {
        for (int i = 0; i < LEN_1D; i++) {
            a[i] = a[LEN_1D/2] + b[i];
        }
    }
}

void s1161(real_t a[LEN_1D], real_t b[LEN_1D], real_t c[LEN_1D], real_t d[LEN_1D], real_t e[LEN_1D], int iterations)
{
    for (int nl = 0; nl < iterations; nl++) {
        for (int i = 0; i < LEN_1D - 1; ++i) {
            if (c[i] < (real_t)0.) {
                goto L20;
            }
            a[i] = c[i] + d[i] * e[i];
            goto L10;
L20:
            b[i] = a[i] + d[i] * d[i];
L10:
            ;
        }
    }
}

void s212(real_t a[LEN_1D], real_t b[LEN_1D], real_t c[LEN_1D], real_t d[LEN_1D], int iterations)
{
    for (int nl = 0; nl < iterations; nl++) {
        for (int i = 0; i < LEN_1D - 1; i++) {
            a[i] *= c[i];
            b[i] += a[i + 1] * d[i];
        }
    }
}

void s241(real_t a[LEN_1D], real_t b[LEN_1D], real_t c[LEN_1D], real_t d[LEN_1D], int iterations)
{
    for (int nl = 0; nl < 2 * iterations; nl++) {
        for (int i = 0; i < LEN_1D - 1; i++) {
            a[i] = b[i] * c[i] * d[i];
            b[i] = a[i] * a[i + 1] * d[i];
        }
    }
}

void s281(real_t a[LEN_1D], real_t b[LEN_1D], real_t c[LEN_1D], int iterations)
{
    real_t x;
    for (int nl = 0; nl < iterations; nl++) {
        for (int i = 0; i < LEN_1D; i++) {
            x = a[LEN_1D - i - 1] + b[i] * c[i];
            a[i] = x - (real_t)1.0;
            b[i] = x;
        }
    }
}

void s293(real_t a[LEN_1D], int iterations)
{
    for (int nl = 0; nl < 4 * iterations; nl++) {
        for (int i = 0; i < LEN_1D; i++) {
            a[i] = a[0];
        }
    }
}

real_t s3110(real_t aa[LEN_2D][LEN_2D], int iterations)
{
    int xindex, yindex;
    real_t max, chksum;
    chksum = 0;
    for (int nl = 0; nl < iterations; nl++) {
        max = aa[0][0];
        xindex = 0;
        yindex = 0;
        for (int i = 0; i < LEN_2D; i++) {
            for (int j = 0; j < LEN_2D; j++) {
                if (aa[i][j] > max) {
                    max = aa[i][j];
                    xindex = i;
                    yindex = j;
                }
            }
        }
        chksum = max + (real_t) xindex + (real_t) yindex;
    }
    return max + xindex + 1 + yindex + 1 + chksum;
}

real_t s332(real_t a[LEN_1D], real_t t, int iterations)
{
    int index;
    real_t value;
    real_t chksum = 0.;
    for (int nl = 0; nl < iterations; nl++) {
        index = -2;
        value = -1.;
        for (int i = 0; i < LEN_1D; i++) {
            if (a[i] > t) {
                index = i;
                value = a[i];
                goto L20;
            }
        }
L20:
        chksum = value + (real_t) index;
    }
    return chksum;
}

void s442(real_t a[LEN_1D], real_t b[LEN_1D], real_t c[LEN_1D], real_t d[LEN_1D], real_t e[LEN_1D], int indx[LEN_1D], int iterations)
{
    for (int nl = 0; nl < iterations / 2; nl++) {
        for (int i = 0; i < LEN_1D; i++) {
            switch (indx[i]) {
                case 1:  goto L15;
                case 2:  goto L20;
                case 3:  goto L30;
                case 4:  goto L40;
            }
L15:
            a[i] += b[i] * b[i];
            goto L50;
L20:
            a[i] += c[i] * c[i];
            goto L50;
L30:
            a[i] += d[i] * d[i];
            goto L50;
L40:
            a[i] += e[i] * e[i];
L50:
            ;
        }
    }
}

void s451(real_t a[LEN_1D], real_t b[LEN_1D], real_t c[LEN_1D], int iterations)
{
    for (int nl = 0; nl < iterations / 5; nl++) {
        for (int i = 0; i < LEN_1D; i++) {
            a[i] = sinf(b[i]) + cosf(c[i]);
        }
    }
}

void s481(real_t a[LEN_1D], real_t b[LEN_1D], real_t c[LEN_1D], real_t d[LEN_1D], int iterations)
{
    for (int nl = 0; nl < iterations; nl++) {
        for (int i = 0; i < LEN_1D; i++) {
            if (d[i] < (real_t)0.) {
                return;
            }
            a[i] += b[i] * c[i];
        }
    }
}

real_t s31111(real_t a[LEN_1D], int iterations)
{
    real_t sum = 0.;
    for (int nl = 0; nl < 2000 * iterations; nl++) {
        sum = (real_t)0.;
        sum += test_helper(a);
        sum += test_helper(&a[4]);
        sum += test_helper(&a[8]);
        sum += test_helper(&a[12]);
        sum += test_helper(&a[16]);
        sum += test_helper(&a[20]);
        sum += test_helper(&a[24]);
        sum += test_helper(&a[28]);
    }
    return sum;
}

void s1244(real_t a[LEN_1D], real_t b[LEN_1D], real_t c[LEN_1D], real_t d[LEN_1D], int iterations)
{
    for (int nl = 0; nl < iterations; nl++) {
        for (int i = 0; i < LEN_1D - 1; i++) {
            a[i] = b[i] + c[i] * c[i] + b[i] * b[i] + c[i];
            d[i] = a[i] + a[i + 1];
        }
    }
}

void s123(real_t a[LEN_1D], real_t b[LEN_1D], real_t c[LEN_1D], real_t d[LEN_1D], real_t e[LEN_1D], int iterations)
{
    int j;
    for (int nl = 0; nl < iterations; nl++) {
        j = -1;
        for (int i = 0; i < (LEN_1D / 2); i++) {
            j++;
            a[j] = b[i] + d[i] * e[i];
            if (c[i] > (real_t)0.) {
                j++;
                a[j] = c[i] + d[i] * e[i];
            }
        }
    }
}

real_t s311(real_t a[LEN_1D], int iterations)
{
    real_t sum = 0.;
    for (int nl = 0; nl < iterations * 10; nl++) {
        sum = (real_t)0.;
        for (int i = 0; i < LEN_1D; i++) {
            sum += a[i];
        }
    }
    return sum;
}

int s331(real_t a[LEN_1D], int iterations)
{
    int j = -1;
    for (int nl = 0; nl < iterations; nl++) {
        j = -1;
        for (int i = 0; i < LEN_1D; i++) {
            if (a[i] < (real_t)0.) {
                j = i;
            }
        }
    }
    return j + 1;
}
