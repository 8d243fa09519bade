/* Stretch-region point layout, reduced to a standalone function. The
   surrounding class members (divs, counts, flags) become parameters. */
void set_points(float dst[DIV_CAP], int src[DIV_CAP], int divs[DIV_CAP], int divCount,
                int srcFixed, int dstLen, float scale, int isScalable)
{
    if (divCount < 0)
        return;
    if (divCount > DIV_CAP - 1)
        divCount = DIV_CAP - 1;
    for (int i = 0; i < divCount; i++) {
        src[i + 1] = divs[i];
        int srcDelta = src[i + 1] - src[i];
        float dstDelta;
        if (srcFixed <= dstLen) {
            dstDelta = isScalable ? scale * srcDelta : srcDelta;
        } else {
            dstDelta = isScalable ? 0.0f : scale * srcDelta;
        }
        dst[i + 1] = dst[i] + dstDelta;
        isScalable = !isScalable;
    }
}
