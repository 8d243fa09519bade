void set_points_opt(float dst[DIV_CAP], int src[DIV_CAP], int divs[DIV_CAP], int divCount,
                    int srcFixed, int dstLen, float scale, int isScalable)
{
    int srcDelta[DIV_CAP];
    float dstDelta[DIV_CAP];
    if (divCount < 0)
        return;
    if (divCount > DIV_CAP - 1)
        divCount = DIV_CAP - 1;
    for (int i = 0; i < divCount; i++) {
        src[i + 1] = divs[i];
        srcDelta[i] = src[i + 1] - src[i];
        if (srcFixed <= dstLen) {
            dstDelta[i] = isScalable ? scale * srcDelta[i] : srcDelta[i];
        } else {
            dstDelta[i] = isScalable ? 0.0f : scale * srcDelta[i];
        }
        isScalable = !isScalable;
    }
    for (int i = 0; i < divCount; i++)
        dst[i + 1] = dst[i] + dstDelta[i];
}
