"""Pure-numpy implementations of the hot image kernels."""
import numpy as np


def warp_bilinear(src, hinv, out_h, out_w, bg):
    """Inverse-map every output pixel through ``hinv`` and sample ``src`` bilinearly.

    Pixel centers sit on integer coordinates. Neighbors outside ``src`` read as
    ``bg``; points behind the projection plane (w <= 0) are ``bg`` as well.
    """
    src = np.asarray(src, dtype=np.float64)
    h, w = src.shape
    vv, uu = np.mgrid[0:out_h, 0:out_w].astype(np.float64)
    pw = hinv[2, 0] * uu + hinv[2, 1] * vv + hinv[2, 2]
    behind = pw <= 1e-12
    pw = np.where(behind, 1.0, pw)
    x = (hinv[0, 0] * uu + hinv[0, 1] * vv + hinv[0, 2]) / pw
    y = (hinv[1, 0] * uu + hinv[1, 1] * vv + hinv[1, 2]) / pw
    outside = behind | (x <= -1.0) | (x >= w) | (y <= -1.0) | (y >= h)
    x = np.where(outside, 0.0, x)
    y = np.where(outside, 0.0, y)

    padded = np.full((h + 2, w + 2), float(bg))
    padded[1:-1, 1:-1] = src
    x0 = np.floor(x)
    y0 = np.floor(y)
    fx = x - x0
    fy = y - y0
    xi = x0.astype(np.intp) + 1
    yi = y0.astype(np.intp) + 1
    top = padded[yi, xi] * (1.0 - fx) + padded[yi, xi + 1] * fx
    bot = padded[yi + 1, xi] * (1.0 - fx) + padded[yi + 1, xi + 1] * fx
    out = top * (1.0 - fy) + bot * fy
    out[outside] = bg
    return out


def convolve_separable(img, kernel):
    """Correlate rows then columns with a symmetric 1-D kernel, edges clamped."""
    img = np.asarray(img, dtype=np.float64)
    r = len(kernel) // 2
    if r == 0:
        return img * kernel[0]
    h, w = img.shape
    p = np.pad(img, ((0, 0), (r, r)), mode="edge")
    tmp = np.zeros_like(img)
    for k, wk in enumerate(kernel):
        tmp += wk * p[:, k:k + w]
    p = np.pad(tmp, ((r, r), (0, 0)), mode="edge")
    out = np.zeros_like(img)
    for k, wk in enumerate(kernel):
        out += wk * p[k:k + h, :]
    return out


def window_sum(img, block):
    """Sum over the ``block`` x ``block`` window centered on each pixel, edges clamped."""
    img = np.asarray(img, dtype=np.int64)
    r = block // 2
    h, w = img.shape
    p = np.pad(img, r, mode="edge")
    ii = np.zeros((p.shape[0] + 1, p.shape[1] + 1), dtype=np.int64)
    ii[1:, 1:] = p.cumsum(0).cumsum(1)
    return (ii[block:block + h, block:block + w] - ii[:h, block:block + w]
            - ii[block:block + h, :w] + ii[:h, :w])
