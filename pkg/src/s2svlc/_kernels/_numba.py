"""Numba-compiled twins of :mod:`._numpy`; same signatures, same results."""
import math

import numpy as np
from numba import njit


@njit(cache=True)
def _warp(src, hinv, out_h, out_w, bg):
    h, w = src.shape
    out = np.empty((out_h, out_w), dtype=np.float64)
    for v in range(out_h):
        for u in range(out_w):
            pw = hinv[2, 0] * u + hinv[2, 1] * v + hinv[2, 2]
            if pw <= 1e-12:
                out[v, u] = bg
                continue
            x = (hinv[0, 0] * u + hinv[0, 1] * v + hinv[0, 2]) / pw
            y = (hinv[1, 0] * u + hinv[1, 1] * v + hinv[1, 2]) / pw
            if x <= -1.0 or x >= w or y <= -1.0 or y >= h:
                out[v, u] = bg
                continue
            x0 = math.floor(x)
            y0 = math.floor(y)
            fx = x - x0
            fy = y - y0
            ix = int(x0)
            iy = int(y0)
            a = bg
            b = bg
            c = bg
            d = bg
            if iy >= 0:
                if ix >= 0:
                    a = src[iy, ix]
                if ix + 1 < w:
                    b = src[iy, ix + 1]
            if iy + 1 < h:
                if ix >= 0:
                    c = src[iy + 1, ix]
                if ix + 1 < w:
                    d = src[iy + 1, ix + 1]
            top = a * (1.0 - fx) + b * fx
            bot = c * (1.0 - fx) + d * fx
            out[v, u] = top * (1.0 - fy) + bot * fy
    return out


def warp_bilinear(src, hinv, out_h, out_w, bg):
    return _warp(np.ascontiguousarray(src, dtype=np.float64),
                 np.ascontiguousarray(hinv, dtype=np.float64),
                 int(out_h), int(out_w), float(bg))


@njit(cache=True)
def _convolve(img, kernel):
    h, w = img.shape
    n = kernel.shape[0]
    r = n // 2
    tmp = np.empty((h, w), dtype=np.float64)
    buf = np.empty(w + 2 * r, dtype=np.float64)
    for i in range(h):
        for j in range(w + 2 * r):
            buf[j] = img[i, min(max(j - r, 0), w - 1)]
        for j in range(w):
            acc = 0.0
            for k in range(n):
                acc += kernel[k] * buf[j + k]
            tmp[i, j] = acc
    out = np.zeros((h, w), dtype=np.float64)
    for i in range(h):
        for k in range(n):
            ii = min(max(i + k - r, 0), h - 1)
            wk = kernel[k]
            for j in range(w):
                out[i, j] += wk * tmp[ii, j]
    return out


def convolve_separable(img, kernel):
    return _convolve(np.ascontiguousarray(img, dtype=np.float64),
                     np.ascontiguousarray(kernel, dtype=np.float64))


@njit(cache=True)
def _window_sum(img, block):
    h, w = img.shape
    r = block // 2
    rows = np.empty((h, w), dtype=np.int64)
    for i in range(h):
        acc = 0
        for k in range(-r, r + 1):
            acc += img[i, min(max(k, 0), w - 1)]
        rows[i, 0] = acc
        for j in range(1, w):
            acc += img[i, min(j + r, w - 1)] - img[i, max(j - r - 1, 0)]
            rows[i, j] = acc
    out = np.empty((h, w), dtype=np.int64)
    for j in range(w):
        acc = 0
        for k in range(-r, r + 1):
            acc += rows[min(max(k, 0), h - 1), j]
        out[0, j] = acc
    for i in range(1, h):
        lo = max(i - r - 1, 0)
        hi = min(i + r, h - 1)
        for j in range(w):
            out[i, j] = out[i - 1, j] + rows[hi, j] - rows[lo, j]
    return out


def window_sum(img, block):
    return _window_sum(np.ascontiguousarray(img, dtype=np.int64), int(block))
