"""Time the numba kernels against the numpy fallback on capture-sized inputs.

Usage: python3 benchmarks/bench_kernels.py [--repeat N] [--size PX]
"""
import argparse
import time

import numpy as np

from s2svlc._kernels import _numba, _numpy
from s2svlc.channel import gaussian_kernel


def _best(fn, repeat):
    fn()  # warm-up (and JIT compile)
    times = []
    for _ in range(repeat):
        t = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t)
    return min(times)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--size", type=int, default=1280)
    args = ap.parse_args()

    rng = np.random.default_rng(0)
    n = args.size
    img_u8 = rng.integers(0, 256, (n, n), dtype=np.uint8)
    img_f = img_u8.astype(np.float64)
    src = rng.integers(0, 256, (816, 816), dtype=np.uint8)
    c, s = np.cos(0.3), np.sin(0.3)
    hinv = np.array([[c, s, -200.0], [-s, c, 100.0], [1e-5, 0.0, 1.0]])
    kernel = gaussian_kernel(2.0)

    cases = {
        "warp_bilinear": lambda m: m.warp_bilinear(src, hinv, n, n, 40.0),
        "convolve_separable": lambda m: m.convolve_separable(img_f, kernel),
        "window_sum": lambda m: m.window_sum(img_u8, 33),
    }
    print(f"{'kernel':<20} {'numpy ms':>10} {'numba ms':>10} {'speedup':>8}")
    for name, call in cases.items():
        a = np.asarray(call(_numpy), dtype=np.float64)
        b = np.asarray(call(_numba), dtype=np.float64)
        assert np.allclose(a, b, atol=1e-6), f"{name}: backends disagree"
        t_np = _best(lambda: call(_numpy), args.repeat)
        t_nb = _best(lambda: call(_numba), args.repeat)
        print(f"{name:<20} {t_np * 1e3:>10.2f} {t_nb * 1e3:>10.2f} {t_np / t_nb:>7.1f}x")


if __name__ == "__main__":
    main()
