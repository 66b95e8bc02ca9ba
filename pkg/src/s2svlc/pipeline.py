"""Four-step blur-reduction receiver pipeline plus the fixed-threshold baseline.

Steps: RGB -> grayscale, contrast stretch with tail saturation, nearest-neighbor
rescale, adaptive (local-mean) binarization. All rounding is round-half-up,
evaluated in integer arithmetic so results are exact.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from . import _kernels
from .errors import DegenerateSize, EmptyImage, NotRGB
from .raster import ImageRaster


class GrayscaleMethod(enum.Enum):
    Mean = "mean"            # (R + G + B) / 3 in wide arithmetic
    SafeThirds = "thirds"    # R/3 + G/3 + B/3, each term floored
    Weighted = "weighted"    # 0.299 R + 0.587 G + 0.114 B


@dataclass(frozen=True)
class PipelineConfig:
    grayscale_method: GrayscaleMethod = GrayscaleMethod.Weighted
    saturation_fraction: float = 0.01
    stretch_lo: int = 0
    stretch_hi: int = 255
    scale_factor: float = 1.0
    adaptive_block_px: int = 33
    adaptive_offset: float = 5.0

    def __post_init__(self):
        if not 0 <= self.saturation_fraction < 0.5:
            raise ValueError("saturation_fraction must be in [0, 0.5)")
        if not 0 <= self.stretch_lo < self.stretch_hi <= 255:
            raise ValueError("need 0 <= stretch_lo < stretch_hi <= 255")
        if self.adaptive_block_px < 3 or self.adaptive_block_px % 2 == 0:
            raise ValueError("adaptive_block_px must be odd and >= 3")
        if not self.scale_factor > 0:
            raise ValueError("scale_factor must be positive")


def _rgb(img: ImageRaster) -> np.ndarray:
    if img.channels != 3:
        raise NotRGB(f"expected 3 channels, got {img.channels}")
    return img.pixels.astype(np.int32)


def to_grayscale(img: ImageRaster, method: GrayscaleMethod = GrayscaleMethod.Weighted) -> ImageRaster:
    px = _rgb(img)
    r, g, b = px[..., 0], px[..., 1], px[..., 2]
    if method is GrayscaleMethod.Mean:
        gray = (r + g + b) // 3
    elif method is GrayscaleMethod.SafeThirds:
        gray = r // 3 + g // 3 + b // 3
    elif method is GrayscaleMethod.Weighted:
        gray = (299 * r + 587 * g + 114 * b + 500) // 1000
    else:
        raise ValueError(f"unknown grayscale method {method!r}")
    return ImageRaster(gray.astype(np.uint8))


def _nearest_rank(counts_cum: np.ndarray, n: int, p: float) -> int:
    # 1-based nearest rank; rounding guards against p*n landing a hair above an integer
    k = max(1, math.ceil(round(p * n, 9)))
    return int(np.searchsorted(counts_cum, k))


def stretch_limits(img: ImageRaster, saturation_fraction: float) -> tuple[int, int]:
    """Input range ``(c, d)``: nearest-rank quantiles at each saturated tail."""
    px = img.pixels
    if px.size == 0:
        raise EmptyImage("no pixels")
    cum = np.cumsum(np.bincount(px.ravel(), minlength=256))
    n = int(cum[-1])
    c = _nearest_rank(cum, n, saturation_fraction)
    d = _nearest_rank(cum, n, 1.0 - saturation_fraction)
    return c, d


def contrast_stretch(img: ImageRaster, cfg: PipelineConfig = PipelineConfig()) -> ImageRaster:
    if img.channels != 1:
        raise NotRGB("contrast_stretch expects a 1-channel raster")
    a, b = cfg.stretch_lo, cfg.stretch_hi
    c, d = stretch_limits(img, cfg.saturation_fraction)
    if c == d:
        return ImageRaster(np.full(img.pixels.shape, a, dtype=np.uint8))
    num = (img.pixels.astype(np.int64) - c) * (b - a)
    den = d - c
    out = a + (2 * num + den) // (2 * den)
    return ImageRaster(np.clip(out, a, b).astype(np.uint8))


def _as_fraction(factor) -> Fraction:
    if isinstance(factor, Fraction):
        return factor
    if isinstance(factor, float):
        return Fraction(factor).limit_denominator(1 << 20)
    return Fraction(factor)


def rescale_nearest(img: ImageRaster, factor) -> ImageRaster:
    """``out(x, y) = in(floor(x / factor), floor(y / factor))``; size ``floor(dim * factor)``."""
    f = _as_fraction(factor)
    if f <= 0:
        raise DegenerateSize("scale factor must be positive")
    if f == 1:
        return img
    out_w = math.floor(img.width * f)
    out_h = math.floor(img.height * f)
    if out_w < 1 or out_h < 1:
        raise DegenerateSize(f"scaled size {out_w}x{out_h} is empty")
    xs = (np.arange(out_w) * f.denominator) // f.numerator
    ys = (np.arange(out_h) * f.denominator) // f.numerator
    return ImageRaster(img.pixels[ys][:, xs])


def adaptive_binarize(img: ImageRaster, cfg: PipelineConfig = PipelineConfig()) -> ImageRaster:
    """255 where pixel > (window mean - offset), else 0; window clamped at borders."""
    if img.channels != 1:
        raise NotRGB("adaptive_binarize expects a 1-channel raster")
    block = cfg.adaptive_block_px
    area = block * block
    sums = _kernels.window_sum(img.pixels, block)
    px = img.pixels.astype(np.int64) * area
    offset = cfg.adaptive_offset
    if float(offset).is_integer():
        thresh = sums - int(offset) * area
    else:
        thresh = sums - offset * area
    return ImageRaster(np.where(px > thresh, 255, 0).astype(np.uint8))


def run_pipeline(img: ImageRaster, cfg: PipelineConfig = PipelineConfig()) -> ImageRaster:
    gray = to_grayscale(img, cfg.grayscale_method)
    stretched = contrast_stretch(gray, cfg)
    scaled = rescale_nearest(stretched, cfg.scale_factor)
    return adaptive_binarize(scaled, cfg)


def baseline_binarize(img: ImageRaster) -> ImageRaster:
    """Conventional receiver: weighted grayscale, global threshold 128 (>= 128 is white)."""
    gray = to_grayscale(img, GrayscaleMethod.Weighted)
    return ImageRaster(np.where(gray.pixels >= 128, 255, 0).astype(np.uint8))
