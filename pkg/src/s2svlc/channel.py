"""Simulated smartphone-camera capture of a rendered frame.

Stages, in order: pinhole/rotation/tilt geometry onto a sensor canvas,
Gaussian PSF blur, ambient-light model, additive Gaussian sensor noise, and
replication to three color channels with fixed per-channel gains.
"""
from __future__ import annotations

import csv
import enum
import math
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from . import _kernels
from .errors import DegenerateGeometry
from .raster import ImageRaster

DEFAULT_CANVAS_PX = 1024
DEFAULT_REF_DISTANCE_CM = 25.0
CHANNEL_GAINS = (0.98, 1.0, 0.96)


class Ambient(enum.Enum):
    AmbientLight = "ambient"
    NoLight = "nolight"


@dataclass(frozen=True)
class AmbientPreset:
    offset: float
    gain: float
    bloom_sigma: float
    bloom_weight: float
    background: int  # canvas level around the screen before the ambient stage


AMBIENT_PRESETS = {
    Ambient.AmbientLight: AmbientPreset(offset=40.0, gain=1.0, bloom_sigma=1.0, bloom_weight=0.2, background=40),
    Ambient.NoLight: AmbientPreset(offset=0.0, gain=0.85, bloom_sigma=0.0, bloom_weight=0.0, background=0),
}


@dataclass(frozen=True)
class ChannelParams:
    distance_cm: float = DEFAULT_REF_DISTANCE_CM
    tilt_deg: float = 0.0
    rotation_deg: float = 0.0
    ambient: Ambient = Ambient.AmbientLight
    blur_sigma_px: float = 0.0
    noise_std: float = 0.0
    seed: int = 0

    def __post_init__(self):
        for name in ("distance_cm", "tilt_deg", "rotation_deg", "blur_sigma_px", "noise_std"):
            object.__setattr__(self, name, float(getattr(self, name)))
        object.__setattr__(self, "seed", int(self.seed))
        if not 0.0 <= self.distance_cm <= 50.0:
            raise ValueError(f"distance_cm {self.distance_cm} outside [0, 50]")
        if not -50.0 <= self.tilt_deg <= 50.0:
            raise ValueError(f"tilt_deg {self.tilt_deg} outside [-50, 50]")
        if not -50.0 <= self.rotation_deg <= 50.0:
            raise ValueError(f"rotation_deg {self.rotation_deg} outside [-50, 50]")
        if self.blur_sigma_px < 0 or self.noise_std < 0:
            raise ValueError("blur_sigma_px and noise_std must be >= 0")


@dataclass(frozen=True)
class CameraModel:
    """Sensor geometry. Distances at or below ``ref_distance_cm`` image the frame 1:1."""

    canvas_px: int = DEFAULT_CANVAS_PX
    ref_distance_cm: float = DEFAULT_REF_DISTANCE_CM
    focal_px: float | None = None  # defaults to 2 x canvas_px

    @property
    def focal(self) -> float:
        return self.focal_px if self.focal_px is not None else 2.0 * self.canvas_px


def round_half_up(x) -> np.ndarray:
    return np.floor(np.asarray(x, dtype=np.float64) + 0.5)


def _to_u8(x) -> np.ndarray:
    return np.clip(round_half_up(x), 0, 255).astype(np.uint8)


def frame_homography(width: int, height: int, params: ChannelParams, ref_distance_cm: float,
                     canvas_px: int = DEFAULT_CANVAS_PX, focal_px: float | None = None) -> np.ndarray:
    """3x3 map from frame pixel coordinates to canvas pixel coordinates."""
    if params.distance_cm <= 0:
        raise DegenerateGeometry("distance_cm must be > 0")
    if ref_distance_cm <= 0:
        raise DegenerateGeometry("ref_distance_cm must be > 0")
    f = focal_px if focal_px is not None else 2.0 * canvas_px
    s = ref_distance_cm / params.distance_cm
    cx, cy = (width - 1) / 2.0, (height - 1) / 2.0
    # integer offset keeps the identity case sample-aligned
    ox, oy = (canvas_px - width) // 2, (canvas_px - height) // 2
    th = math.radians(params.rotation_deg)
    ph = math.radians(params.tilt_deg)
    center = np.array([[1, 0, -cx], [0, 1, -cy], [0, 0, 1]], dtype=np.float64)
    scale = np.diag([s, s, 1.0])
    # positive rotation is counterclockwise as seen on screen (y axis points down)
    rot = np.array([[math.cos(th), math.sin(th), 0],
                    [-math.sin(th), math.cos(th), 0],
                    [0, 0, 1]], dtype=np.float64)
    tilt = np.array([[1, 0, 0],
                     [0, math.cos(ph), 0],
                     [0, math.sin(ph) / f, 1]], dtype=np.float64)
    place = np.array([[1, 0, ox + cx], [0, 1, oy + cy], [0, 0, 1]], dtype=np.float64)
    return place @ tilt @ rot @ scale @ center


def project_points(H: np.ndarray, pts) -> np.ndarray:
    pts = np.asarray(pts, dtype=np.float64)
    hom = np.c_[pts, np.ones(len(pts))] @ H.T
    return hom[:, :2] / hom[:, 2:3]


def apply_geometry(img: ImageRaster, params: ChannelParams, ref_distance_cm: float = DEFAULT_REF_DISTANCE_CM,
                   canvas_px: int = DEFAULT_CANVAS_PX, focal_px: float | None = None,
                   background: int | None = None) -> ImageRaster:
    """Scale by ``ref/distance``, rotate in-plane, tilt about the horizontal midline,
    and composite centered on a ``canvas_px`` square sensor with bilinear resampling."""
    if img.channels != 1:
        raise ValueError("apply_geometry expects a 1-channel frame")
    H = frame_homography(img.width, img.height, params, ref_distance_cm, canvas_px, focal_px)
    corners = np.array([[-0.5, -0.5], [img.width - 0.5, -0.5],
                        [img.width - 0.5, img.height - 0.5], [-0.5, img.height - 0.5]])
    w = np.c_[corners, np.ones(4)] @ H[2]
    if np.any(w <= 0):
        raise DegenerateGeometry("frame crosses the camera plane")
    proj = project_points(H, corners)
    if proj.min() < -0.5 or proj.max() > canvas_px - 0.5:
        raise DegenerateGeometry("projected frame exceeds the sensor canvas")
    if background is None:
        background = AMBIENT_PRESETS[params.ambient].background
    # only the frame's bounding box needs resampling; the rest is background
    x0, y0 = np.maximum(np.floor(proj.min(axis=0)).astype(int) - 1, 0)
    x1, y1 = np.minimum(np.ceil(proj.max(axis=0)).astype(int) + 2, canvas_px)
    shift = np.array([[1.0, 0.0, x0], [0.0, 1.0, y0], [0.0, 0.0, 1.0]])
    window = _kernels.warp_bilinear(img.pixels, np.linalg.inv(H) @ shift, y1 - y0, x1 - x0, float(background))
    out = np.full((canvas_px, canvas_px), background, dtype=np.uint8)
    out[y0:y1, x0:x1] = _to_u8(window)
    return ImageRaster(out)


def gaussian_kernel(sigma: float) -> np.ndarray:
    r = math.ceil(3.0 * sigma)
    x = np.arange(-r, r + 1, dtype=np.float64)
    k = np.exp(-(x * x) / (2.0 * sigma * sigma))
    return k / k.sum()


def blur_float(px: np.ndarray, sigma: float) -> np.ndarray:
    if sigma <= 0:
        return px.astype(np.float64)
    return _kernels.convolve_separable(px, gaussian_kernel(sigma))


def apply_blur(img: ImageRaster, sigma: float) -> ImageRaster:
    """Gaussian PSF truncated at ceil(3 sigma), renormalized, borders clamped."""
    if sigma < 0:
        raise ValueError("sigma must be >= 0")
    if sigma == 0:
        return img
    px = img.pixels
    if px.ndim == 2:
        return ImageRaster(_to_u8(blur_float(px, sigma)))
    return ImageRaster(np.stack([_to_u8(blur_float(px[..., c], sigma)) for c in range(3)], axis=-1))


def _lut(fn) -> np.ndarray:
    return fn(np.arange(256, dtype=np.float64))


def apply_ambient(img: ImageRaster, ambient: Ambient, presets=None) -> ImageRaster:
    """Offset, clip and bloom (AmbientLight) or gain (NoLight)."""
    p = (presets or AMBIENT_PRESETS)[ambient]
    lut = _lut(lambda v: np.clip(p.gain * v + p.offset, 0.0, 255.0))
    if p.bloom_weight > 0 and p.bloom_sigma > 0:
        x = lut[img.pixels]
        x = (1.0 - p.bloom_weight) * x + p.bloom_weight * blur_float(x, p.bloom_sigma)
        return ImageRaster(_to_u8(x))
    return ImageRaster(_to_u8(lut)[img.pixels])


def apply_noise(img: ImageRaster, std: float, seed: int) -> ImageRaster:
    if std < 0:
        raise ValueError("std must be >= 0")
    if std == 0:
        return img
    rng = np.random.default_rng(seed)
    noise = rng.standard_normal(img.pixels.shape, dtype=np.float32) * np.float32(std)
    noisy = np.floor(img.pixels + noise + np.float32(0.5))
    return ImageRaster(np.clip(noisy, 0, 255).astype(np.uint8))


@dataclass
class CalibrationMap:
    """Piecewise-linear maps from a condition magnitude to added blur sigma (px).

    Keys are ``"distance"``, ``"tilt"`` and ``"rotation"``; angle maps are
    indexed by absolute angle. Missing keys contribute zero blur.
    """

    curves: dict = field(default_factory=dict)

    def sigma_for(self, variable: str, value: float) -> float:
        if variable not in self.curves:
            return 0.0
        xs, ys = self.curves[variable]
        if variable != "distance":
            value = abs(value)
        return float(np.interp(value, xs, ys))

    def effective_sigma(self, params: ChannelParams) -> float:
        return (params.blur_sigma_px
                + self.sigma_for("distance", params.distance_cm)
                + self.sigma_for("tilt", params.tilt_deg)
                + self.sigma_for("rotation", params.rotation_deg))

    def scaled(self, factor: float) -> "CalibrationMap":
        """Same conditions with every sigma multiplied by ``factor``."""
        if factor == 1.0:
            return self
        return CalibrationMap({k: (xs, np.asarray(ys) * factor) for k, (xs, ys) in self.curves.items()})

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["variable", "condition", "sigma"])
            for var in sorted(self.curves):
                for x, y in zip(*self.curves[var]):
                    w.writerow([var, repr(float(x)), repr(float(y))])

    @classmethod
    def from_csv(cls, path) -> "CalibrationMap":
        rows: dict[str, list] = {}
        with open(path, newline="") as fh:
            for row in csv.DictReader(fh):
                rows.setdefault(row["variable"], []).append((float(row["condition"]), float(row["sigma"])))
        curves = {}
        for var, pts in rows.items():
            pts.sort()
            curves[var] = (np.array([p[0] for p in pts]), np.array([p[1] for p in pts]))
        return cls(curves)


def default_calibration() -> CalibrationMap:
    """Calibration shipped with the package (regenerate with ``s2svlc calibrate``)."""
    path = Path(__file__).with_name("data") / "calibration.csv"
    if not path.exists():
        return CalibrationMap()
    return CalibrationMap.from_csv(path)


def geometry_params(params: ChannelParams, camera: CameraModel) -> ChannelParams:
    """Distances inside the reference distance are imaged at the reference scale."""
    return replace(params, distance_cm=max(params.distance_cm, camera.ref_distance_cm))


def capture(frame_img: ImageRaster, params: ChannelParams, calibration: CalibrationMap | None = None,
            camera: CameraModel = CameraModel(), bypass: bool = False,
            presets=None) -> ImageRaster:
    """Full capture chain; returns a 3-channel raster.

    ``bypass`` skips the ambient stage and the per-channel gains, so neutral
    parameters reproduce the frame exactly on the canvas.
    """
    calibration = calibration or CalibrationMap()
    presets = presets or AMBIENT_PRESETS
    img = apply_geometry(frame_img, geometry_params(params, camera), camera.ref_distance_cm,
                         camera.canvas_px, camera.focal_px, presets[params.ambient].background)
    img = apply_blur(img, calibration.effective_sigma(params))
    if not bypass:
        img = apply_ambient(img, params.ambient, presets)
    img = apply_noise(img, params.noise_std, params.seed)
    if bypass:
        return ImageRaster(np.repeat(img.pixels[..., None], 3, axis=-1))
    return ImageRaster(np.stack([_to_u8(_lut(lambda v: g * v))[img.pixels] for g in CHANNEL_GAINS], axis=-1))
