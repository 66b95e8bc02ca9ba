"""8-bit image value type and lossless PNG / PGM / PPM file I/O."""
from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import ImageIOError, ImageNotFound, UnsupportedFormat


@dataclass(frozen=True, eq=False)
class ImageRaster:
    """Immutable grid of uint8 samples.

    ``pixels`` has shape ``(height, width)`` for grayscale or
    ``(height, width, 3)`` for interleaved RGB.
    """

    pixels: np.ndarray

    def __post_init__(self):
        px = np.asarray(self.pixels)
        if px.dtype != np.uint8:
            if px.size and (px.min() < 0 or px.max() > 255):
                raise ValueError("samples must lie in [0, 255]")
            px = px.astype(np.uint8)
        if px.ndim == 3 and px.shape[2] == 1:
            px = px[:, :, 0]
        if px.ndim not in (2, 3) or (px.ndim == 3 and px.shape[2] != 3):
            raise ValueError(f"unsupported raster shape {px.shape}")
        if px.shape[0] == 0 or px.shape[1] == 0:
            raise ValueError("raster must be at least 1x1")
        px = np.array(px, dtype=np.uint8, copy=True, order="C")
        px.setflags(write=False)
        object.__setattr__(self, "pixels", px)

    @property
    def width(self) -> int:
        return self.pixels.shape[1]

    @property
    def height(self) -> int:
        return self.pixels.shape[0]

    @property
    def channels(self) -> int:
        return 1 if self.pixels.ndim == 2 else 3

    @property
    def samples(self) -> bytes:
        return self.pixels.tobytes()

    @classmethod
    def from_samples(cls, width: int, height: int, channels: int, samples) -> "ImageRaster":
        if isinstance(samples, (bytes, bytearray)):
            arr = np.frombuffer(bytes(samples), dtype=np.uint8)
        else:
            arr = np.asarray(samples)
        if arr.size != width * height * channels:
            raise ValueError("sample count does not match width x height x channels")
        shape = (height, width) if channels == 1 else (height, width, channels)
        return cls(arr.reshape(shape))

    def __eq__(self, other):
        if not isinstance(other, ImageRaster):
            return NotImplemented
        return self.pixels.shape == other.pixels.shape and bool(np.array_equal(self.pixels, other.pixels))

    def __repr__(self):
        return f"ImageRaster({self.width}x{self.height}, channels={self.channels})"


def _read_token(data: bytes, pos: int) -> tuple[bytes, int]:
    n = len(data)
    while pos < n:
        c = data[pos:pos + 1]
        if c == b"#":
            while pos < n and data[pos:pos + 1] not in (b"\n", b"\r"):
                pos += 1
        elif c.isspace():
            pos += 1
        else:
            break
    start = pos
    while pos < n and not data[pos:pos + 1].isspace() and data[pos:pos + 1] != b"#":
        pos += 1
    if start == pos:
        raise UnsupportedFormat("truncated PNM header")
    return data[start:pos], pos


def _load_pnm(data: bytes) -> ImageRaster:
    magic = data[:2]
    channels = 1 if magic == b"P5" else 3
    pos = 2
    fields = []
    for _ in range(3):
        tok, pos = _read_token(data, pos)
        try:
            fields.append(int(tok))
        except ValueError:
            raise UnsupportedFormat(f"bad PNM header field {tok!r}") from None
    width, height, maxval = fields
    if maxval != 255:
        raise UnsupportedFormat(f"only maxval 255 is supported, got {maxval}")
    if width <= 0 or height <= 0:
        raise UnsupportedFormat("PNM dimensions must be positive")
    pos += 1  # single whitespace byte after maxval
    need = width * height * channels
    body = data[pos:pos + need]
    if len(body) != need:
        raise UnsupportedFormat("truncated PNM raster")
    arr = np.frombuffer(body, dtype=np.uint8)
    shape = (height, width) if channels == 1 else (height, width, 3)
    return ImageRaster(arr.reshape(shape))


def _load_png(path: Path) -> ImageRaster:
    from PIL import Image

    with Image.open(path) as im:
        if im.mode not in ("L", "RGB"):
            raise UnsupportedFormat(f"PNG mode {im.mode!r} not supported (need 8-bit L or RGB)")
        arr = np.asarray(im, dtype=np.uint8)
    return ImageRaster(arr)


def load_image(path) -> ImageRaster:
    """Read a binary PGM (P5), binary PPM (P6) or 8-bit PNG file."""
    path = Path(path)
    try:
        data = path.read_bytes()
    except FileNotFoundError:
        raise ImageNotFound(str(path)) from None
    except OSError as exc:
        raise ImageIOError(str(exc)) from exc
    if data[:2] in (b"P5", b"P6"):
        return _load_pnm(data)
    if data[:8] == b"\x89PNG\r\n\x1a\n":
        return _load_png(path)
    raise UnsupportedFormat(f"{path}: not a PGM, PPM or PNG file")


def save_image(img: ImageRaster, path) -> None:
    """Write ``img``; ``.png`` suffix selects PNG, anything else PGM/PPM by channel count."""
    path = Path(path)
    try:
        if path.suffix.lower() == ".png":
            from PIL import Image

            Image.fromarray(np.ascontiguousarray(img.pixels)).save(path, format="PNG")
        else:
            magic = b"P5" if img.channels == 1 else b"P6"
            header = magic + f"\n{img.width} {img.height}\n255\n".encode("ascii")
            path.write_bytes(header + img.pixels.tobytes())
    except OSError as exc:
        raise ImageIOError(f"cannot write {path}: {exc}") from exc
