"""Cell-grid framing: bits -> M x N OOK cell frames -> pixels, and back.

Grid conventions
----------------
* cell value 1 renders black (0), cell value 0 renders white (255);
* four ``marker_size_cells`` square locators sit in the grid corners. All are
  solid black except that the TR, BR and BL locators leave their inner-corner
  cell white, so only the TL locator is a full square (orientation key);
* the next ``header_cells`` non-marker cells in row-major order carry the
  header (16-bit sequence number, 32-bit timestamp, 16-bit CRC, MSB first);
* the remaining non-marker cells, row-major, carry payload.
"""
from __future__ import annotations

import binascii
import math
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .bitstream import as_bits, pack_bits
from .errors import DimensionMismatch, EmptyPayload, LayoutInvalid, MissingFrame, OddBitCount
from .raster import ImageRaster

HEADER_BITS = 64
SEQ_BITS = 16
TIMESTAMP_BITS = 32
CRC_BITS = 16
DEFAULT_FPS = 60


def crc16_ccitt_false(bits) -> int:
    """CRC-16/CCITT-FALSE (poly 0x1021, init 0xFFFF) of ``bits`` packed MSB-first."""
    return binascii.crc_hqx(pack_bits(bits), 0xFFFF)


def _int_to_bits(value: int, width: int) -> np.ndarray:
    return np.array([(value >> (width - 1 - i)) & 1 for i in range(width)], dtype=np.uint8)


def _bits_to_int(bits) -> int:
    out = 0
    for b in bits:
        out = (out << 1) | int(b)
    return out


@dataclass(frozen=True)
class FrameLayout:
    rows: int = 200
    cols: int = 200
    cell_px: int = 4
    quiet_zone_cells: int = 2
    marker_size_cells: int = 4
    header_cells: int = HEADER_BITS

    def __post_init__(self):
        if self.rows < 1 or self.cols < 1:
            raise LayoutInvalid("grid needs at least one row and column")
        if self.cell_px < 1:
            raise LayoutInvalid("cell_px must be >= 1")
        if self.quiet_zone_cells < 1:
            raise LayoutInvalid("quiet_zone_cells must be >= 1")
        m = self.marker_size_cells
        if m != 0 and m < 2:
            raise LayoutInvalid("marker_size_cells must be 0 (bare) or >= 2")
        if 2 * m > min(self.rows, self.cols):
            raise LayoutInvalid("corner markers overlap")
        if self.header_cells not in (0, HEADER_BITS):
            raise LayoutInvalid(f"header_cells must be 0 or {HEADER_BITS}")
        if self.capacity <= 0:
            raise LayoutInvalid(f"payload capacity {self.capacity} <= 0")

    @classmethod
    def bare(cls, rows: int = 200, cols: int = 200, cell_px: int = 4, quiet_zone_cells: int = 2):
        """Layout without markers or header; every cell carries payload."""
        return cls(rows, cols, cell_px, quiet_zone_cells, marker_size_cells=0, header_cells=0)

    @property
    def capacity(self) -> int:
        return self.rows * self.cols - 4 * self.marker_size_cells ** 2 - self.header_cells

    @property
    def has_markers(self) -> bool:
        return self.marker_size_cells > 0

    @property
    def render_width(self) -> int:
        return (self.cols + 2 * self.quiet_zone_cells) * self.cell_px

    @property
    def render_height(self) -> int:
        return (self.rows + 2 * self.quiet_zone_cells) * self.cell_px

    @cached_property
    def marker_mask(self) -> np.ndarray:
        m, M, N = self.marker_size_cells, self.rows, self.cols
        mask = np.zeros((M, N), dtype=bool)
        if m:
            mask[:m, :m] = mask[:m, N - m:] = mask[M - m:, :m] = mask[M - m:, N - m:] = True
        return mask

    @cached_property
    def marker_cells(self) -> np.ndarray:
        """Cell values inside the marker mask (zero elsewhere)."""
        cells = self.marker_mask.astype(np.uint8)
        if self.has_markers:
            for r, c in self.notch_cells[1:]:
                cells[r, c] = 0
        return cells

    @property
    def notch_cells(self) -> tuple[tuple[int, int], ...]:
        """Inner-corner cell of each locator, ordered TL, TR, BR, BL."""
        m, M, N = self.marker_size_cells, self.rows, self.cols
        return ((m - 1, m - 1), (m - 1, N - m), (M - m, N - m), (M - m, m - 1))

    @cached_property
    def _free_cells(self) -> np.ndarray:
        return np.flatnonzero(~self.marker_mask.ravel())

    @property
    def header_index(self) -> np.ndarray:
        return self._free_cells[:self.header_cells]

    @property
    def payload_index(self) -> np.ndarray:
        return self._free_cells[self.header_cells:]


@dataclass(frozen=True)
class FrameHeader:
    sequence_number: int
    timestamp: int
    crc: int

    def to_bits(self) -> np.ndarray:
        return np.concatenate([
            _int_to_bits(self.sequence_number & 0xFFFF, SEQ_BITS),
            _int_to_bits(self.timestamp & 0xFFFFFFFF, TIMESTAMP_BITS),
            _int_to_bits(self.crc & 0xFFFF, CRC_BITS),
        ])

    @classmethod
    def from_bits(cls, bits) -> "FrameHeader":
        bits = as_bits(bits)
        return cls(
            _bits_to_int(bits[:SEQ_BITS]),
            _bits_to_int(bits[SEQ_BITS:SEQ_BITS + TIMESTAMP_BITS]),
            _bits_to_int(bits[SEQ_BITS + TIMESTAMP_BITS:HEADER_BITS]),
        )


@dataclass(frozen=True, eq=False)
class CellGrid:
    layout: FrameLayout
    header: FrameHeader | None
    cells: np.ndarray = field(repr=False)

    def __post_init__(self):
        cells = np.asarray(self.cells, dtype=np.uint8)
        if cells.shape != (self.layout.rows, self.layout.cols):
            raise DimensionMismatch(f"cells shape {cells.shape} != layout {(self.layout.rows, self.layout.cols)}")
        object.__setattr__(self, "cells", cells)

    @property
    def payload_bits(self) -> np.ndarray:
        return self.cells.ravel()[self.layout.payload_index]

    @property
    def crc_ok(self) -> bool | None:
        """CRC check of the payload cells; ``None`` when the layout has no header."""
        if self.header is None:
            return None
        return crc16_ccitt_false(self.payload_bits) == self.header.crc

    def __eq__(self, other):
        if not isinstance(other, CellGrid):
            return NotImplemented
        return (self.layout == other.layout and self.header == other.header
                and bool(np.array_equal(self.cells, other.cells)))


def _compose(layout: FrameLayout, header: FrameHeader | None, payload: np.ndarray) -> CellGrid:
    flat = layout.marker_cells.ravel().copy()
    if layout.header_cells:
        flat[layout.header_index] = header.to_bits()
    flat[layout.payload_index] = payload
    return CellGrid(layout, header, flat.reshape(layout.rows, layout.cols))


def build_frames(payload, layout: FrameLayout, t0: int = 0, fps: int = DEFAULT_FPS) -> list[CellGrid]:
    """Split ``payload`` into frames; the last frame is zero-padded to capacity."""
    bits = as_bits(payload)
    if bits.size == 0:
        raise EmptyPayload("payload is empty")
    cap = layout.capacity
    n_frames = math.ceil(bits.size / cap)
    padded = np.zeros(n_frames * cap, dtype=np.uint8)
    padded[:bits.size] = bits
    frames = []
    for k in range(n_frames):
        chunk = padded[k * cap:(k + 1) * cap]
        header = FrameHeader(k, t0 + (k * 1000) // fps, crc16_ccitt_false(chunk))
        frames.append(_compose(layout, header if layout.header_cells else None, chunk))
    return frames


def render_frame(frame: CellGrid) -> ImageRaster:
    """Grayscale raster: bit 0 -> 255, bit 1 -> 0, quiet zone white."""
    L = frame.layout
    q = L.quiet_zone_cells
    canvas = np.full((L.rows + 2 * q, L.cols + 2 * q), 255, dtype=np.uint8)
    canvas[q:q + L.rows, q:q + L.cols] = np.where(frame.cells == 1, 0, 255)
    px = np.repeat(np.repeat(canvas, L.cell_px, axis=0), L.cell_px, axis=1)
    return ImageRaster(px)


def cell_means(rectified: ImageRaster, layout: FrameLayout) -> np.ndarray:
    """Mean intensity over each cell's interior, shape ``(rows, cols)``."""
    if rectified.channels != 1:
        raise DimensionMismatch("expected a 1-channel raster")
    if (rectified.width, rectified.height) != (layout.render_width, layout.render_height):
        raise DimensionMismatch(
            f"raster {rectified.width}x{rectified.height} != render "
            f"{layout.render_width}x{layout.render_height}")
    c = layout.cell_px
    q = layout.quiet_zone_cells * c
    grid = rectified.pixels[q:q + layout.rows * c, q:q + layout.cols * c].astype(np.float64)
    blocks = grid.reshape(layout.rows, c, layout.cols, c)
    if c >= 4:
        blocks = blocks[:, 1:c - 1, :, 1:c - 1]
    return blocks.mean(axis=(1, 3))


def quantize_cells(rectified: ImageRaster, layout: FrameLayout) -> CellGrid:
    """Interior mean >= 128 -> bit 0, else bit 1; the header is decoded from its cells."""
    cells = (cell_means(rectified, layout) < 128).astype(np.uint8)
    header = None
    if layout.header_cells:
        header = FrameHeader.from_bits(cells.ravel()[layout.header_index])
    return CellGrid(layout, header, cells)


@dataclass
class AssembledPayload:
    bits: np.ndarray
    crc_ok: list  # per frame in sequence order; None where no header exists

    @property
    def crc_failures(self) -> int:
        return sum(1 for ok in self.crc_ok if ok is False)


def assemble_payload(frames, expected_bits: int) -> AssembledPayload:
    frames = list(frames)
    if not frames:
        raise MissingFrame("no frames to assemble")
    if all(f.header is not None for f in frames):
        frames.sort(key=lambda f: f.header.sequence_number)
        seqs = [f.header.sequence_number for f in frames]
        if seqs != list(range(len(frames))):
            raise MissingFrame(f"sequence numbers {seqs} are not 0..{len(frames) - 1}")
    bits = np.concatenate([f.payload_bits for f in frames])
    if expected_bits > bits.size:
        raise MissingFrame(f"{expected_bits} bits expected, only {bits.size} present")
    return AssembledPayload(bits[:expected_bits].copy(), [f.crc_ok for f in frames])


@dataclass(frozen=True)
class OokParams:
    P_r: float = 1.0
    T_b: float = 1.0

    def __post_init__(self):
        if not (self.P_r > 0 and self.T_b > 0):
            raise ValueError("P_r and T_b must be positive")


def ook_envelope(t, p: OokParams):
    """OOK-NRZ pulse: ``2*P_r`` on the closed interval [0, T_b], zero elsewhere."""
    t = np.asarray(t, dtype=np.float64)
    out = np.where((t >= 0.0) & (t <= p.T_b), 2.0 * p.P_r, 0.0)
    return float(out) if out.ndim == 0 else out


CSK_CONSTELLATION = np.array(
    [[255, 0, 0], [0, 255, 0], [0, 0, 255], [255, 255, 255]], dtype=np.uint8)


def csk_map(bits) -> np.ndarray:
    """Two bits per cell: 00 red, 01 green, 10 blue, 11 white. Returns ``(n, 3)`` uint8."""
    bits = as_bits(bits)
    if bits.size % 2:
        raise OddBitCount(f"{bits.size} bits cannot form 2-bit symbols")
    symbols = bits[0::2] * 2 + bits[1::2]
    return CSK_CONSTELLATION[symbols]


def csk_demap(colors) -> np.ndarray:
    """Nearest constellation point in RGB Euclidean distance."""
    colors = np.asarray(colors, dtype=np.float64).reshape(-1, 3)
    d2 = ((colors[:, None, :] - CSK_CONSTELLATION[None, :, :].astype(np.float64)) ** 2).sum(-1)
    symbols = d2.argmin(axis=1)
    out = np.empty(2 * symbols.size, dtype=np.uint8)
    out[0::2] = symbols >> 1
    out[1::2] = symbols & 1
    return out
