"""BitStream helpers: packing, ASCII payloads, PRBS payloads and the on-disk format.

A BitStream is a 1-D ``uint8`` numpy array holding only 0 and 1.

On disk a stream is the raw bytes (MSB-first, zero-padded to a whole byte)
plus a one-line sidecar ``<path>.len`` holding the exact bit count.
"""
from __future__ import annotations

from pathlib import Path

import numpy as np

PRBS_ORDER = 23
PRBS_TAP = 18


def as_bits(bits) -> np.ndarray:
    arr = np.asarray(bits, dtype=np.uint8).ravel()
    if arr.size and arr.max() > 1:
        raise ValueError("bit streams may only contain 0 and 1")
    return arr


def pack_bits(bits) -> bytes:
    return np.packbits(as_bits(bits), bitorder="big").tobytes()


def unpack_bits(data: bytes, n_bits: int | None = None) -> np.ndarray:
    bits = np.unpackbits(np.frombuffer(data, dtype=np.uint8), bitorder="big")
    if n_bits is not None:
        if n_bits > bits.size:
            raise ValueError(f"requested {n_bits} bits from {bits.size} available")
        bits = bits[:n_bits]
    return bits


def ascii_to_bits(text: str) -> np.ndarray:
    """Eight bits per character, MSB first."""
    return unpack_bits(text.encode("ascii"))


def bits_to_ascii(bits) -> str:
    return pack_bits(bits).decode("ascii", errors="replace")


def prbs(n_bits: int, seed: int = 1) -> np.ndarray:
    """PRBS-23 (x^23 + x^18 + 1) Fibonacci LFSR output, register seeded from ``seed``."""
    state = (int(seed) * 2654435761 + 0x5BD1E995) % (1 << PRBS_ORDER)
    if state == 0:
        state = 1
    out = np.empty(n_bits + PRBS_ORDER, dtype=np.uint8)
    out[:PRBS_ORDER] = [(state >> i) & 1 for i in range(PRBS_ORDER)]
    # b[n] = b[n-23] ^ b[n-18]; a block of 18 only depends on already-known bits
    step = PRBS_TAP
    for n in range(PRBS_ORDER, n_bits + PRBS_ORDER, step):
        m = min(step, n_bits + PRBS_ORDER - n)
        out[n:n + m] = out[n - PRBS_ORDER:n - PRBS_ORDER + m] ^ out[n - PRBS_TAP:n - PRBS_TAP + m]
    return out[PRBS_ORDER:].copy()


def sidecar_path(path) -> Path:
    path = Path(path)
    return path.with_name(path.name + ".len")


def write_bitstream(path, bits) -> None:
    bits = as_bits(bits)
    Path(path).write_bytes(pack_bits(bits))
    sidecar_path(path).write_text(f"{bits.size}\n")


def read_bitstream(path) -> np.ndarray:
    """Read a stream; without a sidecar every byte contributes 8 bits."""
    data = Path(path).read_bytes()
    side = sidecar_path(path)
    n_bits = int(side.read_text().strip()) if side.exists() else None
    return unpack_bits(data, n_bits)
