"""Binary checkpoints of a State.

Layout, all little-endian::

    b"AMHD"                      magic
    uint32                       format version
    uint32 x 3                   n1, n2, n3
    float64 x 3                  L1, L2, L3
    float64                      t
    6 blocks (u1, u2, u3, b1, b2, b3), each n1*n2*n3 complex values stored
    as (real, imag) float64 pairs

Inside a block, wavevector indices run lexicographically over (m1, m2, m3),
each ascending from -n/2 to n/2 - 1, with m3 varying fastest.
"""

from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

from .dynamics import State
from .spectral import Grid, SpectralVectorField

MAGIC = b"AMHD"
VERSION = 1
_HEADER = struct.Struct("<4sI3I3dd")


class CheckpointError(ValueError):
    pass


def _to_file_order(c: np.ndarray) -> np.ndarray:
    return np.fft.fftshift(c, axes=(-3, -2, -1))


def _from_file_order(c: np.ndarray) -> np.ndarray:
    return np.fft.ifftshift(c, axes=(-3, -2, -1))


def encode(s: State) -> bytes:
    g = s.grid
    head = _HEADER.pack(MAGIC, VERSION, g.n1, g.n2, g.n3, g.L1, g.L2, g.L3, float(s.t))
    blocks = _to_file_order(np.concatenate([s.u.coeffs, s.b.coeffs]))
    return head + np.ascontiguousarray(blocks, dtype="<c16").tobytes()


def decode(data: bytes, source: str = "<bytes>") -> State:
    if len(data) < _HEADER.size:
        raise CheckpointError(f"{source}: truncated header ({len(data)} bytes)")
    magic, version, n1, n2, n3, L1, L2, L3, t = _HEADER.unpack_from(data)
    if magic != MAGIC:
        raise CheckpointError(f"{source}: bad magic {magic!r}")
    if version != VERSION:
        raise CheckpointError(f"{source}: unsupported format version {version}")
    grid = Grid(n1, n2, n3, L1, L2, L3)
    count = 6 * n1 * n2 * n3
    body = data[_HEADER.size :]
    if len(body) != 16 * count:
        raise CheckpointError(f"{source}: expected {16 * count} coefficient bytes, found {len(body)}")
    c = np.frombuffer(body, dtype="<c16").astype(np.complex128).reshape((6, n1, n2, n3))
    c = _from_file_order(c)
    return State(SpectralVectorField(grid, c[:3], True), SpectralVectorField(grid, c[3:], True), t)


def write_checkpoint(s: State, path: str | Path) -> None:
    p = Path(path)
    tmp = p.with_name(p.name + ".tmp")
    try:
        tmp.write_bytes(encode(s))
        tmp.replace(p)
    except OSError as exc:
        raise OSError(f"cannot write checkpoint {p}: {exc}") from exc


def read_checkpoint(path: str | Path) -> State:
    p = Path(path)
    try:
        data = p.read_bytes()
    except OSError as exc:
        raise OSError(f"cannot read checkpoint {p}: {exc}") from exc
    return decode(data, str(p))
