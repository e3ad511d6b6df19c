"""Periodic 3D Fourier fields on a uniform box.

Coefficients are stored over the full spectrum in numpy FFT index order and
normalised so that ``coeffs[k]`` is the amplitude of ``exp(i k.x)``::

    f(x) = sum_k coeffs[k] * exp(i k.x)

With this convention ``||f||_{L2}^2 = volume * sum_k |coeffs[k]|^2``.

Odd-order derivative multipliers (and anything built on them: divergence,
Leray projection, curl) use wavenumbers with the Nyquist index zeroed, which
is what keeps those operators Hermitian-symmetric on even grids.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
import scipy.fft

__all__ = [
    "Grid",
    "SpectralScalarField",
    "SpectralVectorField",
    "forward",
    "inverse",
    "derivative",
    "leray_project",
    "dealiased_product",
    "divergence",
    "relative_divergence",
    "transform_roundtrip",
    "hermitian_defect",
    "mirror",
    "to_half",
    "from_half",
    "RealFFT",
]

AXES = (-3, -2, -1)


@dataclass(frozen=True)
class Grid:
    n1: int
    n2: int
    n3: int
    L1: float = 2 * np.pi
    L2: float = 2 * np.pi
    L3: float = 2 * np.pi

    def __post_init__(self):
        for n in self.shape:
            if int(n) != n or n < 4 or n % 2:
                raise ValueError(f"mode counts must be even integers >= 4, got {self.shape}")
        for L in self.lengths:
            if not L > 0:
                raise ValueError(f"box lengths must be positive, got {self.lengths}")

    @classmethod
    def cube(cls, n: int, L: float = 2 * np.pi) -> "Grid":
        return cls(n, n, n, L, L, L)

    @property
    def shape(self) -> tuple[int, int, int]:
        return (self.n1, self.n2, self.n3)

    @property
    def lengths(self) -> tuple[float, float, float]:
        return (self.L1, self.L2, self.L3)

    @property
    def size(self) -> int:
        return self.n1 * self.n2 * self.n3

    @property
    def volume(self) -> float:
        return self.L1 * self.L2 * self.L3

    @property
    def dx(self) -> tuple[float, float, float]:
        return tuple(L / n for L, n in zip(self.lengths, self.shape))

    @property
    def half_shape(self) -> tuple[int, int, int]:
        return (self.n1, self.n2, self.n3 // 2 + 1)

    @cached_property
    def mode_index(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Integer mode numbers m in [-n/2, n/2), broadcastable over the full grid."""
        out = []
        for ax, n in enumerate(self.shape):
            m = np.fft.fftfreq(n, 1.0 / n).astype(np.int64)
            shape = [1, 1, 1]
            shape[ax] = n
            out.append(m.reshape(shape))
        return tuple(out)

    @cached_property
    def k(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Wavenumbers 2 pi m / L per axis, broadcastable over the full grid."""
        return tuple(2 * np.pi * m / L for m, L in zip(self.mode_index, self.lengths))

    @cached_property
    def k_odd(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Wavenumbers with the Nyquist index set to zero."""
        out = []
        for kk, m, n in zip(self.k, self.mode_index, self.shape):
            out.append(np.where(m == -n // 2, 0.0, kk))
        return tuple(out)

    @cached_property
    def k_sq(self) -> np.ndarray:
        k1, k2, k3 = self.k
        return k1**2 + k2**2 + k3**2

    @cached_property
    def dealias_mask(self) -> np.ndarray:
        """True on retained modes: 3|m_i| < n_i on every axis."""
        m1, m2, m3 = self.mode_index
        return (3 * np.abs(m1) < self.n1) & (3 * np.abs(m2) < self.n2) & (3 * np.abs(m3) < self.n3)

    def coordinates(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Physical grid points x_i = j L_i / n_i, broadcastable (ij indexing)."""
        out = []
        for ax, (n, L) in enumerate(zip(self.shape, self.lengths)):
            shape = [1, 1, 1]
            shape[ax] = n
            out.append((np.arange(n) * (L / n)).reshape(shape))
        return tuple(out)

    # Half-spectrum (rfft) views used by the time stepper.

    @cached_property
    def k_half(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        h = self.n3 // 2 + 1
        return tuple(kk[..., :h] if kk.shape[-1] > 1 else kk for kk in self.k)

    @cached_property
    def k_odd_half(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        h = self.n3 // 2 + 1
        return tuple(kk[..., :h] if kk.shape[-1] > 1 else kk for kk in self.k_odd)

    @cached_property
    def dealias_mask_half(self) -> np.ndarray:
        return self.dealias_mask[..., : self.n3 // 2 + 1]

    @cached_property
    def half_weights(self) -> np.ndarray:
        """Multiplicity of each half-spectrum entry in a full-spectrum sum."""
        h = self.n3 // 2 + 1
        w = np.full(h, 2.0)
        w[0] = 1.0
        w[-1] = 1.0
        return w.reshape(1, 1, h)


def forward(values: np.ndarray) -> np.ndarray:
    """Physical samples -> normalised coefficients over the last three axes."""
    return scipy.fft.fftn(values, axes=AXES, norm="forward")


def inverse(coeffs: np.ndarray) -> np.ndarray:
    """Normalised coefficients -> real physical samples."""
    return scipy.fft.ifftn(coeffs, axes=AXES, norm="forward").real


def mirror(coeffs: np.ndarray) -> np.ndarray:
    """Return c[-k] for every k (index-wise (-i) mod n on the last three axes)."""
    out = np.flip(coeffs, axis=AXES)
    return np.roll(out, 1, axis=AXES)


def hermitian_defect(coeffs: np.ndarray) -> float:
    """max |c(k) - conj(c(-k))| relative to max |c|; 0 for the zero array."""
    scale = np.max(np.abs(coeffs))
    if scale == 0:
        return 0.0
    return float(np.max(np.abs(coeffs - np.conj(mirror(coeffs)))) / scale)


def _readonly(a: np.ndarray) -> np.ndarray:
    a.flags.writeable = False
    return a


@dataclass(frozen=True, eq=False)
class SpectralScalarField:
    grid: Grid
    coeffs: np.ndarray

    def __post_init__(self):
        c = np.array(self.coeffs, dtype=np.complex128)
        if c.shape != self.grid.shape:
            raise ValueError(f"coefficient shape {c.shape} does not match grid {self.grid.shape}")
        object.__setattr__(self, "coeffs", _readonly(c))

    @classmethod
    def zeros(cls, grid: Grid) -> "SpectralScalarField":
        return cls(grid, np.zeros(grid.shape, np.complex128))

    @classmethod
    def from_physical(cls, grid: Grid, values: np.ndarray) -> "SpectralScalarField":
        return cls(grid, forward(np.asarray(values, dtype=np.float64)))

    def to_physical(self) -> np.ndarray:
        return inverse(self.coeffs)

    def l2_norm_sq(self) -> float:
        return float(self.grid.volume * np.sum(np.abs(self.coeffs) ** 2))


@dataclass(frozen=True, eq=False)
class SpectralVectorField:
    """Three scalar components sharing one grid, stored as a (3, n1, n2, n3) array.

    With ``solenoidal=True`` the divergence-free property is checked on
    construction (relative divergence at most ``DIV_TOL``).  Callers that
    already measured the divergence pass it as ``known_divergence``; the
    measured value is kept on the instance either way.
    """

    grid: Grid
    coeffs: np.ndarray
    solenoidal: bool = False
    known_divergence: float | None = field(default=None, repr=False)

    DIV_TOL = 1e-10

    def __post_init__(self):
        c = np.array(self.coeffs, dtype=np.complex128)
        if c.shape != (3,) + self.grid.shape:
            raise ValueError(f"coefficient shape {c.shape} does not match (3,) + {self.grid.shape}")
        object.__setattr__(self, "coeffs", _readonly(c))
        if self.solenoidal:
            rel = self.known_divergence
            if rel is None:
                rel = relative_divergence(self)
                object.__setattr__(self, "known_divergence", rel)
            if rel > self.DIV_TOL:
                raise ValueError(f"field flagged divergence-free has relative divergence {rel:.3e}")

    @classmethod
    def zeros(cls, grid: Grid) -> "SpectralVectorField":
        return cls(grid, np.zeros((3,) + grid.shape, np.complex128), solenoidal=True)

    @classmethod
    def from_components(cls, comps, solenoidal: bool = False) -> "SpectralVectorField":
        comps = list(comps)
        grid = comps[0].grid
        if any(c.grid != grid for c in comps):
            raise ValueError("components live on different grids")
        return cls(grid, np.stack([c.coeffs for c in comps]), solenoidal=solenoidal)

    @classmethod
    def from_physical(cls, grid: Grid, values: np.ndarray, solenoidal: bool = False) -> "SpectralVectorField":
        return cls(grid, forward(np.asarray(values, dtype=np.float64)), solenoidal=solenoidal)

    @property
    def components(self) -> tuple[SpectralScalarField, SpectralScalarField, SpectralScalarField]:
        return tuple(SpectralScalarField(self.grid, c) for c in self.coeffs)

    def __getitem__(self, i: int) -> SpectralScalarField:
        return SpectralScalarField(self.grid, self.coeffs[i])

    def to_physical(self) -> np.ndarray:
        return inverse(self.coeffs)

    def l2_norm_sq(self) -> float:
        return float(self.grid.volume * np.sum(np.abs(self.coeffs) ** 2))


def derivative(f: SpectralScalarField, axis: int, order: int = 1) -> SpectralScalarField:
    """Spectral derivative of ``order`` along ``axis`` (1, 2 or 3)."""
    if axis not in (1, 2, 3):
        raise ValueError(f"axis must be 1, 2 or 3, got {axis}")
    if int(order) != order or order < 1:
        raise ValueError(f"order must be a positive integer, got {order}")
    kk = f.grid.k_odd[axis - 1] if order % 2 else f.grid.k[axis - 1]
    return SpectralScalarField(f.grid, f.coeffs * (1j * kk) ** order)


def _project(coeffs: np.ndarray, k: tuple[np.ndarray, ...], k_sq: np.ndarray) -> np.ndarray:
    div = k[0] * coeffs[0] + k[1] * coeffs[1] + k[2] * coeffs[2]
    with np.errstate(divide="ignore", invalid="ignore"):
        scaled = np.where(k_sq > 0, div / k_sq, 0.0)
    return np.stack([coeffs[i] - k[i] * scaled for i in range(3)])


def leray_project(v: SpectralVectorField) -> SpectralVectorField:
    """Remove the gradient part: v(k) - k (k.v(k)) / |k|^2, zero mode untouched."""
    g = v.grid
    k = g.k_odd
    k_sq = k[0] ** 2 + k[1] ** 2 + k[2] ** 2
    out = _project(v.coeffs, k, k_sq)
    # measured against the input so rounding left over from a pure gradient is not amplified
    scale = np.max(np.abs(v.coeffs))
    div = np.max(np.abs(k[0] * out[0] + k[1] * out[1] + k[2] * out[2])) / scale if scale else 0.0
    return SpectralVectorField(g, out, solenoidal=True, known_divergence=float(div))


def divergence(v: SpectralVectorField) -> SpectralScalarField:
    k = v.grid.k_odd
    return SpectralScalarField(v.grid, 1j * (k[0] * v.coeffs[0] + k[1] * v.coeffs[1] + k[2] * v.coeffs[2]))


def relative_divergence(v: SpectralVectorField | np.ndarray, grid: Grid | None = None) -> float:
    """max_k |k.v(k)| / max_k |v(k)|, or 0 for a zero field."""
    if isinstance(v, SpectralVectorField):
        grid, c = v.grid, v.coeffs
    else:
        c = v
    scale = np.max(np.abs(c))
    if scale == 0:
        return 0.0
    if c.shape[-1] == grid.n3:
        k = grid.k_odd
    else:
        k = grid.k_odd_half
    div = k[0] * c[0] + k[1] * c[1] + k[2] * c[2]
    return float(np.max(np.abs(div)) / scale)


def dealiased_product(f: SpectralScalarField, g: SpectralScalarField) -> SpectralScalarField:
    """Pseudo-spectral product of two fields, truncated by the 2/3 rule."""
    if f.grid != g.grid:
        raise ValueError("fields live on different grids")
    prod = inverse(f.coeffs) * inverse(g.coeffs)
    return SpectralScalarField(f.grid, forward(prod) * f.grid.dealias_mask)


def transform_roundtrip(f: SpectralScalarField) -> SpectralScalarField:
    return SpectralScalarField.from_physical(f.grid, f.to_physical())


# --- half-spectrum helpers -------------------------------------------------


def to_half(coeffs: np.ndarray) -> np.ndarray:
    """Keep the non-negative m3 half of a Hermitian full spectrum."""
    n3 = coeffs.shape[-1]
    return np.ascontiguousarray(coeffs[..., : n3 // 2 + 1])


def from_half(half: np.ndarray, n3: int) -> np.ndarray:
    """Rebuild the full spectrum from its m3 >= 0 half by Hermitian symmetry (bit-exact)."""
    h = n3 // 2 + 1
    full = np.empty(half.shape[:-1] + (n3,), dtype=np.complex128)
    full[..., :h] = half
    tail = np.conj(half[..., 1 : n3 - h + 1][..., ::-1])
    tail = np.roll(np.flip(tail, axis=(-3, -2)), 1, axis=(-3, -2))
    full[..., h:] = tail
    return full


class RealFFT:
    """Batched real <-> half-spectrum transforms with reusable buffers.

    Write into ``real_in`` and call :meth:`forward` (unnormalised r2c), or
    write into ``half_in`` and call :meth:`inverse` (plain Fourier sum, so
    normalised coefficients map straight to physical samples).  Returned
    arrays are views into internal buffers, valid until the next call.

    FFTW (via pyfftw, ``FFTW_ESTIMATE`` so plans are reproducible) is used
    when importable, otherwise ``scipy.fft``.
    """

    def __init__(self, grid: Grid, batch: int):
        self.grid = grid
        self.batch = batch
        try:
            import pyfftw
        except ImportError:  # pragma: no cover - exercised only without pyfftw
            self._fw = self._bw = None
            self.real_in = np.zeros((batch,) + grid.shape)
            self.half_in = np.zeros((batch,) + grid.half_shape, np.complex128)
            return
        self.real_in = pyfftw.empty_aligned((batch,) + grid.shape, dtype="float64")
        half_out = pyfftw.empty_aligned((batch,) + grid.half_shape, dtype="complex128")
        self._fw = pyfftw.FFTW(
            self.real_in, half_out, axes=AXES, direction="FFTW_FORWARD", flags=("FFTW_ESTIMATE",), threads=1
        )
        self.half_in = pyfftw.empty_aligned((batch,) + grid.half_shape, dtype="complex128")
        real_out = pyfftw.empty_aligned((batch,) + grid.shape, dtype="float64")
        self._bw = pyfftw.FFTW(
            self.half_in,
            real_out,
            axes=AXES,
            direction="FFTW_BACKWARD",
            flags=("FFTW_ESTIMATE", "FFTW_DESTROY_INPUT"),
            threads=1,
        )

    def forward(self) -> np.ndarray:
        if self._fw is None:
            return scipy.fft.rfftn(self.real_in, axes=AXES)
        # pyfftw scales the forward transform by 1/N unless normalise_idft is True
        return self._fw(normalise_idft=True)

    def inverse(self) -> np.ndarray:
        """Transform ``half_in``; the buffer content is destroyed."""
        if self._bw is None:
            return scipy.fft.irfftn(self.half_in, s=self.grid.shape, axes=AXES, norm="forward")
        return self._bw(normalise_idft=False)
