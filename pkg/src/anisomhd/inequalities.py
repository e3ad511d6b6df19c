"""Numerical audit of the anisotropic product inequalities on the torus.

With i, j, k distinct axes and the shorthand

    B(g; k)    = ||g||^1/2 ||d_k g||^1/2
    A(f; i, j) = ||f||^1/4 ||d_i f||^1/4 ||d_j f||^1/4 ||d_i d_j f||^1/4

(all norms L2), the four checked forms are

    triple-111    int |f g h|          vs  B(f; i) B(g; j) B(h; k)
    triple-mixed  int |f g h|          vs  A(f; i, j) B(g; k) ||h||
    product-L2    (int |f g|^2)^1/2    vs  A(f; i, j) B(g; k)
    quadruple     int |f g h v|        vs  A(f; i, j) A(g; i, j) B(h; k) B(v; k)

The ratio lhs / rhs_factor estimates the implicit constant.  On the torus a
field with no dependence on one of the differentiated directions makes the
right-hand side vanish, so such inputs are rejected rather than reported.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
import scipy.fft
import scipy.special

from .initial import band_limited_coeffs
from .spectral import Grid, SpectralScalarField, derivative

VARIANTS = {"triple-111": 3, "triple-mixed": 3, "product-L2": 2, "quadruple": 4}
SWEEP_COLUMNS = ("sample_index", "seed", "lhs", "rhs_factor", "ratio")


class DegenerateInequalityError(AssertionError):
    """Zero right-hand side with a non-zero left-hand side."""


@dataclass(frozen=True)
class InequalityCase:
    variant: str
    fields: tuple
    axes: tuple[int, int, int] = (1, 2, 3)

    def __post_init__(self):
        if self.variant not in VARIANTS:
            raise ValueError(f"unknown variant {self.variant!r}; expected one of {sorted(VARIANTS)}")
        if sorted(self.axes) != [1, 2, 3]:
            raise ValueError(f"axes must be a permutation of (1, 2, 3), got {self.axes}")
        need = VARIANTS[self.variant]
        if len(self.fields) != need:
            raise ValueError(f"variant {self.variant} takes {need} fields, got {len(self.fields)}")
        grid = self.fields[0].grid
        if any(f.grid != grid for f in self.fields):
            raise ValueError("all fields must share one grid")


@dataclass(frozen=True)
class InequalityResult:
    lhs: float
    rhs_factor: float
    ratio: float


def oversampled(f: SpectralScalarField, factor: int = 2) -> np.ndarray:
    """Physical samples of f on a grid ``factor`` times finer per axis."""
    g = f.grid
    big = tuple(factor * n for n in g.shape)
    pad = np.zeros(big, np.complex128)
    idx = [np.fft.fftfreq(n, 1.0 / n).astype(int) % N for n, N in zip(g.shape, big)]
    pad[np.ix_(*idx)] = f.coeffs
    return scipy.fft.ifftn(pad, norm="forward").real


def _norm(f: SpectralScalarField) -> float:
    return math.sqrt(f.l2_norm_sq())


def _b(f: SpectralScalarField, k: int) -> float:
    return math.sqrt(_norm(f) * _norm(derivative(f, k)))


def _a(f: SpectralScalarField, i: int, j: int) -> float:
    di = derivative(f, i)
    return (_norm(f) * _norm(di) * _norm(derivative(f, j)) * _norm(derivative(di, j))) ** 0.25


def rhs_factor(case: InequalityCase) -> float:
    i, j, k = case.axes
    fs = case.fields
    if case.variant == "triple-111":
        return _b(fs[0], i) * _b(fs[1], j) * _b(fs[2], k)
    if case.variant == "triple-mixed":
        return _a(fs[0], i, j) * _b(fs[1], k) * _norm(fs[2])
    if case.variant == "product-L2":
        return _a(fs[0], i, j) * _b(fs[1], k)
    return _a(fs[0], i, j) * _a(fs[1], i, j) * _b(fs[2], k) * _b(fs[3], k)


def lhs_value(case: InequalityCase, oversample: int = 2) -> float:
    grid = case.fields[0].grid
    prod = np.ones(tuple(oversample * n for n in grid.shape))
    for f in case.fields:
        prod *= oversampled(f, oversample)
    mean = float(np.mean(np.abs(prod) if case.variant != "product-L2" else prod**2))
    if case.variant == "product-L2":
        return math.sqrt(grid.volume * mean)
    return grid.volume * mean


def check_inequality(case: InequalityCase, oversample: int = 2) -> InequalityResult:
    lhs = lhs_value(case, oversample)
    rhs = rhs_factor(case)
    if rhs == 0:
        if lhs > 0:
            raise DegenerateInequalityError(
                f"{case.variant}: right-hand side vanishes but lhs = {lhs:.3e}; "
                "some field is independent of a differentiated direction"
            )
        return InequalityResult(lhs, rhs, 0.0)
    return InequalityResult(lhs, rhs, lhs / rhs)


# --- Monte Carlo sweep -----------------------------------------------------


def sample_seed(seed: int, index: int) -> int:
    return int(np.random.SeedSequence([seed, index]).generate_state(1)[0])


def random_case(variant: str, grid: Grid, seed: int, band: int | None = None, axes=(1, 2, 3)) -> InequalityCase:
    band = band if band is not None else min(grid.shape) // 4
    rng = np.random.default_rng(seed)
    coeffs = band_limited_coeffs(grid, band, rng, count=VARIANTS[variant])
    return InequalityCase(variant, tuple(SpectralScalarField(grid, c) for c in coeffs), tuple(axes))


@dataclass
class SweepResult:
    variant: str
    rows: list = field(default_factory=list)

    @property
    def ratios(self) -> np.ndarray:
        return np.array([r[4] for r in self.rows])

    @property
    def max_ratio(self) -> float:
        # left-to-right reduction keeps the result independent of chunking
        best = 0.0
        for r in self.rows:
            best = max(best, r[4])
        return best

    def histogram(self, bins: int = 20):
        if not self.rows:
            return np.zeros(bins, int), np.linspace(0, 1, bins + 1)
        return np.histogram(self.ratios, bins=bins)

    def write_csv(self, path) -> None:
        write_sweep_csv(self.rows, path)


def write_sweep_csv(rows, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(SWEEP_COLUMNS)
        for r in rows:
            w.writerow([r[0], r[1], repr(r[2]), repr(r[3]), repr(r[4])])


def constant_sweep(
    variant: str,
    n_samples: int,
    grid: Grid,
    seed: int = 0,
    band: int | None = None,
    axes: Sequence[int] = (1, 2, 3),
    oversample: int = 2,
) -> SweepResult:
    """Ratios for ``n_samples`` random band-limited inputs; deterministic in ``seed``."""
    if n_samples < 0:
        raise ValueError(f"n_samples must be non-negative, got {n_samples}")
    out = SweepResult(variant)
    for i in range(n_samples):
        s = sample_seed(seed, i)
        res = check_inequality(random_case(variant, grid, s, band, axes), oversample)
        out.rows.append((i, s, res.lhs, res.rhs_factor, res.ratio))
    return out


# --- one-dimensional interpolation inequality -----------------------------


@dataclass(frozen=True)
class Interp1DResult:
    lhs: float
    rhs: float
    ratio: float


def check_interp_1d(values: np.ndarray, length: float, support_tol: float = 1e-10) -> Interp1DResult:
    """max|f| against sqrt(2) ||f||^1/2 ||f'||^1/2 for samples on a periodic interval.

    The samples must decay to below ``support_tol`` (relative) at both ends so
    the periodic interval stands in for the whole line.
    """
    f = np.asarray(values, dtype=float)
    peak = float(np.max(np.abs(f))) if f.size else 0.0
    if peak == 0:
        return Interp1DResult(0.0, 0.0, 0.0)
    if abs(f[0]) > support_tol * peak or abs(f[-1]) > support_tol * peak:
        raise ValueError("f is not effectively supported inside the interval")
    n = f.size
    h = length / n
    k = 2 * np.pi * np.fft.fftfreq(n, d=h)
    fp = scipy.fft.ifft(1j * k * scipy.fft.fft(f)).real
    norm_f = math.sqrt(h * float(np.sum(f * f)))
    norm_fp = math.sqrt(h * float(np.sum(fp * fp)))
    rhs = math.sqrt(2.0) * math.sqrt(norm_f * norm_fp)
    return Interp1DResult(peak, rhs, peak / rhs)


def mollified_exponential(x: np.ndarray, a: float, width: float) -> np.ndarray:
    """exp(-a|x|) convolved with a unit-mass Gaussian of standard deviation ``width``."""
    s = width
    x = np.asarray(x, dtype=float)

    def half(y):
        # exp(a^2 s^2 / 2 - a y) * erfc((a s^2 - y) / (sqrt 2 s)), written via erfcx where the
        # erfc argument is positive so neither factor overflows
        z = (a * s * s - y) / (math.sqrt(2) * s)
        with np.errstate(over="ignore", invalid="ignore"):
            pos = scipy.special.erfcx(np.maximum(z, 0.0)) * np.exp(-(y**2) / (2 * s * s))
            neg = np.exp(a * a * s * s / 2 - a * y) * scipy.special.erfc(np.minimum(z, 0.0))
        return np.where(z >= 0, pos, neg)

    return 0.5 * (half(x) + half(-x))


def interp_grid(half_width: float = 20.0, n: int = 2**14) -> np.ndarray:
    return -half_width + 2 * half_width * np.arange(n) / n


def gaussian_ratio_exact() -> float:
    """Closed form for exp(-x^2): ||f|| = ||f'|| = (pi/2)^(1/4), max f = 1."""
    return 1.0 / (math.sqrt(2.0) * (math.pi / 2) ** 0.25)


def mollified_family_ratios(
    widths: Sequence[float] = (0.4, 0.2, 0.1, 0.05, 0.025, 0.0125),
    a: float = 2.0,
    half_width: float = 20.0,
    n: int = 2**14,
) -> list[float]:
    """Interpolation ratios of mollified exp(-a|x|) for shrinking mollifier widths.

    The ratio is independent of a; a = 2 keeps the tails below the support
    tolerance on [-20, 20].
    """
    x = interp_grid(half_width, n)
    return [check_interp_1d(mollified_exponential(x, a, w), 2 * half_width).ratio for w in widths]
