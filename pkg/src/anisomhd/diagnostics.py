"""Sobolev norms, the energy functionals E1/E2, and derived fields.

All norms integrate over the physical box, so a single mode
``A sin(x2)`` on (2 pi)^3 has ``||f||_{L2}^2 = A^2 (2 pi)^3 / 2``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, fields, replace
from typing import Sequence

import numpy as np

from .dynamics import ModelConfig, State
from .spectral import (
    Grid,
    SpectralScalarField,
    SpectralVectorField,
    dealiased_product,
    derivative,
)

MULTIPLIER = "multiplier"
EQUIVALENT_SUM = "equivalent-sum"


@dataclass(frozen=True)
class SobolevSpec:
    s: int = 4
    form: str = MULTIPLIER

    def __post_init__(self):
        if int(self.s) != self.s or self.s < 0:
            raise ValueError(f"Sobolev order must be a non-negative integer, got {self.s}")
        if self.form not in (MULTIPLIER, EQUIVALENT_SUM):
            raise ValueError(f"unknown Sobolev form {self.form!r}")

    def weight(self, grid: Grid) -> np.ndarray:
        k1, k2, k3 = grid.k
        if self.form == MULTIPLIER:
            return (1.0 + grid.k_sq) ** self.s
        if self.s == 0:
            return np.full(grid.shape, 2.0)
        return 1.0 + k1 ** (2 * self.s) + k2 ** (2 * self.s) + k3 ** (2 * self.s)


def _coeffs(f) -> tuple[Grid, np.ndarray]:
    if isinstance(f, (SpectralScalarField, SpectralVectorField)):
        return f.grid, f.coeffs
    raise TypeError(f"expected a spectral field, got {type(f).__name__}")


def sobolev_norm_sq(f, spec: SobolevSpec = SobolevSpec()) -> float:
    """Squared H^s norm of a scalar or vector field (vector: summed over components)."""
    grid, c = _coeffs(f)
    amp = np.abs(c) ** 2
    if amp.ndim == 4:
        amp = amp.sum(0)
    return float(grid.volume * np.sum(spec.weight(grid) * amp))


def curl(v: SpectralVectorField) -> SpectralVectorField:
    k1, k2, k3 = v.grid.k_odd
    c = v.coeffs
    out = 1j * np.stack([k2 * c[2] - k3 * c[1], k3 * c[0] - k1 * c[2], k1 * c[1] - k2 * c[0]])
    return SpectralVectorField(v.grid, out, solenoidal=True)


# --- energy functional -----------------------------------------------------

CSV_COLUMNS = ("t", "h4_u", "h4_b", "int_d1u_h4", "int_dhb_h4", "int_d2u_h3", "e1", "e2", "e")


@dataclass(frozen=True)
class EnergyReport:
    t: float
    h4_u: float
    h4_b: float
    int_d1u_h4: float
    int_dhb_h4: float
    int_d2u_h3: float
    e1: float
    e2: float
    e: float
    # instantaneous integrands and running sup, carried for the next update
    rate_d1u_h4: float = 0.0
    rate_dhb_h4: float = 0.0
    rate_d2u_h3: float = 0.0
    sup_h4: float = 0.0

    def row(self) -> list[float]:
        return [getattr(self, name) for name in CSV_COLUMNS]

    def csv_line(self) -> str:
        return ",".join(repr(float(x)) for x in self.row())

    @classmethod
    def from_row(cls, row: Sequence, state: State) -> "EnergyReport":
        """Rebuild a report from a CSV row plus the state it describes."""
        vals = dict(zip(CSV_COLUMNS, (float(x) for x in row)))
        dens = energy_densities(state)
        sup = vals["e1"] - vals["int_d1u_h4"] - vals["int_dhb_h4"]
        return cls(**vals, rate_d1u_h4=dens[2], rate_dhb_h4=dens[3], rate_d2u_h3=dens[4], sup_h4=sup)


def energy_densities(s: State) -> tuple[float, float, float, float, float]:
    """(||u||_H4^2, ||b||_H4^2, ||d1 u||_H4^2, ||grad_h b||_H4^2, ||d2 u||_H3^2)."""
    g = s.grid
    k1, k2, _ = g.k
    w3 = (1.0 + g.k_sq) ** 3
    w4 = w3 * (1.0 + g.k_sq)
    au = (np.abs(s.u.coeffs) ** 2).sum(0)
    ab = (np.abs(s.b.coeffs) ** 2).sum(0)
    V = g.volume
    return (
        float(V * np.sum(w4 * au)),
        float(V * np.sum(w4 * ab)),
        float(V * np.sum(w4 * k1**2 * au)),
        float(V * np.sum(w4 * (k1**2 + k2**2) * ab)),
        float(V * np.sum(w3 * k2**2 * au)),
    )


def initial_report(s: State) -> EnergyReport:
    h4_u, h4_b, d1u, dhb, d2u = energy_densities(s)
    sup = h4_u + h4_b
    return EnergyReport(s.t, h4_u, h4_b, 0.0, 0.0, 0.0, sup, 0.0, sup, d1u, dhb, d2u, sup)


def update_report(prev: EnergyReport, s: State, dt_elapsed: float) -> EnergyReport:
    """Advance running sup and trapezoidal time integrals to state ``s``."""
    if dt_elapsed < 0 or s.t < prev.t:
        raise ValueError(f"time must be non-decreasing (previous t={prev.t}, new t={s.t})")
    h4_u, h4_b, d1u, dhb, d2u = energy_densities(s)
    half = 0.5 * dt_elapsed
    i1 = prev.int_d1u_h4 + half * (prev.rate_d1u_h4 + d1u)
    i2 = prev.int_dhb_h4 + half * (prev.rate_dhb_h4 + dhb)
    i3 = prev.int_d2u_h3 + half * (prev.rate_d2u_h3 + d2u)
    sup = max(prev.sup_h4, h4_u + h4_b)
    e1 = sup + i1 + i2
    return EnergyReport(s.t, h4_u, h4_b, i1, i2, i3, e1, i3, e1 + i3, d1u, dhb, d2u, sup)


# --- L2 energy balance -----------------------------------------------------


def l2_dissipation(s: State, c: ModelConfig) -> float:
    """2 (sum_i nu_i ||d_i u||^2 + sum_i eta_i ||d_i b||^2)."""
    g = s.grid
    au = (np.abs(s.u.coeffs) ** 2).sum(0)
    ab = (np.abs(s.b.coeffs) ** 2).sum(0)
    total = 0.0
    for kk, nu, eta in zip(g.k, c.nu, c.eta):
        total += np.sum(kk**2 * (nu * au + eta * ab))
    return float(2 * g.volume * total)


@dataclass(frozen=True, eq=False)
class EnergyBudget:
    """Tracks ||u||^2 + ||b||^2 + the time integral of the dissipation rate.

    The integral uses the trapezoid rule plus the Euler-Maclaurin endpoint
    correction ``-dt^2/12 (D'(t) - D'(0))``, with D' evaluated exactly from
    the model right-hand side at the two end states.
    """

    config: ModelConfig
    first: State
    last: State
    e0: float
    energy: float
    trapezoid: float
    rate: float
    dt_last: float = 0.0

    @classmethod
    def start(cls, s: State, c: ModelConfig) -> "EnergyBudget":
        e = s.u.l2_norm_sq() + s.b.l2_norm_sq()
        return cls(c, s, s, e, e, 0.0, l2_dissipation(s, c))

    def advance(self, s: State, dt_elapsed: float) -> "EnergyBudget":
        rate = l2_dissipation(s, self.config)
        return replace(
            self,
            last=s,
            energy=s.u.l2_norm_sq() + s.b.l2_norm_sq(),
            trapezoid=self.trapezoid + 0.5 * dt_elapsed * (self.rate + rate),
            rate=rate,
            dt_last=dt_elapsed,
        )

    @property
    def dissipated(self) -> float:
        if self.dt_last == 0:
            return self.trapezoid
        d_end = dissipation_rate_derivative(self.last, self.config)
        d_start = dissipation_rate_derivative(self.first, self.config)
        return self.trapezoid - self.dt_last**2 / 12 * (d_end - d_start)

    def residual(self, corrected: bool = True) -> float:
        """|E(t) + int D - E(0)|, relative to E(0) when that is non-zero."""
        diss = self.dissipated if corrected else self.trapezoid
        if self.e0 == 0:
            return abs(self.energy + diss)
        return abs(self.energy + diss - self.e0) / self.e0


def dissipation_rate_derivative(s: State, c: ModelConfig) -> float:
    from .dynamics import rhs

    du, db = rhs(s, c)
    g = s.grid
    total = 0.0
    for kk, nu, eta in zip(g.k, c.nu, c.eta):
        w = kk**2
        total += nu * np.sum(w * (np.conj(s.u.coeffs) * du.coeffs).real.sum(0))
        total += eta * np.sum(w * (np.conj(s.b.coeffs) * db.coeffs).real.sum(0))
    return float(4 * g.volume * total)


# --- bootstrap inequality --------------------------------------------------


def bootstrap_residual(E: Sequence[float], C0: float) -> np.ndarray:
    """C0 (E(0) + E(0)^1.5 + E(t)^1.5 + E(t)^2) - E(t) for every sample."""
    if C0 < 1:
        raise ValueError(f"C0 must be at least 1, got {C0}")
    E = np.asarray(E, dtype=float)
    if E.size == 0:
        return E
    e0 = E[0]
    return C0 * (e0 + e0**1.5 + E**1.5 + E**2) - E


def fit_bootstrap_constant(E: Sequence[float], rtol: float = 1e-12) -> float:
    """Smallest C0 >= 1 with a non-negative residual at every sample (bisection)."""
    E = np.asarray(E, dtype=float)
    if E.size == 0 or np.all(bootstrap_residual(E, 1.0) >= 0):
        return 1.0
    lo, hi = 1.0, 2.0
    while np.any(bootstrap_residual(E, hi) < 0):
        lo, hi = hi, hi * 2
        if not math.isfinite(hi):
            return math.inf
    while hi - lo > rtol * hi:
        mid = 0.5 * (lo + hi)
        if np.all(bootstrap_residual(E, mid) >= 0):
            hi = mid
        else:
            lo = mid
    return hi


# --- interaction term and pressure ----------------------------------------


def _inner(f: SpectralScalarField, g: SpectralScalarField) -> float:
    """Integral of the product of two real fields over the box."""
    return float(f.grid.volume * np.sum(f.coeffs * np.conj(g.coeffs)).real)


def interaction_term(s: State, i: int, j: int, k: int) -> float:
    """Integral of d3^3 omega_i * d2 u_j * d3^3 omega_k with omega = curl u."""
    for idx in (i, j, k):
        if idx not in (1, 2, 3):
            raise ValueError(f"component indices must be 1, 2 or 3, got {(i, j, k)}")
    omega = curl(s.u)
    a_i = derivative(omega[i - 1], 3, 3)
    a_k = derivative(omega[k - 1], 3, 3)
    b_j = derivative(s.u[j - 1], 2, 1)
    return _inner(dealiased_product(a_i, b_j), a_k)


def pressure_field(s: State) -> SpectralScalarField:
    """P = sum_ij (-Delta)^-1 d_i d_j (u_i u_j - b_i b_j), zero mean."""
    g = s.grid
    k = g.k_odd
    k_sq = k[0] ** 2 + k[1] ** 2 + k[2] ** 2
    total = np.zeros(g.shape, np.complex128)
    for a in range(3):
        for b in range(3):
            t = dealiased_product(s.u[a], s.u[b]).coeffs - dealiased_product(s.b[a], s.b[b]).coeffs
            total -= k[a] * k[b] * t
    with np.errstate(divide="ignore", invalid="ignore"):
        p = np.where(k_sq > 0, total / np.where(k_sq > 0, k_sq, 1.0), 0.0)
    return SpectralScalarField(g, p)


def advection_terms(s: State) -> SpectralVectorField:
    """-u.grad u + b.grad b in advective form, products dealiased."""
    out = []
    for i in range(3):
        acc = np.zeros(s.grid.shape, np.complex128)
        for j in range(3):
            acc -= dealiased_product(s.u[j], derivative(s.u[i], j + 1)).coeffs
            acc += dealiased_product(s.b[j], derivative(s.b[i], j + 1)).coeffs
        out.append(acc)
    return SpectralVectorField(s.grid, np.stack(out))


def report_fields() -> tuple[str, ...]:
    return tuple(f.name for f in fields(EnergyReport))
