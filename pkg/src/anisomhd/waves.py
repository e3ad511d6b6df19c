"""Dispersion analysis of the linearised system.

Per Fourier mode and velocity component, the linear part couples (u, b) through
the 2x2 block::

    d/dt [u]   [-a     i k_bg] [u]
         [b] = [i k_bg   -c  ] [b]

with a = sum_i nu_i k_i^2 and c = sum_i eta_i k_i^2.  For the default masks the
characteristic polynomial is

    lambda^2 + (k1^2 + kh^2) lambda + (k1^2 kh^2 + k2^2),   kh^2 = k1^2 + k2^2,

which is also the symbol of the second-order wave equation obeyed by u and b.
"""

from __future__ import annotations

import csv
import itertools
import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np
import scipy.linalg

from .dynamics import ConfigurationError, ModelConfig, State, run
from .spectral import Grid, SpectralVectorField

DECAY_MAP_COLUMNS = ("k1", "k2", "k3", "re_lambda_plus", "im_lambda_plus", "re_lambda_minus", "im_lambda_minus")


@dataclass(frozen=True)
class WaveMode:
    k: tuple[float, float, float]
    kh_sq: float
    lambda_plus: complex
    lambda_minus: complex

    @property
    def roots(self) -> tuple[complex, complex]:
        return (self.lambda_plus, self.lambda_minus)

    @property
    def oscillatory(self) -> bool:
        return self.lambda_plus.imag != 0.0


def stable_quadratic_roots(p: float, q: float) -> tuple[complex, complex]:
    """Roots of lambda^2 + p lambda + q with p >= 0, ordered (slower, faster decay).

    Real roots: the larger-magnitude root comes from the formula without
    cancellation and the other from the product q.  Complex roots carry no
    cancellation; the one with positive imaginary part is returned first.
    """
    disc = p * p - 4.0 * q
    if disc >= 0:
        big = -0.5 * (p + math.sqrt(disc))
        small = q / big if big != 0 else 0.0
        return complex(small), complex(big)
    re = -0.5 * p
    im = 0.5 * math.sqrt(-disc)
    return complex(re, im), complex(re, -im)


def dispersion_roots(k: Sequence[float]) -> WaveMode:
    k1, k2, k3 = (float(x) for x in k)
    kh_sq = k1 * k1 + k2 * k2
    p = k1 * k1 + kh_sq
    q = k1 * k1 * kh_sq + k2 * k2
    lp, lm = stable_quadratic_roots(p, q)
    return WaveMode((k1, k2, k3), kh_sq, lp, lm)


def linear_block(k: Sequence[float], c: ModelConfig = ModelConfig()) -> np.ndarray:
    if c.variant != "perturbation" or c.background_axis != 2:
        raise ConfigurationError("linear_block supports the perturbation variant with background_axis = 2")
    kk = [float(x) ** 2 for x in k]
    a = sum(n * x for n, x in zip(c.nu, kk))
    d = sum(e * x for e, x in zip(c.eta, kk))
    g = 1j * float(k[1]) if c.coupling else 0.0
    return np.array([[-a, g], [g, -d]], dtype=np.complex128)


def decay_map(ranges: Sequence[Iterable[int]], c: ModelConfig | None = None) -> list[tuple[float, ...]]:
    """Decay rates over an integer lattice, rows ordered lexicographically in k.

    Default masks use the closed-form roots; any other config goes through the
    eigenvalues of its linear block.
    """
    rows = []
    for k in itertools.product(*(sorted(set(int(x) for x in r)) for r in ranges)):
        if c is None or c == ModelConfig():
            m = dispersion_roots(k)
            lp, lm = m.lambda_plus, m.lambda_minus
        else:
            ev = np.linalg.eigvals(linear_block(k, c))
            ev = sorted(ev, key=lambda z: (-z.real, -z.imag))
            lp, lm = complex(ev[0]), complex(ev[1])
        rows.append((float(k[0]), float(k[1]), float(k[2]), lp.real, lp.imag, lm.real, lm.imag))
    return rows


def write_decay_map(rows, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(DECAY_MAP_COLUMNS)
        for r in rows:
            w.writerow([repr(float(x)) for x in r])


# --- simulator cross-check -------------------------------------------------


def polarization(k: Sequence[float]) -> np.ndarray:
    """A unit vector orthogonal to k (any unit vector for k = 0)."""
    k = np.asarray(k, dtype=float)
    if not k.any():
        return np.array([1.0, 0.0, 0.0])
    trial = np.eye(3)[int(np.argmin(np.abs(k)))]
    e = np.cross(k, trial)
    return e / np.linalg.norm(e)


def single_mode_state(grid: Grid, m: Sequence[int], u_amp: complex, b_amp: complex) -> State:
    """u = Re(u_amp e exp(i k.x)) * 2, likewise b, with e orthogonal to k."""
    k = [2 * math.pi * mi / L for mi, L in zip(m, grid.lengths)]
    e = polarization(k)
    idx = tuple(mi % n for mi, n in zip(m, grid.shape))
    neg = tuple(-mi % n for mi, n in zip(m, grid.shape))
    cu = np.zeros((3,) + grid.shape, np.complex128)
    cb = np.zeros_like(cu)
    for i in range(3):
        cu[(i,) + idx] += u_amp * e[i]
        cu[(i,) + neg] += np.conj(u_amp) * e[i]
        cb[(i,) + idx] += b_amp * e[i]
        cb[(i,) + neg] += np.conj(b_amp) * e[i]
    return State(SpectralVectorField(grid, cu, True), SpectralVectorField(grid, cb, True))


DEFAULT_MODES = ((1, 0, 0), (0, 1, 0), (1, 1, 0), (0, 1, 1), (0, 0, 1))


def validate_simulator_linear(
    modes: Iterable[Sequence[int]] = DEFAULT_MODES,
    T: float = 1.0,
    dt: float = 1e-3,
    grid: Grid | None = None,
    u_amp: complex = 1.0,
    b_amp: complex = 0.5j,
) -> dict[tuple[int, ...], float]:
    """Relative error of the linear simulator against expm of the 2x2 block, per mode."""
    grid = grid or Grid.cube(8)
    c = ModelConfig(nonlinear=False)
    errors = {}
    for m in modes:
        m = tuple(int(x) for x in m)
        s0 = single_mode_state(grid, m, u_amp, b_amp)
        res = run(s0, T, dt, c, sample_every=max(1, int(round(T / dt))), blowup_h4=None)
        if res.blow_up is not None:
            raise RuntimeError(f"linear run blew up for mode {m}: {res.blow_up}")
        k = [2 * math.pi * mi / L for mi, L in zip(m, grid.lengths)]
        exact = scipy.linalg.expm(linear_block(k, c) * T) @ np.array([u_amp, b_amp])
        idx = tuple(mi % n for mi, n in zip(m, grid.shape))
        e = polarization(k)
        got_u = np.array([res.final_state.u.coeffs[(i,) + idx] for i in range(3)])
        got_b = np.array([res.final_state.b.coeffs[(i,) + idx] for i in range(3)])
        want_u = exact[0] * e
        want_b = exact[1] * e
        err = np.sqrt(np.sum(np.abs(got_u - want_u) ** 2) + np.sum(np.abs(got_b - want_b) ** 2))
        errors[m] = float(err / np.sqrt(np.sum(np.abs(want_u) ** 2) + np.sum(np.abs(want_b) ** 2)))
    return errors


def vieta_defect(mode: WaveMode) -> tuple[float, float]:
    """Relative defects of the sum and product identities."""
    k1 = mode.k[0]
    s_want = -(k1 * k1 + mode.kh_sq)
    p_want = k1 * k1 * mode.kh_sq + mode.k[1] ** 2
    s_got = mode.lambda_plus + mode.lambda_minus
    p_got = mode.lambda_plus * mode.lambda_minus
    ds = abs(s_got - s_want) / max(abs(s_want), 1e-300) if s_want else abs(s_got)
    dp = abs(p_got - p_want) / max(abs(p_want), 1e-300) if p_want else abs(p_got)
    return float(ds), float(dp)

