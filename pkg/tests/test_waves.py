import cmath
import csv
import itertools
import math

import numpy as np
import pytest

from anisomhd.dynamics import ConfigurationError, ModelConfig
from anisomhd.waves import (
    DECAY_MAP_COLUMNS,
    decay_map,
    dispersion_roots,
    linear_block,
    stable_quadratic_roots,
    validate_simulator_linear,
    vieta_defect,
    write_decay_map,
)

LATTICE = [range(-3, 4)] * 3


def textbook_roots(p, q):
    d = cmath.sqrt(p * p - 4 * q)
    return (-p + d) / 2, (-p - d) / 2


class TestDispersionRoots:
    def test_x3_axis_is_neutral(self):
        m = dispersion_roots((0, 0, 1))
        assert m.lambda_plus == 0 and m.lambda_minus == 0

    def test_x1_axis_double_root(self):
        m = dispersion_roots((1, 0, 0))
        assert m.lambda_plus == pytest.approx(-1) and m.lambda_minus == pytest.approx(-1)

    def test_x2_axis_is_damped(self):
        m = dispersion_roots((0, 1, 0))
        assert m.lambda_plus == pytest.approx(complex(-0.5, math.sqrt(3) / 2), abs=1e-15)
        assert m.lambda_minus == pytest.approx(complex(-0.5, -math.sqrt(3) / 2), abs=1e-15)

    def test_vieta_over_lattice(self):
        for k in itertools.product(*LATTICE):
            ds, dp = vieta_defect(dispersion_roots(k))
            assert ds <= 1e-12 and dp <= 1e-12

    def test_no_growth_over_lattice(self):
        for k in itertools.product(*LATTICE):
            m = dispersion_roots(k)
            assert m.lambda_plus.real <= 0 and m.lambda_minus.real <= 0
            if m.kh_sq > 0:
                assert m.lambda_plus.real < 0

    def test_discriminant_partition(self):
        for k in itertools.product(*LATTICE):
            k1, k2, _ = k
            kh = k1 * k1 + k2 * k2
            real = (k1 * k1 + kh) ** 2 >= 4 * (k1 * k1 * kh + k2 * k2)
            assert real == (not dispersion_roots(k).oscillatory)

    def test_stable_formula_near_degenerate(self):
        # tiny product: the textbook formula loses the small root to cancellation
        p, q = 1.0, 1e-17
        small, big = stable_quadratic_roots(p, q)
        assert small.real == pytest.approx(-1e-17, rel=1e-12)
        assert big.real == pytest.approx(-1.0, rel=1e-15)
        assert textbook_roots(p, q)[0].real == 0.0  # every digit lost

    def test_slow_root_decay_on_x2_axis(self):
        # k1 = 0: the slower decay rate is bounded below by c * min(k2^2, 1)
        rates = []
        for k2 in range(1, 40):
            m = dispersion_roots((0, k2, 0))
            rates.append(-m.lambda_plus.real / min(k2 * k2, 1))
        assert min(rates) > 0


class TestLinearBlock:
    def test_eigenvalues_match_roots(self):
        for k in itertools.product(*LATTICE):
            ev = np.sort_complex(np.linalg.eigvals(linear_block(k)))
            m = dispersion_roots(k)
            want = np.sort_complex(np.array([m.lambda_plus, m.lambda_minus]))
            # k2^2 = 4 gives a defective double root; eig then carries ~sqrt(eps) error
            np.testing.assert_allclose(ev, want, atol=1e-7 if k[1] ** 2 == 4 else 1e-12)

    def test_diagonal_when_k2_zero(self):
        A = linear_block((2, 0, 1))
        assert A[0, 1] == 0 and A[1, 0] == 0

    def test_coupling_off(self):
        c = ModelConfig(coupling=False)
        np.testing.assert_allclose(np.diag(linear_block((1, 2, 3), c)), [-1.0, -5.0])
        assert linear_block((1, 2, 3), c)[0, 1] == 0

    @pytest.mark.parametrize("variant", ["wu-zhu", "full-B", "navier-stokes-only"])
    def test_unsupported_variant(self, variant):
        with pytest.raises(ConfigurationError):
            linear_block((1, 1, 1), ModelConfig(variant=variant))


class TestDecayMap:
    def test_x3_axis_rates_zero(self):
        rows = decay_map([[0], [0], range(-4, 5)])
        assert all(r[3] == 0 and r[5] == 0 for r in rows)

    def test_even_symbol(self):
        rows = {r[:3]: r[3:] for r in decay_map(LATTICE)}
        for k, v in rows.items():
            assert rows[tuple(-x for x in k)] == v

    def test_lexicographic_order(self):
        ks = [r[:3] for r in decay_map(LATTICE)]
        assert ks == sorted(ks)

    def test_max_rate_on_x3_axis(self):
        rows = decay_map([range(-4, 5)] * 3)
        best = max(r[3] for r in rows)
        assert best == 0
        assert all(r[0] == 0 and r[1] == 0 for r in rows if r[3] == best)

    def test_general_config_uses_eigenvalues(self):
        c = ModelConfig(eta=(1.0, 2.0, 0.0))
        row = decay_map([[1], [1], [0]], c)[0]
        ev = np.linalg.eigvals(linear_block((1, 1, 0), c))
        assert max(ev.real) == pytest.approx(row[3])

    def test_csv(self, tmp_path):
        p = tmp_path / "map.csv"
        write_decay_map(decay_map([[0, 1], [0, 1], [0]]), p)
        with open(p) as fh:
            rows = list(csv.reader(fh))
        assert tuple(rows[0]) == DECAY_MAP_COLUMNS
        assert len(rows) == 5


class TestSimulatorValidation:
    def test_default_modes(self):
        errs = validate_simulator_linear(T=1.0, dt=1e-3)
        assert max(errs.values()) <= 1e-8
        assert errs[(0, 0, 1)] <= 1e-12
