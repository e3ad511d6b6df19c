import csv
import json
import math

import numpy as np
import pytest

from anisomhd.campaigns import (
    CAMPAIGNS,
    campaign,
    inequality_audit,
    linear_validation,
    map_ordered,
    stability_sweep,
    worker_count,
)
from anisomhd.checkpoint import CheckpointError, decode, encode, read_checkpoint, write_checkpoint
from anisomhd.cli import main
from anisomhd.config import ConfigError, ExperimentConfig, load_config, parse_config_text
from anisomhd.diagnostics import CSV_COLUMNS
from anisomhd.dynamics import CFLViolation
from anisomhd.experiment import resume_experiment, run_experiment
from anisomhd.initial import InitSpec, generate_initial, h4_size
from anisomhd.spectral import Grid, relative_divergence

from conftest import random_state

SMALL = {
    "grid.n": "8",
    "init.band": "2",
    "init.epsilon": "1e-3",
    "init.seed": "3",
    "time.T": "0.04",
    "time.dt": "0.002",
}


def small_cfg(**extra):
    return load_config(None, {**SMALL, **extra})


def read_rows(path):
    with open(path, newline="") as fh:
        return list(csv.reader(fh))


class TestConfig:
    def test_defaults(self):
        c = ExperimentConfig()
        assert c.grid.n1 == 32 and c.time.dt == 1e-3 and c.model.variant == "perturbation"

    def test_file_and_overrides(self, tmp_path):
        p = tmp_path / "a.cfg"
        p.write_text("# comment\ngrid.n = 16\ninit.band = 4\ninit.seed = 4  # trailing\nmodel.nu = 1.0, 0.5, 0.0\n")
        c = load_config(p, {"init.seed": "9"})
        assert (c.grid.n1, c.grid.n2, c.grid.n3) == (16, 16, 16)
        assert c.init.seed == 9 and c.model.nu == (1.0, 0.5, 0.0)

    def test_bool_and_modes(self):
        c = load_config(None, {"model.coupling": "off", "init.kind": "named-mode-list", "init.modes": "u 1 0 0 2 0.5; b 0 1 1 1 1e-3"})
        assert c.model.coupling is False
        assert c.init.modes == (("u", 1, 0, 0, 2, 0.5), ("b", 0, 1, 1, 1, 1e-3))

    def test_roundtrip_through_text(self):
        c = small_cfg(**{"model.eta": "1.0, 2.0, 0.0"})
        again = load_config(None, parse_config_text(c.dumps()))
        assert again == c

    @pytest.mark.parametrize(
        "overrides",
        [
            {"init.epsilon": "0"},
            {"time.dt": "-1"},
            {"grid.n": "8", "init.band": "3"},
            {"grid.n": "7"},
            {"model.variant": "hall"},
            {"model.nu": "1.0, -1.0, 0.0"},
            {"nosuch.key": "1"},
            {"time.nosuch": "1"},
            {"model.coupling": "maybe"},
            {"time.T": "abc"},
            {"init.modes": "q 1 0 0 1 1.0"},
        ],
    )
    def test_rejects(self, overrides):
        with pytest.raises(ConfigError):
            load_config(None, overrides)

    def test_duplicate_key(self):
        with pytest.raises(ConfigError):
            parse_config_text("a.b = 1\na.b = 2\n")

    def test_missing_file(self, tmp_path):
        with pytest.raises(ConfigError):
            load_config(tmp_path / "none.cfg")


class TestCheckpoint:
    def test_roundtrip_bit_exact(self, grid8, rng, tmp_path):
        s = random_state(Grid(8, 10, 12, L2=3.0), rng, band=2, t=1.25)
        p = tmp_path / "s.ckpt"
        write_checkpoint(s, p)
        back = read_checkpoint(p)
        assert back.t == s.t and back.grid == s.grid
        assert back.u.coeffs.tobytes() == s.u.coeffs.tobytes()
        assert back.b.coeffs.tobytes() == s.b.coeffs.tobytes()
        assert not (tmp_path / "s.ckpt.tmp").exists()

    def test_block_order(self, grid8):
        # the first coefficient of each block is the (-n/2, -n/2, -n/2) mode
        c = np.zeros((3, 8, 8, 8), complex)
        c[0, 4, 4, 4] = 1.0  # m = (-4, -4, -4)
        from anisomhd.dynamics import State
        from anisomhd.spectral import SpectralVectorField

        s = State(SpectralVectorField(grid8, c), SpectralVectorField.zeros(grid8))
        body = np.frombuffer(encode(s)[52:], "<c16")
        assert body[0] == 1.0 and np.count_nonzero(body) == 1

    def test_header_size(self, grid8):
        from anisomhd.dynamics import State

        assert len(encode(State.zeros(grid8))) == 52 + 16 * 6 * 512

    def test_bad_magic(self, grid8, rng):
        data = bytearray(encode(random_state(grid8, rng, band=2)))
        data[:4] = b"XXXX"
        with pytest.raises(CheckpointError, match="magic"):
            decode(bytes(data))

    def test_truncated(self, grid8, rng):
        data = encode(random_state(grid8, rng, band=2))
        with pytest.raises(CheckpointError):
            decode(data[:-16])
        with pytest.raises(CheckpointError):
            decode(data[:10])

    def test_missing_file_names_path(self, tmp_path):
        with pytest.raises(OSError, match="nope.ckpt"):
            read_checkpoint(tmp_path / "nope.ckpt")


class TestInitial:
    @pytest.mark.parametrize("eps", [1e-6, 1e-2, 0.3])
    def test_h4_size_and_divergence(self, grid16, eps):
        s = generate_initial(InitSpec(epsilon=eps, band=4, seed=2), grid16)
        assert abs(h4_size(s) - eps) <= 1e-12 * max(eps, 1.0)
        assert relative_divergence(s.u) <= 1e-12 and relative_divergence(s.b) <= 1e-12

    def test_same_seed_same_state(self, grid16):
        a = generate_initial(InitSpec(seed=5, band=4), grid16)
        b = generate_initial(InitSpec(seed=5, band=4), grid16)
        assert a.u.coeffs.tobytes() == b.u.coeffs.tobytes()

    def test_grid_independent_draw(self):
        a = generate_initial(InitSpec(seed=5, band=3), Grid.cube(12))
        b = generate_initial(InitSpec(seed=5, band=3), Grid.cube(16))
        assert h4_size(a) == pytest.approx(h4_size(b), rel=1e-14)
        assert a.u.l2_norm_sq() == pytest.approx(b.u.l2_norm_sq(), rel=1e-12)

    def test_b_fraction_extremes(self, grid8):
        s = generate_initial(InitSpec(band=2, b_fraction=0.0), grid8)
        assert not s.b.coeffs.any()
        s = generate_initial(InitSpec(band=2, b_fraction=1.0), grid8)
        assert not s.u.coeffs.any()

    def test_named_modes(self, grid8):
        s = generate_initial(InitSpec(kind="named-mode-list", epsilon=1e-3, modes=(("u", 0, 1, 0, 1, 1.0),)), grid8)
        assert h4_size(s) == pytest.approx(1e-3, rel=1e-12)

    def test_named_modes_all_projected_away(self, grid8):
        # a mode parallel to its own wavevector is pure gradient
        with pytest.raises(ValueError):
            generate_initial(InitSpec(kind="named-mode-list", modes=(("u", 1, 0, 0, 1, 1.0),)), grid8)


class TestExperiment:
    def test_zero_horizon(self, tmp_path):
        out = run_experiment(small_cfg(**{"time.T": "0"}), tmp_path)
        rows = read_rows(tmp_path / "series.csv")
        assert tuple(rows[0]) == CSV_COLUMNS and len(rows) == 2
        assert out.summary["sup_E"] == out.summary["E0"]
        assert out.summary["steps"] == 0

    def test_outputs(self, tmp_path):
        out = run_experiment(small_cfg(), tmp_path)
        rows = read_rows(tmp_path / "series.csv")
        assert len(rows) == 1 + 21
        summary = json.loads((tmp_path / "summary.json").read_text())
        assert summary == json.loads(json.dumps(out.summary))
        assert summary["fitted_C0"] >= 1 and summary["blow_up_time"] is None
        assert summary["max_divergence"] <= 1e-10

    def test_sample_every(self, tmp_path):
        run_experiment(small_cfg(**{"time.sample_every": "5"}), tmp_path)
        ts = [float(r[0]) for r in read_rows(tmp_path / "series.csv")[1:]]
        assert ts == pytest.approx([0.0, 0.01, 0.02, 0.03, 0.04])

    def test_deterministic(self, tmp_path):
        run_experiment(small_cfg(), tmp_path / "a")
        run_experiment(small_cfg(), tmp_path / "b")
        assert (tmp_path / "a" / "series.csv").read_bytes() == (tmp_path / "b" / "series.csv").read_bytes()

    def test_initial_cfl_check(self, tmp_path):
        with pytest.raises(CFLViolation):
            run_experiment(small_cfg(**{"init.epsilon": "1e3", "time.dt": "0.5"}), tmp_path)

    def test_blow_up_recorded(self, tmp_path):
        out = run_experiment(small_cfg(**{"time.blowup_h4": "1e-9"}), tmp_path)
        assert out.status == 0 and out.summary["blow_up_time"] is not None

    def test_unwritable_series(self, tmp_path):
        (tmp_path / "f").write_text("")
        with pytest.raises(OSError, match="series"):
            run_experiment(small_cfg(**{"outputs.series_path": "f/series.csv"}), tmp_path)

    def test_resume_matches_uninterrupted(self, tmp_path):
        full = run_experiment(small_cfg(), tmp_path / "full")
        half = small_cfg(**{"time.T": "0.02", "outputs.checkpoint_path": "ck.bin"})
        run_experiment(half, tmp_path / "res")
        out = resume_experiment(small_cfg(**{"outputs.checkpoint_path": "ck.bin"}), base_dir=tmp_path / "res")
        a, b = full.final_report, out.final_report
        for name in CSV_COLUMNS:
            x, y = getattr(a, name), getattr(b, name)
            assert abs(x - y) <= 1e-10 * max(abs(x), 1e-300), name
        ra = read_rows(tmp_path / "full" / "series.csv")
        rb = read_rows(tmp_path / "res" / "series.csv")
        assert len(ra) == len(rb)
        assert out.summary["sup_E"] == pytest.approx(full.summary["sup_E"], rel=1e-10)

    def test_resume_drops_rows_after_checkpoint(self, tmp_path):
        cfg = small_cfg(**{"outputs.checkpoint_path": "ck.bin", "outputs.checkpoint_every": "5"})
        run_experiment(cfg, tmp_path)
        # pretend the run died after the step-10 checkpoint, with extra rows written
        from anisomhd.checkpoint import read_checkpoint as rc

        run_experiment(small_cfg(**{"time.T": "0.02", "outputs.checkpoint_path": "ck.bin"}), tmp_path / "x")
        (tmp_path / "ck.bin").write_bytes((tmp_path / "x" / "ck.bin").read_bytes())
        assert rc(tmp_path / "ck.bin").t == pytest.approx(0.02)
        resume_experiment(cfg, base_dir=tmp_path)
        ts = [float(r[0]) for r in read_rows(tmp_path / "series.csv")[1:]]
        assert ts == pytest.approx([i * 0.002 for i in range(21)])

    def test_resume_grid_mismatch(self, tmp_path):
        run_experiment(small_cfg(**{"outputs.checkpoint_path": "ck.bin"}), tmp_path)
        with pytest.raises(ValueError, match="grid"):
            resume_experiment(small_cfg(**{"grid.n": "10", "outputs.checkpoint_path": "ck.bin"}), base_dir=tmp_path)


def _square(x):
    if x < 0:
        raise ValueError("negative")
    return x * x


class TestCampaigns:
    def test_worker_cap(self, monkeypatch):
        monkeypatch.setenv("ANISOMHD_WORKERS", "2")
        assert worker_count() == 2 and worker_count(8) == 2 and worker_count(1) == 1

    def test_map_ordered_keeps_order_and_failures(self):
        out = map_ordered(_square, [(3,), (-1,), (2,)], workers=2)
        assert out[0] == (True, 9) and out[2] == (True, 4)
        assert out[1][0] is False and "negative" in out[1][1]

    def test_linear_validation(self, tmp_path):
        s = linear_validation(tmp_path, modes=[(0, 0, 1), (1, 1, 0)], T=0.2, dt=1e-3, workers=1)
        assert s["passed"] and s["failures"] == 0
        rows = read_rows(tmp_path / "campaign.csv")
        assert rows[0] == ["m1", "m2", "m3", "relative_error"] and len(rows) == 3

    def test_inequality_audit_zero_samples(self, tmp_path):
        s = inequality_audit(small_cfg(), tmp_path, n_samples=0, workers=1)
        rows = read_rows(tmp_path / "campaign.csv")
        assert len(rows) == 1 and rows[0][0] == "variant"
        assert all(v is None for v in s["max_ratio"].values())

    def test_inequality_audit_rows_in_order(self, tmp_path):
        inequality_audit(small_cfg(), tmp_path, n_samples=2, band=2, variants=("quadruple", "product-L2"), workers=2)
        rows = read_rows(tmp_path / "campaign.csv")[1:]
        assert [r[0] for r in rows] == ["quadruple"] * 2 + ["product-L2"] * 2

    def test_failure_manifest(self, tmp_path):
        # the large epsilon violates the initial CFL bound; the small one completes
        base = small_cfg(**{"time.dt": "0.01", "time.T": "0.02"})
        s = stability_sweep(base, tmp_path, epsilons=(1e-3, 1e8), workers=1)
        assert s["failures"] == 1
        fails = json.loads((tmp_path / "failures.json").read_text())
        assert "CFLViolation" in fails[0]["error"]
        assert len(read_rows(tmp_path / "campaign.csv")) == 2

    def test_stability_sweep_flags(self, tmp_path):
        s = stability_sweep(small_cfg(), tmp_path, epsilons=(1e-2, 1e-4), workers=1)
        assert s["epsilons"] == [1e-4, 1e-2]
        assert isinstance(s["monotone"], bool)

    def test_dispatch(self, tmp_path):
        assert "energy_budget" in CAMPAIGNS
        s = campaign("energy_budget", small_cfg(), tmp_path)
        assert s["energy_balance_residual"] <= 1e-6
        with pytest.raises(ValueError):
            campaign("nosuch", small_cfg(), tmp_path)

    def test_coupling_ablation(self, tmp_path):
        s = campaign("coupling_ablation", small_cfg(), tmp_path, {"workers": 1})
        assert set(s["runs"]) == {"coupled", "navier-stokes-only"}


class TestCli:
    def args(self):
        return [f"--{k}={v}" for k, v in SMALL.items()]

    def test_run(self, tmp_path, capsys):
        assert main(["run", "--out", str(tmp_path), *self.args()]) == 0
        assert json.loads(capsys.readouterr().out)["steps"] == 20

    def test_space_separated_override(self, tmp_path, capsys):
        assert main(["run", "--out", str(tmp_path), *self.args(), "--time.T", "0.01"]) == 0
        assert json.loads(capsys.readouterr().out)["steps"] == 5

    def test_bad_override_exit_code(self, tmp_path, capsys):
        assert main(["run", "--out", str(tmp_path), "--init.epsilon=0"]) == 2
        assert "epsilon" in capsys.readouterr().err

    def test_resume(self, tmp_path, capsys):
        a = self.args()
        assert main(["run", "--out", str(tmp_path), *a, "--time.T=0.02", "--outputs.checkpoint_path=ck.bin"]) == 0
        assert main(["resume", "--out", str(tmp_path), *a, "--outputs.checkpoint_path=ck.bin"]) == 0
        assert json.loads(capsys.readouterr().out.split("}\n", 1)[1])["final_t"] == pytest.approx(0.04)

    def test_check_inequalities(self, tmp_path, capsys):
        rc = main(["check-inequalities", "--variant", "product-L2", "--samples", "2", "--n", "8", "--band", "2",
                   "--out", str(tmp_path / "s.csv")])
        assert rc == 0 and "product-L2: samples=2" in capsys.readouterr().out
        assert (tmp_path / "s_product-L2.csv").exists()

    def test_decay_map(self, tmp_path):
        assert main(["decay-map", "--k1=-1:1", "--k2", "0", "--k3", "0:2", "--out", str(tmp_path / "d.csv")]) == 0
        assert len(read_rows(tmp_path / "d.csv")) == 1 + 9

    def test_campaign_linear(self, tmp_path):
        assert main(["campaign", "linear_validation", "--out", str(tmp_path), "--workers", "1"]) == 0
        assert json.loads((tmp_path / "campaign.json").read_text())["passed"]

    def test_overrides_rejected_for_decay_map(self, tmp_path):
        assert main(["decay-map", "--out", str(tmp_path / "d.csv"), "--grid.n=8"]) == 2
