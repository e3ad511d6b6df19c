"""Single experiment runs: series CSV, checkpoints, JSON summary, resume."""

from __future__ import annotations

import csv
import json
import logging
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .checkpoint import read_checkpoint, write_checkpoint
from .config import ExperimentConfig
from .diagnostics import CSV_COLUMNS, EnergyReport, fit_bootstrap_constant
from .dynamics import CFLViolation, State, run
from .initial import generate_initial
from .spectral import inverse

log = logging.getLogger(__name__)


@dataclass
class ExperimentOutcome:
    status: int
    summary: dict
    final_report: EnergyReport | None
    final_state: State | None


def initial_cfl_limit(s: State, cfl: float) -> float:
    """Largest dt allowed by the advective CFL bound at the given state."""
    speed = 1.0
    for v in (s.u, s.b):
        phys = inverse(v.coeffs)
        speed = max(speed, float(np.sqrt((phys**2).sum(0)).max()))
    return cfl * min(s.grid.dx) / speed


def _resolve(path: str, base: Path | None) -> Path | None:
    if not path:
        return None
    p = Path(path)
    return p if p.is_absolute() or base is None else base / p


def _open_series(path: Path, mode: str):
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        return open(path, mode, newline="")
    except OSError as exc:
        raise OSError(f"cannot open series file {path}: {exc}") from exc


def _summary(cfg: ExperimentConfig, e_series: list[float], e0: float, res) -> dict:
    return {
        "sup_E": max(e_series) if e_series else e0,
        "E0": e0,
        "fitted_C0": fit_bootstrap_constant(e_series),
        "blow_up_time": res.blow_up.t if res.blow_up else None,
        "blow_up_reason": res.blow_up.reason if res.blow_up else None,
        "max_divergence": res.max_divergence,
        "energy_balance_residual": res.budget.residual() if res.budget is not None else None,
        "final_t": res.final_state.t if res.final_state is not None else None,
        "steps": res.steps,
        "variant": cfg.model.variant,
        "epsilon": cfg.init.epsilon,
        "seed": cfg.init.seed,
    }


def _write_json(path: Path | None, data: dict) -> None:
    if path is None:
        return
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(json.dumps(data, indent=2, sort_keys=True) + "\n")
    except OSError as exc:
        raise OSError(f"cannot write summary {path}: {exc}") from exc


def _segment(cfg, s0, T, series_path, ckpt_path, summary_path, report0, e_prior, e0, csv_mode):
    checkpoint_every = cfg.outputs.checkpoint_every
    dt = cfg.time.dt
    e_series = list(e_prior)
    with _open_series(series_path, csv_mode) as fh:
        w = csv.writer(fh, lineterminator="\n")
        if csv_mode == "w":
            w.writerow(CSV_COLUMNS)

        def on_sample(state, report):
            if report is report0:
                return
            fh.write(report.csv_line() + "\n")
            e_series.append(report.e)
            if ckpt_path is not None and checkpoint_every:
                step = int(round((state.t - s0.t) / dt))
                if step and step % checkpoint_every == 0:
                    write_checkpoint(state, ckpt_path)

        res = run(
            s0, T, dt, cfg.model, cfg.time.sample_every, cfg.time.cfl, cfg.time.blowup_h4, on_sample, report0
        )
    if ckpt_path is not None and res.final_state is not None:
        write_checkpoint(res.final_state, ckpt_path)
    summary = _summary(cfg, e_series, e0, res)
    if res.blow_up is not None:
        log.warning("blow-up recorded at t=%.6g: %s", res.blow_up.t, res.blow_up.reason)
    _write_json(summary_path, summary)
    final = res.reports[-1] if res.reports else None
    return ExperimentOutcome(0, summary, final, res.final_state)


def run_experiment(cfg: ExperimentConfig, base_dir: str | Path | None = None) -> ExperimentOutcome:
    """Run one configured experiment; blow-up is recorded, not raised."""
    base = Path(base_dir) if base_dir is not None else None
    grid = cfg.grid.build()
    s0 = generate_initial(cfg.init, grid)
    if cfg.model.nonlinear:
        limit = initial_cfl_limit(s0, cfg.time.cfl)
        if cfg.time.dt > limit:
            raise CFLViolation(f"time.dt={cfg.time.dt:.3e} exceeds the initial CFL bound {limit:.3e}")
    series = _resolve(cfg.outputs.series_path, base)
    ckpt = _resolve(cfg.outputs.checkpoint_path, base)
    summary = _resolve(cfg.outputs.summary_path, base)
    from .diagnostics import initial_report

    e0 = initial_report(s0).e
    return _segment(cfg, s0, cfg.time.T, series, ckpt, summary, None, [], e0, "w")


def _read_series(path: Path) -> list[list[str]]:
    try:
        with open(path, newline="") as fh:
            rows = list(csv.reader(fh))
    except OSError as exc:
        raise OSError(f"cannot read series file {path}: {exc}") from exc
    if not rows or tuple(rows[0]) != CSV_COLUMNS:
        raise ValueError(f"{path}: missing or unexpected series header")
    return rows[1:]


def resume_experiment(
    cfg: ExperimentConfig, checkpoint: str | Path | None = None, base_dir: str | Path | None = None
) -> ExperimentOutcome:
    """Continue a run from its checkpoint up to time.T.

    Accumulated integrals come from the series row at the checkpoint time;
    later rows are discarded and rewritten.  The energy-balance residual in
    the new summary covers the resumed segment only.
    """
    base = Path(base_dir) if base_dir is not None else None
    ckpt = Path(checkpoint) if checkpoint is not None else _resolve(cfg.outputs.checkpoint_path, base)
    if ckpt is None:
        raise ValueError("resume needs a checkpoint path")
    state = read_checkpoint(ckpt)
    if state.grid != cfg.grid.build():
        raise ValueError(f"checkpoint grid {state.grid} does not match the configured grid")
    series = _resolve(cfg.outputs.series_path, base)
    rows = _read_series(series)
    keep = [r for r in rows if float(r[0]) <= state.t * (1 + 1e-12) + 1e-15]
    if not keep or not math.isclose(float(keep[-1][0]), state.t, rel_tol=1e-12, abs_tol=1e-15):
        raise ValueError(f"{series}: no row at checkpoint time t={state.t}")
    report0 = EnergyReport.from_row(keep[-1], state)
    with _open_series(series, "w") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(CSV_COLUMNS)
        w.writerows(keep)
    e_prior = [float(r[-1]) for r in keep]
    remaining = max(cfg.time.T - state.t, 0.0)
    summary = _resolve(cfg.outputs.summary_path, base)
    return _segment(cfg, state, remaining, series, ckpt, summary, report0, e_prior, e_prior[0], "a")
