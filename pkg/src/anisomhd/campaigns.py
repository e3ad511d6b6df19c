"""Campaigns: batches of independent runs aggregated into one CSV and one JSON.

Runs execute in a process pool capped by ``ANISOMHD_WORKERS``.  Rows are
always written in submission order, so the aggregate files do not depend on
scheduling.  Failed runs are listed in ``failures.json`` next to the
completed rows.
"""

from __future__ import annotations

import csv
import json
import logging
import os
import traceback
from concurrent.futures import ProcessPoolExecutor
from dataclasses import replace
from pathlib import Path
from typing import Any, Callable, Mapping, Sequence

from .config import ExperimentConfig
from .experiment import run_experiment
from .inequalities import SWEEP_COLUMNS, VARIANTS, constant_sweep
from .waves import DEFAULT_MODES, validate_simulator_linear

log = logging.getLogger(__name__)

CAMPAIGNS = ("stability_sweep", "coupling_ablation", "linear_validation", "inequality_audit", "energy_budget")


def worker_count(requested: int | None = None) -> int:
    env = os.environ.get("ANISOMHD_WORKERS")
    cap = int(env) if env else (os.cpu_count() or 1)
    n = requested if requested is not None else cap
    return max(1, min(n, cap))


def _call(fn, args):
    try:
        return True, fn(*args)
    except Exception as exc:  # noqa: BLE001 - every failure is reported in the manifest
        return False, f"{type(exc).__name__}: {exc}\n{traceback.format_exc()}"


def map_ordered(fn: Callable, jobs: Sequence[tuple], workers: int) -> list[tuple[bool, Any]]:
    if workers <= 1 or len(jobs) <= 1:
        return [_call(fn, a) for a in jobs]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        futures = [pool.submit(_call, fn, a) for a in jobs]
        return [f.result() for f in futures]


def _write_outputs(out: Path, columns, rows, summary, failures) -> dict:
    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    with open(out / "campaign.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(columns)
        w.writerows(rows)
    (out / "campaign.json").write_text(json.dumps(summary, indent=2, sort_keys=True, default=str) + "\n")
    if failures:
        (out / "failures.json").write_text(json.dumps(failures, indent=2) + "\n")
    summary["failures"] = len(failures)
    return summary


def _experiment_job(cfg: ExperimentConfig, run_dir: str):
    return run_experiment(cfg, run_dir).summary


def _experiment_runs(labels, cfgs, out: Path, workers: int):
    out = Path(out)
    jobs = []
    for label, cfg in zip(labels, cfgs):
        run_dir = out / "runs" / label
        jobs.append((cfg, str(run_dir)))
    results = map_ordered(_experiment_job, jobs, workers)
    done, failures = [], []
    for label, (ok, payload) in zip(labels, results):
        if ok:
            done.append((label, payload))
        else:
            failures.append({"run": label, "error": payload})
    return done, failures


RUN_COLUMNS = ("label", "variant", "epsilon", "seed", "E0", "sup_E", "sup_E_over_E0", "fitted_C0", "blow_up_time", "max_divergence", "energy_balance_residual")


def _run_row(label, s):
    ratio = s["sup_E"] / s["E0"] if s["E0"] else float("nan")
    return (label, s["variant"], s["epsilon"], s["seed"], s["E0"], s["sup_E"], ratio, s["fitted_C0"],
            s["blow_up_time"] if s["blow_up_time"] is not None else "", s["max_divergence"],
            s["energy_balance_residual"])


def stability_sweep(base: ExperimentConfig, out: Path, epsilons=(1e-3, 1e-2, 1e-1), workers=None) -> dict:
    eps = sorted(float(e) for e in epsilons)
    labels = [f"eps_{e:.3e}" for e in eps]
    cfgs = [replace(base, init=replace(base.init, epsilon=e)) for e in eps]
    done, failures = _experiment_runs(labels, cfgs, out, worker_count(workers))
    rows = [_run_row(label, s) for label, s in done]
    ratios = [r[6] for r in rows]
    # non-decreasing sup_E/E0 is a soft expectation: flagged, never fatal
    violations = [labels[i + 1] for i in range(len(ratios) - 1) if ratios[i + 1] < ratios[i]]
    summary = {
        "campaign": "stability_sweep",
        "epsilons": eps,
        "sup_E_over_E0": ratios,
        "fitted_C0": [r[7] for r in rows],
        "monotone": not violations,
        "monotonicity_violations": violations,
    }
    return _write_outputs(out, RUN_COLUMNS, rows, summary, failures)


def coupling_ablation(base: ExperimentConfig, out: Path, workers=None) -> dict:
    labels = ["coupled", "navier-stokes-only"]
    cfgs = [
        replace(base, model=replace(base.model, variant="perturbation", coupling=True)),
        replace(base, model=replace(base.model, variant="navier-stokes-only")),
    ]
    done, failures = _experiment_runs(labels, cfgs, out, worker_count(workers))
    rows = [_run_row(label, s) for label, s in done]
    summary = {"campaign": "coupling_ablation", "runs": {label: s for label, s in done}}
    return _write_outputs(out, RUN_COLUMNS, rows, summary, failures)


def energy_budget(base: ExperimentConfig, out: Path, workers=None) -> dict:
    done, failures = _experiment_runs(["base"], [base], out, 1)
    rows = [_run_row(label, s) for label, s in done]
    summary = {"campaign": "energy_budget", "runs": {label: s for label, s in done}}
    if done:
        s = done[0][1]
        summary["energy_balance_residual"] = s["energy_balance_residual"]
        summary["E_over_E0"] = s["sup_E"] / s["E0"] if s["E0"] else None
    return _write_outputs(out, RUN_COLUMNS, rows, summary, failures)


def _linear_job(mode, T, dt):
    return validate_simulator_linear([mode], T, dt)[tuple(mode)]


def linear_validation(out: Path, modes=DEFAULT_MODES, T=1.0, dt=1e-3, workers=None) -> dict:
    modes = [tuple(int(x) for x in m) for m in modes]
    results = map_ordered(_linear_job, [(m, T, dt) for m in modes], worker_count(workers))
    rows, failures = [], []
    for m, (ok, payload) in zip(modes, results):
        if ok:
            rows.append((*m, payload))
        else:
            failures.append({"run": str(m), "error": payload})
    errs = [r[3] for r in rows]
    summary = {"campaign": "linear_validation", "T": T, "dt": dt, "max_error": max(errs) if errs else None,
               "passed": bool(errs) and max(errs) <= 1e-8}
    return _write_outputs(out, ("m1", "m2", "m3", "relative_error"), rows, summary, failures)


def _sweep_job(variant, n_samples, grid, seed, band):
    return constant_sweep(variant, n_samples, grid, seed, band).rows


def inequality_audit(base: ExperimentConfig, out: Path, n_samples=100, seed=0, band=None,
                     variants: Sequence[str] = tuple(VARIANTS), workers=None) -> dict:
    grid = base.grid.build()
    jobs = [(v, int(n_samples), grid, seed, band) for v in variants]
    results = map_ordered(_sweep_job, jobs, worker_count(workers))
    rows, failures, max_ratio = [], [], {}
    for v, (ok, payload) in zip(variants, results):
        if not ok:
            failures.append({"run": v, "error": payload})
            continue
        rows.extend((v, *r) for r in payload)
        max_ratio[v] = max((r[4] for r in payload), default=None)
    summary = {"campaign": "inequality_audit", "grid": grid.shape, "n_samples": int(n_samples), "seed": seed,
               "max_ratio": max_ratio}
    return _write_outputs(out, ("variant",) + SWEEP_COLUMNS, rows, summary, failures)


def campaign(name: str, base: ExperimentConfig, out: str | Path, overrides: Mapping[str, Any] | None = None) -> dict:
    """Dispatch a named campaign; ``overrides`` carries campaign-specific keywords."""
    if name not in CAMPAIGNS:
        raise ValueError(f"unknown campaign {name!r}; expected one of {CAMPAIGNS}")
    out = Path(out)
    kw = dict(overrides or {})
    if name == "linear_validation":
        return linear_validation(out, **kw)
    fn = {"stability_sweep": stability_sweep, "coupling_ablation": coupling_ablation,
          "inequality_audit": inequality_audit, "energy_budget": energy_budget}[name]
    return fn(base, out, **kw)
