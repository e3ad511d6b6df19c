"""Command-line entry point.

Any ``--section.key value`` flag overrides the matching config key, e.g.
``anisomhd run --config base.cfg --time.T 5 --init.seed 3``.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from .campaigns import CAMPAIGNS, campaign
from .config import ConfigError, load_config
from .experiment import resume_experiment, run_experiment
from .inequalities import VARIANTS, constant_sweep
from .spectral import Grid
from .waves import decay_map, write_decay_map


def _split_overrides(extra: list[str]) -> dict[str, str]:
    out = {}
    i = 0
    while i < len(extra):
        tok = extra[i]
        if not tok.startswith("--") or "." not in tok:
            raise ConfigError(f"unrecognized argument {tok!r}")
        key = tok[2:]
        if "=" in key:
            key, val = key.split("=", 1)
            i += 1
        else:
            if i + 1 >= len(extra):
                raise ConfigError(f"missing value for {tok}")
            val = extra[i + 1]
            i += 2
        out[key] = val
    return out


def _range(text: str) -> range:
    lo, _, hi = text.partition(":")
    return range(int(lo), int(hi or lo) + 1)


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="anisomhd", description="Anisotropic MHD spectral simulator and audit tools.")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="verb", required=True)

    r = sub.add_parser("run", help="run one experiment")
    r.add_argument("--config", help="key = value config file")
    r.add_argument("--out", default=".", help="directory for relative output paths")

    c = sub.add_parser("campaign", help="run a named campaign")
    c.add_argument("name", choices=CAMPAIGNS)
    c.add_argument("--config")
    c.add_argument("--out", required=True)
    c.add_argument("--workers", type=int)
    c.add_argument("--epsilons", type=float, nargs="+", help="stability_sweep epsilons")
    c.add_argument("--samples", type=int, help="inequality_audit samples per variant")
    c.add_argument("--seed", type=int, help="inequality_audit seed")

    q = sub.add_parser("check-inequalities", help="Monte Carlo sweep of the product inequalities")
    q.add_argument("--variant", choices=sorted(VARIANTS), action="append")
    q.add_argument("--samples", type=int, default=100)
    q.add_argument("--n", type=int, default=32, help="modes per axis")
    q.add_argument("--seed", type=int, default=0)
    q.add_argument("--band", type=int)
    q.add_argument("--out", help="CSV path; one file per variant gets a suffix")

    d = sub.add_parser("decay-map", help="decay rates over an integer wavevector lattice")
    d.add_argument("--k1", type=_range, default=_range("-4:4"))
    d.add_argument("--k2", type=_range, default=_range("-4:4"))
    d.add_argument("--k3", type=_range, default=_range("-4:4"))
    d.add_argument("--out", required=True)

    s = sub.add_parser("resume", help="continue an experiment from its checkpoint")
    s.add_argument("--config")
    s.add_argument("--checkpoint")
    s.add_argument("--out", default=".")
    return p


def main(argv: list[str] | None = None) -> int:
    args, extra = _parser().parse_known_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        overrides = _split_overrides(extra)
        if args.verb in ("run", "resume", "campaign"):
            cfg = load_config(args.config, overrides)
        elif overrides:
            raise ConfigError(f"{args.verb} does not take config overrides")
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2

    if args.verb == "run":
        res = run_experiment(cfg, args.out)
        print(json.dumps(res.summary, indent=2, sort_keys=True))
        return res.status
    if args.verb == "resume":
        res = resume_experiment(cfg, args.checkpoint, args.out)
        print(json.dumps(res.summary, indent=2, sort_keys=True))
        return res.status
    if args.verb == "campaign":
        kw = {}
        if args.name != "linear_validation":
            kw["workers"] = args.workers
        if args.epsilons and args.name == "stability_sweep":
            kw["epsilons"] = args.epsilons
        if args.name == "inequality_audit":
            if args.samples is not None:
                kw["n_samples"] = args.samples
            if args.seed is not None:
                kw["seed"] = args.seed
        if args.name == "linear_validation" and args.workers:
            kw["workers"] = args.workers
        summary = campaign(args.name, cfg, args.out, kw)
        print(json.dumps(summary, indent=2, sort_keys=True, default=str))
        return 0
    if args.verb == "check-inequalities":
        grid = Grid.cube(args.n)
        for v in args.variant or sorted(VARIANTS):
            res = constant_sweep(v, args.samples, grid, args.seed, args.band)
            if args.out:
                p = Path(args.out)
                res.write_csv(p.with_name(f"{p.stem}_{v}{p.suffix or '.csv'}"))
            print(f"{v}: samples={len(res.rows)} max_ratio={res.max_ratio:.6g}")
        return 0
    if args.verb == "decay-map":
        rows = decay_map([args.k1, args.k2, args.k3])
        write_decay_map(rows, args.out)
        print(f"wrote {len(rows)} rows to {args.out}")
        return 0
    return 2


if __name__ == "__main__":
    sys.exit(main())
