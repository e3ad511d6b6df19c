"""Small-data stability sweep over epsilon, with fitted bootstrap constants.

    python scripts/stability_sweep.py --out runs/sweep --n 32 --T 50 --dt 5e-3 --eps 1e-3 1e-2 1e-1
"""

import argparse
import json

from anisomhd.campaigns import stability_sweep
from anisomhd.config import load_config


def main():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--out", required=True)
    p.add_argument("--n", type=int, default=32)
    p.add_argument("--T", type=float, default=50.0)
    p.add_argument("--dt", type=float, default=5e-3)
    p.add_argument("--band", type=int, default=8)
    p.add_argument("--seed", type=int, default=1)
    p.add_argument("--eps", type=float, nargs="+", default=[1e-3, 1e-2, 1e-1])
    p.add_argument("--workers", type=int)
    a = p.parse_args()

    base = load_config(None, {"grid.n": a.n, "time.T": a.T, "time.dt": a.dt, "init.band": a.band, "init.seed": a.seed})
    summary = stability_sweep(base, a.out, a.eps, a.workers)
    print(json.dumps(summary, indent=2, default=str))


if __name__ == "__main__":
    main()
