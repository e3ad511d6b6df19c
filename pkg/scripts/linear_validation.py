"""Linearized simulator against the per-mode 2x2 matrix exponential, plus a decay map.

    python scripts/linear_validation.py --out runs/linear
"""

import argparse
from pathlib import Path

from anisomhd.campaigns import linear_validation
from anisomhd.waves import decay_map, write_decay_map


def main():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--out", required=True)
    p.add_argument("--T", type=float, default=1.0)
    p.add_argument("--dt", type=float, default=1e-3)
    a = p.parse_args()

    out = Path(a.out)
    s = linear_validation(out, T=a.T, dt=a.dt)
    print(f"max relative error {s['max_error']:.3e}  passed={s['passed']}")
    rows = decay_map([range(-6, 7)] * 3)
    write_decay_map(rows, out / "decay_map.csv")
    slow = sorted((r for r in rows if r[3] < 0), key=lambda r: -r[3])[:5]
    print("slowest decaying non-neutral modes (k, Re lambda+):")
    for r in slow:
        print(f"  {r[:3]}  {r[3]:.6f}")


if __name__ == "__main__":
    main()
