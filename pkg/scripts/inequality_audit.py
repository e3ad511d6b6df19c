"""Product-inequality sweep at two resolutions, with the random-field scaling law.

For i.i.d. Gaussian coefficients in |m_i| <= band, every L2 norm of a
derivative grows like band per derivative while the lhs does not, so the
sampled ratio behaves like band^-p with p = 3/2 (triple, product-L2) or
p = 3 (quadruple).  The script prints measured and predicted 32^3 -> 48^3
factors.

    python scripts/inequality_audit.py --samples 100
"""

import argparse

from anisomhd.inequalities import VARIANTS, constant_sweep
from anisomhd.spectral import Grid

POWER = {"triple-111": 1.5, "triple-mixed": 1.5, "product-L2": 1.5, "quadruple": 3.0}


def main():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--samples", type=int, default=100)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--coarse", type=int, default=32)
    p.add_argument("--fine", type=int, default=48)
    a = p.parse_args()

    grids = (a.coarse, a.fine)
    print(f"{'variant':14s} {'max ' + str(a.coarse):>12s} {'max ' + str(a.fine):>12s} {'factor':>8s} {'predicted':>10s}")
    for v in VARIANTS:
        m = [constant_sweep(v, a.samples, Grid.cube(n), a.seed).max_ratio for n in grids]
        pred = (a.fine / a.coarse) ** POWER[v]
        print(f"{v:14s} {m[0]:12.4e} {m[1]:12.4e} {m[0] / m[1]:8.3f} {pred:10.3f}")


if __name__ == "__main__":
    main()
