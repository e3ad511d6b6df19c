"""One-dimensional interpolation ratios: Gaussian and a mollified exp(-a|x|) family.

    python scripts/interpolation_1d.py
"""

import math

import numpy as np

from anisomhd.inequalities import check_interp_1d, gaussian_ratio_exact, interp_grid, mollified_family_ratios

WIDTHS = (0.4, 0.2, 0.1, 0.05, 0.025, 0.0125, 0.00625)


def main():
    x = interp_grid()
    g = check_interp_1d(np.exp(-(x**2)), 40.0).ratio
    print(f"Gaussian: {g:.12f}  closed form {gaussian_ratio_exact():.12f}")
    print("mollifier width   ratio")
    for w, r in zip(WIDTHS, mollified_family_ratios(WIDTHS, n=2**16)):
        print(f"{w:14.5f}   {r:.8f}")
    print(f"pure exponential: {1 / math.sqrt(2):.8f}")


if __name__ == "__main__":
    main()
