"""Tabulate Q_r, P_r and s(k) for a few k."""

import argparse

import numpy as np

from ppszlab.gw import critical_r, p, q, s, success_base


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--k", type=int, nargs="+", default=[3, 4, 5])
    ap.add_argument("--grid", type=int, default=11)
    args = ap.parse_args()
    for k in args.k:
        print(f"k={k}  s={s(k):.10f}  base={success_base(k):.8f}  critical r={critical_r(k):.6f}")
        for r in np.linspace(0, 1, args.grid):
            print(f"  r={r:5.3f}  Q={q(k, float(r)):.8f}  P={p(k, float(r)):.8f}")


if __name__ == "__main__":
    main()
