"""Monte Carlo cut probability of complete trees against Q_r and its truncations."""

import argparse

import numpy as np

from ppszlab.cct import complete_tree, cut_probability_mc
from ppszlab.dist import UniformSampler
from ppszlab.gw import q, q_truncated


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--k", type=int, default=3)
    ap.add_argument("--depths", type=int, nargs="+", default=[6, 10, 14])
    ap.add_argument("--r", type=float, nargs="+", default=[0.1, 0.25, 0.4])
    ap.add_argument("--trials", type=int, default=100_000)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()
    print("depth      r        mc    stderr  truncated         Q")
    for d in args.depths:
        T = complete_tree(args.k, d)
        for r in args.r:
            est = cut_probability_mc(T, UniformSampler(np.float32), r, args.trials, args.seed, batch=4096)
            print(f"{d:5d} {r:6.3f} {est.mean:9.5f} {est.stderr:9.5f} {q_truncated(args.k, r, d):10.5f} {q(args.k, r):9.5f}")


if __name__ == "__main__":
    main()
