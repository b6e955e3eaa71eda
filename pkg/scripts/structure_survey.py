"""Survey sibling-graph statistics and bound slack over generated instances."""

import argparse
from collections import Counter

from ppszlab.formula import generate_unique_instance
from ppszlab.structure import structure_report


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--instances", type=int, default=200)
    ap.add_argument("--nmin", type=int, default=4)
    ap.add_argument("--nmax", type=int, default=16)
    ap.add_argument("--height", type=int, default=3)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()
    fails = Counter()
    slack = []
    for i in range(args.instances):
        n = args.nmin + i % (args.nmax - args.nmin + 1)
        rep = structure_report(generate_unique_instance(n, 3, seed=args.seed + i).formula, height=args.height)
        fails.update(k for k, ok in rep.checks.items() if not ok)
        slack.append(rep.H - (rep.n - rep.id1 - 2 * rep.id0))
    print(f"instances={args.instances} violations={dict(fails)}")
    print(f"|H| bound slack: min={min(slack)} mean={sum(slack) / len(slack):.2f}")


if __name__ == "__main__":
    main()
