"""Run the constants audit and write the JSON report plus a table to stdout."""

import argparse
from pathlib import Path

from ppszlab.audit import run_audit


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("-o", "--output", type=Path, default=Path("audit.json"))
    args = ap.parse_args()
    rep = run_audit("all")
    args.output.write_text(rep.to_json(indent=2, sort_keys=True) + "\n")
    print(rep.table())
    for status in ("FAIL", "FLAG", "INFO"):
        print(f"{status}: {', '.join(rep.statuses(status)) or 'none'}")
    return 0 if rep.ok else 1


if __name__ == "__main__":
    raise SystemExit(main())
