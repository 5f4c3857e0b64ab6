"""Run every built-in golden comparison and print its checks.

Exits nonzero if any check is outside tolerance.
"""

import argparse
import sys

from hsx2.golden import REPORTS


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("names", nargs="*", help=f"subset of {sorted(REPORTS)}")
    args = ap.parse_args(argv)
    unknown = set(args.names) - set(REPORTS)
    if unknown:
        ap.error(f"unknown examples: {sorted(unknown)}")
    bad = 0
    for name in args.names or sorted(REPORTS):
        rep = REPORTS[name]()
        print(f"== {name}")
        print("\n".join(rep.lines()))
        bad += len(rep.failures())
    print(f"{bad} failing checks")
    return 1 if bad else 0


if __name__ == "__main__":
    sys.exit(main())
