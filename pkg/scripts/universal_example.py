"""Derive the even-sphere loop differential for several n and print the trace."""

import argparse

from loophom.naturality import universal_example


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("ns", type=int, nargs="*", default=[2, 4, 6])
    ap.add_argument("--bound", type=int, default=2, help="coefficient bound for the abutment search")
    args = ap.parse_args()
    for n in args.ns:
        rep = universal_example(n, B=args.bound)
        print(f"== S^{n}: {'PASS' if rep['pass'] else 'FAIL'}")
        for st in rep["steps"]:
            print(f"  {st['step']:<12} {st['result']}")
        print("  j  table  leibniz")
        for j, bs, lhs in rep["brown_shih"]:
            print(f"  {j}  {bs:>5}  {lhs:>7}")


if __name__ == "__main__":
    main()
