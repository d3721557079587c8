"""How the admissible set of the path-fibration search depends on the constraints.

Drops each constraint in turn and counts the surviving assignments for a
range of coefficient bounds.
"""

import argparse

from loophom.algebra import Window
from loophom.linalg import AbelianGroup
from loophom.naturality import AbutmentConstraint, NoAdmissibleAssignment, solve_by_abutment
from loophom.spaces import PATH_OVER_DIAGONAL, FibrationTag, SpaceTag, serre_E2


def count(page, n, constraint, B):
    try:
        return len(solve_by_abutment(page, n, constraint, B))
    except NoAdmissibleAssignment:
        return 0


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--n", type=int, default=2)
    ap.add_argument("--bounds", type=int, nargs="*", default=[1, 2, 3])
    args = ap.parse_args()
    n = args.n
    page = serre_E2(FibrationTag(PATH_OVER_DIAGONAL, SpaceTag.parse(f"s^n:even:{n}")), Window(0, 2 * n, 0, 3 * n))
    U = page.algebra
    full = dict(
        groups={0: AbelianGroup(1), n: AbelianGroup(1)},
        degree_range=(0, 2 * n),
        permanent=[U.gen("x1")],
        vanishing=[U.parse("x1 - x2")],
    )
    variants = {"all constraints": full}
    variants["no edge-map vanishing"] = {**full, "vanishing": []}
    variants["no permanent x1"] = {**full, "permanent": []}
    print(f"{'constraints':<24}" + "".join(f"B={B:<6}" for B in args.bounds))
    for label, kw in variants.items():
        counts = [count(page, n, AbutmentConstraint(**kw), B) for B in args.bounds]
        print(f"{label:<24}" + "".join(f"{c:<8}" for c in counts))


if __name__ == "__main__":
    main()
