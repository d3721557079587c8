"""Compute every preset, compare with the closed forms, and write a JSON summary."""

import argparse
import json
import time

from loophom.engine import verify_presentation
from loophom.render import group_record
from loophom.spaces import (
    SpaceTag,
    closed_form_assignment,
    closed_form_groups,
    closed_form_presentation,
    loop_pipeline,
    multiplicative_extension_status,
)

PRESETS = ["s^n:odd:3", "s^n:odd:5", "s^n:odd:7", "s^n:even:2", "s^n:even:4", "s^n:even:6",
           "cp^n:1", "cp^n:2", "cp^n:3", "cp^n:4"]


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--max", type=int, default=30)
    ap.add_argument("--out", default="presets.json")
    args = ap.parse_args()

    summary = []
    for tag in PRESETS:
        s = SpaceTag.parse(tag)
        t0 = time.perf_counter()
        res = loop_pipeline(s, args.max)
        groups = res.groups()
        elapsed = time.perf_counter() - t0
        agree = all(g == closed_form_groups(s, i) for i, g in groups.items())
        ok, _ = verify_presentation(res.einf, closed_form_presentation(s), closed_form_assignment(s, res.einf.algebra))
        summary.append({
            "space": tag,
            "seconds": round(elapsed, 3),
            "nonzero_pages": res.report.nonzero_pages,
            "groups_match_closed_form": agree,
            "presentation_verified": ok,
            "extension": multiplicative_extension_status(s),
            "groups": [group_record(i, g) for i, g in sorted(groups.items())],
        })
        print(f"{tag:<12} pages {str(res.report.nonzero_pages):<6} groups {'ok' if agree else 'MISMATCH'}"
              f"  presentation {'ok' if ok else 'FAILED'}  {elapsed:.2f}s")
    with open(args.out, "w", encoding="utf-8") as fh:
        json.dump(summary, fh, indent=2)
    print(f"wrote {args.out}")


if __name__ == "__main__":
    main()
