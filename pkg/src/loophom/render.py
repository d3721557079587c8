"""Text and JSON renderings of pages and group tables."""

from __future__ import annotations

import json

from .algebra import AlgebraPresentation
from .engine import Differential, Page, e_r_matrix, page_dump
from .linalg import AbelianGroup


def group_record(i: int, g) -> dict:
    if isinstance(g, AbelianGroup):
        return {"degree": i, "free_rank": g.free_rank, "torsion": list(g.torsion)}
    return {"degree": i, "group_algebra": g.ring, "rank": g.rank}


def presentation_record(P: AlgebraPresentation) -> dict:
    return {
        "generators": [{"name": g.name, "bidegree": list(g.bidegree), "kind": g.kind} for g in P.generators],
        "relations": [P.format_terms(r) for r in P.relations],
    }


def presentation_text(P: AlgebraPresentation) -> str:
    ext = [g.name for g in P.generators if g.kind == "exterior"]
    poly = [g.name for g in P.generators if g.kind == "polynomial"]
    parts = []
    if ext:
        parts.append(f"E({','.join(ext)})")
    if poly:
        parts.append(f"Z[{','.join(poly)}]")
    text = " (x) ".join(parts) or "Z"
    if P.relations:
        text += "/(" + ", ".join(P.format_terms(r) for r in P.relations) + ")"
    degs = ", ".join(f"|{g.name}| = {g.degree}" for g in P.generators)
    return f"{text}   [{degs}]"


def table(groups: dict) -> str:
    lines = ["degree  group"]
    for i in sorted(groups):
        lines.append(f"{i:>6}  {groups[i]}")
    return "\n".join(lines)


def to_json(record: dict) -> str:
    return json.dumps(record, indent=2, ensure_ascii=True)


def diagram(page: Page, diff: Differential | None = None, max_degree: int | None = None) -> str:
    """Grid with q increasing upward and p rightward; arrows listed below."""
    w = page.window
    cells = {}
    for b, c in page.cells.items():
        if max_degree is not None and sum(b) > max_degree:
            continue
        if c is None:
            cells[b] = "?"
        elif not c.group.is_trivial():
            cells[b] = ", ".join(page.labels(b))
    if not cells:
        return f"E_{page.r}: empty"
    ps = list(range(w.p_min, w.p_max + 1))
    qs = sorted({q for _, q in cells}, reverse=True)
    width = max(max(len(v) for v in cells.values()), max(len(str(p)) for p in ps))
    qw = max(len(str(q)) for q in qs)
    lines = [f"E_{page.r} ({page.variance})"]
    for q in qs:
        row = " ".join(cells.get((p, q), ".").center(width) for p in ps)
        lines.append(f"{q:>{qw}} | {row}")
    lines.append(" " * qw + " +-" + "-" * (len(ps) * (width + 1) - 1))
    lines.append(" " * (qw + 3) + " ".join(str(p).center(width) for p in ps))
    if diff is not None and not diff.is_zero:
        arrows = []
        for b in sorted(page.cells, key=lambda b: (b[1], b[0])):
            c = page.cells[b]
            t = diff.target(b)
            if c is None or c.group.is_trivial() or page.cells.get(t) is None:
                continue
            if page.cells[t].group.is_trivial() or (max_degree is not None and sum(b) > max_degree):
                continue
            M = e_r_matrix(page, diff, b)
            src = ", ".join(page.labels(b))
            arrows.append(f"  {b} {src} -> {t}: {M}")
        if arrows:
            lines.append(f"d_{page.r}:")
            lines.extend(arrows)
    return "\n".join(lines)


__all__ = ["diagram", "group_record", "page_dump", "presentation_record", "presentation_text", "table", "to_json"]
