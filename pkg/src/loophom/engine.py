"""Spectral-sequence mechanics on a finite window of bidegrees.

A page ``E_r`` is stored as a subquotient of the E_2 algebra: every cell
keeps a lattice of cycles ``Z_r`` and of boundaries ``B_r`` inside the free
module on the E_2 monomial basis of its bidegree.  Differentials are algebra
derivations on E_2 (generator images extended by the Leibniz rule), so
products of E_infinity classes are computed by multiplying E_2 lifts and
projecting back.

Cells whose value depends on data outside the window are marked unknown
(``None``) and every total-degree query refuses them.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Mapping

from .algebra import DIVIDED, EXTERIOR, LAURENT, AlgebraPresentation, Element, Window
from .linalg import (
    AbelianGroup,
    IntMatrix,
    SubquotientError,
    cokernel,
    preimage,
    rational_preimage,
    rational_subquotient,
    subquotient,
)

HOMOLOGICAL = "homological"
COHOMOLOGICAL = "cohomological"


class WindowTooSmall(ValueError):
    pass


class UncertifiedCell(WindowTooSmall):
    pass


class DifferentialError(ValueError):
    pass


def arrow_target(variance: str, r: int, b) -> tuple[int, int]:
    p, q = b
    if variance == HOMOLOGICAL:
        return (p - r, q + r - 1)
    return (p + r, q - r + 1)


def arrow_source(variance: str, r: int, b) -> tuple[int, int]:
    p, q = b
    if variance == HOMOLOGICAL:
        return (p + r, q - r + 1)
    return (p - r, q + r - 1)


def support_extent(P: AlgebraPresentation) -> tuple[int | None, int | None]:
    """Range of filtration degrees ``p`` where the algebra can be nonzero.

    ``None`` marks an unbounded side.  Exponents are bounded for exterior
    generators and for generators truncated by a unit relation ``g^k``.
    """
    cap: dict[int, int] = {}
    for rel in P.relations:
        if len(rel) == 1:
            (m, c), = rel.items()
            nz = [i for i, e in enumerate(m) if e]
            if abs(c) == 1 and len(nz) == 1 and P.generators[nz[0]].kind != DIVIDED:
                i = nz[0]
                cap[i] = min(cap.get(i, m[i]), m[i] - 1)
    lo: int | None = 0
    hi: int | None = 0
    for i, g in enumerate(P.generators):
        p = g.bidegree[0]
        if p == 0:
            continue
        if g.kind == EXTERIOR:
            top = 1
        elif i in cap:
            top = cap[i]
        else:
            top = None
        if p < 0:
            lo = None if (top is None or lo is None) else lo + p * top
        else:
            hi = None if (top is None or hi is None) else hi + p * top
    return lo, hi


@dataclass
class Cell:
    """One bidegree of a page: E_2 basis plus the subquotient ``Z_r / B_r``."""

    bidegree: tuple[int, int]
    basis: tuple
    sq: object  # Subquotient / RationalSubquotient

    @property
    def group(self) -> AbelianGroup:
        return self.sq.group

    @property
    def dim(self) -> int:
        return len(self.basis)

    @property
    def lifts(self):
        return self.sq.lifts

    @property
    def cycles(self) -> list[tuple]:
        n = self.sq.numerator
        return n.columns() if isinstance(n, IntMatrix) else [tuple(v) for v in n]

    @property
    def boundaries(self) -> list[tuple]:
        d = self.sq.denominator
        return d.columns() if isinstance(d, IntMatrix) else [tuple(v) for v in d]

    def project(self, vec):
        return self.sq.project(vec)

    def contains(self, vec) -> bool:
        return self.sq.contains(vec)

    def is_boundary(self, vec) -> bool:
        return self.sq.is_boundary(vec)


def _make_sq(Z: list, B: list, n: int, mode: str):
    if mode == "Q":
        return rational_subquotient(Z, B, n)
    return subquotient(IntMatrix.from_columns(Z, n), IntMatrix.from_columns(B, n))


@dataclass
class Page:
    r: int
    algebra: AlgebraPresentation
    window: Window
    variance: str
    cells: dict  # bidegree -> Cell | None (unknown)
    permanent_cycles: frozenset = frozenset()

    @property
    def mode(self) -> str:
        return self.algebra.coefficients

    @property
    def extent(self):
        return support_extent(self.algebra)

    def known_zero(self, b) -> bool:
        return not self.algebra.component(b).basis

    def cell(self, b) -> Cell | None:
        """Cell at ``b``; ``None`` if unknown.  Raises for bidegrees off the window."""
        if b in self.cells:
            return self.cells[b]
        raise KeyError(f"bidegree {b} is outside the window")

    def is_known(self, b) -> bool:
        if self.known_zero(b):
            return True
        return b in self.cells and self.cells[b] is not None

    def group(self, b) -> AbelianGroup:
        if self.known_zero(b):
            return AbelianGroup()
        c = self.cells.get(b)
        if c is None:
            raise UncertifiedCell(f"cell {b} is not certified on this window")
        return c.group

    def reliable_cells(self) -> list[tuple[int, int]]:
        return [b for b, c in sorted(self.cells.items()) if c is not None]

    def basis(self, b) -> tuple:
        return self.algebra.component(b).basis

    def vector(self, el: Element, b=None) -> tuple:
        """Coordinates of a homogeneous E_2 element in the basis of its bidegree."""
        if b is None:
            b = el.bidegree
        basis = self.basis(b)
        pos = {m: i for i, m in enumerate(basis)}
        zero = Fraction(0) if self.mode == "Q" else 0
        v = [zero] * len(basis)
        for m, c in el.terms.items():
            if self.algebra.bidegree(m) != b:
                raise ValueError(f"{el} has a term outside bidegree {b}")
            v[pos[m]] += c
        return tuple(v)

    def element(self, b, vec) -> Element:
        return self.algebra.element({m: c for m, c in zip(self.basis(b), vec) if c})

    def class_element(self, b, i: int) -> Element:
        """E_2 representative of the ``i``-th canonical generator of cell ``b``."""
        return self.element(b, self.cells[b].lifts[i])

    def project(self, el: Element, b=None):
        """Canonical coordinates of the class of a homogeneous cycle."""
        if b is None:
            b = el.bidegree
            if b is None:
                raise ValueError("cannot place the zero element; pass a bidegree")
        if self.known_zero(b):
            return ()
        c = self.cells.get(b)
        if c is None:
            raise UncertifiedCell(f"cell {b} is not certified on this window")
        return c.project(self.vector(el, b))

    def is_zero_class(self, el: Element, b=None) -> bool:
        if el.is_zero():
            return True
        if b is None:
            b = el.bidegree
        if self.known_zero(b):
            return True
        c = self.cells.get(b)
        if c is None:
            raise UncertifiedCell(f"cell {b} is not certified on this window")
        return c.is_boundary(self.vector(el, b))

    def labels(self, b) -> list[str]:
        c = self.cells.get(b)
        if c is None:
            return []
        if self.r == 2 and c.group.free_rank == c.dim:
            return [self.algebra.format_monomial(m) for m in c.basis]
        out = []
        for i, lift in enumerate(c.lifts):
            lab = str(self.element(b, lift))
            if i >= c.group.free_rank:
                lab += f" [{c.group.torsion[i - c.group.free_rank]}]"
            out.append(lab)
        return out


def build_page(P: AlgebraPresentation, window: Window, variance: str = HOMOLOGICAL, permanent_cycles=()) -> Page:
    """The E_2 page of ``P`` on ``window``: free cells on the monomial basis."""
    if variance not in (HOMOLOGICAL, COHOMOLOGICAL):
        raise ValueError(f"unknown variance {variance!r}")
    cells = {}
    if not window.is_empty:
        for b in window.bidegrees():
            comp = P.component(b)
            n = len(comp.basis)
            if not comp.group.is_free() or comp.group.free_rank != n:
                raise ValueError(f"E_2 component at {b} is not free on its monomial basis")
            ident = [tuple(int(i == j) for i in range(n)) for j in range(n)]
            cells[b] = Cell(b, comp.basis, _make_sq(ident, [], n, P.coefficients))
    return Page(2, P, window, variance, cells, frozenset(permanent_cycles))


# ---------------------------------------------------------------------------
# Differentials
# ---------------------------------------------------------------------------


@dataclass
class Differential:
    r: int
    variance: str
    algebra: AlgebraPresentation
    images: dict  # generator name -> Element (image of gamma_1 for divided families)
    permanent_cycles: frozenset
    matrices: dict = field(default_factory=dict)  # source bidegree -> IntMatrix (E_2 bases)
    _memo: dict = field(default_factory=dict, repr=False)

    def target(self, b):
        return arrow_target(self.variance, self.r, b)

    def source(self, b):
        return arrow_source(self.variance, self.r, b)

    @property
    def is_zero(self) -> bool:
        return all(v.is_zero() for v in self.images.values())

    def _factors(self, m):
        A = self.algebra
        out = []
        for i, (g, e) in enumerate(zip(A.generators, m)):
            if not e:
                continue
            if g.kind == LAURENT:
                raise DifferentialError("differentials on Laurent generators are not supported")
            unit = [0] * A.ngens
            if g.kind == DIVIDED:
                unit[i] = e
                out.append((i, tuple(unit)))
            else:
                unit[i] = 1
                out.extend([(i, tuple(unit))] * e)
        return out

    def _on_factor(self, i, f) -> dict:
        A = self.algebra
        g = A.generators[i]
        img = self.images.get(g.name)
        if img is None or img.is_zero():
            return {}
        if g.kind == DIVIDED and f[i] > 1:
            # d(gamma_k) = d(gamma_1) gamma_(k-1)
            rest = list(f)
            rest[i] -= 1
            return A.free_multiply(img.terms, {tuple(rest): 1})
        return dict(img.terms)

    def on_monomial(self, m, free: bool = False) -> dict:
        """Leibniz expansion ``sum_j (-1)^|f_1..f_(j-1)| f_1..d(f_j)..f_k``."""
        key = (m, free)
        if key in self._memo:
            return self._memo[key]
        A = self.algebra
        mul = A.free_multiply if free else (lambda a, b: A.normal_form(A.free_multiply(a, b)).terms)
        facs = self._factors(m)
        one = (0,) * A.ngens
        out: dict = {}
        prefix = {one: 1}
        deg = 0
        for j, (i, f) in enumerate(facs):
            df = self._on_factor(i, f)
            if df:
                term = mul(prefix, df)
                suffix = {one: 1}
                for _, g in facs[j + 1:]:
                    suffix = A.free_multiply(suffix, {g: 1})
                term = mul(term, suffix)
                s = -1 if deg % 2 else 1
                for mm, c in term.items():
                    out[mm] = out.get(mm, 0) + s * c
            prefix = mul(prefix, {f: 1})
            deg += A.degree(f)
        out = {k: v for k, v in out.items() if v}
        if not free:
            out = A.normal_form(out).terms
        self._memo[key] = out
        return out

    def __call__(self, el: Element) -> Element:
        out: dict = {}
        for m, c in el.terms.items():
            for mm, cc in self.on_monomial(m).items():
                out[mm] = out.get(mm, 0) + c * cc
        return self.algebra.normal_form(out)

    def matrix(self, b) -> list[list]:
        """Matrix of d on E_2 bases from cell ``b`` to its target (rows = target basis)."""
        A = self.algebra
        src = A.component(b).basis
        tgt_b = self.target(b)
        tgt = A.component(tgt_b).basis
        pos = {m: i for i, m in enumerate(tgt)}
        zero = Fraction(0) if A.coefficients == "Q" else 0
        M = [[zero] * len(src) for _ in tgt]
        for j, m in enumerate(src):
            for mm, c in self.on_monomial(m).items():
                M[pos[mm]][j] += c
        return M

    def vanishes_on(self, b) -> bool:
        return all(not self.on_monomial(m) for m in self.algebra.component(b).basis)


def extend_differential(images: Mapping[str, Element], page: Page, permanent_cycles: Iterable[str] = ()) -> Differential:
    """Extend generator images to a derivation on ``page`` and validate it."""
    A = page.algebra
    perm = frozenset(permanent_cycles) | page.permanent_cycles
    imgs = {}
    for name, img in images.items():
        if name not in A.index:
            raise DifferentialError(f"unknown generator {name!r}")
        if not isinstance(img, Element):
            img = A.parse(img) if isinstance(img, str) else A.scalar(img)
        if img.algebra is not A:
            raise DifferentialError(f"image of {name} lives in a different algebra")
        g = A.generators[A.index[name]]
        want = arrow_target(page.variance, page.r, g.bidegree)
        if not img.is_zero():
            if img.bidegree != want:
                raise DifferentialError(
                    f"wrong target bidegree for d({name}): {img.bidegree}, expected {want}"
                )
            if name in perm:
                raise DifferentialError(f"{name} is a permanent cycle but d({name}) = {img}")
        imgs[name] = img
    D = Differential(page.r, page.variance, A, imgs, perm)
    if D.is_zero:
        return D
    # the ideal of relations must be preserved
    for rel in A.relations:
        acc: dict = {}
        for m, c in rel.items():
            for mm, cc in D.on_monomial(m, free=True).items():
                acc[mm] = acc.get(mm, 0) + c * cc
        if not A.normal_form(acc).is_zero():
            raise DifferentialError("differential does not preserve the relations")
    for b in page.window.bidegrees():
        if page.known_zero(b):
            continue
        D.matrices[b] = D.matrix(b)
    # d o d = 0 wherever both steps stay computable
    for b, M in D.matrices.items():
        t = D.target(b)
        if page.known_zero(t) or t not in D.matrices:
            continue
        M2 = D.matrices[t]
        for j, m in enumerate(page.basis(b)):
            col = [M[i][j] for i in range(len(M))]
            img = [sum(M2[k][i] * col[i] for i in range(len(col))) for k in range(len(M2))]
            if any(img):
                raise DifferentialError(
                    f"d-squared nonzero on {A.format_monomial(m)} at {b}"
                )
    return D


def zero_differential(page: Page) -> Differential:
    return Differential(page.r, page.variance, page.algebra, {}, page.permanent_cycles)


# ---------------------------------------------------------------------------
# Page turning
# ---------------------------------------------------------------------------


def _apply(M, vecs):
    return [tuple(sum(row[j] * v[j] for j in range(len(v))) for row in M) for v in vecs]


def turn_page(page: Page, diff: Differential) -> Page:
    """``E_(r+1) = ker d_r / im d_r`` cell by cell."""
    if diff.r != page.r or diff.variance != page.variance:
        raise ValueError("differential does not belong to this page")
    if diff.is_zero:
        return Page(page.r + 1, page.algebra, page.window, page.variance, dict(page.cells), page.permanent_cycles)
    mode = page.mode
    new = {}
    for b, cell in page.cells.items():
        if cell is None:
            new[b] = None
            continue
        n = cell.dim
        t, s = diff.target(b), diff.source(b)
        Z, B = cell.cycles, cell.boundaries

        # outgoing: Z_(r+1) = {z in Z_r : d z in B_r(t)}
        dZ = _apply(diff.matrix(b), Z) if n else []
        if page.known_zero(t) or not any(any(v) for v in dZ):
            Znew, z_changed = Z, False
        else:
            tc = page.cells.get(t)
            if tc is None:
                new[b] = None
                continue
            for v in dZ:
                if not tc.contains(v):
                    raise DifferentialError(f"d_{page.r} does not map cycles at {b} into cycles")
            k = len(Z)
            if mode == "Q":
                coeffs = rational_preimage(dZ and [list(r) for r in zip(*dZ)] or [], k, tc.boundaries, tc.dim)
                Znew = [tuple(sum(a[j] * Z[j][i] for j in range(k)) for i in range(n)) for a in coeffs]
            else:
                DZ = IntMatrix.from_columns(dZ, tc.dim)
                Bt = IntMatrix.from_columns(tc.boundaries, tc.dim)
                coeffs = preimage(DZ, Bt).columns()
                Znew = [tuple(sum(a[j] * Z[j][i] for j in range(k)) for i in range(n)) for a in coeffs]
            z_changed = True

        # incoming: B_(r+1) = B_r + d Z_r(s)
        if page.known_zero(s) or diff.vanishes_on(s):
            Bnew, b_changed = B, False
        else:
            sc = page.cells.get(s)
            if sc is None:
                new[b] = None
                continue
            imgs = [v for v in _apply(diff.matrix(s), sc.cycles) if any(v)]
            Bnew, b_changed = list(B) + imgs, bool(imgs)

        if not z_changed and not b_changed:
            new[b] = cell
            continue
        try:
            sq = _make_sq(Znew, Bnew, n, mode)
        except SubquotientError as exc:
            raise SubquotientError(f"{exc} at {b} on page {page.r}") from None
        new[b] = Cell(b, cell.basis, sq)
    return Page(page.r + 1, page.algebra, page.window, page.variance, new, page.permanent_cycles)


def advance(page: Page, r: int) -> Page:
    """Turn zero differentials until the page index reaches ``r``."""
    if r < page.r:
        raise ValueError(f"cannot go back from page {page.r} to {r}")
    while page.r < r:
        page = turn_page(page, zero_differential(page))
    return page


@dataclass
class StabilizationReport:
    nonzero_pages: list[int]
    last_page: int
    placement_bound: int
    reliable: list[tuple[int, int]]
    notes: list[str] = field(default_factory=list)


def placement_bound(page: Page) -> int:
    """Largest ``r`` for which some ``d_r`` could join two nonzero cells."""
    lo, hi = support_extent(page.algebra)
    if lo is None or hi is None:
        raise WindowTooSmall("filtration degrees are unbounded; stabilization cannot be certified")
    return hi - lo


def run(page2: Page, schedule: Mapping[int, Mapping[str, Element]] | None = None, r_max: int | None = None):
    """Turn pages ``2..r_max`` with the scheduled differentials.

    Returns ``(E_infinity, report)``.  Pages missing from ``schedule`` carry
    the zero differential; differentials on pages beyond ``r_max`` vanish by
    placement, which is what the report certifies.
    """
    schedule = dict(schedule or {})
    bound = placement_bound(page2)
    if r_max is None:
        r_max = max(bound, max(schedule, default=2))
    if any(r > r_max or r < page2.r for r in schedule):
        raise ValueError(f"schedule pages {sorted(schedule)} outside [{page2.r}, {r_max}]")
    page = page2
    nonzero = []
    for r in range(page2.r, r_max + 1):
        diff = extend_differential(schedule.get(r, {}), page)
        if not diff.is_zero and any(any(any(row) for row in M) for M in diff.matrices.values()):
            nonzero.append(r)
        page = turn_page(page, diff)
    notes = [f"d_r = 0 for r > {bound} by placement (filtration width {bound})"]
    if r_max < bound:
        notes.append(f"d_r = 0 for {r_max} < r <= {bound} by the schedule")
    report = StabilizationReport(nonzero, page.r, bound, page.reliable_cells(), notes)
    return page, report


# ---------------------------------------------------------------------------
# Reading off the abutment
# ---------------------------------------------------------------------------


def antidiagonal(page: Page, i: int) -> list[tuple[int, int]]:
    """Bidegrees with ``p + q = i`` that can carry something, lowest ``p`` first."""
    lo, hi = support_extent(page.algebra)
    if lo is None or hi is None:
        raise WindowTooSmall("filtration degrees are unbounded")
    return [(p, i - p) for p in range(lo, hi + 1) if not page.known_zero((p, i - p))]


def total_degree_groups(einf: Page, degrees: Iterable[int]) -> dict[int, AbelianGroup]:
    out = {}
    for i in degrees:
        g = AbelianGroup()
        for b in antidiagonal(einf, i):
            if b not in einf.cells or einf.cells[b] is None:
                raise UncertifiedCell(f"uncertified cell {b} in total degree {i}")
            g = g + einf.cells[b].group
        out[i] = g
    return out


def certified_degrees(einf: Page) -> list[int]:
    """Total degrees whose whole anti-diagonal is certified."""
    lo, hi = support_extent(einf.algebra)
    w = einf.window
    cand = range(w.p_min + w.q_min, w.p_max + w.q_max + 1)
    out = []
    for i in cand:
        try:
            total_degree_groups(einf, [i])
        except UncertifiedCell:
            continue
        out.append(i)
    return out


def extension_split_check(einf: Page, i: int):
    """Additive splitting test along one anti-diagonal.

    The filtration assembles to the direct sum when every successive quotient
    above the lowest filtration step is free.
    """
    cells = []
    for b in antidiagonal(einf, i):
        g = einf.group(b)
        if not g.is_trivial():
            cells.append((b, g))
    blockers = [(b, g) for b, g in cells[1:] if not g.is_free()]
    report = {
        "degree": i,
        "cells": [{"bidegree": b, "group": str(g)} for b, g in cells],
        "blocking": [{"bidegree": b, "group": str(g)} for b, g in blockers],
    }
    return not blockers, report


# ---------------------------------------------------------------------------
# Multiplicative checks on E_infinity
# ---------------------------------------------------------------------------


def _class_elements(page: Page):
    out = []
    for b in sorted((b for b, c in page.cells.items() if c is not None), key=lambda b: (-b[0], b[1])):
        c = page.cells[b]
        for i in range(len(c.lifts)):
            out.append((b, page.class_element(b, i)))
    return out


def check_page_graded_commutative(page: Page):
    """``a*b == (-1)^(|a||b|) b*a`` on canonical class representatives.

    Returns ``(True, None)`` or ``(False, (a, b))`` for the first failing pair,
    scanning columns from the largest filtration degree down.
    """
    elems = _class_elements(page)
    for b1, a in elems:
        for b2, c in elems:
            t = (b1[0] + b2[0], b1[1] + b2[1])
            if not page.is_known(t):
                continue
            s = -1 if (sum(b1) * sum(b2)) % 2 else 1
            diff = a * c - s * (c * a)
            if not page.is_zero_class(diff, t):
                return False, (str(a), str(c))
    return True, None


def evaluate_monomial(candidate: AlgebraPresentation, m, assignment: Mapping[str, Element], target: AlgebraPresentation) -> Element:
    out = target.one()
    for g, e in zip(candidate.generators, m):
        if not e:
            continue
        if g.kind == DIVIDED:
            raise ValueError("divided-power candidate generators are not supported")
        rep = assignment[g.name]
        for _ in range(e if e > 0 else 0):
            out = out * rep
    return out


def evaluate(candidate: AlgebraPresentation, terms: Mapping, assignment, target: AlgebraPresentation) -> Element:
    out = target.zero()
    for m, c in terms.items():
        out = out + c * evaluate_monomial(candidate, m, assignment, target)
    return out


def verify_presentation(einf: Page, candidate: AlgebraPresentation, assignment: Mapping[str, Element], window: Window | None = None):
    """Check that ``candidate`` presents ``einf`` under ``assignment``.

    Three conditions on the certified cells of ``window``: equal groups,
    every relation (including exterior squares) evaluates to a boundary, and
    the candidate's monomials generate each cell.  A surjection between
    isomorphic finitely generated abelian groups is an isomorphism, so the
    three together certify the presentation on the window.
    """
    window = window or einf.window
    A = einf.algebra
    problems: list[str] = []
    for g in candidate.generators:
        rep = assignment.get(g.name)
        if rep is None:
            problems.append(f"not generated: no representative for {g.name}")
            continue
        if not rep.is_zero() and rep.bidegree != g.bidegree:
            problems.append(f"bidegree mismatch for {g.name}: {rep.bidegree} vs {g.bidegree}")
            continue
        b = g.bidegree
        if b in einf.cells and einf.cells[b] is not None and not einf.cells[b].contains(einf.vector(rep, b)):
            problems.append(f"not generated: representative of {g.name} is not a cycle at {b}")
    if problems:
        return False, problems

    checked = [b for b in window.bidegrees() if b in einf.cells and einf.cells[b] is not None]
    for b in checked:
        cg = candidate.component(b).group
        eg = einf.cells[b].group
        if cg != eg:
            problems.append(f"rank mismatch at {b} (total degree {sum(b)}): candidate {cg}, E_inf {eg}")

    rels = [dict(r) for r in candidate.relations]
    for i, g in enumerate(candidate.generators):
        if g.kind == EXTERIOR:
            sq = [0] * candidate.ngens
            sq[i] = 2
            rels.append({tuple(sq): 1})
    for rel in rels:
        val = evaluate(candidate, rel, assignment, A)
        rb = candidate.bidegree(next(iter(rel)))
        if rb in einf.cells and einf.cells[rb] is not None:
            if not einf.is_zero_class(val, rb):
                text = candidate.format(_raw(candidate, rel))
                problems.append(f"relation fails: {text} is nonzero at {rb}")

    for b in checked:
        cell = einf.cells[b]
        if cell.group.is_trivial():
            continue
        cols = [einf.project(evaluate_monomial(candidate, m, assignment, A), b) for m in candidate.component(b).basis]
        if einf.mode == "Q":
            ok = _q_rank(cols) == cell.group.free_rank
        else:
            rows = len(cell.lifts)
            orders = [0] * cell.group.free_rank + list(cell.group.torsion)
            extra = [[o if k == j else 0 for k in range(rows)] for j, o in enumerate(orders) if o]
            M = IntMatrix.from_columns([list(c) for c in cols] + extra, rows)
            ok = cokernel(M).is_trivial()
        if not ok:
            problems.append(f"not generated at {b}")
    return not problems, problems


def _q_rank(cols) -> int:
    from .linalg import rref

    return len(rref(cols, len(cols[0]) if cols else 0)[1])


def _raw(P: AlgebraPresentation, terms) -> Element:
    return Element(P, terms)


# ---------------------------------------------------------------------------
# Checks and dumps
# ---------------------------------------------------------------------------


def leibniz_violations(diff: Differential, window: Window, limit: int | None = None) -> list:
    """All monomial pairs in ``window`` where the Leibniz rule fails."""
    A = diff.algebra
    mons = []
    for b in window.bidegrees():
        for m in A.component(b).basis:
            mons.append((b, A.element({m: 1})))
    bad = []
    for b1, a in mons:
        for b2, c in mons:
            if (b1[0] + b2[0], b1[1] + b2[1]) not in window:
                continue
            lhs = diff(a * c)
            s = -1 if sum(b1) % 2 else 1
            rhs = diff(a) * c + s * (a * diff(c))
            if lhs != rhs:
                bad.append((str(a), str(c)))
                if limit and len(bad) >= limit:
                    return bad
    return bad


def d_squared_violations(diff: Differential, window: Window) -> list:
    bad = []
    A = diff.algebra
    for b in window.bidegrees():
        for m in A.component(b).basis:
            el = A.element({m: 1})
            if not diff(diff(el)).is_zero():
                bad.append(str(el))
    return bad


def euler_strings(page: Page, r: int) -> list[list[tuple[int, int]]]:
    """Maximal ``d_r`` strings that lie entirely inside the window."""
    seen, out = set(), []
    for b in sorted(page.cells):
        if b in seen:
            continue
        start = b
        while True:
            s = arrow_source(page.variance, r, start)
            if page.known_zero(s) or s not in page.cells:
                break
            start = s
        s = arrow_source(page.variance, r, start)
        chain, cur, closed = [], start, page.known_zero(s)
        while cur in page.cells:
            chain.append(cur)
            seen.add(cur)
            nxt = arrow_target(page.variance, r, cur)
            if page.known_zero(nxt):
                break
            if nxt not in page.cells:
                closed = False
                break
            cur = nxt
        if closed:
            out.append(chain)
    return out


def euler_conserved(before: Page, after: Page) -> tuple[bool, list]:
    """Alternating rank sums agree on every closed ``d_r`` string."""
    bad = []
    for chain in euler_strings(before, before.r):
        if any(before.cells[b] is None or after.cells.get(b) is None for b in chain):
            continue
        e0 = sum((-1) ** (sum(b) % 2) * before.cells[b].group.free_rank for b in chain)
        e1 = sum((-1) ** (sum(b) % 2) * after.cells[b].group.free_rank for b in chain)
        if e0 != e1:
            bad.append((chain, e0, e1))
    return not bad, bad


def page_dump(page: Page, diff: Differential | None = None) -> dict:
    """Machine-readable page record with a stable field order."""
    w = page.window
    cells = []
    for b in sorted(page.cells, key=lambda b: (b[1], b[0])):
        c = page.cells[b]
        if c is None:
            cells.append({"p": b[0], "q": b[1], "certified": False})
            continue
        if c.group.is_trivial():
            continue
        cells.append({
            "p": b[0],
            "q": b[1],
            "free_rank": c.group.free_rank,
            "torsion": list(c.group.torsion),
            "basis": page.labels(b),
        })
    out = {
        "page_index": page.r,
        "variance": page.variance,
        "window": {"p_min": w.p_min, "p_max": w.p_max, "q_min": w.q_min, "q_max": w.q_max},
        "cells": cells,
        "differentials": [],
    }
    if diff is not None and not diff.is_zero:
        for b in sorted(page.cells, key=lambda b: (b[1], b[0])):
            c = page.cells[b]
            t = diff.target(b)
            if c is None or c.group.is_trivial() or page.cells.get(t) is None:
                continue
            M = e_r_matrix(page, diff, b)
            if any(any(row) for row in M):
                out["differentials"].append({
                    "source": [b[0], b[1]],
                    "target": [t[0], t[1]],
                    "entries": [[_plain(x) for x in row] for row in M],
                })
    return out


def _plain(x):
    if isinstance(x, Fraction):
        return int(x) if x.denominator == 1 else str(x)
    return x


def e_r_matrix(page: Page, diff: Differential, b) -> list[list]:
    """``d_r`` from cell ``b`` in canonical class coordinates (rows = target)."""
    c = page.cells[b]
    t = diff.target(b)
    tc = page.cells.get(t)
    if tc is None or page.known_zero(t):
        return []
    cols = []
    for i in range(len(c.lifts)):
        img = diff(page.class_element(b, i))
        cols.append(tc.project(page.vector(img, t)) if not img.is_zero() else (0,) * len(tc.lifts))
    return [[col[k] for col in cols] for k in range(len(tc.lifts))]
