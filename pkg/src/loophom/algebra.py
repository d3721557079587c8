"""Bigraded algebras over Z (or Q) given by generators and relations.

Generators come in four kinds: exterior (square zero), polynomial,
divided-power families and Laurent units.  A monomial is a tuple of
exponents in declaration order; for a divided-power family the exponent is
the index ``i`` of ``gamma_i``.  Products of monomials are computed
symbolically; quotient relations are handled one bidegree at a time by a
Hermite-normal-form reduction, which gives canonical normal forms even when
relations carry torsion coefficients such as ``2*x*y``.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from fractions import Fraction
from math import comb
from typing import Iterable, Iterator, Mapping, Sequence

from .linalg import AbelianGroup, IntMatrix, cokernel, hermite_rows, reduce_mod_lattice, rref

EXTERIOR = "exterior"
POLYNOMIAL = "polynomial"
DIVIDED = "divided-power"
LAURENT = "laurent"
KINDS = (EXTERIOR, POLYNOMIAL, DIVIDED, LAURENT)

Monomial = tuple  # exponent tuple, aligned with AlgebraPresentation.generators
Bidegree = tuple  # (p, q)


class InfiniteBasisError(ValueError):
    pass


@dataclass(frozen=True)
class Generator:
    name: str
    bidegree: tuple[int, int]
    kind: str = POLYNOMIAL

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown generator kind {self.kind!r}")
        if not re.fullmatch(r"[A-Za-z][A-Za-z0-9_]*", self.name):
            raise ValueError(f"bad generator name {self.name!r}")
        object.__setattr__(self, "bidegree", (int(self.bidegree[0]), int(self.bidegree[1])))

    @property
    def degree(self) -> int:
        return self.bidegree[0] + self.bidegree[1]


@dataclass(frozen=True)
class Window:
    """Closed bidegree rectangle ``[p_min, p_max] x [q_min, q_max]``."""

    p_min: int
    p_max: int
    q_min: int
    q_max: int

    def __contains__(self, pq) -> bool:
        p, q = pq
        return self.p_min <= p <= self.p_max and self.q_min <= q <= self.q_max

    def bidegrees(self) -> list[tuple[int, int]]:
        return [
            (p, q)
            for q in range(self.q_min, self.q_max + 1)
            for p in range(self.p_min, self.p_max + 1)
        ]

    @property
    def is_empty(self) -> bool:
        return self.p_min > self.p_max or self.q_min > self.q_max


class Element:
    """A finite linear combination of normal-form monomials."""

    __slots__ = ("algebra", "terms")

    def __init__(self, algebra: "AlgebraPresentation", terms: Mapping[Monomial, int] | None = None):
        self.algebra = algebra
        self.terms = {m: c for m, c in (terms or {}).items() if c != 0}

    def _coerce(self, other) -> "Element":
        if isinstance(other, Element):
            if other.algebra is not self.algebra:
                raise ValueError("elements of different algebras")
            return other
        if isinstance(other, (int, Fraction)):
            return self.algebra.scalar(other)
        return NotImplemented

    def __add__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        out = dict(self.terms)
        for m, c in other.terms.items():
            out[m] = out.get(m, 0) + c
        return self.algebra.normal_form(out)

    __radd__ = __add__

    def __neg__(self):
        return Element(self.algebra, {m: -c for m, c in self.terms.items()})

    def __sub__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if isinstance(other, (int, Fraction)):
            return self.algebra.normal_form({m: c * other for m, c in self.terms.items()})
        if isinstance(other, Element):
            return self.algebra.multiply(self, other)
        return NotImplemented

    def __rmul__(self, other):
        if isinstance(other, (int, Fraction)):
            return self * other
        return NotImplemented

    def __pow__(self, k: int):
        out = self.algebra.one()
        for _ in range(k):
            out = out * self
        return out

    def __eq__(self, other):
        if isinstance(other, (int, Fraction)):
            other = self.algebra.scalar(other)
        if not isinstance(other, Element):
            return NotImplemented
        return self.algebra is other.algebra and self.terms == other.terms

    def __hash__(self):
        return hash(frozenset(self.terms.items()))

    def __bool__(self):
        return bool(self.terms)

    def is_zero(self) -> bool:
        return not self.terms

    def monomials(self) -> list[Monomial]:
        return sorted(self.terms, reverse=True)

    def coefficient(self, m: Monomial):
        return self.terms.get(m, 0)

    def components(self) -> dict[Bidegree, "Element"]:
        out: dict = {}
        for m, c in self.terms.items():
            out.setdefault(self.algebra.bidegree(m), {})[m] = c
        return {b: Element(self.algebra, t) for b, t in sorted(out.items())}

    @property
    def bidegree(self) -> Bidegree | None:
        """The bidegree of a homogeneous element (``None`` for zero)."""
        degs = {self.algebra.bidegree(m) for m in self.terms}
        if len(degs) > 1:
            raise ValueError(f"{self} is not homogeneous")
        return degs.pop() if degs else None

    def __str__(self):
        return self.algebra.format(self)

    def __repr__(self):
        return f"Element({self})"


_TOKEN = re.compile(r"\s*(?:(\d+)|([A-Za-z][A-Za-z0-9_]*)|(\^)|(\*)|([+-])|(\[)|(\])|(\()|(\)))")


class AlgebraPresentation:
    """Generators, commutation signs, relations and a coefficient ring.

    ``signs`` overrides the default Koszul sign ``(-1)^(|a||b|)`` (total
    degrees) for chosen generator pairs, e.g. ``{("y", "y"): 1}`` declares an
    odd generator ``y`` strictly commutative.  ``relations`` are homogeneous
    elements (given as strings in ``2*x*y^3`` syntax or as exponent-to-
    coefficient mappings) generating a two-sided ideal.
    """

    def __init__(
        self,
        generators: Sequence[Generator] = (),
        relations: Sequence = (),
        signs: Mapping[tuple[str, str], int] | None = None,
        coefficients: str = "Z",
    ):
        if coefficients not in ("Z", "Q"):
            raise ValueError("coefficients must be 'Z' or 'Q'")
        self.generators = tuple(generators)
        self.index = {g.name: i for i, g in enumerate(self.generators)}
        if len(self.index) != len(self.generators):
            raise ValueError("duplicate generator names")
        self.coefficients = coefficients
        self._signs: dict[tuple[int, int], int] = {}
        for (a, b), s in (signs or {}).items():
            if s not in (1, -1):
                raise ValueError("commutation signs must be +1 or -1")
            i, j = sorted((self.index[a], self.index[b]))
            self._signs[(i, j)] = s
        self._free_cache: dict = {}
        self._comp_cache: dict = {}
        rels = []
        for r in relations:
            terms = self._parse_terms(r) if isinstance(r, str) else dict(r)
            terms = {tuple(m): c for m, c in terms.items() if c}
            if not terms:
                continue
            if len({self.bidegree(m) for m in terms}) != 1:
                raise ValueError(f"relation {r!r} is not homogeneous")
            rels.append(terms)
        self.relations = tuple(rels)

    # -- basic data -------------------------------------------------------

    @property
    def ngens(self) -> int:
        return len(self.generators)

    def sign(self, a: str | int, b: str | int) -> int:
        i = self.index[a] if isinstance(a, str) else a
        j = self.index[b] if isinstance(b, str) else b
        key = (min(i, j), max(i, j))
        if key in self._signs:
            return self._signs[key]
        return -1 if (self.generators[i].degree * self.generators[j].degree) % 2 else 1

    @property
    def sign_overrides(self) -> dict[tuple[str, str], int]:
        g = self.generators
        return {(g[i].name, g[j].name): s for (i, j), s in sorted(self._signs.items())}

    def bidegree(self, m: Monomial) -> Bidegree:
        p = q = 0
        for e, g in zip(m, self.generators):
            p += e * g.bidegree[0]
            q += e * g.bidegree[1]
        return (p, q)

    def degree(self, m: Monomial) -> int:
        return sum(self.bidegree(m))

    def one(self) -> Element:
        return self.scalar(1)

    def zero(self) -> Element:
        return Element(self, {})

    def scalar(self, c) -> Element:
        return self.normal_form({(0,) * self.ngens: c})

    def gen(self, name: str, index: int = 1) -> Element:
        m = [0] * self.ngens
        m[self.index[name]] = index
        return self.normal_form({tuple(m): 1})

    def monomial(self, exponents: Mapping[str, int] | Sequence[int]) -> Element:
        if isinstance(exponents, Mapping):
            m = [0] * self.ngens
            for k, v in exponents.items():
                m[self.index[k]] = v
        else:
            m = list(exponents)
        return self.normal_form({tuple(m): 1})

    def element(self, terms: Mapping[Monomial, int]) -> Element:
        return self.normal_form(dict(terms))

    def parse(self, text: str) -> Element:
        return self.normal_form(self._parse_terms(text))

    # -- free (relation-less) arithmetic ----------------------------------

    def _mono_product(self, a: Monomial, b: Monomial):
        """Free product of two normal-ordered monomials: ``(coeff, monomial)``."""
        gens = self.generators
        sign = 1
        # b's generators move left past the later generators of a
        for i, bi in enumerate(b):
            if not bi:
                continue
            for j in range(i + 1, len(a)):
                if a[j] and (a[j] * bi) % 2 and self.sign(i, j) == -1:
                    sign = -sign
        coeff = sign
        out = []
        for g, ea, eb in zip(gens, a, b):
            if g.kind == EXTERIOR:
                if ea + eb > 1:
                    return 0, None
                out.append(ea + eb)
            elif g.kind == DIVIDED:
                coeff *= comb(ea + eb, ea)
                out.append(ea + eb)
            else:
                out.append(ea + eb)
        return coeff, tuple(out)

    def free_multiply(self, a: Mapping, b: Mapping) -> dict:
        out: dict = {}
        for ma, ca in a.items():
            for mb, cb in b.items():
                c, m = self._mono_product(ma, mb)
                if c:
                    out[m] = out.get(m, 0) + c * ca * cb
        return {m: c for m, c in out.items() if c}

    def _quadrant(self):
        sp = sq = 0
        for g in self.generators:
            p, q = g.bidegree
            for v, s in ((p, "p"), (q, "q")):
                if v:
                    sgn = 1 if v > 0 else -1
                    cur = sp if s == "p" else sq
                    if cur and cur != sgn:
                        raise ValueError("generators do not lie in a common quadrant")
                    if s == "p":
                        sp = sgn
                    else:
                        sq = sgn
        return sp or 1, sq or 1

    def free_monomials(self, bideg: Bidegree) -> list[Monomial]:
        """All relation-free monomials of the given bidegree, in canonical order."""
        bideg = (int(bideg[0]), int(bideg[1]))
        if bideg in self._free_cache:
            return self._free_cache[bideg]
        sp, sq = self._quadrant()
        p, q = bideg
        gens = self.generators
        if sp * p < 0 or sq * q < 0:
            self._free_cache[bideg] = []
            return []
        weights = [abs(g.bidegree[0]) + abs(g.bidegree[1]) for g in gens]
        unbounded = [
            i for i, g in enumerate(gens) if g.kind == LAURENT or (weights[i] == 0 and g.kind != EXTERIOR)
        ]
        out: list[Monomial] = []
        cur = [0] * len(gens)

        def rec(i, rp, rq):
            if i == len(gens):
                if rp == 0 and rq == 0:
                    out.append(tuple(cur))
                return
            g = gens[i]
            if i in unbounded:
                cur[i] = 0
                rec(i + 1, rp, rq)
                return
            w = weights[i]
            if g.kind == EXTERIOR:
                top = 1
            else:
                top = (abs(rp) + abs(rq)) // w if w else 0
            for e in range(top + 1):
                np_, nq = rp - e * g.bidegree[0], rq - e * g.bidegree[1]
                if sp * np_ < 0 or sq * nq < 0:
                    break
                cur[i] = e
                rec(i + 1, np_, nq)
            cur[i] = 0

        rec(0, p, q)
        if out and unbounded:
            names = ", ".join(gens[i].name for i in unbounded)
            raise InfiniteBasisError(f"infinite basis in bidegree {bideg} (generators {names})")
        out.sort(reverse=True)
        self._free_cache[bideg] = out
        return out

    # -- quotient by relations ---------------------------------------------

    def component(self, bideg: Bidegree) -> "Component":
        bideg = (int(bideg[0]), int(bideg[1]))
        comp = self._comp_cache.get(bideg)
        if comp is None:
            comp = self._build_component(bideg)
            self._comp_cache[bideg] = comp
        return comp

    def _build_component(self, bideg) -> "Component":
        mons = self.free_monomials(bideg)
        pos = {m: i for i, m in enumerate(mons)}
        n = len(mons)
        rows = []
        for rel in self.relations:
            rb = self.bidegree(next(iter(rel)))
            cof = (bideg[0] - rb[0], bideg[1] - rb[1])
            for u in self.free_monomials(cof):
                for prod in (self.free_multiply({u: 1}, rel), self.free_multiply(rel, {u: 1})):
                    if prod:
                        v = [0] * n
                        for m, c in prod.items():
                            v[pos[m]] += c
                        rows.append(v)
        if self.coefficients == "Z":
            hnf = hermite_rows(rows, n)
            units = {_pivot_index(r) for r in hnf if _pivot(r) == 1}
            group = cokernel(IntMatrix.from_columns(hnf, n)) if n else AbelianGroup()
        else:
            hnf, piv = rref(rows, n)
            units = set(piv)
            group = AbelianGroup(n - len(piv))
        basis = tuple(m for i, m in enumerate(mons) if i not in units)
        return Component(bideg, tuple(mons), tuple(tuple(r) for r in hnf), basis, group)

    def normal_form(self, terms: Mapping) -> Element:
        """Reduce a coefficient mapping to canonical normal form."""
        terms = {tuple(m): c for m, c in terms.items() if c}
        if not self.relations:
            if self.coefficients == "Q":
                terms = {m: Fraction(c) for m, c in terms.items()}
            return Element(self, terms)
        by_deg: dict = {}
        for m, c in terms.items():
            by_deg.setdefault(self.bidegree(m), {})[m] = c
        out = {}
        for b, t in by_deg.items():
            comp = self.component(b)
            pos = {m: i for i, m in enumerate(comp.monomials)}
            v = [0] * len(comp.monomials)
            for m, c in t.items():
                v[pos[m]] += c
            if self.coefficients == "Z":
                v = reduce_mod_lattice(v, comp.hnf)
            else:
                v = [Fraction(x) for x in v]
                for row in comp.hnf:
                    pc = _pivot_index(row)
                    if v[pc]:
                        f = v[pc]
                        v = [a - f * r for a, r in zip(v, row)]
            for m, c in zip(comp.monomials, v):
                if c:
                    out[m] = c
        return Element(self, out)

    def multiply(self, a: Element, b: Element) -> Element:
        return self.normal_form(self.free_multiply(a.terms, b.terms))

    def monomial_basis(self, window: Window) -> dict[Bidegree, list[Monomial]]:
        return {b: list(self.component(b).basis) for b in window.bidegrees()}

    # -- derived presentations ---------------------------------------------

    def regraded(self, fn) -> "AlgebraPresentation":
        """Same algebra with generator bidegrees mapped through ``fn``."""
        gens = [Generator(g.name, fn(g.bidegree), g.kind) for g in self.generators]
        return AlgebraPresentation(gens, self.relations, self.sign_overrides, self.coefficients)

    def with_coefficients(self, coefficients: str) -> "AlgebraPresentation":
        return AlgebraPresentation(self.generators, self.relations, self.sign_overrides, coefficients)

    def with_relations(self, relations: Sequence) -> "AlgebraPresentation":
        return AlgebraPresentation(self.generators, relations, self.sign_overrides, self.coefficients)

    # -- text ------------------------------------------------------------------

    def _parse_terms(self, text: str) -> dict:
        toks = []
        pos = 0
        text = text.strip()
        while pos < len(text):
            m = _TOKEN.match(text, pos)
            if not m or m.end() == pos:
                raise ValueError(f"cannot parse {text!r} at {pos}")
            toks.append((m.lastindex, m.group(m.lastindex)))
            pos = m.end()
        terms: dict = {}
        i = 0

        def peek(kind=None):
            if i < len(toks) and (kind is None or toks[i][0] == kind):
                return toks[i][1]
            return None

        def signed_int():
            nonlocal i
            neg = False
            if peek(8):  # parenthesised exponent
                i += 1
                val = signed_int()
                if peek(9) is None:
                    raise ValueError(f"unbalanced parenthesis in {text!r}")
                i += 1
                return val
            if peek(5):
                neg = toks[i][1] == "-"
                i += 1
            if peek(1) is None:
                raise ValueError(f"expected an integer in {text!r}")
            val = int(toks[i][1])
            i += 1
            return -val if neg else val

        sign = 1
        if peek(5):
            sign = -1 if toks[i][1] == "-" else 1
            i += 1
        one = (0,) * self.ngens
        while True:
            term = {one: sign}
            while True:
                if peek(1) is not None:
                    term = {m: c * int(toks[i][1]) for m, c in term.items()}
                    i += 1
                elif peek(2) is not None:
                    name = toks[i][1]
                    i += 1
                    if name not in self.index:
                        raise ValueError(f"unknown generator {name!r}")
                    k = self.index[name]
                    e = 1
                    if self.generators[k].kind == DIVIDED:
                        if peek(6):
                            i += 1
                            e = signed_int()
                            if peek(7) is None:
                                raise ValueError(f"unbalanced bracket in {text!r}")
                            i += 1
                        elif peek(3):
                            raise ValueError("use name[i] for divided powers")
                    elif peek(3):
                        i += 1
                        e = signed_int()
                    if self.generators[k].kind == EXTERIOR and e > 1:
                        term = {}
                    else:
                        factor = [0] * self.ngens
                        factor[k] = e
                        term = self.free_multiply(term, {tuple(factor): 1})
                else:
                    raise ValueError(f"cannot parse {text!r}")
                if peek(4):
                    i += 1
                    continue
                break
            for m, c in term.items():
                terms[m] = terms.get(m, 0) + c
            if i == len(toks):
                break
            if not peek(5):
                raise ValueError(f"cannot parse {text!r}")
            sign = -1 if toks[i][1] == "-" else 1
            i += 1
        return {m: c for m, c in terms.items() if c}

    def format_monomial(self, m: Monomial) -> str:
        parts = []
        for g, e in zip(self.generators, m):
            if e == 0:
                continue
            if g.kind == DIVIDED:
                parts.append(f"{g.name}[{e}]")
            elif e == 1:
                parts.append(g.name)
            else:
                parts.append(f"{g.name}^{e}" if e > 0 else f"{g.name}^({e})")
        return "*".join(parts) if parts else "1"

    def format(self, el: Element) -> str:
        if not el.terms:
            return "0"
        out = []
        for m in sorted(el.terms, reverse=True):
            c = el.terms[m]
            mono = self.format_monomial(m)
            neg = c < 0
            a = -c if neg else c
            if mono == "1":
                body = str(a)
            elif a == 1:
                body = mono
            else:
                body = f"{a}*{mono}"
            if not out:
                out.append(("-" if neg else "") + body)
            else:
                out.append(("- " if neg else "+ ") + body)
        return " ".join(out)

    def format_terms(self, terms: Mapping) -> str:
        """Format raw terms without reducing them (relations would print as 0)."""
        return self.format(Element(self, {tuple(m): c for m, c in terms.items()}))

    def to_text(self) -> str:
        lines = [f"coefficients {self.coefficients}"]
        for g in self.generators:
            lines.append(f"{g.name} ({g.bidegree[0]},{g.bidegree[1]}) {g.kind}")
        for (a, b), s in self.sign_overrides.items():
            lines.append(f"sign {a} {b} {s:+d}")
        for r in self.relations:
            lines.append("relation " + self.format(Element(self, r)))
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "AlgebraPresentation":
        """Parse the line format written by :meth:`to_text`.

        ``name (p,q) kind`` declares a generator, ``relation <expr>`` adds a
        relation, ``sign a b +1`` overrides a commutation sign and
        ``coefficients Z|Q`` picks the ring.  ``#`` starts a comment.
        """
        gens, rels, signs, coeffs = [], [], {}, "Z"
        gen_re = re.compile(r"([A-Za-z][A-Za-z0-9_]*)\s*\(\s*(-?\d+)\s*,\s*(-?\d+)\s*\)\s*([a-z-]+)")
        for raw in text.splitlines():
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            head, _, rest = line.partition(" ")
            if head == "relation":
                rels.append(rest.strip())
            elif head == "coefficients":
                coeffs = rest.strip()
            elif head == "sign":
                a, b, s = rest.split()
                signs[(a, b)] = int(s)
            else:
                m = gen_re.fullmatch(line)
                if not m:
                    raise ValueError(f"bad presentation line: {raw!r}")
                kind = m.group(4)
                if kind == "divided":
                    kind = DIVIDED
                gens.append(Generator(m.group(1), (int(m.group(2)), int(m.group(3))), kind))
        return cls(gens, rels, signs, coeffs)

    def __repr__(self):
        names = ", ".join(f"{g.name}{g.bidegree}" for g in self.generators)
        return f"AlgebraPresentation([{names}], {len(self.relations)} relations, {self.coefficients})"


@dataclass(frozen=True)
class Component:
    bidegree: Bidegree
    monomials: tuple  # all free monomials of this bidegree
    hnf: tuple  # reduced ideal lattice (rows)
    basis: tuple  # spanning normal-form monomials
    group: AbelianGroup


def _pivot_index(row) -> int:
    return next(i for i, a in enumerate(row) if a)


def _pivot(row) -> int:
    return row[_pivot_index(row)]


def monomial_basis(P: AlgebraPresentation, window: Window) -> dict[Bidegree, list[Monomial]]:
    return P.monomial_basis(window)


def multiply(a: Element, b: Element, P: AlgebraPresentation | None = None) -> Element:
    return (P or a.algebra).multiply(a, b)


def tensor(P1: AlgebraPresentation, P2: AlgebraPresentation) -> AlgebraPresentation:
    """Tensor product; colliding names in ``P2`` get a ``_2`` suffix."""
    if P1.coefficients != P2.coefficients:
        raise ValueError("coefficient rings differ")
    taken = {g.name for g in P1.generators}
    rename = {}
    for g in P2.generators:
        new = g.name
        while new in taken:
            new += "_2"
        taken.add(new)
        rename[g.name] = new
    gens = list(P1.generators) + [Generator(rename[g.name], g.bidegree, g.kind) for g in P2.generators]
    pad1 = (0,) * P2.ngens
    pad0 = (0,) * P1.ngens
    rels = [{m + pad1: c for m, c in r.items()} for r in P1.relations]
    rels += [{pad0 + m: c for m, c in r.items()} for r in P2.relations]
    signs = dict(P1.sign_overrides)
    signs.update({(rename[a], rename[b]): s for (a, b), s in P2.sign_overrides.items()})
    return AlgebraPresentation(gens, rels, signs, P1.coefficients)


def trivial_presentation(coefficients: str = "Z") -> AlgebraPresentation:
    return AlgebraPresentation((), (), None, coefficients)


def check_graded_commutative(P: AlgebraPresentation, window: Window):
    """Check ``a*b == (-1)^(|a||b|) b*a`` on window basis monomials.

    Returns ``(True, None)`` or ``(False, (a, b))`` with the first failing
    pair, scanning columns from the largest ``p`` down.
    """
    basis = P.monomial_basis(window)
    order = sorted(basis, key=lambda b: (-b[0], b[1]))
    elems = [(b, P.element({m: 1})) for b in order for m in basis[b]]
    for b1, x in elems:
        for b2, y in elems:
            if (b1[0] + b2[0], b1[1] + b2[1]) not in window:
                continue
            s = -1 if (sum(b1) * sum(b2)) % 2 else 1
            if x * y != s * (y * x):
                return False, (str(x), str(y))
    return True, None


def iter_monomials(P: AlgebraPresentation, window: Window) -> Iterator[tuple[Bidegree, Monomial]]:
    for b, mons in P.monomial_basis(window).items():
        for m in mons:
            yield b, m


def exponents_to_element(P: AlgebraPresentation, items: Iterable[tuple[Mapping[str, int], int]]) -> Element:
    out = P.zero()
    for exps, c in items:
        out = out + c * P.monomial(exps)
    return out
