"""Exact integer (and rational) matrix algebra.

Everything here works on Python ints, so there is no overflow and no
floating point.  Matrices are small (a few dozen rows at most), which is why
plain nested tuples are good enough.

The central routine is :func:`smith_normal_form`.  Kernels, cokernels and
subquotients of lattices are all read off from it.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Sequence


class SubquotientError(ValueError):
    """Raised when the denominator lattice is not contained in the numerator."""


@dataclass(frozen=True)
class IntMatrix:
    rows: int
    cols: int
    entries: tuple[tuple[int, ...], ...] = field(repr=False)

    def __post_init__(self):
        if len(self.entries) != self.rows or any(len(r) != self.cols for r in self.entries):
            raise ValueError("entries do not match the declared shape")

    @classmethod
    def from_rows(cls, rows: Sequence[Sequence[int]], cols: int | None = None) -> "IntMatrix":
        rows = [tuple(int(v) for v in r) for r in rows]
        if cols is None:
            cols = len(rows[0]) if rows else 0
        return cls(len(rows), cols, tuple(rows))

    @classmethod
    def from_columns(cls, columns: Sequence[Sequence[int]], rows: int) -> "IntMatrix":
        entries = tuple(tuple(int(c[i]) for c in columns) for i in range(rows))
        return cls(rows, len(columns), entries)

    @classmethod
    def zeros(cls, rows: int, cols: int) -> "IntMatrix":
        return cls(rows, cols, tuple((0,) * cols for _ in range(rows)))

    @classmethod
    def identity(cls, n: int) -> "IntMatrix":
        return cls(n, n, tuple(tuple(int(i == j) for j in range(n)) for i in range(n)))

    @classmethod
    def diagonal(cls, values: Sequence[int], rows: int | None = None, cols: int | None = None):
        rows = len(values) if rows is None else rows
        cols = len(values) if cols is None else cols
        out = [[0] * cols for _ in range(rows)]
        for i, v in enumerate(values):
            out[i][i] = v
        return cls.from_rows(out, cols)

    def __getitem__(self, ij):
        i, j = ij
        return self.entries[i][j]

    def __matmul__(self, other: "IntMatrix") -> "IntMatrix":
        if self.cols != other.rows:
            raise ValueError(f"shape mismatch {self.shape} @ {other.shape}")
        ocols = other.columns()
        out = tuple(
            tuple(sum(a * b for a, b in zip(row, col)) for col in ocols) for row in self.entries
        )
        return IntMatrix(self.rows, other.cols, out)

    @property
    def shape(self) -> tuple[int, int]:
        return self.rows, self.cols

    @property
    def T(self) -> "IntMatrix":
        return IntMatrix(self.cols, self.rows, tuple(self.column(j) for j in range(self.cols)))

    def column(self, j: int) -> tuple[int, ...]:
        return tuple(r[j] for r in self.entries)

    def columns(self) -> list[tuple[int, ...]]:
        return [self.column(j) for j in range(self.cols)]

    def apply(self, v: Sequence[int]) -> tuple[int, ...]:
        return tuple(sum(a * b for a, b in zip(row, v)) for row in self.entries)

    def is_zero(self) -> bool:
        return all(v == 0 for r in self.entries for v in r)

    def to_lists(self) -> list[list[int]]:
        return [list(r) for r in self.entries]


def determinant(M: IntMatrix) -> int:
    """Bareiss fraction-free determinant."""
    if M.rows != M.cols:
        raise ValueError("determinant of a non-square matrix")
    n = M.rows
    if n == 0:
        return 1
    a = M.to_lists()
    sign, prev = 1, 1
    for k in range(n - 1):
        if a[k][k] == 0:
            for i in range(k + 1, n):
                if a[i][k] != 0:
                    a[k], a[i] = a[i], a[k]
                    sign = -sign
                    break
            else:
                return 0
        for i in range(k + 1, n):
            for j in range(k + 1, n):
                a[i][j] = (a[i][j] * a[k][k] - a[i][k] * a[k][j]) // prev
        prev = a[k][k]
    return sign * a[n - 1][n - 1]


# ---------------------------------------------------------------------------
# Smith normal form
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class _Smith:
    # P @ M @ Q == D and M == U @ D @ V, with U = P^-1, V = Q^-1
    D: IntMatrix
    P: IntMatrix
    Q: IntMatrix
    U: IntMatrix
    V: IntMatrix

    @property
    def diagonal(self) -> list[int]:
        return [self.D[i, i] for i in range(min(self.D.shape))]

    @property
    def rank(self) -> int:
        return sum(1 for d in self.diagonal if d != 0)


def _smith(M: IntMatrix) -> _Smith:
    m, n = M.shape
    A = M.to_lists()
    P = IntMatrix.identity(m).to_lists()
    U = IntMatrix.identity(m).to_lists()
    Q = IntMatrix.identity(n).to_lists()
    V = IntMatrix.identity(n).to_lists()

    # Row op "row_i += c*row_j" is E = I + c e_ij: A <- E A, P <- E P, U <- U E^-1
    # (column j of U gets -c * column i).  Column ops are the transpose picture.
    def row_add(i, j, c):
        if c == 0:
            return
        A[i] = [a + c * b for a, b in zip(A[i], A[j])]
        P[i] = [a + c * b for a, b in zip(P[i], P[j])]
        for row in U:
            row[j] -= c * row[i]

    def row_swap(i, j):
        if i == j:
            return
        A[i], A[j] = A[j], A[i]
        P[i], P[j] = P[j], P[i]
        for row in U:
            row[i], row[j] = row[j], row[i]

    def row_neg(i):
        A[i] = [-a for a in A[i]]
        P[i] = [-a for a in P[i]]
        for row in U:
            row[i] = -row[i]

    def col_add(i, j, c):
        # column_i += c * column_j: A <- A F, Q <- Q F, V <- F^-1 V
        if c == 0:
            return
        for row in A:
            row[i] += c * row[j]
        for row in Q:
            row[i] += c * row[j]
        V[j] = [a - c * b for a, b in zip(V[j], V[i])]

    def col_swap(i, j):
        if i == j:
            return
        for row in A:
            row[i], row[j] = row[j], row[i]
        for row in Q:
            row[i], row[j] = row[j], row[i]
        V[i], V[j] = V[j], V[i]

    t = 0
    while t < min(m, n):
        # minimal |entry| pivot in the trailing block
        best = None
        for i in range(t, m):
            for j in range(t, n):
                v = A[i][j]
                if v and (best is None or abs(v) < best[0]):
                    best = (abs(v), i, j)
                    if best[0] == 1:
                        break
            if best is not None and best[0] == 1:
                break
        if best is None:
            break
        _, i, j = best
        row_swap(t, i)
        col_swap(t, j)

        while True:
            piv = A[t][t]
            dirty = False
            for i in range(t + 1, m):
                if A[i][t]:
                    row_add(i, t, -(A[i][t] // piv))
                    dirty |= A[i][t] != 0
            for j in range(t + 1, n):
                if A[t][j]:
                    col_add(j, t, -(A[t][j] // piv))
                    dirty |= A[t][j] != 0
            if dirty:
                # move the smallest remainder in row/column t onto the pivot
                cands = [(abs(A[i][t]), i, t) for i in range(t, m) if A[i][t]]
                cands += [(abs(A[t][j]), t, j) for j in range(t + 1, n) if A[t][j]]
                _, i, j = min(cands)
                row_swap(t, i)
                col_swap(t, j)
                continue
            # divisibility: fold an offending row into row t and repeat
            bad = next(
                (i for i in range(t + 1, m) for j in range(t + 1, n) if A[i][j] % piv),
                None,
            )
            if bad is None:
                break
            row_add(t, bad, 1)
        if A[t][t] < 0:
            row_neg(t)
        t += 1

    return _Smith(
        D=IntMatrix.from_rows(A, n),
        P=IntMatrix.from_rows(P, m),
        Q=IntMatrix.from_rows(Q, n),
        U=IntMatrix.from_rows(U, m),
        V=IntMatrix.from_rows(V, n),
    )


def smith_normal_form(M: IntMatrix) -> tuple[IntMatrix, IntMatrix, IntMatrix]:
    """Return ``(U, D, V)`` with ``M == U @ D @ V``.

    ``U`` and ``V`` are unimodular and ``D`` is diagonal, nonnegative, with each
    diagonal entry dividing the next.
    """
    s = _smith(M)
    return s.U, s.D, s.V


def invariant_factors(M: IntMatrix) -> list[int]:
    return [d for d in _smith(M).diagonal if d != 0]


def rank(M: IntMatrix) -> int:
    return _smith(M).rank


def kernel_basis(M: IntMatrix) -> IntMatrix:
    """Columns form a basis of the lattice ``{v : M v = 0}``."""
    s = _smith(M)
    cols = [s.Q.column(j) for j in range(s.rank, M.cols)]
    return IntMatrix.from_columns(cols, M.cols)


def column_span_basis(M: IntMatrix) -> IntMatrix:
    """A basis (as columns) of the lattice spanned by the columns of ``M``."""
    s = _smith(M)
    cols = []
    for i, d in enumerate(s.diagonal):
        if d:
            cols.append(tuple(d * u for u in s.U.column(i)))
    return hermite_columns(IntMatrix.from_columns(cols, M.rows))


@dataclass(frozen=True, order=True)
class AbelianGroup:
    """``Z^free_rank`` plus cyclic torsion in divisibility-chain form."""

    free_rank: int = 0
    torsion: tuple[int, ...] = ()

    def __post_init__(self):
        tors = tuple(self.torsion)
        object.__setattr__(self, "torsion", tors)
        if self.free_rank < 0:
            raise ValueError("negative free rank")
        if any(t < 2 for t in tors) or any(b % a for a, b in zip(tors, tors[1:])):
            raise ValueError(f"torsion {tors} is not a divisibility chain")

    @classmethod
    def from_orders(cls, orders: Iterable[int]) -> "AbelianGroup":
        """Canonical form of a direct sum of cyclic groups (order 0 means Z)."""
        orders = [abs(o) for o in orders]
        free = sum(1 for o in orders if o == 0)
        finite = [o for o in orders if o > 1]
        factors = invariant_factors(IntMatrix.diagonal(finite)) if finite else []
        return cls(free, tuple(d for d in factors if d > 1))

    @classmethod
    def trivial(cls) -> "AbelianGroup":
        return cls()

    def __add__(self, other: "AbelianGroup") -> "AbelianGroup":
        return AbelianGroup.from_orders(
            [0] * (self.free_rank + other.free_rank) + list(self.torsion) + list(other.torsion)
        )

    def is_trivial(self) -> bool:
        return self.free_rank == 0 and not self.torsion

    def is_free(self) -> bool:
        return not self.torsion

    @property
    def order(self) -> int | None:
        if self.free_rank:
            return None
        out = 1
        for t in self.torsion:
            out *= t
        return out

    def elementary_divisors(self) -> list[int]:
        """Prime-power cyclic orders, for display."""
        out = []
        for t in self.torsion:
            n, p = t, 2
            while p * p <= n:
                if n % p == 0:
                    q = 1
                    while n % p == 0:
                        n //= p
                        q *= p
                    out.append(q)
                p += 1
            if n > 1:
                out.append(n)
        return sorted(out)

    def __str__(self) -> str:
        parts = []
        if self.free_rank == 1:
            parts.append("Z")
        elif self.free_rank > 1:
            parts.append(f"Z^{self.free_rank}")
        parts += [f"Z/{t}" for t in self.torsion]
        return " + ".join(parts) if parts else "0"


def cokernel(M: IntMatrix) -> AbelianGroup:
    """Structure of ``Z^rows / colspan(M)``."""
    s = _smith(M)
    diag = s.diagonal
    orders = [d for d in diag if d != 1]
    orders += [0] * (M.rows - len(diag))
    return AbelianGroup.from_orders(orders)


def solve(M: IntMatrix, b: Sequence[int]) -> tuple[int, ...] | None:
    """An integer solution of ``M x = b`` or ``None`` if there is none."""
    s = _smith(M)
    w = s.P.apply(b)
    y = [0] * M.cols
    for i, wi in enumerate(w):
        d = s.D[i, i] if i < min(M.shape) else 0
        if d == 0:
            if wi != 0:
                return None
        else:
            if wi % d:
                return None
            y[i] = wi // d
    return s.Q.apply(y)


# ---------------------------------------------------------------------------
# Hermite normal form (canonical coset representatives)
# ---------------------------------------------------------------------------


def hermite_rows(rows: Sequence[Sequence[int]], ncols: int) -> list[list[int]]:
    """Row-style Hermite normal form of the lattice spanned by ``rows``.

    Nonzero rows come out in echelon form with positive pivots and the entries
    above each pivot reduced into ``[0, pivot)``.
    """
    A = [list(r) for r in rows if any(r)]
    out: list[list[int]] = []
    col = 0
    while A and col < ncols:
        live = [r for r in A if r[col] != 0]
        rest = [r for r in A if r[col] == 0]
        if not live:
            col += 1
            continue
        while len(live) > 1:
            live.sort(key=lambda r: abs(r[col]))
            piv = live[0]
            nxt = [piv]
            for r in live[1:]:
                q = r[col] // piv[col]
                r = [a - q * b for a, b in zip(r, piv)]
                (nxt if r[col] else rest).append(r)
            live = nxt
        piv = live[0]
        if piv[col] < 0:
            piv = [-a for a in piv]
        for k, prev in enumerate(out):
            q = prev[col] // piv[col]
            if q:
                out[k] = [a - q * b for a, b in zip(prev, piv)]
        out.append(piv)
        A = [r for r in rest if any(r)]
        col += 1
    return out


def hermite_columns(M: IntMatrix) -> IntMatrix:
    """Canonical basis (as columns) of the column lattice of ``M``."""
    rows = hermite_rows(M.columns(), M.rows)
    return IntMatrix.from_columns(rows, M.rows)


def reduce_mod_lattice(v: Sequence[int], hnf: Sequence[Sequence[int]]) -> tuple[int, ...]:
    """Canonical representative of ``v`` modulo a lattice given in row HNF."""
    v = list(v)
    for row in hnf:
        c = next(i for i, a in enumerate(row) if a)
        q = v[c] // row[c]
        if q:
            v = [a - q * b for a, b in zip(v, row)]
    return tuple(v)


# ---------------------------------------------------------------------------
# Subquotients of lattices
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Subquotient:
    """The group ``span(K) / span(I)`` with lifts and a projection.

    ``lifts`` are ambient integer vectors for the canonical generators, free
    generators first and then one per torsion coefficient (in order).
    """

    group: AbelianGroup
    lifts: tuple[tuple[int, ...], ...]
    numerator: IntMatrix  # basis columns of span(K)
    denominator: IntMatrix  # basis columns of span(I)
    _coord: IntMatrix = field(repr=False)  # rows of P picking canonical coordinates
    _orders: tuple[int, ...] = field(repr=False)  # 0 for free coordinates

    @property
    def ambient_dim(self) -> int:
        return self.numerator.rows

    def contains(self, v: Sequence[int]) -> bool:
        return solve(self.numerator, v) is not None

    def is_boundary(self, v: Sequence[int]) -> bool:
        return solve(self.denominator, v) is not None

    def project(self, v: Sequence[int]) -> tuple[int, ...]:
        """Coordinates of the class of ``v`` (free entries, then torsion residues)."""
        a = solve(self.numerator, v)
        if a is None:
            raise SubquotientError("vector is not in the numerator lattice")
        b = self._coord.apply(a)
        return tuple(x % o if o else x for x, o in zip(b, self._orders))

    def lift(self, coords: Sequence[int]) -> tuple[int, ...]:
        out = [0] * self.ambient_dim
        for c, l in zip(coords, self.lifts):
            if c:
                out = [a + c * b for a, b in zip(out, l)]
        return tuple(out)


def subquotient(K: IntMatrix, I: IntMatrix) -> Subquotient:
    """Compute ``colspan(K) / colspan(I)``.

    Raises :class:`SubquotientError` if ``colspan(I)`` is not inside
    ``colspan(K)`` -- for page turns that means ``d o d != 0``.
    """
    n = K.rows
    if I.rows != n:
        raise ValueError("K and I live in different ambient lattices")
    Kb = column_span_basis(K)
    Ib = column_span_basis(I) if I.cols else IntMatrix.zeros(n, 0)
    k = Kb.cols
    coeffs = []
    for col in Ib.columns():
        a = solve(Kb, col)
        if a is None:
            raise SubquotientError("image not contained in kernel")
        coeffs.append(a)
    C = IntMatrix.from_columns(coeffs, k)
    s = _smith(C)
    diag = s.diagonal + [0] * (k - len(s.diagonal))
    free_idx = [i for i, d in enumerate(diag) if d == 0]
    tors_idx = sorted((i for i, d in enumerate(diag) if d > 1), key=lambda i: diag[i])
    order = free_idx + tors_idx
    lifts = tuple(Kb.apply(s.U.column(i)) for i in order)
    coord = IntMatrix.from_rows([s.P.entries[i] for i in order], k)
    orders = tuple(diag[i] for i in order)
    group = AbelianGroup(len(free_idx), tuple(diag[i] for i in tors_idx))
    return Subquotient(group, lifts, Kb, Ib, coord, orders)


def preimage(D: IntMatrix, target: IntMatrix) -> IntMatrix:
    """Basis of ``{v : D v in colspan(target)}`` as columns."""
    m = D.rows
    t = target.cols
    A = IntMatrix.from_rows(
        [list(D.entries[i]) + [-x for x in target.entries[i]] for i in range(m)], D.cols + t
    )
    ker = kernel_basis(A)
    cols = [c[: D.cols] for c in ker.columns()]
    return column_span_basis(IntMatrix.from_columns(cols, D.cols)) if cols else IntMatrix.zeros(D.cols, 0)


# ---------------------------------------------------------------------------
# Rational helpers (coefficient field Q)
# ---------------------------------------------------------------------------


def rref(rows: Sequence[Sequence], ncols: int) -> tuple[list[list[Fraction]], list[int]]:
    """Reduced row echelon form over Q; returns nonzero rows and pivot columns."""
    A = [[Fraction(x) for x in r] for r in rows]
    pivots: list[int] = []
    r = 0
    for c in range(ncols):
        p = next((i for i in range(r, len(A)) if A[i][c] != 0), None)
        if p is None:
            continue
        A[r], A[p] = A[p], A[r]
        inv = 1 / A[r][c]
        A[r] = [x * inv for x in A[r]]
        for i in range(len(A)):
            if i != r and A[i][c] != 0:
                f = A[i][c]
                A[i] = [a - f * b for a, b in zip(A[i], A[r])]
        pivots.append(c)
        r += 1
    return A[:r], pivots


def rational_rank(M: IntMatrix) -> int:
    return len(rref(M.entries, M.cols)[1])


def rational_nullspace(rows: Sequence[Sequence], ncols: int) -> list[list[Fraction]]:
    R, piv = rref(rows, ncols)
    free = [c for c in range(ncols) if c not in piv]
    out = []
    for f in free:
        v = [Fraction(0)] * ncols
        v[f] = Fraction(1)
        for row, pc in zip(R, piv):
            v[pc] = -row[f]
        out.append(v)
    return out


@dataclass(frozen=True)
class RationalSubquotient:
    """``span(K) / span(I)`` over Q, with a complement basis as lifts."""

    group: AbelianGroup
    lifts: tuple[tuple[Fraction, ...], ...]
    numerator: tuple[tuple[Fraction, ...], ...]
    denominator: tuple[tuple[Fraction, ...], ...]
    ambient_dim: int

    def _solve(self, basis, v):
        n = self.ambient_dim
        cols = list(basis)
        rows = [[c[i] for c in cols] + [Fraction(v[i])] for i in range(n)]
        R, piv = rref(rows, len(cols) + 1)
        if len(cols) in piv:
            return None
        x = [Fraction(0)] * len(cols)
        for row, pc in zip(R, piv):
            x[pc] = row[-1]
        return x

    def contains(self, v) -> bool:
        return self._solve(self.numerator, v) is not None

    def is_boundary(self, v) -> bool:
        return self._solve(self.denominator, v) is not None

    def project(self, v) -> tuple[Fraction, ...]:
        x = self._solve(tuple(self.lifts) + tuple(self.denominator), v)
        if x is None:
            raise SubquotientError("vector is not in the numerator subspace")
        return tuple(x[: len(self.lifts)])

    def lift(self, coords) -> tuple[Fraction, ...]:
        out = [Fraction(0)] * self.ambient_dim
        for c, l in zip(coords, self.lifts):
            out = [a + c * b for a, b in zip(out, l)]
        return tuple(out)


def rational_span_basis(vectors: Sequence[Sequence], n: int) -> list[tuple[Fraction, ...]]:
    R, _ = rref(vectors, n)
    return [tuple(r) for r in R]


def rational_subquotient(K: Sequence[Sequence], I: Sequence[Sequence], n: int) -> RationalSubquotient:
    Kb = rational_span_basis(K, n)
    Ib = rational_span_basis(I, n)
    # I must lie in span(K)
    for v in Ib:
        if len(rref(list(Kb) + [v], n)[1]) != len(Kb):
            raise SubquotientError("image not contained in kernel")
    # complement: extend Ib by those Kb vectors that raise the rank
    lifts, cur = [], list(Ib)
    for v in Kb:
        if len(rref(cur + [v], n)[1]) > len(cur):
            cur.append(v)
            lifts.append(v)
    group = AbelianGroup(len(lifts))
    return RationalSubquotient(group, tuple(lifts), tuple(Kb), tuple(Ib), n)


def rational_preimage(D: Sequence[Sequence], src_dim: int, target: Sequence[Sequence], tgt_dim: int):
    """Basis of ``{v : D v in span(target)}`` over Q (D given as rows)."""
    rows = [list(D[i]) + [-t[i] for t in target] for i in range(tgt_dim)]
    ker = rational_nullspace(rows, src_dim + len(target))
    return rational_span_basis([k[:src_dim] for k in ker], src_dim)
