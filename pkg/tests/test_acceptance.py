"""End-to-end acceptance checks, one PASS/FAIL line per criterion."""

import random

from oracles import random_complex, random_matrix
from sympy import Matrix, ZZ
from sympy.matrices.normalforms import invariant_factors as sympy_invariants

from loophom.algebra import Window
from loophom.engine import (
    check_page_graded_commutative,
    d_squared_violations,
    euler_conserved,
    extend_differential,
    extension_split_check,
    leibniz_violations,
    run,
    turn_page,
    verify_presentation,
)
from loophom.linalg import AbelianGroup, IntMatrix, invariant_factors, kernel_basis, subquotient
from loophom.naturality import brown_shih_differential, universal_example
from loophom.spaces import (
    SpaceTag,
    closed_form_assignment,
    closed_form_groups,
    closed_form_presentation,
    install_known_differentials,
    loop_homology_E2,
    loop_pipeline,
    n2_extension_check,
)

TOP = 30
PRESETS = [f"s^n:odd:{n}" for n in (3, 5, 7)] + [f"s^n:even:{n}" for n in (2, 4, 6)] + [f"cp^n:{n}" for n in (1, 2, 3, 4)]


def monomial_ranks(n):
    """Ranks of Z[y] (x) E(x) with |y| = n - 1, |x| = -n, counted directly."""
    ranks = {}
    for m in range(TOP + n + 1):
        for d in (m * (n - 1), m * (n - 1) - n):
            ranks[d] = ranks.get(d, 0) + 1
    return ranks


def matches_closed_form(tag):
    s = SpaceTag.parse(tag)
    res = loop_pipeline(s, TOP)
    groups = res.groups()
    same = sorted(groups) == list(range(-s.dim, TOP + 1)) and all(
        groups[i] == closed_form_groups(s, i) for i in groups
    )
    ok, problems = verify_presentation(res.einf, closed_form_presentation(s), closed_form_assignment(s, res.einf.algebra))
    return same, ok, problems


def test_odd_spheres(criterion):
    bad = []
    for n in (3, 5, 7):
        groups = loop_pipeline(SpaceTag.parse(f"s^n:odd:{n}"), TOP).groups()
        ranks = monomial_ranks(n)
        bad += [(n, i) for i in range(-n, TOP + 1) if groups[i] != AbelianGroup(ranks.get(i, 0))]
    assert criterion("odd spheres n=3,5,7 equal Z[y] (x) E(x) on [-n, 30]", not bad, f"mismatches {bad[:3]}" if bad else "")


def test_even_spheres(criterion):
    results = {n: matches_closed_form(f"s^n:even:{n}") for n in (2, 4, 6)}
    ok = all(a and b for a, b, _ in results.values())
    assert criterion("even spheres n=2,4,6: closed-form groups and E(z) (x) Z[x,y]/(x^2, xz, 2xy) verified", ok)


def test_complex_projective(criterion):
    results = {n: matches_closed_form(f"cp^n:{n}") for n in (1, 2, 3, 4)}
    ok = all(a and b for a, b, _ in results.values())
    assert criterion("CP^n n=1..4: closed-form groups and E(w) (x) Z[x,y]/(x^(n+1), (n+1)x^n y, w x^n) verified", ok)


def test_cp1_equals_s2(criterion):
    a = loop_pipeline(SpaceTag.parse("cp^n:1"), TOP).groups()
    b = loop_pipeline(SpaceTag.parse("s^n:even:2"), TOP).groups()
    ok = sorted(a) == list(range(-2, TOP + 1)) and a == b
    assert criterion("CP^1 and S^2 give identical groups on [-2, 30]", ok)


def test_universal_example(criterion):
    rep = universal_example(2, B=2)
    dz = {"x1 - x2", "-x1 + x2"}
    ok = (
        set(rep["d_z"]) == dz
        and set(rep["d_gamma"]) == {"x1*z + x2*z", "-x1*z - x2*z"}
        and rep["downstairs"] in ("2*x*z", "-2*x*z")
        and rep["dual_sign"] in (1, -1)
        and rep["pass"]
    )
    detail = f"d(z) in {rep['d_z']}, d(gamma_1) in {rep['d_gamma']}, downstairs {rep['downstairs']}, dual sign {rep['dual_sign']}"
    assert criterion("universal example: abutment, naturality and dualization agree", ok, detail)


def test_brown_shih(criterion):
    table_ok = all(
        brown_shih_differential(k, j) == (-2 if j % 2 else 0) for k in (1, 2, 3) for j in range(9)
    )
    leibniz_ok = all(
        all(bs == lhs for _, bs, lhs in universal_example(2 * k)["brown_shih"]) for k in (1, 2, 3)
    )
    assert criterion("Brown-Shih -2/0 alternation matches the Leibniz extension of d(y) = -2xy^2", table_ok and leibniz_ok)


def test_obstruction(criterion):
    s = SpaceTag.parse("s^n:even:2")
    e2 = loop_homology_E2(s, max_degree=TOP)
    zero = check_page_graded_commutative(run(e2, {})[0])
    installed = check_page_graded_commutative(run(e2, install_known_differentials(s, e2.algebra))[0])
    ok = not zero[0] and "y" in zero[1] and installed == (True, None)
    assert criterion("zero schedule fails graded-commutativity, installed schedule passes", ok, f"witness {zero[1]}")


def test_property_suites(criterion):
    failures = []
    for tag in PRESETS:
        s = SpaceTag.parse(tag)
        res = loop_pipeline(s, TOP)
        W = Window(-s.dim, 0, 0, TOP + s.dim)
        page = res.e2
        for r in range(2, res.report.last_page):
            d = extend_differential(res.schedule.get(r, {}), page)
            if leibniz_violations(d, W) or d_squared_violations(d, W):
                failures.append(f"{tag} d_{r} algebra")
            nxt = turn_page(page, d)
            if not euler_conserved(page, nxt)[0]:
                failures.append(f"{tag} Euler at r={r}")
            page = nxt
        q = loop_pipeline(s, TOP, "Q").groups()
        z = res.groups()
        if any(not q[i].is_free() or q[i].free_rank != z[i].free_rank for i in z):
            failures.append(f"{tag} Q ranks")

    rng = random.Random(1)
    for _ in range(1000):
        rows, c = random_matrix(rng)
        oracle = [abs(int(x)) for x in sympy_invariants(Matrix(rows), domain=ZZ) if x]
        if invariant_factors(IntMatrix.from_rows(rows, c)) != oracle:
            failures.append(f"SNF {rows}")
    for _ in range(200):
        d1, d2, n1, n2 = random_complex(rng)
        H = subquotient(kernel_basis(IntMatrix.from_rows(d2, n2)), IntMatrix.from_rows(d1, n1))
        tors = tuple(abs(int(x)) for x in sympy_invariants(Matrix(d1), domain=ZZ) if x not in (0, 1, -1))
        free = (n2 - Matrix(d2).rank()) - Matrix(d1).rank()
        if H.group != AbelianGroup(free, tors):
            failures.append(f"subquotient {d1} {d2}")
    assert criterion("property suites: d^2, Leibniz, 1000 SNF, 200 subquotients, Euler, Q ranks", not failures, "; ".join(failures[:3]))


def test_extensions(criterion):
    blocked = []
    for tag in PRESETS:
        res = loop_pipeline(SpaceTag.parse(tag), TOP)
        blocked += [(tag, i) for i in res.groups() if not extension_split_check(res.einf, i)[0]]
    n2 = n2_extension_check(range(-2, 3))
    ok = not blocked and n2["pass"]
    assert criterion("extension_split_check on every anti-diagonal; n2_extension_check for c in [-2, 2]", ok, f"blocked {blocked[:3]}" if blocked else "")
