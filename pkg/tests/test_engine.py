import pytest

from loophom.algebra import EXTERIOR, POLYNOMIAL, AlgebraPresentation, Generator, Window, trivial_presentation
from loophom.engine import (
    Cell,
    DifferentialError,
    Page,
    UncertifiedCell,
    WindowTooSmall,
    advance,
    build_page,
    check_page_graded_commutative,
    d_squared_violations,
    euler_conserved,
    extend_differential,
    extension_split_check,
    leibniz_violations,
    page_dump,
    run,
    total_degree_groups,
    turn_page,
    verify_presentation,
    zero_differential,
)
from loophom.linalg import AbelianGroup, IntMatrix, subquotient
from loophom.spaces import (
    SpaceTag,
    closed_form_assignment,
    closed_form_presentation,
    install_known_differentials,
    loop_homology_E2,
    loop_pipeline,
)

PRESETS = ["s^n:odd:3", "s^n:odd:5", "s^n:odd:7", "s^n:even:2", "s^n:even:4", "s^n:even:6",
           "cp^n:1", "cp^n:2", "cp^n:3", "cp^n:4"]


def test_odd_sphere_e2_lattice():
    n = 5
    page = loop_homology_E2(SpaceTag.parse(f"s^n:odd:{n}"), max_degree=20)
    for (p, q), cell in page.cells.items():
        expected = 1 if p in (0, -n) and q % (n - 1) == 0 else 0
        assert cell.group == AbelianGroup(expected)


def test_trivial_presentation_page():
    page = build_page(trivial_presentation(), Window(-1, 1, -1, 1))
    nonzero = {b: c.group for b, c in page.cells.items() if not c.group.is_trivial()}
    assert nonzero == {(0, 0): AbelianGroup(1)}


def test_empty_window():
    P = AlgebraPresentation([Generator("x", (-2, 0), EXTERIOR)])
    page = build_page(P, Window(0, -1, 0, 0))
    assert page.cells == {}
    einf, report = run(page, {})
    assert einf.cells == {} and report.nonzero_pages == []


def test_zero_differential_is_identity():
    page = loop_homology_E2(SpaceTag.parse("cp^n:2"), max_degree=10)
    nxt = turn_page(page, extend_differential({}, page))
    assert nxt.r == 3
    assert all(nxt.cells[b] is page.cells[b] for b in page.cells)


def test_even_sphere_leibniz_alternation():
    page = loop_homology_E2(SpaceTag.parse("s^n:even:2"), max_degree=12)
    A = page.algebra
    d = extend_differential({"y": -2 * A.parse("x*y^2")}, page)
    assert d(A.parse("y^2")).is_zero()
    assert d(A.parse("y^3")) == -2 * A.parse("x*y^4")


def test_wrong_target_bidegree():
    page = loop_homology_E2(SpaceTag.parse("s^n:even:2"), max_degree=6)
    with pytest.raises(DifferentialError, match="wrong target bidegree"):
        extend_differential({"y": page.algebra.parse("x*y")}, page)


def test_permanent_cycle_with_image_rejected():
    P = AlgebraPresentation([Generator("a", (-2, 1), EXTERIOR), Generator("c", (0, 0), EXTERIOR)])
    page = build_page(P, Window(-2, 0, 0, 1), permanent_cycles=["c"])
    with pytest.raises(DifferentialError, match="permanent"):
        extend_differential({"c": P.gen("a")}, page)


def test_d_squared_witness():
    P = AlgebraPresentation(
        [Generator("a", (-4, 2), EXTERIOR), Generator("b", (-2, 1), EXTERIOR), Generator("c", (0, 0), EXTERIOR)]
    )
    page = build_page(P, Window(-6, 0, 0, 3))
    with pytest.raises(DifferentialError, match="d-squared nonzero on c"):
        extend_differential({"c": P.gen("b"), "b": P.gen("a")}, page)


def test_relations_must_be_preserved():
    gens = [Generator("x", (-2, 0), EXTERIOR), Generator("u", (0, 1), EXTERIOR), Generator("w", (0, 2), POLYNOMIAL)]
    free = build_page(AlgebraPresentation(gens), Window(-2, 0, 0, 6))
    d = extend_differential({"u": free.algebra.parse("x*w")}, free)
    assert d(free.algebra.parse("u*w")) == free.algebra.parse("x*w^2")
    P = AlgebraPresentation(gens, relations=["u*w"])
    page = build_page(P, Window(-2, 0, 0, 6))
    with pytest.raises(DifferentialError, match="relations"):
        extend_differential({"u": P.parse("x*w")}, page)


@pytest.mark.parametrize("n", [2, 4, 6])
def test_even_sphere_page_torsion(n):
    res = loop_pipeline(SpaceTag.parse(f"s^n:even:{n}"), 30)
    assert res.report.nonzero_pages == [n]
    for m in range(1, 4):
        b = (-n, 2 * m * (n - 1))
        if b in res.einf.cells and res.einf.cells[b] is not None:
            assert res.einf.group(b) == AbelianGroup(0, (2,))


@pytest.mark.parametrize("n", [1, 2, 3, 4])
def test_cp_page_torsion(n):
    res = loop_pipeline(SpaceTag.parse(f"cp^n:{n}"), 30)
    assert res.report.nonzero_pages == [2 * n]
    assert res.einf.group((-2 * n, 2 * n)) == AbelianGroup(0, (n + 1,))


def test_odd_sphere_collapses():
    res = loop_pipeline(SpaceTag.parse("s^n:odd:3"), 30)
    assert res.report.nonzero_pages == []
    assert all(res.einf.cells[b] is res.e2.cells[b] for b in res.e2.cells)


def test_uncertified_cells_refused():
    res = loop_pipeline(SpaceTag.parse("s^n:even:2"), 10)
    with pytest.raises(UncertifiedCell, match="uncertified cell"):
        total_degree_groups(res.einf, [40])


def test_unbounded_filtration_refused():
    P = AlgebraPresentation([Generator("x", (-2, 0), POLYNOMIAL)])
    with pytest.raises(WindowTooSmall):
        run(build_page(P, Window(-4, 0, 0, 0)), {})


def _synthetic_page(lower, upper):
    P = AlgebraPresentation([Generator("x", (-2, 0), EXTERIOR), Generator("y", (0, 1), POLYNOMIAL)])
    cells = {}
    for b in Window(-2, 0, 0, 4).bidegrees():
        basis = P.component(b).basis
        n = len(basis)
        K = IntMatrix.identity(n)
        order = {(-2, 3): lower, (0, 1): upper}.get(b)
        I = IntMatrix.from_rows([[order]]) if order else IntMatrix.zeros(n, 0)
        cells[b] = Cell(b, basis, subquotient(K, I))
    return Page(3, P, Window(-2, 0, 0, 4), "homological", cells)


def test_extension_split_check_synthetic():
    ok, report = extension_split_check(_synthetic_page(2, 2), 1)
    assert not ok and report["blocking"] == [{"bidegree": (0, 1), "group": "Z/2"}]
    assert extension_split_check(_synthetic_page(2, None), 1)[0]
    assert extension_split_check(_synthetic_page(None, None), 2)[0]


@pytest.mark.parametrize("tag", PRESETS)
def test_every_antidiagonal_splits(tag):
    res = loop_pipeline(SpaceTag.parse(tag), 30)
    for i in res.groups():
        assert extension_split_check(res.einf, i)[0]


@pytest.mark.parametrize("tag", PRESETS)
def test_d_squared_and_leibniz_exhaustive(tag):
    s = SpaceTag.parse(tag)
    res = loop_pipeline(s, 30)
    W = Window(-s.dim, 0, 0, 30 + s.dim)
    page = res.e2
    for r in range(2, res.report.last_page):
        d = extend_differential(res.schedule.get(r, {}), page)
        assert leibniz_violations(d, W) == []
        assert d_squared_violations(d, W) == []
        page = turn_page(page, d)


@pytest.mark.parametrize("tag", PRESETS)
def test_euler_conservation(tag):
    res = loop_pipeline(SpaceTag.parse(tag), 30)
    page = res.e2
    for r in range(2, res.report.last_page):
        d = extend_differential(res.schedule.get(r, {}), page)
        nxt = turn_page(page, d)
        ok, bad = euler_conserved(page, nxt)
        assert ok, bad
        page = nxt


@pytest.mark.parametrize("tag", PRESETS)
def test_rational_mode_ranks(tag):
    s = SpaceTag.parse(tag)
    z = loop_pipeline(s, 30).groups()
    q = loop_pipeline(s, 30, "Q").groups()
    for i in z:
        assert q[i].is_free() and q[i].free_rank == z[i].free_rank


@pytest.mark.parametrize("tag", ["s^n:even:2", "s^n:even:4", "cp^n:2", "cp^n:3"])
def test_sign_independence(tag):
    s = SpaceTag.parse(tag)
    assert loop_pipeline(s, 30, "Z", 1).groups() == loop_pipeline(s, 30, "Z", -1).groups()


def test_obstruction_to_collapse():
    s = SpaceTag.parse("s^n:even:2")
    e2 = loop_homology_E2(s, max_degree=12)
    collapsed, _ = run(e2, {})
    assert check_page_graded_commutative(collapsed) == (False, ("y", "y"))
    einf, _ = run(e2, install_known_differentials(s, e2.algebra))
    assert check_page_graded_commutative(einf) == (True, None)


@pytest.mark.parametrize("n", [2, 4])
def test_presentation_without_torsion_relation_fails(n):
    s = SpaceTag.parse(f"s^n:even:{n}")
    res = loop_pipeline(s, 30)
    good = closed_form_presentation(s)
    bad = good.with_relations([r for r in good.relations if len(r) == 1 and 2 not in r.values()])
    ok, problems = verify_presentation(res.einf, bad, closed_form_assignment(s, res.einf.algebra))
    assert not ok
    assert any(p.startswith("rank mismatch") and f"total degree {-n + 2 * (n - 1)})" in p for p in problems)


def test_presentation_failure_kinds():
    s = SpaceTag.parse("cp^n:2")
    res = loop_pipeline(s, 20)
    A = res.einf.algebra
    cand = closed_form_presentation(s)
    wrong = cand.with_relations(list(cand.relations) + ["x*y"])
    ok, problems = verify_presentation(res.einf, wrong, closed_form_assignment(s, A))
    assert not ok and any(p.startswith("relation fails") for p in problems)
    odd = SpaceTag.parse("s^n:odd:3")
    r3 = loop_pipeline(odd, 20)
    ok, problems = verify_presentation(
        r3.einf, closed_form_presentation(odd), {"x": r3.einf.algebra.gen("x"), "y": 2 * r3.einf.algebra.gen("y")}
    )
    assert not ok and any(p.startswith("not generated") for p in problems)


def test_page_dump_fields_and_determinism():
    s = SpaceTag.parse("s^n:even:2")
    e2 = loop_homology_E2(s, max_degree=6)
    d = extend_differential(install_known_differentials(s, e2.algebra)[2], e2)
    dump = page_dump(e2, d)
    assert list(dump) == ["page_index", "variance", "window", "cells", "differentials"]
    assert list(dump["cells"][0]) == ["p", "q", "free_rank", "torsion", "basis"]
    assert {"source": [0, 1], "target": [-2, 2], "entries": [[2]]} in dump["differentials"]
    assert page_dump(e2, d) == dump


def test_advance_and_zero_differential():
    page = loop_homology_E2(SpaceTag.parse("cp^n:2"), max_degree=8)
    p4 = advance(page, 4)
    assert p4.r == 4 and zero_differential(p4).is_zero
    with pytest.raises(ValueError):
        advance(p4, 3)
