import pytest

from loophom.algebra import Window
from loophom.engine import advance, extend_differential, zero_differential
from loophom.linalg import AbelianGroup
from loophom.naturality import (
    AbutmentConstraint,
    NoAdmissibleAssignment,
    UnderdeterminedError,
    brown_shih_differential,
    check_naturality,
    compare_up_to_sign,
    dual_loop_matrices,
    dualize_differential,
    induced_map,
    solve_by_abutment,
    solve_by_naturality,
    universal_example,
)
from loophom.spaces import (
    EVALUATION,
    PATH_OVER_DIAGONAL,
    FibrationTag,
    SpaceTag,
    fiber_duality,
    install_known_differentials,
    loop_homology_E2,
    serre_E2,
    serre_known_differentials,
)


def pages(n=2, q=6):
    s = SpaceTag.parse(f"s^n:even:{n}")
    up = advance(serre_E2(FibrationTag(PATH_OVER_DIAGONAL, s), Window(0, 2 * n, 0, q)), n)
    down = advance(serre_E2(FibrationTag(EVALUATION, s), Window(0, 2 * n, 0, q)), n)
    return up, down


def diagonal(up, down):
    D = down.algebra
    return induced_map({"x1": D.gen("x"), "x2": D.gen("x"), "z": D.gen("z"), "gamma": D.gen("gamma")}, up, down)


def test_diagonal_kills_the_product():
    up, down = pages()
    phi = diagonal(up, down)
    assert phi(up.algebra.parse("x1*x2")).is_zero()
    assert phi.matrices[(2, 0)] == [[1, 1]]


def test_identity_and_bottom_row_projection():
    _, down = pages()
    D = down.algebra
    ident = induced_map({g.name: D.gen(g.name) for g in D.generators}, down, down)
    for b, M in ident.matrices.items():
        assert M == [[int(i == j) for j in range(len(M))] for i in range(len(M))]
    proj = induced_map({"x": D.gen("x"), "z": D.zero(), "gamma": D.zero()}, down, down)
    for (p, q), M in proj.matrices.items():
        assert any(any(r) for r in M) == (q == 0)


def test_relation_must_be_respected():
    up, down = pages()
    U = up.algebra
    images = {"x": U.parse("x1 + x2"), "z": U.gen("z"), "gamma": U.gen("gamma")}
    with pytest.raises(ValueError, match="relation|multiplicative"):
        induced_map(images, down, up)


def test_missing_and_misplaced_images():
    up, down = pages()
    D = down.algebra
    with pytest.raises(ValueError, match="no image"):
        induced_map({"x1": D.gen("x")}, up, down)
    with pytest.raises(ValueError, match="bidegree"):
        induced_map({"x1": D.gen("z"), "x2": D.gen("x"), "z": D.gen("z"), "gamma": D.gen("gamma")}, up, down)


def test_check_naturality_cases():
    up, down = pages()
    phi = diagonal(up, down)
    d_up = extend_differential(serre_known_differentials(FibrationTag(PATH_OVER_DIAGONAL, SpaceTag.parse("s^n:even:2")), up.algebra)[2], up)
    d_down = extend_differential({"gamma": 2 * down.algebra.parse("x*z")}, down)
    assert check_naturality(phi, d_up, d_down)["ok"]
    assert check_naturality(phi, zero_differential(up), zero_differential(down))["ok"]
    d_down.matrices[(0, 2)] = [[3]]
    rep = check_naturality(phi, d_up, d_down)
    assert not rep["ok"] and rep["violations"][0]["bidegree"] == (0, 2)


def test_solve_by_naturality():
    up, down = pages()
    phi = diagonal(up, down)
    d_up = extend_differential({"z": up.algebra.parse("x1 - x2"), "gamma": up.algebra.parse("x1*z + x2*z")}, up)
    assert solve_by_naturality(phi, "gamma", d_up) == 2 * down.algebra.parse("x*z")
    assert solve_by_naturality(phi, "gamma", zero_differential(up)).is_zero()
    D = down.algebra
    zero = induced_map({"x1": D.gen("x"), "x2": D.gen("x"), "z": D.zero(), "gamma": D.zero()}, up, down)
    with pytest.raises(UnderdeterminedError):
        solve_by_naturality(zero, "gamma", d_up)


def path_constraint(up, n):
    U = up.algebra
    return AbutmentConstraint(
        groups={0: AbelianGroup(1), n: AbelianGroup(1)},
        degree_range=(0, 2 * n),
        permanent=[U.gen("x1")],
        vanishing=[U.parse("x1 - x2")],
    )


@pytest.mark.parametrize("B", [2, 3])
def test_abutment_sign_pair(B):
    s = SpaceTag.parse("s^n:even:2")
    up = serre_E2(FibrationTag(PATH_OVER_DIAGONAL, s), Window(0, 4, 0, 6))
    found = solve_by_abutment(up, 2, path_constraint(up, 2), B)
    U = up.algebra
    assert {a["z"] for a in found} == {U.parse("x1 - x2"), -U.parse("x1 - x2")}
    assert {a["gamma"] for a in found} == {U.parse("x1*z + x2*z"), -U.parse("x1*z + x2*z")}
    flipped = {tuple(sorted((k, str(-v)) for k, v in a.items())) for a in found}
    assert flipped == {tuple(sorted((k, str(v)) for k, v in a.items())) for a in found}


def test_abutment_with_cross_section_forces_zero():
    s = SpaceTag.parse("s^n:odd:3")
    ev = serre_E2(FibrationTag(EVALUATION, s), Window(0, 3, 0, 6))
    ev.permanent_cycles = frozenset()
    found = solve_by_abutment(ev, 3, AbutmentConstraint(permanent=[ev.algebra.gen("x")]), 2)
    assert len(found) == 1 and all(v.is_zero() for v in found[0].values())


def test_abutment_equal_to_e2_admits_zero():
    s = SpaceTag.parse("s^n:even:2")
    up = serre_E2(FibrationTag(PATH_OVER_DIAGONAL, s), Window(0, 4, 0, 6))
    from loophom.engine import run, total_degree_groups

    groups = total_degree_groups(run(up, {})[0], range(0, 5))
    found = solve_by_abutment(up, 2, AbutmentConstraint(groups=groups, degree_range=(0, 4)), 1)
    assert any(all(v.is_zero() for v in a.values()) for a in found)


def test_abutment_without_solution():
    s = SpaceTag.parse("s^n:even:2")
    up = serre_E2(FibrationTag(PATH_OVER_DIAGONAL, s), Window(0, 4, 0, 6))
    with pytest.raises(NoAdmissibleAssignment):
        solve_by_abutment(up, 2, AbutmentConstraint(groups={}, degree_range=(0, 0)), 1)


@pytest.mark.parametrize("k", [1, 2, 3])
def test_brown_shih_alternation(k):
    assert [brown_shih_differential(k, j) for j in range(9)] == [0, -2, 0, -2, 0, -2, 0, -2, 0]


def test_dualize_differential():
    assert dualize_differential([[0, 0]]) == [[0], [0]]
    assert dualize_differential([[1, 0], [0, 1]]) == [[1, 0], [0, 1]]
    M = [[1, 2, 3], [4, 5, 6]]
    assert dualize_differential(dualize_differential(M)) == M


@pytest.mark.parametrize("n", [1, 2, 3, 4])
def test_cp_dualization_matches_schedule(n):
    s = SpaceTag.parse(f"cp^n:{n}")
    loop = advance(loop_homology_E2(s, max_degree=20), 2 * n)
    serre = advance(serre_E2(FibrationTag(EVALUATION, s), Window(0, 2 * n, 0, loop.window.q_max + 2 * n)), 2 * n)
    d_serre = extend_differential(serre_known_differentials(FibrationTag(EVALUATION, s), serre.algebra)[2 * n], serre)
    dual = dual_loop_matrices(loop, serre, d_serre, fiber_duality(s, serre.algebra))
    d_loop = extend_differential(install_known_differentials(s, loop.algebra)[2 * n], loop)
    assert compare_up_to_sign(dual, {b: d_loop.matrix(b) for b in dual}) == 1


@pytest.mark.parametrize("n", [2, 4, 6])
def test_three_routes_agree(n):
    rep = universal_example(n)
    assert rep["pass"]
    assert rep["downstairs"] == "2*x*z"
    assert rep["dual_sign"] == 1
