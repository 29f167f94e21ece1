from fractions import Fraction as F

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from icrbc import dof
from icrbc.dof import (DofPoint, RegionSpec, achievable_dof, closed_form_region,
                       dof_region_lp, format_fraction, mat_dof, region_vertices,
                       scheme_gammas, tandon_bound, theorem1_distribution,
                       upper_bound_total)
from icrbc.errors import ActiveSetViolationError

from oracles import brute_force_vertices, region_constraints

gamma = st.fractions(min_value=0, max_value=1, max_denominator=30)


def feasible(point, gammas):
    A, b = region_constraints(gammas)
    return all(sum(a * x for a, x in zip(row, point)) <= rhs for row, rhs in zip(A, b))


def test_point_and_spec_validation():
    p = DofPoint((F(1, 2), 1, 0))
    assert p.sum == F(3, 2) and list(p) == [F(1, 2), 1, 0] and p[0] == F(1, 2)
    with pytest.raises(ValueError):
        DofPoint((F(3, 2), 0, 0))
    with pytest.raises(ValueError):
        RegionSpec((F(1, 2), -1))
    with pytest.raises(ValueError):
        RegionSpec(())
    assert RegionSpec((0.2, 0.4)).gammas == (F(1, 5), F(2, 5))


@pytest.mark.parametrize("K, expected", [(1, 1), (2, F(4, 3)), (3, F(9, 5)), (5, F(25, 9))])
def test_achievable_dof(K, expected):
    assert achievable_dof(K) == expected


def test_theorem1_distribution():
    assert theorem1_distribution(3) == (F(4, 15), F(6, 15), F(5, 15))
    assert theorem1_distribution(2) == (F(1, 6), F(1, 3), F(1, 2))
    for K in range(2, 101):
        assert sum(theorem1_distribution(K)) == 1
    with pytest.raises(ValueError):
        theorem1_distribution(1)


@pytest.mark.parametrize("K, expected", [(1, 1), (2, F(4, 3)), (3, F(18, 11))])
def test_mat_dof(K, expected):
    assert mat_dof(K) == expected


def test_tandon_bound():
    for K in range(1, 11):
        assert tandon_bound(K, K) == K
        assert tandon_bound(1, K) == 1
    assert tandon_bound(2, 3) == 2
    with pytest.raises(ValueError):
        tandon_bound(0, 3)


def test_upper_bound_total():
    assert upper_bound_total(RegionSpec((0, 0, 0))) == F(9, 5)
    assert upper_bound_total(RegionSpec((F(2, 5), F(1, 5), F(1, 5)))) == F(53, 25)
    for K in range(1, 20):
        assert upper_bound_total(RegionSpec((1,) * K)) == K == tandon_bound(K, K)


def test_dominance_over_delayed_only_scheme():
    # the two schemes coincide for two users and separate from three on
    assert achievable_dof(2) == mat_dof(2)
    for K in range(3, 51):
        assert achievable_dof(K) > mat_dof(K)


def test_bound_consistency_at_scheme_gammas():
    for K in range(2, 51):
        g = scheme_gammas(K)
        assert g[0] == F(K - 1, 2 * K - 1)
        assert all(x == F(K - 2, 2 * K - 1) for x in g[1:])
        assert achievable_dof(K) <= upper_bound_total(RegionSpec(g))


def test_lp_examples():
    assert tuple(dof_region_lp(F(2, 5), F(1, 5), F(1, 5))) == (F(21, 25), F(16, 25), F(16, 25))
    assert [float(x) for x in dof_region_lp(F(2, 5), F(1, 5), F(1, 5))] == [0.84, 0.64, 0.64]
    assert tuple(dof_region_lp(1, 1, 1)) == (1, 1, 1)
    p = dof_region_lp(1, 0, 0)
    assert tuple(p) == (1, F(1, 2), F(1, 2)) and p.sum == 2


def test_lp_tie_break_is_lexicographic():
    # gamma = 0 has several optimal vertices on the sum face; the largest
    # in lexicographic order wins
    best = dof_region_lp(0, 0, 0)
    optimal = [v for v in brute_force_vertices((0, 0, 0))
               if sum(v) == max(sum(w) for w in brute_force_vertices((0, 0, 0)))]
    assert tuple(best) == max(optimal)


def test_closed_form_examples():
    assert tuple(closed_form_region(F(2, 5), F(1, 5), F(1, 5))) == (F(21, 25), F(16, 25), F(16, 25))
    assert tuple(closed_form_region(F(1, 3), F(1, 3), F(1, 3))) == (F(11, 15),) * 3
    assert tuple(dof_region_lp(F(1, 3), F(1, 3), F(1, 3))) == (F(11, 15),) * 3
    with pytest.raises(ActiveSetViolationError):
        closed_form_region(1, 0, 0)


def test_vertices_at_zero_gamma():
    verts = {tuple(v) for v in region_vertices(0, 0, 0)}
    assert {(1, 0, 0), (0, 1, 0), (0, 0, 1), (F(3, 5),) * 3} <= verts
    assert verts == brute_force_vertices((0, 0, 0))


@settings(max_examples=150, deadline=None)
@given(g1=gamma, g2=gamma, g3=gamma)
def test_vertices_match_brute_force(g1, g2, g3):
    gs = (g1, g2, g3)
    verts = region_vertices(*gs)
    assert {tuple(v) for v in verts} == brute_force_vertices(gs)
    assert len(verts) == len({tuple(v) for v in verts})
    for v in verts:
        assert feasible(v, gs)


@settings(max_examples=150, deadline=None)
@given(g1=gamma, g2=gamma, g3=gamma)
def test_lp_is_feasible_and_optimal(g1, g2, g3):
    gs = (g1, g2, g3)
    best = dof_region_lp(*gs)
    assert feasible(best, gs)
    assert best.sum == max(sum(v) for v in brute_force_vertices(gs))
    try:
        cf = closed_form_region(*gs)
    except ActiveSetViolationError:
        return
    assert tuple(cf) == tuple(best)


def test_lp_against_scipy():
    linprog = pytest.importorskip("scipy.optimize").linprog
    rng = np.random.default_rng(0)
    for _ in range(200):
        gs = [F(int(k), 20) for k in rng.integers(0, 21, 3)]
        A, b = region_constraints(gs)
        res = linprog(-np.ones(3), A_ub=np.array(A, float), b_ub=np.array(b, float),
                      method="highs")
        assert res.status == 0
        assert float(dof_region_lp(*gs).sum) == pytest.approx(-res.fun, abs=1e-9)


def test_closed_form_agrees_with_lp_on_grid():
    grid = [F(k, 20) for k in range(21)]
    agree = 0
    for g1 in grid:
        for g2 in grid:
            for g3 in grid:
                try:
                    cf = closed_form_region(g1, g2, g3)
                except ActiveSetViolationError:
                    continue
                assert tuple(cf) == tuple(dof_region_lp(g1, g2, g3))
                agree += 1
    assert agree > 0


def test_polytope_vertices_generic():
    # unit cube: eight corners
    A = dof.REGION_A[3:]
    verts = dof.polytope_vertices(A, (1, 1, 1, 0, 0, 0))
    assert len(verts) == 8


def test_format_fraction():
    assert format_fraction(F(3, 5)) == "3/5"
    assert format_fraction(F(3)) == "3"
    assert format_fraction(F(-1, 2)) == "-1/2"
