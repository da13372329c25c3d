"""Exact Gaussian engine: covariances, conditioning, and identities."""

from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from tlg import fixtures as fx
from tlg._plan import SampleGrid
from tlg.core import Edge, TimeLikeGraph, build_tower, collapse, validate_tlg
from tlg.gauss import (
    TwoSidedWienerLaw, WienerLaw, ZeroVarianceError, build_field,
    cell_covariance_formula, check_time_markov, conditional_coeffs,
    covariance_inconsistency, export_covariance_csv, tower_invariance,
)

EA, EB = Edge(1, 2, 0), Edge(1, 2, 1)


def _cell_field(tk, tm, law=None, cell=None):
    g = cell or fx.single_cell()
    grid = SampleGrid.vertices_only(g).with_times({EA: [tk], EB: [tm]})
    return build_field(g, None, grid, law or TwoSidedWienerLaw()), g


# -- build_field / covariance ----------------------------------------------------

def test_wiener_variance_at_the_midpoint():
    g = fx.minimal()
    grid = SampleGrid.uniform(g, 0.5)
    f = build_field(g, None, grid)
    assert f.variance((Edge(0, 1), 0.5)) == pytest.approx(0.5, abs=1e-14)


def test_opposite_branch_midpoints_have_covariance_one_quarter():
    f, _ = _cell_field(0.5, 0.5)
    assert f.covariance((EA, 0.5), (EB, 0.5)) == pytest.approx(0.25,
                                                               abs=1e-14)


def test_opposite_branch_points_at_third_and_half_give_one_sixth():
    f, _ = _cell_field(1 / 3, 0.5)
    assert f.covariance((EA, 1 / 3), (EB, 0.5)) == pytest.approx(1 / 6,
                                                                 abs=1e-14)


def test_base_path_points_touch_only_base_basis_elements():
    g = fx.single_cell()
    tower = build_tower(g)
    grid = SampleGrid.uniform(g, 0.25)
    f = build_field(g, tower, grid)
    n_base = sum(len(grid.times(e)) - 1 for e in tower.base.edges()) + 1
    for key in f.keys()[:n_base]:
        i = f.resolve(key)
        assert not f.coeffs[i, n_base:].any()


def test_variance_along_base_path_equals_elapsed_time():
    g = fx.nonplanar_ncc()
    f = build_field(g)
    for v in g.vertices:
        assert f.variance(v.id) == pytest.approx(v.time, abs=1e-14)


def test_covariance_differs_between_graph_and_pruned_subgraph():
    g = fx.ncc_with_noncc_subgraph()
    full = build_field(g).covariance(2, 4)
    drop = {Edge(3, 6), Edge(2, 3), Edge(3, 4)}
    pruned = TimeLikeGraph([v for v in g.vertices if v.id != 3],
                           [e for e in g.edges if e not in drop],
                           mode="relaxed")
    assert validate_tlg(pruned).ok
    strict, pmap = collapse(pruned)
    grid = SampleGrid.vertices_only(strict).with_times(
        {pmap[2][0]: [pmap[2][1]], pmap[4][0]: [pmap[4][1]]})
    sub = build_field(strict, None, grid).covariance(pmap[2], pmap[4])
    assert full == pytest.approx(2 / 11, abs=1e-12)
    assert abs(full - sub) > 1e-6


# -- cell covariance closed form -----------------------------------------------------

def test_cell_formula_values():
    assert cell_covariance_formula(0, Fraction(1, 3), Fraction(1, 2), 1) \
        == Fraction(1, 6)
    assert cell_covariance_formula(0.0, 0.25, 0.7, 0.7) == 0.25
    assert cell_covariance_formula(0, 0.5, 0.5, 1) == 0.25


def test_cell_formula_guards():
    with pytest.raises(ZeroDivisionError):
        cell_covariance_formula(0.3, 0.3, 0.3, 0.3)
    with pytest.raises(Exception):
        cell_covariance_formula(0.0, 1.5, 0.5, 1.0)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2 ** 32 - 1))
def test_engine_matches_cell_formula_on_random_cells(seed):
    rng = np.random.default_rng(seed)
    ti, tj, tn, tt = np.sort(rng.uniform(0.01, 1.0, 4))
    if tn - tj < 1e-3:
        tn = tj + 1e-3
        tt = tn + 0.1
    tk, tm = rng.uniform(tj, tn, 2)
    g = fx.stemmed_cell(ti, tj, tn, tt)
    grid = SampleGrid.vertices_only(g).with_times({EA: [tk], EB: [tm]})
    f = build_field(g, None, grid, WienerLaw(origin=0.0))
    assert f.covariance((EA, tk), (EB, tm)) == pytest.approx(
        cell_covariance_formula(tj, tk, tm, tn), abs=1e-12)


def test_degenerate_cell_reduces_to_min():
    # when one branch point sits at the cell end the formula collapses to
    # min of the two times
    assert cell_covariance_formula(0, 1, 0.5, 1) == 0.5


# -- inconsistency demonstration ------------------------------------------------------

def test_double_cell_covariance_values_are_incompatible():
    a, b = covariance_inconsistency()
    assert (a, b) == (Fraction(11, 21), Fraction(1, 2))
    assert abs(a - b) == Fraction(1, 42)


def test_single_cell_has_a_unique_forward_minimal_cell_value():
    # with only one cell there is a single formula value per end: no
    # inconsistency is possible
    g = fx.single_cell()
    from tlg.core import find_cells
    cells = [c for c in find_cells(g) if c.forward_minimal]
    assert len(cells) == 1


# -- conditioning -----------------------------------------------------------------------

def test_bridge_midpoint_conditional_weights():
    # under a law with positive variance at both cell ends the midpoint is
    # a plain Brownian-bridge average of the endpoints
    f, _ = _cell_field(0.5, 0.5, law=WienerLaw(origin=-0.5))
    w, resid = conditional_coeffs(f, (EA, 0.5), [1, 2])
    assert np.allclose(w, [0.5, 0.5], atol=1e-12)
    assert resid == pytest.approx(0.25, abs=1e-12)


def test_conditioning_on_itself_is_the_identity():
    f, _ = _cell_field(0.5, 0.5)
    w, resid = conditional_coeffs(f, (EA, 0.5), [(EA, 0.5)])
    assert np.allclose(w, [1.0], atol=1e-12)
    assert resid == pytest.approx(0.0, abs=1e-12)


def test_zero_variance_conditioner_gets_weight_zero():
    f, _ = _cell_field(0.5, 0.5)
    # vertex 1 sits at time 0: pinned to 0 under the two-sided law
    w, resid = conditional_coeffs(f, (EA, 0.5), [1, 2])
    assert f.variance(1) == pytest.approx(0.0, abs=1e-14)
    assert np.allclose(w, [0.0, 0.5], atol=1e-12)
    assert resid == pytest.approx(0.25, abs=1e-12)


# -- tower invariance ---------------------------------------------------------------------

def test_tower_order_does_not_change_the_covariance():
    from tlg.core import random_towers
    rng = np.random.default_rng(3)
    g = fx.ncc_with_noncc_subgraph()
    towers = random_towers(g, 5, rng)
    assert len(towers) == 5
    assert tower_invariance(g, towers).max_diff <= 1e-10


def test_same_tower_twice_gives_zero_difference():
    g = fx.minimal()
    t = build_tower(g)
    assert tower_invariance(g, [t, t]).max_diff == 0.0


def test_two_towers_on_the_chorded_spine_agree():
    from tlg.core import random_towers
    rng = np.random.default_rng(4)
    g = fx.nonplanar_ncc()
    towers = random_towers(g, 2, rng)
    assert len(towers) == 2
    assert tower_invariance(g, towers).max_diff <= 1e-10


# -- structural identities ----------------------------------------------------------------

def test_bridge_consistency_on_one_edge():
    # an interior grid point r between s and t must carry the law's own
    # bridge covariance with the endpoint
    g = fx.minimal()
    e = Edge(0, 1)
    grid = SampleGrid(g, {e: (0.0, 0.3, 0.8, 1.0)})
    f = build_field(g, None, grid)
    law = WienerLaw()
    s, r, t = 0.3, 0.8, 1.0
    # condition cov(X(r), X(t)) on nothing: both are law points
    assert f.covariance((e, r), (e, t)) == pytest.approx(law.cov(r, t),
                                                         abs=1e-12)
    assert f.covariance((e, s), (e, r)) == pytest.approx(law.cov(s, r),
                                                         abs=1e-12)


def test_every_full_path_carries_the_law():
    from tlg.core import full_time_paths
    g = fx.nonplanar_ncc()
    f = build_field(g)
    law = WienerLaw(origin=0.0)
    for p in full_time_paths(g):
        for a in p.vertices:
            for b in p.vertices:
                assert f.covariance(a, b) == pytest.approx(
                    law.cov(g.time(a), g.time(b)), abs=1e-12)


def test_two_sided_law_pins_time_zero_and_splits_the_axis():
    law = TwoSidedWienerLaw()
    assert law.cov(0.0, 5.0) == 0.0
    assert law.cov(-2.0, 3.0) == 0.0
    assert law.cov(-2.0, -3.0) == 2.0
    assert law.cov(1.5, 2.5) == 1.5


# -- time-Markov factorization ----------------------------------------------------------

def test_base_path_midpoint_is_time_markov():
    g = fx.minimal()
    grid = SampleGrid.uniform(g, 0.25)
    f = build_field(g, None, grid)
    assert check_time_markov(f, (Edge(0, 1), 0.5))


def test_every_vertex_of_the_chorded_spine_is_time_markov():
    g = fx.nonplanar_ncc()
    f = build_field(g)
    for v in g.vertices:
        if f.variance(v.id) > 1e-14:
            assert check_time_markov(f, v.id)


def test_corrupted_field_fails_the_factorization():
    f = build_field(fx.nonplanar_ncc())
    f.coeffs[4, 2] += 0.1
    assert not check_time_markov(f, 4)


def test_zero_variance_point_is_rejected():
    f = build_field(fx.minimal())
    with pytest.raises(ZeroVarianceError):
        check_time_markov(f, 0)


# -- exports ----------------------------------------------------------------------------

def test_covariance_csv_export(tmp_path):
    f = build_field(fx.nonplanar_ncc())
    out = tmp_path / "cov.csv"
    export_covariance_csv(f, out)
    lines = out.read_text().strip().splitlines()
    assert lines[0].startswith("point,")
    assert len(lines) == 1 + len(f.keys())
