"""Graph model: validation, paths, cells, the NCC decision, and towers."""

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from tlg import fixtures as fx
from tlg.core import (
    CapExceededError, ConstructionStep, Edge, NotNCCError, TimeLikeGraph,
    TimePath, Tower, Vertex, build_tower, collapse, enumerate_strict_tlgs,
    find_cells, full_time_paths, has_two_disjoint_paths, is_ncc, load_tlg,
    dump_tlg, random_ncc_tlg, random_tlg, random_towers, reverse,
    classify_cell, validate_tlg, verify_tower,
)


# -- validation ---------------------------------------------------------------

def test_minimal_graph_is_valid():
    assert validate_tlg(fx.minimal()).ok


def test_spine_with_three_chords_is_valid():
    assert validate_tlg(fx.nonplanar_ncc()).ok


def test_removing_a_chord_breaks_strict_degrees():
    g = fx.nonplanar_ncc()
    edges = [e for e in g.edges if (e.src, e.dst) != (1, 4)]
    rep = validate_tlg(TimeLikeGraph(g.vertices, edges))
    assert not rep.ok
    text = str(rep)
    assert "1" in text and "4" in text  # both endpoints flagged


def test_dangling_edge_reported_not_raised():
    g = TimeLikeGraph([Vertex(0, 0.0), Vertex(1, 1.0)],
                      [Edge(0, 1), Edge(0, 9)])
    rep = validate_tlg(g)
    assert not rep.ok
    assert any("unknown vertex" in p for p in rep.problems)


def test_edge_between_equal_times_rejected():
    g = TimeLikeGraph([Vertex(0, 0.5), Vertex(1, 0.5)], [Edge(0, 1)])
    assert not validate_tlg(g).ok


def test_three_parallel_edges_rejected():
    g = TimeLikeGraph([Vertex(0, 0.0), Vertex(1, 1.0)],
                      [Edge(0, 1, 0), Edge(0, 1, 1), Edge(0, 1, 2)])
    assert not validate_tlg(g).ok


def test_relaxed_mode_permits_degree_two_chains():
    verts = [Vertex(0, 0.0), Vertex(1, 0.5), Vertex(2, 1.0)]
    g = TimeLikeGraph(verts, [Edge(0, 1), Edge(1, 2)], mode="relaxed")
    assert validate_tlg(g).ok
    strict, pmap = collapse(g)
    assert len(strict.vertices) == 2
    assert pmap[1] == (Edge(0, 2), 0.5)
    assert validate_tlg(strict).ok


# -- paths ----------------------------------------------------------------------

def test_minimal_graph_has_one_full_path():
    assert len(full_time_paths(fx.minimal())) == 1


def test_double_cell_graph_has_four_full_paths():
    assert len(full_time_paths(fx.double_cell_noncc())) == 4


def test_every_full_path_spans_the_extremal_vertices():
    g = fx.nonplanar_ncc()
    for p in full_time_paths(g):
        assert p.start == 0 and p.end == 7


def test_path_cap_is_enforced():
    with pytest.raises(CapExceededError):
        full_time_paths(fx.planar_chain(6), cap=3)


def test_timepath_slot_count_checked():
    with pytest.raises(ValueError):
        TimePath((0, 1, 2), (0,))


# -- cells ------------------------------------------------------------------------

def _pair_set(cells):
    return {tuple(sorted((c.path_a.vertices, c.path_b.vertices)))
            for c in cells}


def test_double_cell_graph_contains_the_two_known_cells():
    pairs = _pair_set(find_cells(fx.double_cell_noncc()))
    assert ((3, 4, 6), (3, 5, 6)) in pairs
    assert ((2, 4, 6), (2, 5, 6)) in pairs


def test_minimal_graph_has_no_cells():
    assert find_cells(fx.minimal()) == []


def test_parallel_pair_has_exactly_one_cell():
    cells = find_cells(fx.parallel_pair())
    assert len(cells) == 1
    assert cells[0].simple


def test_known_cell_is_simple_and_forward_minimal():
    g = fx.double_cell_noncc()
    cell = next(c for c in find_cells(g)
                if {c.path_a.vertices, c.path_b.vertices}
                == {(3, 4, 6), (3, 5, 6)})
    cell = classify_cell(g, cell)
    assert cell.simple and cell.forward_minimal


def test_outer_cell_is_not_forward_minimal():
    g = fx.ncc_with_noncc_subgraph()
    outer = [c for c in find_cells(g)
             if 2 in c.path_a.interior() + c.path_b.interior()
             and 9 in c.path_a.interior() + c.path_b.interior()]
    assert outer
    assert not any(c.forward_minimal for c in outer)


def test_minimal_cells_are_simple_on_all_fixtures():
    for g in (fx.double_cell_noncc(), fx.nonplanar_ncc(),
              fx.ncc_with_noncc_subgraph(), fx.planar_chain()):
        for c in find_cells(g):
            if c.forward_minimal or c.backward_minimal:
                assert c.simple


# -- NCC decision --------------------------------------------------------------------

def test_spine_with_chords_is_ncc():
    assert is_ncc(fx.nonplanar_ncc()).ncc


def test_double_cell_graph_is_not_ncc_with_the_expected_witness():
    verdict = is_ncc(fx.double_cell_noncc())
    assert not verdict.ncc
    assert _pair_set(verdict.witness) == {
        ((2, 4, 6), (2, 5, 6)), ((3, 4, 6), (3, 5, 6))}


def test_twelve_vertex_fixture_is_ncc():
    assert is_ncc(fx.ncc_with_noncc_subgraph()).ncc


def test_planar_fixtures_are_ncc():
    for g in (fx.minimal(), fx.parallel_pair(), fx.single_cell(),
              fx.planar_chain(2), fx.planar_chain(4)):
        assert is_ncc(g).ncc


def test_ncc_is_invariant_under_time_reversal():
    for g in (fx.nonplanar_ncc(), fx.double_cell_noncc(),
              fx.ncc_with_noncc_subgraph(), fx.planar_chain()):
        assert is_ncc(g).ncc == is_ncc(reverse(g)).ncc


# -- towers -----------------------------------------------------------------------

def test_handwritten_tower_for_the_twelve_vertex_fixture_verifies():
    g = fx.ncc_with_noncc_subgraph()
    tower = Tower(TimePath((0, 1, 4, 5, 6, 7, 10, 11)), (
        ConstructionStep((1, 2, 3, 4)),
        ConstructionStep((3, 6)),
        ConstructionStep((7, 8, 9, 10)),
        ConstructionStep((5, 8)),
        ConstructionStep((2, 9)),
    ))
    assert verify_tower(g, tower).ok


def test_minimal_graph_tower_is_the_base_alone():
    tower = build_tower(fx.minimal())
    assert tower.base.vertices == (0, 1)
    assert tower.steps == ()


def test_double_cell_graph_admits_no_tower():
    with pytest.raises(NotNCCError) as exc:
        build_tower(fx.double_cell_noncc())
    assert exc.value.witness is not None


def test_built_towers_verify_on_random_ncc_graphs():
    rng = np.random.default_rng(42)
    for _ in range(25):
        g, tower = random_ncc_tlg(rng, int(rng.integers(1, 6)))
        assert validate_tlg(g).ok
        assert verify_tower(g, tower).ok
        assert verify_tower(g, build_tower(g)).ok


def test_tower_reconstruction_covers_the_exact_edge_multiset():
    g = fx.nonplanar_ncc()
    tower = build_tower(g)
    built = set(tower.base.edges())
    for s in tower.steps:
        built |= set(s.edges())
    assert built == set(g.edges)


def test_step_attached_to_unbuilt_vertices_fails_at_that_step():
    # reversing the handwritten tower puts the chord (2, 9) first, before
    # the steps that create vertices 2 and 9
    g = fx.ncc_with_noncc_subgraph()
    tower = Tower(TimePath((0, 1, 4, 5, 6, 7, 10, 11)), (
        ConstructionStep((1, 2, 3, 4)),
        ConstructionStep((3, 6)),
        ConstructionStep((7, 8, 9, 10)),
        ConstructionStep((5, 8)),
        ConstructionStep((2, 9)),
    ))
    bad = Tower(tower.base, tuple(reversed(tower.steps)))
    rep = verify_tower(g, bad)
    assert not rep.ok
    assert any(p.startswith("step 0") for p in rep.problems)


def test_attaching_across_unbuilt_region_fails():
    # build the double-cell graph minus two branch edges, then try to add
    # one of them: its endpoints are interior but no built time path runs
    # through both, so the step is illegal.
    g = fx.double_cell_noncc()
    tower = Tower(TimePath((0, 1, 2, 4, 6, 7)), (
        ConstructionStep((1, 3, 5, 6)),
        ConstructionStep((2, 5)),
        ConstructionStep((3, 4)),
    ))
    rep = verify_tower(g, tower)
    assert not rep.ok
    assert any("step 1" in p and "no built time path" in p
               for p in rep.problems)


def test_tower_json_roundtrip():
    tower = build_tower(fx.ncc_with_noncc_subgraph())
    again = Tower.from_json(tower.to_json())
    assert again == tower


def test_random_towers_are_distinct_and_verify():
    rng = np.random.default_rng(7)
    g = fx.ncc_with_noncc_subgraph()
    towers = random_towers(g, 5, rng)
    assert len(towers) == 5
    keys = {(t.base.vertices, tuple(s.path for s in t.steps))
            for t in towers}
    assert len(keys) == 5
    for t in towers:
        assert verify_tower(g, t).ok


# -- deciders agree ------------------------------------------------------------------

def _tower_exists(g):
    try:
        build_tower(g)
        return True
    except NotNCCError:
        return False


def test_enumeration_counts_small_strict_graphs():
    counts = {n: sum(1 for _ in enumerate_strict_tlgs(n))
              for n in (2, 3, 4, 5, 6, 8)}
    # odd vertex counts are impossible (degree sum must be even)
    assert counts == {2: 1, 3: 0, 4: 1, 5: 0, 6: 3, 8: 31}


def test_deciders_agree_on_all_small_graphs():
    for n in (2, 4, 6, 8):
        for g in enumerate_strict_tlgs(n):
            assert bool(is_ncc(g)) == _tower_exists(g)


def test_deciders_agree_on_random_graphs():
    rng = np.random.default_rng(5)
    for _ in range(60):
        g = random_tlg(rng, int(rng.choice([6, 8, 10])))
        assert bool(is_ncc(g)) == _tower_exists(g)


def test_disjoint_path_flow_matches_cell_existence():
    for g in (fx.double_cell_noncc(), fx.nonplanar_ncc(),
              fx.ncc_with_noncc_subgraph()):
        pairs = {(c.start, c.end) for c in find_cells(g)}
        for a in g.vertices:
            for b in g.vertices:
                if a.time < b.time:
                    assert has_two_disjoint_paths(g, a.id, b.id) == \
                        ((a.id, b.id) in pairs)


# -- serialization --------------------------------------------------------------------

def test_graph_json_roundtrip(tmp_path):
    g = fx.ncc_with_noncc_subgraph()
    p = tmp_path / "g.json"
    dump_tlg(g, p)
    assert load_tlg(p) == g


# -- property tests --------------------------------------------------------------------

@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2 ** 32 - 1), st.integers(1, 4))
def test_random_ncc_graphs_are_valid_ncc_and_reversal_stable(seed, steps):
    rng = np.random.default_rng(seed)
    g, tower = random_ncc_tlg(rng, steps)
    assert validate_tlg(g).ok
    assert verify_tower(g, tower).ok
    assert is_ncc(g).ncc
    assert is_ncc(reverse(g)).ncc
