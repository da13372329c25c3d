"""Bundled example graphs used throughout the tests and documentation."""

from __future__ import annotations

import json
from importlib import resources

from .core import TimeLikeGraph, TimePath, Vertex, Edge


def _load(name: str) -> TimeLikeGraph:
    text = resources.files("tlg.data").joinpath(name + ".json").read_text()
    return TimeLikeGraph.from_json(json.loads(text))


def minimal() -> TimeLikeGraph:
    """Two vertices, one edge — the smallest valid TLG."""
    return TimeLikeGraph([Vertex(0, 0.0), Vertex(1, 1.0)], [Edge(0, 1)])


def parallel_pair() -> TimeLikeGraph:
    """Two vertices joined by a pair of parallel edges (one cell)."""
    return TimeLikeGraph([Vertex(0, 0.0), Vertex(1, 1.0)],
                         [Edge(0, 1, 0), Edge(0, 1, 1)])


def single_cell(t0: float = 0.0, t1: float = 1.0,
                stem: float = 0.5) -> TimeLikeGraph:
    """The smallest strict graph containing one simple cell: a pair of
    parallel edges spanning [t0, t1], with stems attached so the extremal
    vertices have degree 1.  Points inside the two branches are addressed
    as interior grid points of the slot-0 and slot-1 edges."""
    verts = [Vertex(0, t0 - stem), Vertex(1, t0), Vertex(2, t1),
             Vertex(3, t1 + stem)]
    edges = [Edge(0, 1), Edge(1, 2, 0), Edge(1, 2, 1), Edge(2, 3)]
    return TimeLikeGraph(verts, edges)


def stemmed_cell(t_init: float = 0.0, tj: float = 0.25, tn: float = 0.75,
                 t_term: float = 1.0) -> TimeLikeGraph:
    """A simple cell spanning [tj, tn] with stems to degree-1 extremal
    vertices at t_init and t_term."""
    verts = [Vertex(0, t_init), Vertex(1, tj), Vertex(2, tn),
             Vertex(3, t_term)]
    edges = [Edge(0, 1), Edge(1, 2, 0), Edge(1, 2, 1), Edge(2, 3)]
    return TimeLikeGraph(verts, edges)


def nonplanar_ncc() -> TimeLikeGraph:
    """An NCC graph on 8 vertices (times j/7) that is not planar: a spine
    0..7 plus the three chords 1->4, 2->5, 3->6."""
    return _load("nonplanar_ncc")


def double_cell_noncc() -> TimeLikeGraph:
    """The classic non-NCC graph: two interleaved minimal co-terminal cells
    make a consistent covariance assignment impossible."""
    return _load("double_cell_noncc")


def ncc_with_noncc_subgraph() -> TimeLikeGraph:
    """A 12-vertex NCC graph (times j/11) that contains the double-cell
    non-NCC graph as a subgraph; deleting edges 3->6, 2->3, 3->4 changes
    covariances."""
    return _load("ncc_with_noncc_subgraph")


def planar_chain(n_cells: int = 3) -> TimeLikeGraph:
    """A planar chain of n parallel-edge cells strung on a spine
    (hand-certified planar, hence NCC)."""
    n = 2 * n_cells + 2
    verts = [Vertex(i, float(i)) for i in range(n)]
    edges = [Edge(i, i + 1, 0) for i in range(n - 1)]
    edges += [Edge(2 * k + 1, 2 * k + 2, 1) for k in range(n_cells)]
    return TimeLikeGraph(verts, edges)
