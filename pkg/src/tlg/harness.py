"""Harness conditional expectations via the embedded random walk.

For a natural harness on an NCC graph, the conditional expectation of an
edge-interior value given the values along a support path equals the
expected value of the process at the absorption point of a random walk:
one step from a point t between neighbors a < b goes up with probability
(t-a)/(b-a), support-path vertices absorb.  The walk distribution is
propagated level by level through the backward filtration in exact
rational arithmetic.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field as dfield
from fractions import Fraction
from typing import Optional

from .core import Edge, TimeLikeGraph, TimePath, TLGError


class SupportError(TLGError):
    pass


@dataclass
class SupportDecomposition:
    sigma_star: TimePath
    t_star: tuple                 # (edge, time)
    component_vertices: frozenset  # non-support vertices of the component
    component_edges: tuple
    is_tree: bool


@dataclass
class FiltrationLevels:
    W: list          # W[m]: vertex-id sets, m = 0 .. K-1
    G_edges: list    # edge sets of the shrinking subgraphs G_1 .. G_K
    descendants: list  # descendants[m]: {vertex in W[m] -> tuple of ids}

    @property
    def K(self) -> int:
        return len(self.W)


@dataclass
class AbsorptionDistribution:
    weights: dict    # point -> probability (Fraction or float)

    def __post_init__(self):
        total = sum(self.weights.values())
        if abs(float(total) - 1.0) > 1e-12:
            raise TLGError(f"probabilities sum to {total}, not 1")
        if any(float(w) < 0 for w in self.weights.values()):
            raise TLGError("negative probability weight")

    def as_floats(self) -> dict:
        return {k: float(v) for k, v in self.weights.items()}

    def mean_position(self, position) -> float:
        return sum(w * position(k) for k, w in self.weights.items())


def _sigma_edges(sigma_star: TimePath):
    return set(sigma_star.edges())


def support_check(graph: TimeLikeGraph, sigma_star: TimePath,
                  t_star) -> SupportDecomposition:
    """Decompose the graph at a support candidate.

    t_star is an (edge, time) pair with the time strictly inside the edge;
    the edge must not lie on sigma_star.  is_tree reports whether the
    connected component of (graph minus sigma_star) containing t_star is a
    tree.
    """
    edge, t = t_star
    if sigma_star.start != graph.initial.id or \
            sigma_star.end != graph.terminal.id:
        raise SupportError("sigma_star must be a full time path")
    for e in sigma_star.edges():
        if e not in graph.edge_set:
            raise SupportError(f"sigma_star uses non-edge {e}")
    if edge not in graph.edge_set:
        raise SupportError(f"t_star edge {edge} is not in the graph")
    if edge in _sigma_edges(sigma_star):
        raise SupportError("t_star lies on sigma_star")
    if not graph.time(edge.src) < t < graph.time(edge.dst):
        raise SupportError("t_star time must be strictly inside its edge")

    on_path = set(sigma_star.vertices)
    # undirected adjacency among non-support vertices
    adj = {}
    for e in graph.edges:
        if e.src not in on_path and e.dst not in on_path:
            adj.setdefault(e.src, []).append((e.dst, e))
            adj.setdefault(e.dst, []).append((e.src, e))
    seeds = [v for v in (edge.src, edge.dst) if v not in on_path]
    comp = set(seeds)
    stack = list(seeds)
    while stack:
        u = stack.pop()
        for v, _ in adj.get(u, ()):
            if v not in comp:
                comp.add(v)
                stack.append(v)
    comp_edges = [e for e in graph.edges
                  if e != edge and (e.src in comp or e.dst in comp)]
    # cycle test on the component: nodes are the off-path vertices plus one
    # node for t_star itself; links are edges between off-path vertices and
    # the t_star edge's connections to its off-path endpoints.  Edges running
    # into sigma_star are dangling stubs: the path point itself is removed,
    # so they can never close a cycle and are ignored.
    n_nodes = len(comp) + 1
    n_links = sum(1 for e in comp_edges
                  if e.src in comp and e.dst in comp) + len(seeds)
    is_tree = n_links == n_nodes - 1
    return SupportDecomposition(sigma_star, (edge, t), frozenset(comp),
                                tuple(comp_edges), is_tree)


def filtration_levels(graph: TimeLikeGraph, sigma_star: TimePath,
                      edge_jk: Edge) -> FiltrationLevels:
    """The backward filtration: delete the t*-edge, then peel the frontier
    of degree-2 off-path vertices level by level until it sits entirely on
    the support path."""
    t_mid = (graph.time(edge_jk.src) + graph.time(edge_jk.dst)) / 2
    dec = support_check(graph, sigma_star, (edge_jk, t_mid))
    if not dec.is_tree:
        raise SupportError("sigma_star is not a support: the component of "
                           "t_star is not a tree")
    on_path = set(sigma_star.vertices)
    edges = set(graph.edges) - {edge_jk}
    W = [{edge_jk.src, edge_jk.dst}]
    G_levels = [frozenset(edges)]
    descendants = []
    while not W[-1] <= on_path:
        desc = {}
        for ti in sorted(W[-1]):
            if ti in on_path:
                desc[ti] = (ti,)
            else:
                nbrs = sorted({e.src if e.dst == ti else e.dst
                               for e in edges
                               if ti in (e.src, e.dst)})
                if len(nbrs) != 2:
                    raise SupportError(
                        f"vertex {ti} has {len(nbrs)} neighbors in the "
                        "current level; support hypothesis violated")
                a, b = sorted(nbrs, key=graph.time)
                if not graph.time(a) < graph.time(ti) < graph.time(b):
                    raise SupportError(
                        f"vertex {ti} does not lie between its neighbors "
                        f"{a}, {b} in time; support hypothesis violated")
                desc[ti] = tuple(nbrs)
        descendants.append(desc)
        W_next = set()
        for vs in desc.values():
            W_next.update(vs)
        dropped = W[-1] - W_next
        edges = {e for e in edges
                 if e.src not in dropped and e.dst not in dropped}
        W.append(W_next)
        G_levels.append(frozenset(edges))
    return FiltrationLevels(W, G_levels, descendants)


def _step_probs(t, a, b):
    """One walk step from position t between neighbors at a < b."""
    return (b - t) / (b - a), (t - a) / (b - a)


def walk_distribution(graph: TimeLikeGraph, sigma_star: TimePath, t_star,
                      m: int,
                      levels: Optional[FiltrationLevels] = None
                      ) -> AbsorptionDistribution:
    """Distribution of the embedded walk at level m (1-based), over W_m."""
    edge, t = t_star
    if levels is None:
        levels = filtration_levels(graph, sigma_star, edge)
    if not 1 <= m <= levels.K:
        raise TLGError(f"level m={m} out of range 1..{levels.K}")

    def T(v):
        return Fraction(graph.time(v))

    t = Fraction(t)
    lo, hi = edge.src, edge.dst
    p_lo, p_hi = _step_probs(t, T(lo), T(hi))
    dist = {lo: p_lo, hi: p_hi}
    for level in range(m - 1):
        desc = levels.descendants[level]
        nxt = {}
        for ti, p in dist.items():
            vs = desc[ti]
            if len(vs) == 1:
                nxt[vs[0]] = nxt.get(vs[0], 0) + p
            else:
                a, b = sorted(vs, key=T)
                pa, pb = _step_probs(T(ti), T(a), T(b))
                nxt[a] = nxt.get(a, 0) + p * pa
                nxt[b] = nxt.get(b, 0) + p * pb
        dist = nxt
    return AbsorptionDistribution({k: v for k, v in dist.items() if v > 0})


def conditional_expectation(values, dist: AbsorptionDistribution):
    """E(X(t*) | level) = Σ wᵢ·X(tᵢ).

    `values` maps vertex ids to numbers (or is a callable); returns the
    weighted sum.  Use `weight_vector` for coefficient-mode comparisons.
    """
    get = values if callable(values) else values.__getitem__
    return float(sum(w * get(k) for k, w in dist.weights.items()))


def weight_vector(dist: AbsorptionDistribution, order):
    """Weights aligned with the given point order (coefficient mode)."""
    return [float(dist.weights.get(k, 0)) for k in order]


def export_weights_csv(graph: TimeLikeGraph, dist: AbsorptionDistribution,
                       path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["vertex", "time", "probability"])
        for vid in sorted(dist.weights, key=graph.time):
            w.writerow([f"v:{vid}", f"{graph.time(vid):.17g}",
                        f"{float(dist.weights[vid]):.17g}"])


def export_levels_json(levels: FiltrationLevels, path) -> None:
    obj = {
        "K": levels.K,
        "W": [sorted(ws) for ws in levels.W],
        "descendants": [{str(k): list(v) for k, v in d.items()}
                        for d in levels.descendants],
        "G_edge_counts": [len(es) for es in levels.G_edges],
    }
    with open(path, "w") as fh:
        json.dump(obj, fh, indent=1)
        fh.write("\n")
