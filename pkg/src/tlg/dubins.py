"""Dubins' mean-splitting solution of the Skorokhod embedding problem.

A measure on [0,1] is split recursively at its mean; the resulting binary
tree of conditional means drives a Brownian walk whose absorption law
converges weakly to the measure.  Everything here is exact rational
arithmetic: measures are finite atom lists or exact uniform densities,
distances are Wasserstein-1 via piecewise-linear CDF integration, and the
tree realizes a strict NCC time-like graph whose support-path harness
weights reproduce the embedded measure.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional, Sequence

from .core import Edge, TimeLikeGraph, TimePath, TLGError, Vertex


def _frac(x) -> Fraction:
    if isinstance(x, str):
        return Fraction(x)
    return Fraction(x)


class DiscreteMeasure:
    """Finite measure on [0,1]: sorted atoms with positive weights."""

    def __init__(self, atoms):
        merged = {}
        for p, w in atoms:
            p, w = _frac(p), _frac(w)
            if w < 0:
                raise TLGError("negative atom weight")
            if w:
                merged[p] = merged.get(p, Fraction(0)) + w
        self.atoms = tuple(sorted(merged.items()))
        if not self.atoms:
            raise TLGError("empty measure")
        total = sum(w for _, w in self.atoms)
        if abs(float(total) - 1.0) > 1e-12:
            raise TLGError(f"weights sum to {total}, not 1")
        if any(not 0 <= p <= 1 for p, _ in self.atoms):
            raise TLGError("atoms must lie in [0,1]")

    def mean(self) -> Fraction:
        return sum(p * w for p, w in self.atoms)

    def is_point(self) -> bool:
        return len(self.atoms) == 1

    def restricted(self, lo=None, hi_exclusive=None) -> "DiscreteMeasure":
        sel = [(p, w) for p, w in self.atoms
               if (lo is None or p >= lo)
               and (hi_exclusive is None or p < hi_exclusive)]
        total = sum(w for _, w in sel)
        if not total:
            raise TLGError("restriction has zero mass")
        return DiscreteMeasure([(p, w / total) for p, w in sel])

    def cdf(self, x) -> Fraction:
        return sum(w for p, w in self.atoms if p <= x)

    def breakpoints(self):
        return [p for p, _ in self.atoms]

    def partial_moment(self, u):
        """integral of s over s <= u."""
        u = _frac(u)
        return sum(p * w for p, w in self.atoms if p <= u)

    def tail_mass(self, u):
        """mass of (u, 1]."""
        u = _frac(u)
        return sum(w for p, w in self.atoms if p > u)

    def __eq__(self, other):
        return isinstance(other, DiscreteMeasure) and \
            self.atoms == other.atoms

    def __repr__(self):
        return f"DiscreteMeasure({len(self.atoms)} atoms, " \
               f"mean={float(self.mean()):.6g})"


class UniformMeasure:
    """Exact uniform density on [a, b] ⊆ [0,1]; closed under mean
    splitting, so the dyadic Dubins tree of Uniform[0,1] is exact."""

    def __init__(self, a=0, b=1):
        self.a, self.b = _frac(a), _frac(b)
        if not 0 <= self.a < self.b <= 1:
            raise TLGError("uniform support must be a nonempty "
                           "subinterval of [0,1]")

    def mean(self) -> Fraction:
        return (self.a + self.b) / 2

    def is_point(self) -> bool:
        return False

    def restricted(self, lo=None, hi_exclusive=None) -> "UniformMeasure":
        a = self.a if lo is None else max(self.a, _frac(lo))
        b = self.b if hi_exclusive is None else min(self.b,
                                                    _frac(hi_exclusive))
        return UniformMeasure(a, b)

    def cdf(self, x) -> Fraction:
        x = _frac(x)
        if x <= self.a:
            return Fraction(0)
        if x >= self.b:
            return Fraction(1)
        return (x - self.a) / (self.b - self.a)

    def breakpoints(self):
        return [self.a, self.b]

    def partial_moment(self, u):
        u = min(max(_frac(u), self.a), self.b)
        return (u * u - self.a * self.a) / (2 * (self.b - self.a))

    def tail_mass(self, u):
        return 1 - self.cdf(u)

    def quantile_discretized(self, k: int = 2048) -> DiscreteMeasure:
        """K equal-mass atoms at midpoint quantiles; W1 error ≤ (b-a)/(2K)."""
        span = self.b - self.a
        return DiscreteMeasure(
            [(self.a + span * Fraction(2 * i + 1, 2 * k), Fraction(1, k))
             for i in range(k)])

    def __repr__(self):
        return f"UniformMeasure({self.a}, {self.b})"


def split(measure):
    """Restrict to [0, mean) and [mean, 1] and renormalize; a point mass
    returns itself twice."""
    if measure.is_point():
        return measure, measure
    m = measure.mean()
    return measure.restricted(hi_exclusive=m), measure.restricted(lo=m)


@dataclass
class DubinsNode:
    measure: object
    mean: Fraction
    depth: int
    left: Optional["DubinsNode"] = None
    right: Optional["DubinsNode"] = None

    @property
    def is_leaf(self) -> bool:
        return self.left is None


@dataclass
class DubinsTree:
    root: DubinsNode
    N: int

    def level(self, n: int):
        """H_n: the sorted set of means at depth n (degenerate nodes keep
        repeating their value)."""
        vals = set()

        def walk(node):
            if node.depth == n or node.is_leaf:
                vals.add(node.mean)
                return
            walk(node.left)
            walk(node.right)

        walk(self.root)
        return tuple(sorted(vals))

    def to_json(self) -> dict:
        def enc(node):
            out = {"mean": str(node.mean)}
            if not node.is_leaf:
                out["left"] = enc(node.left)
                out["right"] = enc(node.right)
            return out
        return {"N": self.N, "root": enc(self.root)}


def dubins_tree(measure, N: int) -> DubinsTree:
    """The mean-splitting tree H_0..H_N; point-mass branches are pruned to
    leaves (they would repeat forever)."""
    if N < 0:
        raise TLGError("N must be >= 0")

    def build(nu, depth):
        node = DubinsNode(nu, nu.mean(), depth)
        if depth < N and not nu.is_point():
            left, right = split(nu)
            node.left = build(left, depth + 1)
            node.right = build(right, depth + 1)
        return node

    return DubinsTree(build(measure, 0), N)


def embedded_measure(tree: DubinsTree, n: int) -> DiscreteMeasure:
    """The law of the embedding walk absorbed at level n: branch
    probabilities are the one-step ruin probabilities between the two
    children means."""
    if not 0 <= n <= tree.N:
        raise TLGError(f"level {n} out of range 0..{tree.N}")
    acc = {}

    def walk(node, mass, depth):
        if depth == n or node.is_leaf:
            acc[node.mean] = acc.get(node.mean, Fraction(0)) + mass
            return
        l, r = node.left.mean, node.right.mean
        if r == node.mean:
            walk(node.right, mass, depth + 1)
            return
        p_right = (node.mean - l) / (r - l)
        walk(node.left, mass * (1 - p_right), depth + 1)
        walk(node.right, mass * p_right, depth + 1)

    walk(tree.root, Fraction(1), 0)
    return DiscreteMeasure(acc.items())


def w1_distance(mu, nu) -> Fraction:
    """Exact Wasserstein-1 distance: integral of |F_mu - F_nu| over [0,1],
    evaluated segment by segment (both CDFs are piecewise linear)."""
    breaks = sorted(set([Fraction(0), Fraction(1)]
                        + list(mu.breakpoints()) + list(nu.breakpoints())))
    total = Fraction(0)
    for a, b in zip(breaks, breaks[1:]):
        da = mu.cdf(a) - nu.cdf(a)
        # evaluate just left of b to stay on the open segment (a, b)
        mid = (a + b) / 2
        dm = mu.cdf(mid) - nu.cdf(mid)
        db = 2 * dm - da  # linear on (a, b): value approaching b
        if da * db >= 0:
            total += abs(da + db) * (b - a) / 2
        else:
            x0 = a + (b - a) * da / (da - db)
            total += (abs(da) * (x0 - a) + abs(db) * (b - x0)) / 2
    return total


def build_embedding_tlg(tree: DubinsTree):
    """Realize the tree as a strict NCC time-like graph.

    Internal nodes become degree-3 vertices at their mean times; leaves are
    strung on the full time path sigma* from 0 to 1; the root is deleted so
    its two child edges merge and t* = mean(mu) sits in the interior of the
    merged edge.  Returns (graph, t_star, sigma_star) with t_star given as
    an (edge, time) pair.
    """
    root = tree.root
    if root.is_leaf:
        raise TLGError("degenerate tree (point mass) has no cell structure")
    if not 0 < root.mean < 1:
        raise TLGError("mean of the measure must be strictly inside (0,1)")
    nodes = []

    def collect(node):
        nodes.append(node)
        if not node.is_leaf:
            collect(node.left)
            collect(node.right)

    collect(root)
    leaves = [n for n in nodes if n.is_leaf]
    internals = [n for n in nodes if not n.is_leaf and n is not root]
    times = [n.mean for n in leaves + internals]
    if len(set(times)) != len(times):
        raise TLGError("duplicate times across tree nodes; choose a "
                       "different depth or perturb the measure")
    if any(t <= 0 or t >= 1 for t in times):
        raise TLGError("tree nodes at the boundary of [0,1] collide with "
                       "the terminal vertices")

    order = sorted(leaves + internals, key=lambda n: n.mean)
    vid = {}
    verts = [Vertex(0, 0.0)]
    for i, n in enumerate(order, start=1):
        vid[id(n)] = i
        verts.append(Vertex(i, float(n.mean)))
    term = len(verts)
    verts.append(Vertex(term, 1.0))

    edges = []

    def add_edge(i, j):
        slot = sum(1 for e in edges if (e.src, e.dst) == (i, j))
        if slot > 1:
            raise TLGError(f"more than two parallel edges {i}->{j}")
        e = Edge(i, j, slot)
        edges.append(e)
        return e

    def tree_edge(a, b):
        i, j = vid[id(a)], vid[id(b)]
        return add_edge(min(i, j, key=lambda v: verts[v].time),
                        max(i, j, key=lambda v: verts[v].time))

    for n in nodes:
        if n.is_leaf or n is root:
            continue
        tree_edge(n, n.left)
        tree_edge(n, n.right)
    # merged root edge: left child -> right child, through t* = mean
    merged = add_edge(vid[id(root.left)], vid[id(root.right)])

    leaf_ids = [vid[id(n)] for n in sorted(leaves, key=lambda n: n.mean)]
    sigma_ids = [0] + leaf_ids + [term]
    sigma_slots = []
    for a, b in zip(sigma_ids, sigma_ids[1:]):
        sigma_slots.append(add_edge(a, b).slot)

    graph = TimeLikeGraph(verts, edges)
    sigma_star = TimePath(tuple(sigma_ids), tuple(sigma_slots))
    return graph, (merged, float(root.mean)), sigma_star


def embedding_tower(tree: DubinsTree, graph, sigma_star: TimePath):
    """A construction tower for the embedding graph: the leaf path is the
    base; internal nodes are attached deepest-first via the path through
    their two children (which straddle the node in time), and the merged
    root edge is the final step."""
    from .core import ConstructionStep, Tower
    vid = {v.time: v.id for v in graph.vertices}
    nodes = []

    def collect(n):
        nodes.append(n)
        if not n.is_leaf:
            collect(n.left)
            collect(n.right)

    collect(tree.root)
    internals = [n for n in nodes if not n.is_leaf and n is not tree.root]
    internals.sort(key=lambda n: (-n.depth, n.mean))
    steps = [ConstructionStep((vid[float(n.left.mean)], vid[float(n.mean)],
                               vid[float(n.right.mean)]))
             for n in internals]
    r = tree.root
    steps.append(ConstructionStep((vid[float(r.left.mean)],
                                   vid[float(r.right.mean)])))
    return Tower(sigma_star, tuple(steps))


def verify_second_moment(mu, N: int, u):
    """Check the second-moment identity of the embedding: the exact value
    of E[X(t*)X(u)] under the Brownian law (computed from the embedded
    measure: sum of w_i*min(t_i,u)) against the target
    integral_0^u s mu(ds) + u*mu((u,1]).  Returns (lhs, rhs, diff)."""
    u = _frac(u)
    tree = dubins_tree(mu, N)
    nu = embedded_measure(tree, N)
    lhs = sum(w * min(p, u) for p, w in nu.atoms)
    rhs = mu.partial_moment(u) + u * mu.tail_mass(u)
    return lhs, rhs, abs(lhs - rhs)


# -- serialization ---------------------------------------------------------

def load_measure(path):
    with open(path) as fh:
        obj = json.load(fh)
    return measure_from_json(obj)


def measure_from_json(obj):
    if "uniform" in obj:
        a, b = obj["uniform"]
        return UniformMeasure(_frac(a), _frac(b))
    return DiscreteMeasure([(p, w) for p, w in obj["atoms"]])


def measure_to_json(m) -> dict:
    if isinstance(m, UniformMeasure):
        return {"uniform": [str(m.a), str(m.b)]}
    return {"atoms": [[str(p), str(w)] for p, w in m.atoms]}
