"""Exact linear-Gaussian realization of the natural Brownian motion on an
NCC time-like graph.

The field is built by replaying a construction tower: the base full time
path is sampled from the law by sequential (Markov) conditioning, and each
attached path carries the law's bridge between its two attachment values.
Every sample point is an affine combination of earlier points plus one
fresh independent unit Gaussian, so the coefficient matrix is lower
triangular in construction order and covariance queries are exact inner
products.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field as dfield
from fractions import Fraction
from typing import Iterable, Optional, Sequence

import numpy as np

from .core import (Edge, TimeLikeGraph, Tower, TLGError, build_tower,
                   is_ncc)
from ._plan import (Plan, PlanNode, SampleGrid, SamplePoint, build_plan,
                    node_coeffs)
from . import fixtures


class ZeroVarianceError(TLGError):
    """Raised when an operation needs a positive-variance point."""


class SingularConditioningError(TLGError):
    """Conditioning set has a linear dependency; carries a null direction."""

    def __init__(self, message, null_direction):
        super().__init__(message)
        self.null_direction = null_direction


# -- laws ---------------------------------------------------------------------

class WienerLaw:
    """Standard Wiener process started at `origin` (value 0 there), with an
    optional constant drift."""

    def __init__(self, origin: float = 0.0, drift: float = 0.0):
        self.origin = origin
        self.drift = drift

    def cov(self, s: float, t: float) -> float:
        return min(s, t) - self.origin

    def mean(self, t: float) -> float:
        return self.drift * (t - self.origin)

    def check_graph(self, graph):
        if graph.initial.time < self.origin - 1e-12:
            raise TLGError("graph starts before the law's origin")

    def __repr__(self):
        return f"WienerLaw(origin={self.origin}, drift={self.drift})"


class TwoSidedWienerLaw:
    """Two-sided Wiener process conditioned to equal 0 at time 0:
    cov(s,t) = min(|s|,|t|) when s and t have the same sign, 0 across the
    origin."""

    drift = 0.0

    def cov(self, s: float, t: float) -> float:
        if s * t <= 0:
            return 0.0
        return min(abs(s), abs(t))

    def mean(self, t: float) -> float:
        return 0.0

    def check_graph(self, graph):
        pass

    def __repr__(self):
        return "TwoSidedWienerLaw()"


# -- field ---------------------------------------------------------------------

@dataclass
class GaussianField:
    graph: TimeLikeGraph
    grid: SampleGrid
    law: object
    plan: Plan
    coeffs: np.ndarray      # (n points) x (n basis Gaussians), lower triangular
    means: np.ndarray

    def resolve(self, point) -> int:
        """Index of a point given as a canonical key, a SamplePoint, a
        vertex id, or an (edge, time) pair."""
        key = self._key(point)
        try:
            return self.plan.index[key]
        except KeyError:
            raise TLGError(f"point {point!r} is not in the field") from None

    def _key(self, point):
        if isinstance(point, SamplePoint):
            return self.grid.canon(point)
        if isinstance(point, int):
            return ("v", point)
        if isinstance(point, tuple):
            if point and point[0] in ("v", "e"):
                return point
            if len(point) == 2 and isinstance(point[0], Edge):
                return self.grid.canon(self.grid.point_at(*point))
        raise TLGError(f"cannot interpret point spec {point!r}")

    def time_of(self, point) -> float:
        return self.plan.nodes[self.resolve(point)].time

    def covariance(self, p, q) -> float:
        i, j = self.resolve(p), self.resolve(q)
        return float(self.coeffs[i] @ self.coeffs[j])

    def variance(self, p) -> float:
        return self.covariance(p, p)

    def mean(self, p) -> float:
        return float(self.means[self.resolve(p)])

    def second_moment(self, p, q) -> float:
        """E[X(p)X(q)] (covariance plus the mean cross-term)."""
        return self.covariance(p, q) + self.mean(p) * self.mean(q)

    def covariance_matrix(self, points=None) -> np.ndarray:
        idx = (list(range(len(self.plan.nodes))) if points is None
               else [self.resolve(p) for p in points])
        A = self.coeffs[idx]
        return A @ A.T

    def keys(self):
        return [n.key for n in self.plan.nodes]


def covariance(field: GaussianField, p, q) -> float:
    return field.covariance(p, q)


def build_field(graph: TimeLikeGraph, tower: Optional[Tower] = None,
                grid: Optional[SampleGrid] = None,
                law=None) -> GaussianField:
    """Exact realization of the natural process at all grid points."""
    if tower is None:
        tower = build_tower(graph)  # may raise NotNCCError
    if grid is None:
        grid = SampleGrid.vertices_only(graph)
    if law is None:
        law = WienerLaw(origin=graph.initial.time)
    law.check_graph(graph)
    plan = build_plan(graph, tower, grid)
    n = len(plan.nodes)
    A = np.zeros((n, n))
    mu = np.zeros(n)
    for i, node in enumerate(plan.nodes):
        ws, std = node_coeffs(law, node, grid)
        mu[i] = law.mean(node.time)
        for w, a in zip(ws, node.anchors):
            j = plan.index[a]
            A[i] += w * A[j]
            mu[i] += w * (mu[j] - law.mean(grid.key_time(a)))
        A[i, i] = std
    return GaussianField(graph, grid, law, plan, A, mu)


# -- closed forms and identities -----------------------------------------------

def cell_covariance_formula(tj, tk, tm, tn):
    """Covariance of two opposite-branch points of a simple cell spanning
    [tj, tn], for the Brownian law with value variance tj at the cell start:
    tj + (tk - tj)(tm - tj)/(tn - tj).  Works with exact Fractions too."""
    if tn == tj:
        raise ZeroDivisionError("cell has zero time span")
    if not (tj <= tk <= tn and tj <= tm <= tn):
        raise TLGError("branch times must lie inside the cell span")
    return tj + (tk - tj) * (tm - tj) / (tn - tj)


def covariance_inconsistency():
    """The two incompatible cell-formula values for the covariance of the
    two middle vertices of the bundled non-NCC double-cell graph; any
    natural Brownian motion would have to satisfy both, so none exists.
    Returns exact fractions (11/21, 1/2)."""
    g = fixtures.double_cell_noncc()
    verdict = is_ncc(g)
    if verdict.ncc or verdict.witness is None:
        raise TLGError("fixture unexpectedly has no witness cells")
    qk, qm = 4, 5  # the two opposite-branch query vertices
    out = []
    for cell in sorted(verdict.witness, key=lambda c: -g.time(c.start)):
        ts = _frac_time(g, cell.start)
        te = _frac_time(g, cell.end)
        out.append(cell_covariance_formula(ts, _frac_time(g, qk),
                                           _frac_time(g, qm), te))
    return tuple(out)


def _frac_time(g, vid):
    return Fraction(g.time(vid)).limit_denominator(10 ** 6)


def conditional_coeffs(field: GaussianField, target, conditioners,
                       tol: float = 1e-12):
    """Exact Gaussian conditioning: weights w with
    E(X(target) | X(conditioners)) = Σ wᵢ X(cᵢ) (+ mean terms), and the
    residual variance.  Zero-variance conditioners get weight 0."""
    ti = field.resolve(target)
    idx = [field.resolve(c) for c in conditioners]
    A = field.coeffs
    C = A[idx] @ A[idx].T
    b = A[idx] @ A[ti]
    k = len(idx)
    weights = np.zeros(k)
    live = [i for i in range(k) if C[i, i] > tol]
    if live:
        Cl = C[np.ix_(live, live)]
        evals, evecs = np.linalg.eigh(Cl)
        scale = max(evals[-1], tol)
        bad = evals < tol * scale
        if bad.any():
            null = np.zeros(k)
            null[live] = evecs[:, 0]
            raise SingularConditioningError(
                "conditioning covariance matrix is singular", null)
        weights[live] = evecs @ ((evecs.T @ b[live]) / evals)
    resid = float(A[ti] @ A[ti] - weights @ b)
    return weights, max(resid, 0.0)


@dataclass
class InvarianceReport:
    max_diff: float
    tol: float

    @property
    def ok(self):
        return self.max_diff <= self.tol


def tower_invariance(graph: TimeLikeGraph, towers: Sequence[Tower],
                     grid: Optional[SampleGrid] = None,
                     tol: float = 1e-10, law=None) -> InvarianceReport:
    """Max absolute difference between full covariance matrices built from
    different towers (the uniqueness surrogate)."""
    if len(towers) < 2:
        raise TLGError("need at least two towers")
    if grid is None:
        grid = SampleGrid.vertices_only(graph)
    keys = grid.all_keys()
    mats = []
    for tw in towers:
        f = build_field(graph, tw, grid, law)
        mats.append(f.covariance_matrix(keys))
    diff = max(float(np.abs(m - mats[0]).max()) for m in mats[1:])
    return InvarianceReport(diff, tol)


# -- time-Markov check ----------------------------------------------------------

def _point_successors(graph, grid):
    succ = {}
    for v in graph.vertices:
        succ[("v", v.id)] = []
    for e in graph.edges:
        n = len(grid.times(e))
        chain = ([("v", e.src)]
                 + [("e", e, i) for i in range(1, n - 1)]
                 + [("v", e.dst)])
        for a, b in zip(chain, chain[1:]):
            succ.setdefault(a, []).append(b)
    return succ


def _closure(succ, start):
    out = set()
    stack = list(succ.get(start, ()))
    while stack:
        u = stack.pop()
        if u in out:
            continue
        out.add(u)
        stack.extend(succ.get(u, ()))
    return out


def check_time_markov(field: GaussianField, t, tol: float = 1e-10) -> bool:
    """Gaussian surrogate of the time-Markov property at point t:
    cov(a,b) = cov(a,t)·cov(t,b)/var(t) for every a in the past and b in
    the future of t."""
    ti = field.resolve(t)
    var = field.covariance(t, t)
    if var <= 1e-14:
        raise ZeroVarianceError(
            "time-Markov factorization needs var(X(t)) > 0")
    succ = _point_successors(field.graph, field.grid)
    pred = {}
    for a, bs in succ.items():
        for b in bs:
            pred.setdefault(b, []).append(a)
    key = field.plan.nodes[ti].key
    future = _closure(succ, key)
    past = _closure(pred, key)
    A = field.coeffs
    row_t = A[ti]
    for a in past:
        ia = field.plan.index[a]
        ca = float(A[ia] @ row_t)
        for b in future:
            ib = field.plan.index[b]
            lhs = float(A[ia] @ A[ib])
            rhs = ca * float(row_t @ A[ib]) / var
            if abs(lhs - rhs) > tol:
                return False
    return True


# -- exports --------------------------------------------------------------------

def export_covariance_csv(field: GaussianField, path, points=None) -> None:
    keys = ([field.plan.nodes[field.resolve(p)].key for p in points]
            if points is not None else field.keys())
    labels = [field.grid.label(k) for k in keys]
    M = field.covariance_matrix(keys)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["point"] + labels)
        for lab, row in zip(labels, M):
            w.writerow([lab] + [f"{x:.17g}" for x in row])


def export_weights_csv(field: GaussianField, weights, conditioners,
                       path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["point", "time", "weight"])
        for c, wt in zip(conditioners, weights):
            k = field.plan.nodes[field.resolve(c)].key
            w.writerow([field.grid.label(k),
                        f"{field.time_of(c):.17g}", f"{wt:.17g}"])
