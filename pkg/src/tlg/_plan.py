"""Shared plumbing for the exact Gaussian engine and the Monte Carlo
sampler: sample grids, canonical point keys, and the ordered construction
plan derived from a tower (base-path chain nodes followed by per-step
bridge nodes)."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .core import Edge, TimeLikeGraph, Tower, TLGError, verify_tower


@dataclass(frozen=True)
class SamplePoint:
    """A point on the graph: an edge plus an index into that edge's grid.
    Endpoint indices denote the shared vertex points."""

    edge: Edge
    index: int


class SampleGrid:
    """Per-edge strictly increasing sample times, always including both
    endpoint times."""

    def __init__(self, graph: TimeLikeGraph, times: dict):
        self.graph = graph
        self._times = {}
        for e in graph.edges:
            ts = tuple(float(t) for t in times.get(e, ()))
            lo, hi = graph.time(e.src), graph.time(e.dst)
            if not ts:
                ts = (lo, hi)
            if ts[0] != lo or ts[-1] != hi:
                raise TLGError(f"grid for {e} must include endpoint times")
            if any(a >= b for a, b in zip(ts, ts[1:])):
                raise TLGError(f"grid for {e} is not strictly increasing")
            self._times[e] = ts

    @classmethod
    def vertices_only(cls, graph) -> "SampleGrid":
        return cls(graph, {})

    @classmethod
    def uniform(cls, graph, h: float) -> "SampleGrid":
        """Mesh at most h on every edge."""
        if h <= 0:
            raise TLGError("mesh bound must be positive")
        times = {}
        for e in graph.edges:
            lo, hi = graph.time(e.src), graph.time(e.dst)
            n = max(1, math.ceil((hi - lo) / h - 1e-12))
            times[e] = tuple(np.linspace(lo, hi, n + 1))
        return cls(graph, times)

    def with_times(self, extra: dict) -> "SampleGrid":
        """A copy with extra interior times merged in (per edge)."""
        times = {}
        for e, ts in self._times.items():
            merged = sorted(set(ts) | {float(t) for t in extra.get(e, ())})
            times[e] = tuple(merged)
        return SampleGrid(self.graph, times)

    def times(self, edge: Edge):
        return self._times[edge]

    @property
    def mesh(self) -> float:
        return max(b - a for ts in self._times.values()
                   for a, b in zip(ts, ts[1:]))

    def point_at(self, edge: Edge, time: float) -> SamplePoint:
        ts = self._times[edge]
        for i, t in enumerate(ts):
            if t == time or abs(t - time) <= 1e-12:
                return SamplePoint(edge, i)
        raise TLGError(f"time {time} is not a grid point of {edge}; "
                       f"grid times are {ts}")

    def canon(self, p: SamplePoint):
        """Canonical key: vertex points are shared across incident edges."""
        ts = self._times[p.edge]
        if p.index == 0:
            return ("v", p.edge.src)
        if p.index == len(ts) - 1:
            return ("v", p.edge.dst)
        return ("e", p.edge, p.index)

    def key_time(self, key) -> float:
        if key[0] == "v":
            return self.graph.time(key[1])
        return self._times[key[1]][key[2]]

    def all_keys(self):
        keys = [("v", v.id) for v in self.graph.vertices]
        for e in self.graph.edges:
            keys.extend(("e", e, i)
                        for i in range(1, len(self._times[e]) - 1))
        return keys

    def label(self, key) -> str:
        """Point label in the CLI addressing syntax."""
        if key[0] == "v":
            return f"v:{key[1]}"
        e, i = key[1], key[2]
        t = self._times[e][i]
        slot = f":{e.slot}" if e.slot else ""
        return f"e:{e.src}-{e.dst}{slot}@{t:.12g}"


@dataclass(frozen=True)
class PlanNode:
    """One point in construction order.  kind 'chain': conditioned on the
    previous path point under the law itself; kind 'bridge': conditioned on
    (previous point of the step, high attachment point)."""

    key: tuple
    time: float
    kind: str
    anchors: tuple


@dataclass(frozen=True)
class Plan:
    nodes: tuple
    index: dict  # key -> position in nodes


def _path_keys(grid, vertices, slots):
    """All point keys along a path, in time order, endpoints included."""
    keys = [("v", vertices[0])]
    for a, b, s in zip(vertices, vertices[1:], slots):
        e = Edge(a, b, s)
        n = len(grid.times(e))
        keys.extend(("e", e, i) for i in range(1, n - 1))
        keys.append(("v", b))
    return keys


def build_plan(graph: TimeLikeGraph, tower: Tower, grid: SampleGrid) -> Plan:
    rep = verify_tower(graph, tower)
    if not rep.ok:
        raise TLGError(f"tower does not verify: {rep}")
    nodes = []
    index = {}

    def emit(node):
        if node.key in index:
            raise TLGError(f"plan visits point {node.key} twice")
        index[node.key] = len(nodes)
        nodes.append(node)

    base_keys = _path_keys(grid, tower.base.vertices, tower.base.slots)
    prev = None
    for key in base_keys:
        anchors = (prev,) if prev is not None else ()
        emit(PlanNode(key, grid.key_time(key), "chain", anchors))
        prev = key

    for step in tower.steps:
        keys = _path_keys(grid, step.path, step.slots)
        lo, hi = keys[0], keys[-1]
        prev = lo
        for key in keys[1:-1]:
            emit(PlanNode(key, grid.key_time(key), "bridge", (prev, hi)))
            prev = key

    missing = [k for k in grid.all_keys() if k not in index]
    if missing:
        raise TLGError(f"plan misses points {missing}")
    return Plan(tuple(nodes), index)


def node_coeffs(law, node: PlanNode, grid: SampleGrid):
    """Conditioning coefficients for one plan node under the law.

    Returns (weights over node.anchors, residual std).  Zero-variance
    anchors get weight 0 (their value is deterministic and, for our mean
    computations, handled through the mean terms).
    """
    t = node.time
    ts = [grid.key_time(a) for a in node.anchors]
    if not ts:
        return (), math.sqrt(max(law.cov(t, t), 0.0))
    if len(ts) == 1:
        s = ts[0]
        vs = law.cov(s, s)
        w = law.cov(s, t) / vs if vs > 1e-15 else 0.0
        var = law.cov(t, t) - w * law.cov(s, t)
        return (w,), math.sqrt(max(var, 0.0))
    # bridge: two anchors
    s, u = ts
    C = np.array([[law.cov(s, s), law.cov(s, u)],
                  [law.cov(s, u), law.cov(u, u)]])
    b = np.array([law.cov(s, t), law.cov(t, u)])
    live = [i for i in range(2) if C[i, i] > 1e-15]
    w = np.zeros(2)
    if live:
        Cl = C[np.ix_(live, live)]
        try:
            w[live] = np.linalg.solve(Cl, b[live])
        except np.linalg.LinAlgError:
            w[live] = np.linalg.lstsq(Cl, b[live], rcond=None)[0]
    var = law.cov(t, t) - float(w @ b)
    return (float(w[0]), float(w[1])), math.sqrt(max(var, 0.0))
