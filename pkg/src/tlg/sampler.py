"""Monte Carlo realization of natural processes on NCC graphs.

Sampling replays the same tower-and-bridge construction as the exact
engine: the base path is drawn from the law by sequential Markov
conditioning and every attached path gets an independent bridge between
its attachment values.  All randomness flows from a counter-based
generator keyed by (seed, stream); stream id = sample index, so parallel
streams are reproducible and a given RngSpec always yields the same path.
"""

from __future__ import annotations

import csv
import hashlib
import json
import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .core import TimeLikeGraph, Tower, TLGError, build_tower
from ._plan import SampleGrid, build_plan, node_coeffs
from .gauss import WienerLaw


@dataclass(frozen=True)
class RngSpec:
    seed: int
    stream: int = 0

    def generator(self) -> np.random.Generator:
        return np.random.Generator(
            np.random.Philox(key=np.array([self.seed, self.stream],
                                          dtype=np.uint64)))


@dataclass
class SamplePath:
    values: dict           # canonical point key -> value
    spec: RngSpec
    law_tag: str
    tower_hash: str

    def __getitem__(self, key):
        return self.values[key]


def tower_hash(tower: Tower) -> str:
    blob = json.dumps(tower.to_json(), sort_keys=True).encode()
    return hashlib.sha256(blob).hexdigest()[:16]


def sample_bridge(t0: float, x0: float, t1: float, x1: float,
                  times: Sequence[float], rng) -> np.ndarray:
    """One draw of a Brownian bridge between (t0,x0) and (t1,x1) at the
    given interior times; the returned array includes both endpoints."""
    ts = list(times)
    if any(not t0 < t < t1 for t in ts) or \
            any(a >= b for a, b in zip(ts, ts[1:])):
        raise TLGError("bridge times must be strictly increasing inside "
                       f"({t0}, {t1})")
    if t1 <= t0:
        raise TLGError("bridge needs t0 < t1")
    out = np.empty(len(ts) + 2)
    out[0], out[-1] = x0, x1
    s, xs = t0, x0
    for i, r in enumerate(ts):
        frac = (r - s) / (t1 - s)
        mean = xs + frac * (x1 - xs)
        var = (r - s) * (t1 - r) / (t1 - s)
        xs = mean + math.sqrt(var) * rng.standard_normal()
        out[i + 1] = xs
        s = r
    return out


def _compiled_plan(graph, tower, grid, law):
    """Plan nodes flattened to (anchor indices, weights, std, mean shift)."""
    plan = build_plan(graph, tower, grid)
    rows = []
    for node in plan.nodes:
        ws, std = node_coeffs(law, node, grid)
        anchors = [plan.index[a] for a in node.anchors]
        shift = law.mean(node.time) - sum(
            w * law.mean(grid.key_time(a))
            for w, a in zip(ws, node.anchors))
        rows.append((anchors, list(ws), std, shift))
    return plan, rows


def sample_natural(graph: TimeLikeGraph, tower: Optional[Tower] = None,
                   grid: Optional[SampleGrid] = None, law=None,
                   rng: Optional[RngSpec] = None) -> SamplePath:
    """One exact draw of the natural process at all grid points."""
    if rng is None:
        raise TLGError("an RngSpec is required (no silent entropy)")
    if tower is None:
        tower = build_tower(graph)
    if grid is None:
        grid = SampleGrid.vertices_only(graph)
    if law is None:
        law = WienerLaw(origin=graph.initial.time)
    law.check_graph(graph)
    plan, rows = _compiled_plan(graph, tower, grid, law)
    gen = rng.generator()
    z = gen.standard_normal(len(rows))
    x = np.empty(len(rows))
    for i, (anchors, ws, std, shift) in enumerate(rows):
        x[i] = shift + std * z[i] + sum(
            w * x[a] for w, a in zip(ws, anchors))
    values = {node.key: float(x[i]) for i, node in enumerate(plan.nodes)}
    return SamplePath(values, rng, repr(law), tower_hash(tower))


def _sample_matrix(rows, seed, n, n0=0):
    """Values for samples n0..n0+n-1 at all plan nodes, vectorized across
    samples while keeping the per-sample streams of sample_natural."""
    k = len(rows)
    z = np.empty((n, k))
    for s in range(n):
        z[s] = RngSpec(seed, n0 + s).generator().standard_normal(k)
    x = np.empty((n, k))
    for i, (anchors, ws, std, shift) in enumerate(rows):
        acc = shift + std * z[:, i]
        for w, a in zip(ws, anchors):
            acc = acc + w * x[:, a]
        x[:, i] = acc
    return x


def mc_covariance(graph: TimeLikeGraph, tower: Optional[Tower],
                  grid: Optional[SampleGrid], law, p, q, n: int,
                  rng: RngSpec, n_batches: int = 20):
    """Monte Carlo covariance of X(p) and X(q) with batch-means stderr.

    Sample i always uses stream i of rng.seed, so the estimate is
    reproducible and independent of batching.
    """
    if n < 2 * n_batches:
        raise TLGError(f"need n >= {2 * n_batches} samples")
    if tower is None:
        tower = build_tower(graph)
    if grid is None:
        grid = SampleGrid.vertices_only(graph)
    if law is None:
        law = WienerLaw(origin=graph.initial.time)
    law.check_graph(graph)
    plan, rows = _compiled_plan(graph, tower, grid, law)

    def locate(point):
        if isinstance(point, int):
            key = ("v", point)
        elif point and point[0] in ("v", "e"):
            key = point
        else:
            key = grid.canon(grid.point_at(*point))
        return plan.index[key]

    ip, iq = locate(p), locate(q)
    x = _sample_matrix(rows, rng.seed, n)
    xp, xq = x[:, ip], x[:, iq]
    estimate = float(np.mean(xp * xq) - np.mean(xp) * np.mean(xq))
    # batch means
    bs = n // n_batches
    cs = []
    for b in range(n_batches):
        sp = xp[b * bs:(b + 1) * bs]
        sq = xq[b * bs:(b + 1) * bs]
        cs.append(np.mean(sp * sq) - np.mean(sp) * np.mean(sq))
    stderr = float(np.std(cs, ddof=1) / math.sqrt(n_batches))
    return estimate, stderr


def export_path_csv(path: SamplePath, grid: SampleGrid, file) -> None:
    with open(file, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["point", "time", "value"])
        items = sorted(path.values.items(),
                       key=lambda kv: (grid.key_time(kv[0]),
                                       grid.label(kv[0])))
        for key, val in items:
            w.writerow([grid.label(key), f"{grid.key_time(key):.17g}",
                        f"{val:.17g}"])


def experiment_manifest(command: str, seed: int, n: int, law,
                        tower: Optional[Tower] = None, **extra) -> dict:
    man = {"command": command, "seed": seed, "n": n, "law": repr(law)}
    if tower is not None:
        man["tower_hash"] = tower_hash(tower)
    man.update(extra)
    return man
