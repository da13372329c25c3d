"""Core graph model for time-like graphs (TLGs).

A time-like graph is a directed multigraph whose vertices carry real time
labels and whose edges always point strictly forward in time.  In strict mode
the two extremal vertices have degree 1 and every other vertex has degree 3
with at least one incoming and one outgoing edge.  Relaxed mode additionally
permits internal vertices of degree 2 (one in, one out); collapsing those
chains must yield a strict graph.

This module provides validation, path/cell combinatorics, the NCC decision
(no pair of minimal co-terminal cells), and construction towers: an ordered
plan that builds a graph from a single full time path by repeatedly attaching
new paths whose endpoints sit in the interior of already-built edges.
"""

from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Iterator, Optional, Sequence


class TLGError(Exception):
    pass


class InvalidGraphError(TLGError):
    pass


class CapExceededError(TLGError):
    """A combinatorial enumeration exceeded its configured cap."""


class NotNCCError(TLGError):
    """Raised when a tower is requested for a graph that has none.

    Carries the pair of minimal co-terminal cells witnessing the failure
    (when available).
    """

    def __init__(self, message: str, witness=None):
        super().__init__(message)
        self.witness = witness


@dataclass(frozen=True)
class Vertex:
    id: int
    time: float


@dataclass(frozen=True)
class Edge:
    src: int
    dst: int
    slot: int = 0

    def __repr__(self):
        return f"E({self.src}->{self.dst}:{self.slot})"


@dataclass(frozen=True)
class TimePath:
    """A strictly time-increasing chain of edges, stored as vertex ids
    plus the slot choice for each hop."""

    vertices: tuple
    slots: tuple = None

    def __post_init__(self):
        if self.slots is None:
            object.__setattr__(self, "slots", (0,) * (len(self.vertices) - 1))
        if len(self.slots) != len(self.vertices) - 1:
            raise ValueError("slot count must be len(vertices) - 1")

    def edges(self):
        return tuple(
            Edge(a, b, s)
            for a, b, s in zip(self.vertices, self.vertices[1:], self.slots)
        )

    def interior(self):
        return self.vertices[1:-1]

    @property
    def start(self):
        return self.vertices[0]

    @property
    def end(self):
        return self.vertices[-1]

    def __len__(self):
        return len(self.vertices)


@dataclass(frozen=True)
class Cell:
    """Two co-terminal time paths with disjoint interiors."""

    path_a: TimePath
    path_b: TimePath
    simple: bool = False
    forward_minimal: bool = False
    backward_minimal: bool = False

    @property
    def start(self):
        return self.path_a.start

    @property
    def end(self):
        return self.path_a.end


class TimeLikeGraph:
    def __init__(self, vertices: Iterable[Vertex], edges: Iterable[Edge],
                 mode: str = "strict"):
        if mode not in ("strict", "relaxed"):
            raise ValueError(f"unknown mode {mode!r}")
        self.vertices = tuple(sorted(vertices, key=lambda v: (v.time, v.id)))
        self.edges = tuple(sorted(
            edges, key=lambda e: (e.src, e.dst, e.slot)))
        self.mode = mode

    @cached_property
    def vertex_by_id(self):
        return {v.id: v for v in self.vertices}

    def time(self, vid: int) -> float:
        return self.vertex_by_id[vid].time

    @cached_property
    def out_edges(self):
        out = {v.id: [] for v in self.vertices}
        for e in self.edges:
            if e.src in out:
                out[e.src].append(e)
        return out

    @cached_property
    def in_edges(self):
        inc = {v.id: [] for v in self.vertices}
        for e in self.edges:
            if e.dst in inc:
                inc[e.dst].append(e)
        return inc

    def degree(self, vid: int) -> int:
        return len(self.out_edges[vid]) + len(self.in_edges[vid])

    @cached_property
    def initial(self) -> Vertex:
        return self.vertices[0]

    @cached_property
    def terminal(self) -> Vertex:
        return self.vertices[-1]

    def has_edge(self, src: int, dst: int, slot: int = 0) -> bool:
        return Edge(src, dst, slot) in self.edge_set

    @cached_property
    def edge_set(self):
        return frozenset(self.edges)

    def __eq__(self, other):
        return (isinstance(other, TimeLikeGraph)
                and self.vertices == other.vertices
                and self.edges == other.edges
                and self.mode == other.mode)

    def __hash__(self):
        return hash((self.vertices, self.edges, self.mode))

    def __repr__(self):
        return (f"TimeLikeGraph({len(self.vertices)} vertices, "
                f"{len(self.edges)} edges, {self.mode})")

    # -- serialization ----------------------------------------------------

    def to_json(self) -> dict:
        return {
            "mode": self.mode,
            "vertices": [{"id": v.id, "time": v.time} for v in self.vertices],
            "edges": [{"from": e.src, "to": e.dst, "slot": e.slot}
                      for e in self.edges],
        }

    @classmethod
    def from_json(cls, obj: dict) -> "TimeLikeGraph":
        try:
            vertices = [Vertex(int(v["id"]), float(v["time"]))
                        for v in obj["vertices"]]
            edges = [Edge(int(e["from"]), int(e["to"]), int(e.get("slot", 0)))
                     for e in obj["edges"]]
            mode = obj.get("mode", "strict")
        except (KeyError, TypeError, ValueError) as exc:
            raise InvalidGraphError(f"malformed graph JSON: {exc}") from exc
        return cls(vertices, edges, mode=mode)


def load_tlg(path) -> TimeLikeGraph:
    with open(path) as fh:
        try:
            obj = json.load(fh)
        except json.JSONDecodeError as exc:
            raise InvalidGraphError(f"not valid JSON: {exc}") from exc
    return TimeLikeGraph.from_json(obj)


def dump_tlg(graph: TimeLikeGraph, path) -> None:
    with open(path, "w") as fh:
        json.dump(graph.to_json(), fh, indent=1)
        fh.write("\n")


# -- validation ------------------------------------------------------------

@dataclass
class ValidationReport:
    problems: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.problems

    def add(self, msg: str):
        self.problems.append(msg)

    def __str__(self):
        return "valid" if self.ok else "\n".join(self.problems)


def validate_tlg(graph: TimeLikeGraph, mode: Optional[str] = None
                 ) -> ValidationReport:
    """Check every structural invariant; the report lists all violations."""
    mode = mode or graph.mode
    rep = ValidationReport()
    ids = [v.id for v in graph.vertices]
    if len(set(ids)) != len(ids):
        rep.add("duplicate vertex ids")
        return rep
    for v in graph.vertices:
        if not math.isfinite(v.time):
            rep.add(f"vertex {v.id} has non-finite time {v.time}")
    vmap = graph.vertex_by_id
    seen = {}
    for e in graph.edges:
        if e.src not in vmap or e.dst not in vmap:
            rep.add(f"edge {e} references unknown vertex")
            continue
        if e.slot not in (0, 1):
            rep.add(f"edge {e} has slot outside {{0,1}}")
        if not vmap[e.src].time < vmap[e.dst].time:
            rep.add(f"edge {e} does not move strictly forward in time")
        key = (e.src, e.dst)
        seen.setdefault(key, []).append(e.slot)
    for (src, dst), slots in seen.items():
        if len(slots) > 2:
            rep.add(f"more than two parallel edges {src}->{dst}")
        if len(slots) != len(set(slots)):
            rep.add(f"duplicate slot on parallel edges {src}->{dst}")
    if not rep.ok:
        return rep
    if len(graph.vertices) < 2:
        rep.add("a TLG needs at least two vertices")
        return rep

    if mode == "relaxed":
        _validate_relaxed(graph, rep)
        return rep

    deg1 = [v for v in graph.vertices if graph.degree(v.id) == 1]
    lo, hi = graph.vertices[0], graph.vertices[-1]
    if len(deg1) != 2 or {v.id for v in deg1} != {lo.id, hi.id}:
        rep.add("strict mode: exactly the earliest and latest vertices "
                f"must have degree 1 (degree-1 set: {[v.id for v in deg1]})")
    for v in graph.vertices:
        if v.id in (lo.id, hi.id):
            continue
        if graph.degree(v.id) != 3:
            rep.add(f"strict mode: internal vertex {v.id} has degree "
                    f"{graph.degree(v.id)}, expected 3")
        if not graph.in_edges[v.id]:
            rep.add(f"internal vertex {v.id} has no incoming edge")
        if not graph.out_edges[v.id]:
            rep.add(f"internal vertex {v.id} has no outgoing edge")
    _check_full_path_cover(graph, rep)
    return rep


def _check_full_path_cover(graph, rep):
    lo, hi = graph.vertices[0].id, graph.vertices[-1].id
    fwd = _reachable_from(graph, lo)
    bwd = _coreachable_to(graph, hi)
    for v in graph.vertices:
        if v.id not in fwd or v.id not in bwd:
            rep.add(f"vertex {v.id} lies on no full time path")


def _reachable_from(graph, start):
    seen = {start}
    stack = [start]
    while stack:
        u = stack.pop()
        for e in graph.out_edges[u]:
            if e.dst not in seen:
                seen.add(e.dst)
                stack.append(e.dst)
    return seen


def _coreachable_to(graph, end):
    seen = {end}
    stack = [end]
    while stack:
        u = stack.pop()
        for e in graph.in_edges[u]:
            if e.src not in seen:
                seen.add(e.src)
                stack.append(e.src)
    return seen


def _validate_relaxed(graph, rep):
    lo, hi = graph.vertices[0], graph.vertices[-1]
    for v in graph.vertices:
        if v.id in (lo.id, hi.id):
            if graph.degree(v.id) != 1:
                rep.add(f"relaxed mode: extremal vertex {v.id} must have "
                        "degree 1")
            continue
        n_in, n_out = len(graph.in_edges[v.id]), len(graph.out_edges[v.id])
        if n_in + n_out == 2:
            if (n_in, n_out) != (1, 1):
                rep.add(f"degree-2 vertex {v.id} must have one incoming and "
                        "one outgoing edge")
        elif n_in + n_out == 3:
            if n_in == 0 or n_out == 0:
                rep.add(f"internal vertex {v.id} needs both incoming and "
                        "outgoing edges")
        else:
            rep.add(f"relaxed mode: internal vertex {v.id} has degree "
                    f"{n_in + n_out}, expected 2 or 3")
    if not rep.ok:
        return
    try:
        strict, _ = collapse(graph)
    except InvalidGraphError as exc:
        rep.add(f"degree-2 collapse fails: {exc}")
        return
    sub = validate_tlg(strict, mode="strict")
    for p in sub.problems:
        rep.add(f"after collapse: {p}")


# -- degree-2 chain collapse -------------------------------------------------

def collapse(graph: TimeLikeGraph):
    """Merge every 1-in/1-out degree-2 vertex chain into a single edge.

    Returns ``(strict_graph, point_map)`` where point_map sends each removed
    vertex id to ``(edge, time)``: the collapsed edge whose interior now
    contains it, and its time coordinate.
    """
    removable = {
        v.id for v in graph.vertices[1:-1]
        if len(graph.in_edges[v.id]) == 1 and len(graph.out_edges[v.id]) == 1
        and graph.degree(v.id) == 2
    }
    new_edges = {}
    chains = {}
    for e in graph.edges:
        if e.src in removable:
            continue
        # walk forward until a kept vertex
        chain = []
        cur = e
        while cur.dst in removable:
            chain.append(cur.dst)
            (cur,) = graph.out_edges[cur.dst]
        key = (e.src, cur.dst)
        new_edges.setdefault(key, []).append(chain)
    edges = []
    point_map = {}
    for (src, dst), chain_list in sorted(new_edges.items()):
        if len(chain_list) > 2:
            raise InvalidGraphError(
                f"collapse yields more than two parallel edges {src}->{dst}")
        for slot, chain in enumerate(chain_list):
            edge = Edge(src, dst, slot)
            edges.append(edge)
            for vid in chain:
                point_map[vid] = (edge, graph.time(vid))
    kept = [v for v in graph.vertices if v.id not in removable]
    return TimeLikeGraph(kept, edges, mode="strict"), point_map


def reverse(graph: TimeLikeGraph) -> TimeLikeGraph:
    """Time reversal: negate all times and flip every edge."""
    verts = [Vertex(v.id, -v.time) for v in graph.vertices]
    edges = [Edge(e.dst, e.src, e.slot) for e in graph.edges]
    return TimeLikeGraph(verts, edges, mode=graph.mode)


# -- paths -------------------------------------------------------------------

def full_time_paths(graph: TimeLikeGraph, cap: int = 100_000):
    """All time paths from the initial to the terminal vertex."""
    return time_paths_between(graph, graph.initial.id, graph.terminal.id, cap)


def time_paths_between(graph: TimeLikeGraph, a: int, b: int,
                       cap: int = 100_000):
    """All time paths from vertex a to vertex b (DFS, deterministic order)."""
    out = []
    path = [a]
    slots = []

    def walk(u):
        if u == b:
            out.append(TimePath(tuple(path), tuple(slots)))
            if len(out) > cap:
                raise CapExceededError(
                    f"more than {cap} time paths between {a} and {b}")
            return
        for e in sorted(graph.out_edges[u], key=lambda e: (e.dst, e.slot)):
            if graph.time(e.dst) > graph.time(b):
                continue
            path.append(e.dst)
            slots.append(e.slot)
            walk(e.dst)
            path.pop()
            slots.pop()

    walk(a)
    return out


def _reachability(graph: TimeLikeGraph):
    """vertex id -> set of vertex ids reachable by a (possibly empty) walk."""
    reach = {}
    for v in sorted(graph.vertices, key=lambda v: (-v.time, v.id)):
        r = {v.id}
        for e in graph.out_edges[v.id]:
            r |= reach[e.dst]
        reach[v.id] = r
    return reach


# -- cells and the NCC decision ----------------------------------------------

def find_cells(graph: TimeLikeGraph, cap: int = 100_000):
    """All cells (pairs of co-terminal time paths with disjoint interiors),
    deduplicated up to unordered pair, annotated with simple /
    forward-minimal / backward-minimal flags."""
    raw = _raw_cells(graph, cap)
    return _annotate(graph, raw)


def _raw_cells(graph, cap):
    cells = []
    verts = graph.vertices
    for i, va in enumerate(verts):
        for vb in verts[i + 1:]:
            if vb.time <= va.time:
                continue
            paths = time_paths_between(graph, va.id, vb.id, cap)
            for p, q in itertools.combinations(paths, 2):
                if set(p.interior()) & set(q.interior()):
                    continue
                a, b = sorted([p, q], key=lambda t: (t.vertices, t.slots))
                cells.append((a, b))
                if len(cells) > cap:
                    raise CapExceededError(f"more than {cap} cells")
    return cells


def _annotate(graph, raw):
    reach = _reachability(graph)
    by_start = {}
    by_end = {}
    for a, b in raw:
        by_start.setdefault(a.start, []).append((a, b))
        by_end.setdefault(a.end, []).append((a, b))
    fwd_end = {s: min(graph.time(a.end) for a, _ in cs)
               for s, cs in by_start.items()}
    bwd_start = {e: max(graph.time(a.start) for a, _ in cs)
                 for e, cs in by_end.items()}
    out = []
    for a, b in raw:
        simple = _is_simple(reach, a, b)
        fwd = graph.time(a.end) == fwd_end[a.start]
        bwd = graph.time(a.start) == bwd_start[a.end]
        out.append(Cell(a, b, simple=simple, forward_minimal=fwd,
                        backward_minimal=bwd))
    return out


def _is_simple(reach, a, b):
    ia, ib = set(a.interior()), set(b.interior())
    for u in ia:
        if reach[u] & ib:
            return False
    for u in ib:
        if reach[u] & ia:
            return False
    return True


def classify_cell(graph: TimeLikeGraph, cell: Cell,
                  cap: int = 100_000) -> Cell:
    """Recompute the flags of a single cell against the whole graph."""
    key = (cell.path_a, cell.path_b)
    for c in find_cells(graph, cap):
        if (c.path_a, c.path_b) == key:
            return c
    raise TLGError("cell does not belong to the graph")


@dataclass(frozen=True)
class NccVerdict:
    ncc: bool
    witness: Optional[tuple] = None  # (Cell, Cell) when ncc is False

    def __bool__(self):
        return self.ncc


def is_ncc(graph: TimeLikeGraph, cap: int = 100_000) -> NccVerdict:
    """Decide whether the graph has no pair of minimal co-terminal cells.

    A witness is a pair of forward-minimal cells with the same end and
    different starts, or a pair of backward-minimal cells with the same
    start and different ends.
    """
    cells = find_cells(graph, cap)
    fwd = {}
    for c in cells:
        if c.forward_minimal:
            prev = fwd.get(c.end)
            if prev is not None and prev.start != c.start:
                return NccVerdict(False, (prev, c))
            if prev is None:
                fwd[c.end] = c
    bwd = {}
    for c in cells:
        if c.backward_minimal:
            prev = bwd.get(c.start)
            if prev is not None and prev.end != c.end:
                return NccVerdict(False, (prev, c))
            if prev is None:
                bwd[c.start] = c
    return NccVerdict(True)


# -- towers -------------------------------------------------------------------

@dataclass(frozen=True)
class ConstructionStep:
    """One attachment: a new path whose endpoints already exist in the
    built subgraph (in the interior of built edges, i.e. with local degree
    one-in/one-out) and whose interior vertices are new.  ``witness`` is a
    time path of the pre-step subgraph passing through both endpoints."""

    path: tuple
    slots: tuple = None
    witness: tuple = ()

    def __post_init__(self):
        if self.slots is None:
            object.__setattr__(self, "slots", (0,) * (len(self.path) - 1))

    @property
    def attach_low(self):
        return self.path[0]

    @property
    def attach_high(self):
        return self.path[-1]

    def edges(self):
        return tuple(Edge(a, b, s)
                     for a, b, s in zip(self.path, self.path[1:], self.slots))


@dataclass(frozen=True)
class Tower:
    base: TimePath
    steps: tuple = ()

    def to_json(self) -> dict:
        return {
            "base": list(self.base.vertices),
            "baseSlots": list(self.base.slots),
            "steps": [
                {
                    "path": list(s.path),
                    "slots": list(s.slots),
                    "attachLow": s.attach_low,
                    "attachHigh": s.attach_high,
                    "witness": list(s.witness),
                }
                for s in self.steps
            ],
        }

    @classmethod
    def from_json(cls, obj: dict) -> "Tower":
        base = TimePath(tuple(obj["base"]),
                        tuple(obj.get("baseSlots") or ()) or None)
        steps = tuple(
            ConstructionStep(tuple(s["path"]),
                             tuple(s.get("slots") or ()) or None,
                             tuple(s.get("witness") or ()))
            for s in obj["steps"]
        )
        return cls(base, steps)


@dataclass
class TowerReport:
    problems: list = field(default_factory=list)

    @property
    def ok(self):
        return not self.problems

    def add(self, msg):
        self.problems.append(msg)

    def __str__(self):
        return "tower verifies" if self.ok else "\n".join(self.problems)


class _Built:
    """Incremental view of the subgraph assembled so far."""

    def __init__(self, graph):
        self.graph = graph
        self.edges = set()
        self.n_in = {}
        self.n_out = {}

    def add(self, edge):
        self.edges.add(edge)
        self.n_out[edge.src] = self.n_out.get(edge.src, 0) + 1
        self.n_in[edge.dst] = self.n_in.get(edge.dst, 0) + 1

    def remove(self, edge):
        self.edges.discard(edge)
        self.n_out[edge.src] -= 1
        self.n_in[edge.dst] -= 1

    def has_vertex(self, vid):
        return self.n_in.get(vid, 0) + self.n_out.get(vid, 0) > 0

    def interior_point(self, vid):
        """True when vid currently looks like the interior of a built edge:
        exactly one incoming and one outgoing built edge."""
        return self.n_in.get(vid, 0) == 1 and self.n_out.get(vid, 0) == 1

    def reachable(self, a, b):
        if a == b:
            return True
        seen = {a}
        stack = [a]
        tb = self.graph.time(b)
        while stack:
            u = stack.pop()
            for e in self.graph.out_edges[u]:
                if e not in self.edges or e.dst in seen:
                    continue
                if e.dst == b:
                    return True
                if self.graph.time(e.dst) < tb:
                    seen.add(e.dst)
                    stack.append(e.dst)
        return False


def verify_tower(graph: TimeLikeGraph, tower: Tower) -> TowerReport:
    """Replay a tower against the graph, reporting every violated rule."""
    rep = TowerReport()
    built = _Built(graph)

    base_edges = tower.base.edges()
    if tower.base.start != graph.initial.id or \
            tower.base.end != graph.terminal.id:
        rep.add("base is not a full time path (wrong endpoints)")
    base_times = [graph.time(v) for v in tower.base.vertices
                  if v in graph.vertex_by_id]
    if len(base_times) != len(tower.base.vertices):
        rep.add("base references unknown vertices")
    elif any(a >= b for a, b in zip(base_times, base_times[1:])):
        rep.add("base is not strictly time increasing")
    for e in base_edges:
        if e not in graph.edge_set:
            rep.add(f"base uses edge {e} absent from the graph")
        built.add(e)

    for idx, step in enumerate(tower.steps):
        prefix = f"step {idx}"
        if len(step.path) < 2:
            rep.add(f"{prefix}: path needs at least one edge")
            continue
        lo, hi = step.path[0], step.path[-1]
        for v in (lo, hi):
            if not built.has_vertex(v):
                rep.add(f"{prefix}: attachment point {v} not yet built")
            elif not built.interior_point(v):
                rep.add(f"{prefix}: attachment point {v} is not in the "
                        "interior of a built edge (degree must be exactly "
                        "one-in/one-out)")
        for v in step.path[1:-1]:
            if built.has_vertex(v):
                rep.add(f"{prefix}: interior vertex {v} already built")
        times = [graph.time(v) if v in graph.vertex_by_id else None
                 for v in step.path]
        if None in times:
            rep.add(f"{prefix}: unknown vertex in path")
            continue
        if any(t1 >= t2 for t1, t2 in zip(times, times[1:])):
            rep.add(f"{prefix}: path is not strictly time increasing")
        ok_edges = True
        for e in step.edges():
            if e not in graph.edge_set:
                rep.add(f"{prefix}: edge {e} absent from the graph")
                ok_edges = False
            elif e in built.edges:
                rep.add(f"{prefix}: edge {e} already built")
                ok_edges = False
        if step.witness:
            wit_ok = _check_witness(graph, built, step.witness, lo, hi, rep,
                                    prefix)
        else:
            wit_ok = built.reachable(lo, hi)
            if not wit_ok:
                rep.add(f"{prefix}: no built time path passes through both "
                        f"attachment points {lo} and {hi}")
        if ok_edges:
            for e in step.edges():
                built.add(e)

    if built.edges != set(graph.edges):
        missing = set(graph.edges) - built.edges
        extra = built.edges - set(graph.edges)
        if missing:
            rep.add(f"tower does not cover edges: {sorted(missing, key=repr)}")
        if extra:
            rep.add(f"tower adds foreign edges: {sorted(extra, key=repr)}")
    return rep


def _check_witness(graph, built, witness, lo, hi, rep, prefix):
    if lo not in witness or hi not in witness:
        rep.add(f"{prefix}: witness path misses an attachment point")
        return False
    ok = True
    for a, b in zip(witness, witness[1:]):
        if not any(Edge(a, b, s) in built.edges for s in (0, 1)):
            rep.add(f"{prefix}: witness hop {a}->{b} not a built edge")
            ok = False
    return ok


def _candidate_steps(graph, built):
    """All legal next attachments, ordered greedily: candidates from the
    latest eligible vertex first, then by earliest endpoint time."""
    cands = []
    starts = [
        v for v in graph.vertices
        if built.interior_point(v.id)
        and any(e not in built.edges for e in graph.out_edges[v.id])
    ]
    starts.sort(key=lambda v: (-v.time, v.id))
    for rank, v in enumerate(starts):
        found = []
        path = [v.id]
        slots = []

        def walk(u):
            for e in sorted(graph.out_edges[u], key=lambda e: (e.dst, e.slot)):
                if e in built.edges:
                    continue
                if built.has_vertex(e.dst):
                    if built.interior_point(e.dst) and \
                            built.reachable(path[0], e.dst):
                        found.append(TimePath(tuple(path + [e.dst]),
                                              tuple(slots + [e.slot])))
                    continue
                path.append(e.dst)
                slots.append(e.slot)
                walk(e.dst)
                path.pop()
                slots.pop()

        walk(v.id)
        found.sort(key=lambda p: (graph.time(p.end), p.end, p.vertices,
                                  p.slots))
        for p in found:
            cands.append((rank, p))
    return [p for _, p in cands]


def _find_witness(graph, built, lo, hi):
    """A built time path through lo and hi: extend a built lo->hi path to a
    full time path of the built subgraph."""
    back = [lo]
    while True:
        u = back[-1]
        ins = [e for e in graph.in_edges[u] if e in built.edges]
        if not ins:
            break
        back.append(ins[0].src)
    back.reverse()

    def fwd_to(target):
        # deterministic DFS inside built edges
        stack = [(back[-1], [])]
        seen = set()
        tt = graph.time(target)
        while stack:
            u, acc = stack.pop()
            if u == target:
                return acc
            if u in seen or graph.time(u) > tt:
                continue
            seen.add(u)
            for e in sorted(graph.out_edges[u], key=lambda e: (e.dst, e.slot),
                            reverse=True):
                if e in built.edges:
                    stack.append((e.dst, acc + [e.dst]))
        return None

    mid = fwd_to(hi)
    if mid is None:
        return ()
    path = back + mid
    while True:
        u = path[-1]
        outs = [e for e in graph.out_edges[u] if e in built.edges]
        if not outs:
            break
        path.append(outs[0].dst)
    return tuple(path)


def build_tower(graph: TimeLikeGraph, base: Optional[TimePath] = None,
                rng=None) -> Tower:
    """Find a construction tower for the graph.

    Greedy per the standard argument (attach from the latest vertex that
    still has an unbuilt outgoing edge), backtracking with memoized dead
    ends so that failure means no tower exists for any step order; in that
    case a NotNCCError carrying the minimal co-terminal cell witness is
    raised.
    """
    report = validate_tlg(graph, mode="strict")
    if not report.ok:
        raise InvalidGraphError(str(report))
    bases = [base] if base is not None else full_time_paths(graph)
    if rng is not None:
        order = rng.permutation(len(bases))
        bases = [bases[i] for i in order]
    all_edges = set(graph.edges)
    for bp in bases:
        steps = _tower_search(graph, bp, all_edges, rng)
        if steps is not None:
            return Tower(bp, tuple(steps))
    verdict = is_ncc(graph)
    raise NotNCCError("graph admits no construction tower",
                      witness=verdict.witness)


def _tower_search(graph, base, all_edges, rng):
    built = _Built(graph)
    for e in base.edges():
        if e not in graph.edge_set:
            return None
        built.add(e)
    dead = set()

    def search():
        if built.edges == all_edges:
            return []
        key = frozenset(built.edges)
        if key in dead:
            return None
        cands = _candidate_steps(graph, built)
        if rng is not None and len(cands) > 1:
            order = rng.permutation(len(cands))
            cands = [cands[i] for i in order]
        for p in cands:
            wit = _find_witness(graph, built, p.start, p.end)
            if not wit:
                continue
            step = ConstructionStep(p.vertices, p.slots, wit)
            for e in step.edges():
                built.add(e)
            rest = search()
            if rest is not None:
                return [step] + rest
            for e in step.edges():
                built.remove(e)
        dead.add(key)
        return None

    return search()


def random_towers(graph: TimeLikeGraph, n: int, rng) -> list:
    """n distinct-order verified towers found with randomized search."""
    towers = []
    seen = set()
    attempts = 0
    while len(towers) < n and attempts < 50 * n:
        attempts += 1
        t = build_tower(graph, rng=rng)
        key = (t.base.vertices, tuple(s.path for s in t.steps))
        if key not in seen:
            seen.add(key)
            towers.append(t)
    return towers


# -- generators ---------------------------------------------------------------

def random_ncc_tlg(rng, n_steps: int, t0: float = 0.0, t1: float = 1.0):
    """Random strict NCC graph grown by n_steps legal attachments.

    Returns ``(graph, tower)``; the tower verifies by construction.
    """
    next_id = 2
    vertices = {0: Vertex(0, t0), 1: Vertex(1, t1)}
    edges = [Edge(0, 1, 0)]
    base = TimePath((0, 1))
    steps = []

    def subdivide(edge, t, vid):
        edges.remove(edge)
        # keep slot 0 on the two halves; a parallel mate keeps its own slot
        lo_slot = 0 if not any(
            e.src == edge.src and e.dst == vid for e in edges) else 1
        hi_slot = 0 if not any(
            e.src == vid and e.dst == edge.dst for e in edges) else 1
        edges.append(Edge(edge.src, vid, lo_slot))
        edges.append(Edge(vid, edge.dst, hi_slot))

    for _ in range(n_steps):
        g = TimeLikeGraph(vertices.values(), edges, mode="strict")
        paths = full_time_paths(g)
        sigma = paths[rng.integers(len(paths))]
        hops = list(zip(sigma.vertices, sigma.vertices[1:], sigma.slots))
        i = int(rng.integers(len(hops)))
        j = int(rng.integers(len(hops)))
        if i > j:
            i, j = j, i
        e1 = Edge(*hops[i])
        e2 = Edge(*hops[j])
        va, vb = next_id, next_id + 1
        next_id += 2
        if i == j:
            ta, tb = sorted(rng.uniform(vertices[e1.src].time,
                                        vertices[e1.dst].time, size=2))
            if ta == tb:
                next_id -= 2
                continue
            vertices[va] = Vertex(va, float(ta))
            vertices[vb] = Vertex(vb, float(tb))
            subdivide(e1, ta, va)
            inner = next(e for e in edges if e.src == va)
            subdivide(inner, tb, vb)
            edges.append(Edge(va, vb, 1))
            wit = sigma.vertices[:i + 1] + (va, vb) + sigma.vertices[i + 1:]
            steps.append(ConstructionStep((va, vb), (1,), wit))
        else:
            ta = float(rng.uniform(vertices[e1.src].time,
                                   vertices[e1.dst].time))
            tb = float(rng.uniform(vertices[e2.src].time,
                                   vertices[e2.dst].time))
            vertices[va] = Vertex(va, ta)
            vertices[vb] = Vertex(vb, tb)
            subdivide(e1, ta, va)
            subdivide(e2, tb, vb)
            edges.append(Edge(va, vb, 0))
            wit = (sigma.vertices[:i + 1] + (va,)
                   + sigma.vertices[i + 1:j + 1] + (vb,)
                   + sigma.vertices[j + 1:])
            steps.append(ConstructionStep((va, vb), (0,), wit))

    graph = TimeLikeGraph(vertices.values(), edges, mode="strict")
    # Rebuild the tower against the final graph: the recorded two-vertex
    # steps are correct (later subdivisions never touch step interiors,
    # which are empty), but base/witness hops may have been subdivided.
    tower = build_tower(graph)
    return graph, tower


def random_tlg(rng, n: int, max_tries: int = 10_000) -> TimeLikeGraph:
    """A uniform-ish random strict TLG on n vertices (NCC or not), built by
    assigning each vertex's incoming edges at random with restarts."""
    if n < 2 or n % 2:
        # degree sum 2 + 3(n-2) must be even
        raise TLGError(f"no strict TLG exists on {n} vertices")
    for _ in range(max_tries):
        caps = [1] + [0] * (n - 1)
        edges = []
        ok = True
        for k in range(1, n):
            n_in = 1 if k == n - 1 else int(rng.integers(1, 3))
            sources = [i for i in range(k) for _ in range(caps[i])]
            if len(sources) < n_in:
                ok = False
                break
            pick = rng.choice(len(sources), size=n_in, replace=False)
            combo = sorted(sources[int(i)] for i in pick)
            for i in set(combo):
                caps[i] -= combo.count(i)
                for s in range(combo.count(i)):
                    edges.append(Edge(i, k, s))
            if k < n - 1:
                caps[k] = 3 - n_in
            rem = sum(caps[:k + 1])
            future_internal = max(0, n - 2 - k)
            max_demand = 2 * future_internal + (1 if k < n - 1 else 0)
            if rem > max_demand or (k < n - 1 and rem < 1):
                ok = False
                break
        if ok and all(c == 0 for c in caps):
            times = sorted(float(t) for t in rng.uniform(0.0, 1.0, size=n))
            verts = [Vertex(i, times[i]) for i in range(n)]
            g = TimeLikeGraph(verts, edges)
            if validate_tlg(g).ok:
                return g
    raise TLGError(f"could not sample a strict TLG on {n} vertices")


def enumerate_strict_tlgs(n: int) -> Iterator[TimeLikeGraph]:
    """Every strict TLG on n vertices with times 0..n-1 (one representative
    per time-ordering; time values themselves are immaterial)."""
    if n < 2:
        return
    if n == 2:
        yield TimeLikeGraph([Vertex(0, 0.0), Vertex(1, 1.0)], [Edge(0, 1)])
        return
    verts = [Vertex(i, float(i)) for i in range(n)]
    # out-capacity: v0 has 1; internal k has 3 - in_k; terminal 0
    edges = []
    caps = [1] + [0] * (n - 1)

    def assign(k):
        if k == n:
            if all(c == 0 for c in caps):
                yield TimeLikeGraph(verts, list(edges))
            return
        need = 1 if k == n - 1 else None
        choices = [1] if k == n - 1 else [1, 2]
        for n_in in choices:
            sources = [i for i in range(k) if caps[i] > 0]
            for combo in itertools.combinations_with_replacement(
                    sources, n_in):
                if any(combo.count(i) > caps[i] for i in set(combo)):
                    continue
                for i in set(combo):
                    caps[i] -= combo.count(i)
                if k < n - 1:
                    caps[k] = 3 - n_in
                # prune: remaining out-capacity must fit future in-demand,
                # and the next vertex needs at least one available source
                rem = sum(caps[:k + 1])
                future_internal = max(0, n - 2 - k)
                max_demand = 2 * future_internal + (1 if k < n - 1 else 0)
                if rem <= max_demand and (k == n - 1 or rem >= 1):
                    for slot_src in set(combo):
                        cnt = combo.count(slot_src)
                        for s in range(cnt):
                            edges.append(Edge(slot_src, k, s))
                    yield from assign(k + 1)
                    for slot_src in set(combo):
                        cnt = combo.count(slot_src)
                        for _ in range(cnt):
                            edges.pop()
                for i in set(combo):
                    caps[i] += combo.count(i)
                if k < n - 1:
                    caps[k] = 0

    yield from assign(1)


# -- vertex-disjoint existence fallback ---------------------------------------

def has_two_disjoint_paths(graph: TimeLikeGraph, a: int, b: int) -> bool:
    """Existence of two time paths a->b with disjoint interiors, decided by
    max-flow with unit vertex capacities (flow value 2).  Polynomial-time
    fallback to the enumerating cell search on large graphs."""
    # split each vertex v into v_in -> v_out with capacity 1 (inf for a, b)
    cap = {}

    def add(u, v, c):
        cap[(u, v)] = cap.get((u, v), 0) + c

    INF = 10 ** 9
    for v in graph.vertices:
        add(("i", v.id), ("o", v.id), INF if v.id in (a, b) else 1)
    for e in graph.edges:
        add(("o", e.src), ("i", e.dst), 1 if e.slot == 0 else 2)
    # (two parallel edges contribute capacity 2 between the same pair)
    adj = {}
    for (u, v) in cap:
        adj.setdefault(u, set()).add(v)
        adj.setdefault(v, set()).add(u)
    flow = {}
    src, snk = ("i", a), ("o", b)

    def bfs():
        parent = {src: None}
        queue = [src]
        while queue:
            u = queue.pop(0)
            if u == snk:
                break
            for v in adj.get(u, ()):
                resid = cap.get((u, v), 0) - flow.get((u, v), 0) \
                    + flow.get((v, u), 0)
                if resid > 0 and v not in parent:
                    parent[v] = u
                    queue.append(v)
        if snk not in parent:
            return False
        v = snk
        while parent[v] is not None:
            u = parent[v]
            flow[(u, v)] = flow.get((u, v), 0) + 1
            if flow.get((v, u), 0) > 0:
                flow[(v, u)] -= 1
                flow[(u, v)] -= 1
            v = u
        return True

    value = 0
    while value < 2 and bfs():
        value += 1
    return value >= 2
