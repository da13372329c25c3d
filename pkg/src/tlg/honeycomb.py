"""Natural Brownian motion on the hexagonal lattice and its scaling limit.

The lattice has flat-top hexagonal cells of diameter rho: vertices sit at
(i*rho/4, j*rho1) with rho1 = rho*sqrt(3)/4, where even layers carry
horizontal indices i = 0, 4 (mod 6) and odd layers i = 1, 3 (mod 6).  The
covariance of the process between a high vertex and a vertex on the time
axis is computed three independent ways:

  * an exact layer-by-layer dynamic program over the descent walk whose
    one-step law is the gambler's-ruin probability between the two lower
    endpoints of the merged edge through the current vertex;
  * the exact Gaussian engine on a finite window that is an element of a
    construction tower for the lattice (zigzag base plus rows of hexagon
    caps), cross-checked by Monte Carlo;
  * the closed-form scaling limit (a clamped-Gaussian expectation, by the
    reflection principle for space-time Brownian motion).

The per-step displacement of the walk is a 4-state Markov chain; its
stationary law and second moment are computed exactly from the lattice
descent rule.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field as dfield
from fractions import Fraction
from typing import Optional

from .core import (ConstructionStep, Edge, TimeLikeGraph, TimePath, Tower,
                   TLGError, Vertex, verify_tower)
from .harness import AbsorptionDistribution
from .gauss import TwoSidedWienerLaw, build_field
from .sampler import RngSpec, mc_covariance

ROOT3 = math.sqrt(3.0)

#: aggregation key for walk mass frozen at nonpositive times (value 0 there)
SINK = "sink"


# -- lattice geometry -----------------------------------------------------------

@dataclass(frozen=True, order=True)
class LatticePoint:
    """Lattice vertex: horizontal index i (time = i*rho/4) and layer j
    (height = j*rho1)."""

    i: int
    j: int

    def time(self, rho: float) -> float:
        return self.i * rho / 4.0

    def height(self, rho: float) -> float:
        return self.j * rho * ROOT3 / 4.0


def layer_residues(j: int):
    """Allowed horizontal residues (mod 6) of vertices on layer j."""
    return (0, 4) if j % 2 == 0 else (1, 3)


def is_lattice_vertex(p: LatticePoint) -> bool:
    return p.i % 6 in layer_residues(p.j)


def vertex_kind(p: LatticePoint) -> str:
    """'L' for a vertex whose horizontal edge goes left, 'R' for right."""
    if not is_lattice_vertex(p):
        raise TLGError(f"{p} is not a lattice vertex")
    if p.j % 2 == 0:
        return "L" if p.i % 6 == 0 else "R"
    return "L" if p.i % 6 == 3 else "R"


def descent_offsets(p: LatticePoint):
    """The two horizontal offsets (in units of rho/4) to the endpoints of
    the merged edge one layer down, with their ruin probabilities.

    An L vertex at index i sits inside the collapsed chain
    (i-3, j-1) -- (i-2, j) -- (i, j) -- (i+1, j-1), so the walk moves to
    i+1 with probability (i - (i-3)) / ((i+1) - (i-3)) = 3/4; mirrored for
    an R vertex.
    """
    if vertex_kind(p) == "L":
        return ((+1, Fraction(3, 4)), (-3, Fraction(1, 4)))
    return ((-1, Fraction(3, 4)), (+3, Fraction(1, 4)))


# -- displacement chain -----------------------------------------------------------

#: per-step displacements in units of rho/4, in increasing order
CHAIN_OFFSETS = (-3, -1, 1, 3)


@dataclass(frozen=True)
class ChainSpec:
    """The walk's per-step displacement chain: states (offsets times
    rho/4) and the 4x4 transition matrix, derived from the lattice."""

    rho: object = 1
    states: tuple = ()
    matrix: tuple = ()

    def __post_init__(self):
        if not self.states:
            object.__setattr__(
                self, "states",
                tuple(Fraction(k, 4) * self.rho for k in CHAIN_OFFSETS))
        if not self.matrix:
            object.__setattr__(self, "matrix", _chain_matrix())


def _chain_matrix():
    """Transition matrix over CHAIN_OFFSETS, derived from descent_offsets:
    a displacement of -1 or -3 lands on an L vertex, +1 or +3 on an R
    vertex, and the next displacement is drawn from that vertex's rule."""
    # representatives far from the axis, one per landing kind
    reps = {"L": LatticePoint(6, 2), "R": LatticePoint(4, 2)}
    rows = []
    for c in CHAIN_OFFSETS:
        kind = "L" if c < 0 else "R"
        row = [Fraction(0)] * 4
        for off, prob in descent_offsets(reps[kind]):
            row[CHAIN_OFFSETS.index(off)] += prob
        rows.append(tuple(row))
    return tuple(rows)


def _solve_exact(A, b):
    """Gaussian elimination over Fractions for a small square system."""
    n = len(b)
    M = [[Fraction(x) for x in row] + [Fraction(bi)]
         for row, bi in zip(A, b)]
    for col in range(n):
        piv = next(r for r in range(col, n) if M[r][col] != 0)
        M[col], M[piv] = M[piv], M[col]
        inv = 1 / M[col][col]
        M[col] = [x * inv for x in M[col]]
        for r in range(n):
            if r != col and M[r][col]:
                f = M[r][col]
                M[r] = [x - f * y for x, y in zip(M[r], M[col])]
    return tuple(M[r][n] for r in range(n))


def chain_stationary(spec: Optional[ChainSpec] = None):
    """Exact stationary vector of the displacement chain (pi P = pi,
    sum pi = 1)."""
    P = (spec or ChainSpec()).matrix
    n = len(P)
    # (P^T - I) pi = 0 with the last balance equation replaced by sum = 1
    A = [[P[r][c] - (1 if r == c else 0) for r in range(n)]
         for c in range(n - 1)]
    A.append([Fraction(1)] * n)
    b = [Fraction(0)] * (n - 1) + [Fraction(1)]
    return _solve_exact(A, b)


def step_variance(rho=1):
    """Second moment of the per-step displacement in the stationary
    regime: sum_i pi_i * state_i^2.  Exact for exact rho."""
    pi = chain_stationary()
    factor = sum(p * Fraction(k, 4) ** 2 for p, k in zip(pi, CHAIN_OFFSETS))
    return factor * rho * rho


# -- window spec and nearest vertex ----------------------------------------------

@dataclass(frozen=True)
class HexWindowSpec:
    """A finite lattice window: cell diameter rho, horizontal extent
    [t_min, t_max], and layers 0..j_max (plus the layer -1 half of the
    base zigzag).  The anchor hexagon has its leftmost vertex at the
    origin and two sides parallel to the time axis."""

    rho: float
    t_min: float
    t_max: float
    j_max: int
    anchor: LatticePoint = LatticePoint(0, 0)

    def __post_init__(self):
        if self.rho <= 0:
            raise TLGError("rho must be positive")
        if self.t_min >= self.t_max:
            raise TLGError("empty horizontal extent")
        if self.j_max < 0:
            raise TLGError("j_max must be nonnegative")
        if self.anchor != LatticePoint(0, 0):
            raise TLGError("the anchor hexagon is fixed at the origin")

    @property
    def rho1(self) -> float:
        return self.rho * ROOT3 / 4.0


def _target_height(x: float, rho: float, scaling: str) -> float:
    """Plane height queried for the upper vertex.  The two published
    readings differ by a constant factor; both are supported and the
    default follows the statement-level one."""
    if scaling == "theorem":
        return 4.0 * x / (ROOT3 * rho)
    if scaling == "proof":
        return ROOT3 * x / (4.0 * rho)
    raise TLGError(f"unknown scaling {scaling!r}")


def nearest_vertex(spec: HexWindowSpec, point,
                   layer: Optional[int] = None) -> LatticePoint:
    """The lattice vertex closest (Euclidean) to a plane point (t, y);
    ties broken by smaller time, then smaller height.  `layer` restricts
    the search to one layer."""
    t, y = point
    if not spec.t_min - 1e-9 <= t <= spec.t_max + 1e-9:
        raise TLGError(f"time {t} outside the window extent "
                       f"[{spec.t_min}, {spec.t_max}]")
    if layer is None:
        j0 = y / spec.rho1
        if not -1.6 <= j0 <= spec.j_max + 0.6:
            raise TLGError(f"height {y} outside the window layers")
        layers = range(max(-1, math.floor(j0) - 1),
                       min(spec.j_max, math.ceil(j0) + 1) + 1)
    else:
        layers = (layer,)
    i0 = 4.0 * t / spec.rho
    best = None
    for j in layers:
        for i in range(math.floor(i0) - 6, math.floor(i0) + 8):
            if i % 6 not in layer_residues(j):
                continue
            d2 = (i - i0) ** 2 + (j - y / spec.rho1) ** 2 * 3.0
            # distances in units of rho/4: layer spacing is sqrt(3)
            key = (d2, i, j)
            if best is None or key < best:
                best = key
    p = LatticePoint(best[1], best[2])
    if not spec.t_min - 1e-9 <= p.time(spec.rho) <= spec.t_max + 1e-9:
        raise TLGError(f"nearest vertex {p} falls outside the extent")
    return p


def spec_for(rho: float, u: float, v: float, x: float,
             scaling: str = "theorem", margin: int = 12) -> HexWindowSpec:
    """A window spec sized so that the descent cone from the upper query
    vertex, the time-axis query, and the pinned axis all fit."""
    j_star = max(0, round(_target_height(x, rho, scaling) / (rho * ROOT3 / 4)))
    iv = round(4.0 * v / rho)
    iu = round(4.0 * u / rho)
    lo = min(-6, iv - 3 * j_star - margin, iu - margin)
    hi = max(6, iv + 3 * j_star + margin, iu + margin)
    return HexWindowSpec(rho, lo * rho / 4.0, hi * rho / 4.0, j_star)


# -- descent walk as exact dynamic programming ------------------------------------

def descent_layers(spec: HexWindowSpec, start: LatticePoint,
                   exact: bool = False):
    """Per-layer mass distributions of the descent walk from `start`:
    element m is the law after m steps.  Mass at a nonpositive time
    freezes in place (the walk is stopped there); mass on layer 0 is
    absorbed.  With exact=True the masses are Fractions."""
    if not is_lattice_vertex(start):
        raise TLGError(f"start {start} is not a lattice vertex")
    if start.j < 0 or start.j > spec.j_max:
        raise TLGError(f"start layer {start.j} outside 0..{spec.j_max}")
    one = Fraction(1) if exact else 1.0
    layers = [{start: one}]
    for _ in range(start.j):
        cur = layers[-1]
        nxt = {}
        for p, m in cur.items():
            if p.i <= 0 or p.j == 0:
                nxt[p] = nxt.get(p, 0) + m
                continue
            for off, prob in descent_offsets(p):
                q = LatticePoint(p.i + off, p.j - 1)
                nxt[q] = nxt.get(q, 0) + m * (prob if exact
                                              else float(prob))
        layers.append(nxt)
    total = math.fsum(float(m) for m in layers[-1].values())
    if abs(total - 1.0) > 1e-9:
        raise TLGError(f"walk mass drifted to {total}")
    return layers


def descend_dp(spec: HexWindowSpec, start: LatticePoint,
               exact: bool = False) -> AbsorptionDistribution:
    """Absorption law of the descent walk: layer-0 vertices at positive
    times, plus the zero-value SINK aggregating all mass frozen at
    nonpositive times."""
    final = descent_layers(spec, start, exact)[-1]
    weights = {}
    for p, m in final.items():
        key = SINK if p.i <= 0 else p
        weights[key] = weights.get(key, 0) + m
    return AbsorptionDistribution(weights)


def finite_covariance(spec: HexWindowSpec, u: float, v: float, x: float,
                      scaling: str = "theorem") -> float:
    """E(X(u_bar) X(v_bar)) at mesh rho: u_bar is the layer-0 vertex
    nearest (u, 0), v_bar the vertex nearest (v, height(x)); the value is
    sum over absorption points w > 0 of P(w) * min(t_w, t_u), since the
    layer-0 covariance is t1 ^ t2 for positive times and the sink carries
    value 0."""
    if u < 0 or v <= 0 or x < 0:
        raise TLGError("need u >= 0, v > 0, x >= 0")
    u_bar = nearest_vertex(spec, (u, 0.0), layer=0)
    v_bar = nearest_vertex(spec, (v, _target_height(x, spec.rho, scaling)))
    dist = descend_dp(spec, v_bar)
    tu = u_bar.time(spec.rho)
    if tu <= 0:
        return 0.0
    return math.fsum(
        float(m) * min(p.time(spec.rho), tu)
        for p, m in dist.weights.items() if p is not SINK)


# -- scaling limit ----------------------------------------------------------------

def _phi_std(a: float) -> float:
    return math.exp(-0.5 * a * a) / math.sqrt(2.0 * math.pi)


def _Phi(a: float) -> float:
    return 0.5 * math.erfc(-a / math.sqrt(2.0))


def limit_covariance(u: float, v: float, x: float) -> float:
    """The published closed form of the scaling limit, evaluated verbatim:

        sqrt(5x)/(8 sqrt(pi)) * (exp(-16(u+v)^2/(5x)) - exp(-16(u-v)^2/(5x)))
        - (1/2)(u-v)(2 Phi(4(u-v)/sqrt(5x)) - 1)
        + (1/2)(u+v)(2 Phi(4(u+v)/sqrt(5x)) - 1)

    Note: this display is internally inconsistent — its exponential terms
    correspond to a Gaussian of variance 5x/32 while its Phi arguments
    correspond to 5x/16 (a missing sqrt(2)).  Use limit_covariance_general
    for the self-consistent clamped-Gaussian form; this function is kept
    verbatim so the discrepancy can be reported.
    """
    if u < 0 or v < 0 or x <= 0:
        raise TLGError("need u, v >= 0 and x > 0")
    if u == 0 or v == 0:
        return 0.0
    s5x = math.sqrt(5.0 * x)
    out = s5x / (8.0 * math.sqrt(math.pi)) * (
        math.exp(-16.0 * (u + v) ** 2 / (5.0 * x))
        - math.exp(-16.0 * (u - v) ** 2 / (5.0 * x)))
    out -= 0.5 * (u - v) * (2.0 * _Phi(4.0 * (u - v) / s5x) - 1.0)
    out += 0.5 * (u + v) * (2.0 * _Phi(4.0 * (u + v) / s5x) - 1.0)
    return out


def limit_covariance_general(u: float, v: float, sigma2: float) -> float:
    """E[clamp(S, -u, u)] for S ~ N(v, sigma2): the exact value of the
    reflected space-time Brownian functional when the absorbed walk's
    horizontal law is Gaussian with variance sigma2.

    Closed form:  sd*(phi((u+v)/sd) - phi((u-v)/sd))
                  - (1/2)(u-v)(2 Phi((u-v)/sd) - 1)
                  + (1/2)(u+v)(2 Phi((u+v)/sd) - 1).
    """
    if u < 0 or v < 0 or sigma2 <= 0:
        raise TLGError("need u, v >= 0 and sigma2 > 0")
    if u == 0 or v == 0:
        return 0.0
    sd = math.sqrt(sigma2)
    ap, am = (u + v) / sd, (u - v) / sd
    return (sd * (_phi_std(ap) - _phi_std(am))
            - 0.5 * (u - v) * (2.0 * _Phi(am) - 1.0)
            + 0.5 * (u + v) * (2.0 * _Phi(ap) - 1.0))


# -- convergence study ------------------------------------------------------------

@dataclass
class ConvergenceRow:
    rho: float
    j_star: int
    sigma2: float           # j_star * step_variance(rho)
    finite: float
    limit: float            # verbatim closed form
    limit_general: float    # self-consistent form at sigma2
    abs_err: float
    rel_err: float
    abs_err_general: float
    rel_err_general: float
    cauchy_diff: Optional[float] = None


@dataclass
class ConvergenceStudy:
    u: float
    v: float
    x: float
    scaling: str
    rows: list
    offset_factor: float = float("nan")

    def cauchy_decreasing(self) -> bool:
        ds = [r.cauchy_diff for r in self.rows if r.cauchy_diff is not None]
        return all(a > b for a, b in zip(ds, ds[1:]))


def convergence_study(u: float, v: float, x: float, rhos,
                      scaling: str = "theorem") -> ConvergenceStudy:
    """finite_covariance against the closed forms over a decreasing rho
    schedule, with successive (Cauchy) differences.  offset_factor is the
    fitted constant finite/limit at the smallest rho, reported because the
    verbatim closed form carries a systematic offset."""
    rhos = list(rhos)
    if any(r <= 0 for r in rhos) or \
            any(a <= b for a, b in zip(rhos, rhos[1:])):
        raise TLGError("rhos must be positive and strictly decreasing")
    lim = limit_covariance(u, v, x) if u > 0 and v > 0 else 0.0
    rows = []
    prev = None
    for rho in rhos:
        spec = spec_for(rho, u, v, x, scaling)
        fin = finite_covariance(spec, u, v, x, scaling)
        sig2 = float(spec.j_max * step_variance(rho))
        gen = (limit_covariance_general(u, v, sig2)
               if u > 0 and v > 0 and sig2 > 0 else 0.0)
        rows.append(ConvergenceRow(
            rho=rho, j_star=spec.j_max, sigma2=sig2, finite=fin, limit=lim,
            limit_general=gen,
            abs_err=abs(fin - lim),
            rel_err=abs(fin - lim) / abs(lim) if lim else 0.0,
            abs_err_general=abs(fin - gen),
            rel_err_general=abs(fin - gen) / abs(gen) if gen else 0.0,
            cauchy_diff=None if prev is None else abs(fin - prev)))
        prev = fin
    offset = rows[-1].finite / lim if lim else float("nan")
    return ConvergenceStudy(u, v, x, scaling, rows, offset)


def export_convergence_csv(study: ConvergenceStudy, path) -> None:
    cols = ["rho", "j_star", "sigma2", "finite", "limit", "limit_general",
            "abs_err", "rel_err", "abs_err_general", "rel_err_general",
            "cauchy_diff"]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(cols)
        for r in study.rows:
            w.writerow(["" if getattr(r, c) is None
                        else f"{getattr(r, c):.17g}" if c != "j_star"
                        else r.j_star for c in cols])


# -- finite windows as time-like graphs --------------------------------------------

@dataclass
class HexWindow:
    """A finite lattice window realized as a (relaxed) time-like graph
    together with the tower that builds it: a zigzag base full time path
    along layers 0/-1 plus one cap path per hexagon, row by row."""

    spec: HexWindowSpec
    graph: TimeLikeGraph
    coords: dict            # vertex id -> LatticePoint
    ids: dict               # LatticePoint -> vertex id
    tower: Tower

    def vid(self, point: LatticePoint) -> int:
        try:
            return self.ids[point]
        except KeyError:
            raise TLGError(f"{point} is not a window vertex") from None


def hex_window(spec: HexWindowSpec) -> HexWindow:
    """Build the window graph and its construction tower.

    The base zigzag spans the extent on layers 0/-1; row r (r = 1..j_max)
    attaches the cap of every hexagon whose two cap endpoints are, at that
    moment, interior points of the built subgraph (one-in/one-out), so the
    window shrinks by three horizontal units per side per row — the same
    slope as the descent cone.
    """
    rho = spec.rho
    i_lo = math.ceil(4.0 * spec.t_min / rho - 1e-9)
    while i_lo % 6:
        i_lo += 1
    i_hi = math.floor(4.0 * spec.t_max / rho + 1e-9)
    while i_hi % 6 != 4:
        i_hi -= 1
    if i_hi < i_lo + 4:
        raise TLGError("extent too small for even one zigzag period")

    ids, verts, edges = {}, [], []

    def add_vertex(p: LatticePoint) -> int:
        vid = len(verts)
        ids[p] = vid
        verts.append(Vertex(vid, p.time(rho)))
        return vid

    n_in, n_out = {}, {}

    def add_edge(a: LatticePoint, b: LatticePoint):
        edges.append(Edge(ids[a], ids[b]))
        n_out[a] = n_out.get(a, 0) + 1
        n_in[b] = n_in.get(b, 0) + 1

    # base zigzag: (a,0) \ (a+1,-1) _ (a+3,-1) / (a+4,0) _ (a+6,0) ...
    zig = []
    a = i_lo
    while a + 4 <= i_hi:
        zig.extend([LatticePoint(a, 0), LatticePoint(a + 1, -1),
                    LatticePoint(a + 3, -1), LatticePoint(a + 4, 0)])
        a += 6
    for p in zig:
        add_vertex(p)
    for p, q in zip(zig, zig[1:]):
        add_edge(p, q)

    def interior(p):
        return n_in.get(p, 0) == 1 and n_out.get(p, 0) == 1

    steps = []
    for r in range(1, spec.j_max + 1):
        jb = r - 1
        res = 0 if jb % 2 == 0 else 3
        b = i_lo + ((res - i_lo) % 6)
        while b + 4 <= i_hi:
            lo = LatticePoint(b, jb)
            hi = LatticePoint(b + 4, jb)
            if lo in ids and hi in ids and interior(lo) and interior(hi):
                p1 = LatticePoint(b + 1, r)
                p3 = LatticePoint(b + 3, r)
                add_vertex(p1)
                add_vertex(p3)
                add_edge(lo, p1)
                add_edge(p1, p3)
                add_edge(p3, hi)
                steps.append(ConstructionStep(
                    (ids[lo], ids[p1], ids[p3], ids[hi])))
            b += 6

    graph = TimeLikeGraph(verts, edges, mode="relaxed")
    tower = Tower(TimePath(tuple(ids[p] for p in zig)), tuple(steps))
    rep = verify_tower(graph, tower)
    if not rep.ok:
        raise TLGError(f"window tower failed to verify: {rep}")
    coords = {vid: p for p, vid in ids.items()}
    return HexWindow(spec, graph, coords, ids, tower)


def hexagon_patch(rho: float, leftmosts, stems: bool = False):
    """The union of hexagon boundaries, as a graph plus coordinate table.

    Each hexagon is named by its leftmost (L-kind) vertex.  With
    stems=True one horizontal stem edge is grafted onto the unique
    earliest and latest vertices so the patch becomes a valid relaxed
    time-like graph (useful for collapse / NCC checks); without stems the
    patch is a bare cycle union for cell-structure inspection.
    """
    pts, hops = set(), set()
    for lm in leftmosts:
        p = lm if isinstance(lm, LatticePoint) else LatticePoint(*lm)
        if vertex_kind(p) != "L":
            raise TLGError(f"{p} cannot be the leftmost vertex of a hexagon")
        i, j = p.i, p.j
        ring = [(i, j), (i + 1, j + 1), (i + 3, j + 1), (i + 4, j),
                (i + 3, j - 1), (i + 1, j - 1)]
        path_hops = [((i, j), (i + 1, j + 1)),
                     ((i + 1, j + 1), (i + 3, j + 1)),
                     ((i + 3, j + 1), (i + 4, j)),
                     ((i, j), (i + 1, j - 1)),
                     ((i + 1, j - 1), (i + 3, j - 1)),
                     ((i + 3, j - 1), (i + 4, j))]
        pts.update(LatticePoint(*q) for q in ring)
        hops.update((LatticePoint(*s), LatticePoint(*t))
                    for s, t in path_hops)
    if stems:
        first = min(pts, key=lambda p: (p.i, p.j))
        last = max(pts, key=lambda p: (p.i, p.j))
        if sum(1 for p in pts if p.i == first.i) > 1 or \
                sum(1 for p in pts if p.i == last.i) > 1:
            raise TLGError("patch has no unique extremal vertex to stem")
        lstem = LatticePoint(first.i - 2, first.j)
        rstem = LatticePoint(last.i + 2, last.j)
        pts.update([lstem, rstem])
        hops.update([(lstem, first), (last, rstem)])
    order = sorted(pts, key=lambda p: (p.i, p.j))
    ids = {p: k for k, p in enumerate(order)}
    verts = [Vertex(ids[p], p.time(rho)) for p in order]
    edges = [Edge(ids[s], ids[t]) for s, t in sorted(hops, key=lambda h: (
        h[0].i, h[0].j, h[1].i, h[1].j))]
    graph = TimeLikeGraph(verts, edges, mode="relaxed")
    coords = {vid: p for p, vid in ids.items()}
    return graph, coords


# -- end-to-end cross-check ---------------------------------------------------------

@dataclass
class CrossCheck:
    u_bar: LatticePoint
    v_bar: LatticePoint
    dp: float               # descent-walk dynamic program
    engine: float           # exact Gaussian engine on the window
    mc: float               # Monte Carlo estimate
    mc_stderr: float

    @property
    def mc_sigmas(self) -> float:
        return abs(self.mc - self.dp) / self.mc_stderr


def covariance_cross_check(spec: HexWindowSpec, u: float, v: float,
                           x: float, n: int, rng: RngSpec,
                           scaling: str = "theorem") -> CrossCheck:
    """The same covariance three ways: descent DP, exact engine on the
    window tower, and Monte Carlo with n samples."""
    u_bar = nearest_vertex(spec, (u, 0.0), layer=0)
    v_bar = nearest_vertex(spec, (v, _target_height(x, spec.rho, scaling)))
    dp = finite_covariance(spec, u, v, x, scaling)
    win = hex_window(spec)
    law = TwoSidedWienerLaw()
    field = build_field(win.graph, win.tower, law=law)
    pu, pv = win.vid(u_bar), win.vid(v_bar)
    engine = field.covariance(pu, pv)
    mc, stderr = mc_covariance(win.graph, win.tower, None, law,
                               pu, pv, n, rng)
    return CrossCheck(u_bar, v_bar, dp, engine, mc, stderr)
