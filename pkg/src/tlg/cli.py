"""Command-line surface: validation/NCC checks, covariance queries,
harness walks, mean-splitting embeddings, and the hexagonal-lattice
scaling study, with reproducible experiment manifests.

Exit codes: 0 success (for `check`: valid and NCC), 1 valid but
non-NCC, 2 invalid input or domain error, 3 unreadable/unparsable input.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import sys
from fractions import Fraction
from importlib import resources

from .core import (Edge, InvalidGraphError, NotNCCError, TimePath, TLGError,
                   build_tower, is_ncc, load_tlg, validate_tlg)
from ._plan import SampleGrid
from .gauss import (WienerLaw, TwoSidedWienerLaw, build_field,
                    covariance_inconsistency, cell_covariance_formula)
from .sampler import RngSpec, mc_covariance, experiment_manifest
from .harness import support_check, walk_distribution
from . import dubins as dub
from . import honeycomb as hc
from . import __version__


def tool_hash() -> str:
    """Hash of the installed package sources; embedded in manifests."""
    h = hashlib.sha256()
    pkg = resources.files("tlg")
    for entry in sorted(pkg.iterdir(), key=lambda e: e.name):
        if entry.name.endswith(".py"):
            h.update(entry.name.encode())
            h.update(entry.read_bytes())
    return h.hexdigest()[:12]


def parse_point(text: str):
    """Point syntax: "v:<id>" or "e:<from>-<to>[:slot]@<time>"."""
    try:
        kind, rest = text.split(":", 1)
        if kind == "v":
            return int(rest)
        if kind == "e":
            spec, t = rest.split("@", 1)
            parts = spec.split(":")
            a, b = parts[0].split("-")
            slot = int(parts[1]) if len(parts) > 1 else 0
            return (Edge(int(a), int(b), slot), float(t))
    except (ValueError, IndexError):
        pass
    raise TLGError(f"cannot parse point {text!r}; use v:<id> or "
                   "e:<from>-<to>[:slot]@<time>")


def _load_graph(path):
    try:
        return load_tlg(path)
    except (InvalidGraphError, OSError, ValueError, KeyError,
            TypeError) as exc:
        raise _ParseFailure(f"cannot read graph {path}: {exc}") from exc


class _ParseFailure(Exception):
    pass


def _write_manifest(path, args, seed, **extra):
    law = extra.pop("law", "")
    man = experiment_manifest(
        command=" ".join(map(str, args)), seed=seed, n=extra.pop("n", 0),
        law=law, **extra)
    man["law"] = law if isinstance(law, str) else repr(law)
    man["version"] = tool_hash()
    with open(path, "w") as fh:
        json.dump(man, fh, indent=1, default=str)
        fh.write("\n")


def _figure_dir(args):
    if not args.figures:
        return None
    import matplotlib
    matplotlib.use("Agg")
    import os
    os.makedirs(args.figures, exist_ok=True)
    return args.figures


# -- check -------------------------------------------------------------------------

def cmd_check(args) -> int:
    graph = _load_graph(args.graph)
    report = validate_tlg(graph)
    if not report.ok:
        print("invalid:")
        print(report)
        return 2
    print(f"valid {graph.mode} graph: {len(graph.vertices)} vertices, "
          f"{len(graph.edges)} edges")
    verdict = is_ncc(graph)
    if verdict.ncc:
        tower = build_tower(graph) if graph.mode == "strict" else None
        print("NCC: yes" + (f" (tower with {len(tower.steps)} steps)"
                            if tower else ""))
        return 0
    print("NCC: no")
    for cell in verdict.witness:
        print(f"  witness cell: {cell.start} -> {cell.end}: "
              f"{'/'.join(map(str, cell.path_a.vertices))} vs "
              f"{'/'.join(map(str, cell.path_b.vertices))}")
    return 1


# -- cov ---------------------------------------------------------------------------

def _grid_for(graph, points):
    extra = {}
    for p in points:
        if isinstance(p, tuple):
            e, t = p
            if e not in graph.edge_set:
                raise TLGError(f"edge {e} is not in the graph")
            lo, hi = graph.time(e.src), graph.time(e.dst)
            if not lo <= t <= hi:
                raise TLGError(f"time {t} is outside edge {e} "
                               f"(spans [{lo}, {hi}])")
            if lo < t < hi:
                extra.setdefault(e, []).append(t)
    return SampleGrid.vertices_only(graph).with_times(extra)


def cmd_cov(args) -> int:
    graph = _load_graph(args.graph)
    if args.cell_formula:
        a, b = covariance_inconsistency()
        consistent = a == b
        print(f"cell-formula values: {a} and {b}")
        print(f"consistent: {'yes' if consistent else 'no'} "
              f"(difference {abs(a - b)})")
        return 0
    if args.mc and args.seed is None:
        raise TLGError("--mc requires --seed (no silent entropy)")
    pa, pb = parse_point(args.point_a), parse_point(args.point_b)
    grid = _grid_for(graph, (pa, pb))
    tower = build_tower(graph)
    law = (TwoSidedWienerLaw() if args.law == "two-sided"
           else WienerLaw(origin=graph.initial.time))
    field = build_field(graph, tower, grid, law)
    exact = field.covariance(pa, pb)
    print(f"exact\t{exact:.12g}")
    if args.mc:
        est, se = mc_covariance(graph, tower, grid, law, pa, pb,
                                args.mc, RngSpec(args.seed))
        print(f"mc\t{est:.12g}\tstderr\t{se:.3g}\tn\t{args.mc}")
    if args.manifest:
        _write_manifest(args.manifest, sys.argv[1:], args.seed or 0,
                        n=args.mc or 0, law=repr(law), tower=tower)
    fig = _figure_dir(args)
    if fig:
        import matplotlib.pyplot as plt
        import numpy as np
        M = field.covariance_matrix()
        labels = [field.grid.label(k) for k in field.keys()]
        f, ax = plt.subplots(figsize=(6, 5))
        im = ax.imshow(M, cmap="viridis")
        ax.set_xticks(range(len(labels)), labels, rotation=90, fontsize=6)
        ax.set_yticks(range(len(labels)), labels, fontsize=6)
        f.colorbar(im)
        f.tight_layout()
        out = f"{fig}/covariance.png"
        f.savefig(out, dpi=150)
        print(f"figure\t{out}")
    return 0


# -- harness -----------------------------------------------------------------------

def cmd_harness(args) -> int:
    graph = _load_graph(args.graph)
    sigma = TimePath(tuple(int(v) for v in args.sigma.split(",")),
                     tuple(int(s) for s in args.slots.split(","))
                     if args.slots else None)
    t_star = parse_point(args.t_star)
    if not isinstance(t_star, tuple):
        raise TLGError("t* must be an edge-interior point "
                       "(e:<from>-<to>[:slot]@<time>)")
    dec = support_check(graph, sigma, t_star)
    if not dec.is_tree:
        raise TLGError("sigma* is not a support: the component of t* "
                       "is not a tree")
    dist = walk_distribution(graph, sigma, t_star, args.m)
    w = csv.writer(sys.stdout)
    w.writerow(["vertex", "time", "probability"])
    for vid in sorted(dist.weights, key=graph.time):
        w.writerow([f"v:{vid}", f"{graph.time(vid):.12g}",
                    f"{float(dist.weights[vid]):.12g}"])
    fig = _figure_dir(args)
    if fig:
        import matplotlib.pyplot as plt
        items = sorted(dist.weights.items(), key=lambda kv: graph.time(kv[0]))
        f, ax = plt.subplots()
        ax.bar([graph.time(v) for v, _ in items],
               [float(p) for _, p in items],
               width=0.02, color="tab:blue")
        ax.set_xlabel("time")
        ax.set_ylabel("absorption probability")
        f.savefig(f"{fig}/harness_weights.png", dpi=150)
        print(f"figure\t{fig}/harness_weights.png")
    return 0


# -- dubins ------------------------------------------------------------------------

def _load_measure(path):
    try:
        return dub.load_measure(path)
    except (OSError, ValueError, KeyError, TypeError) as exc:
        raise _ParseFailure(f"cannot read measure {path}: {exc}") from exc


def cmd_dubins(args) -> int:
    mu = _load_measure(args.measure)
    tree = dub.dubins_tree(mu, args.N)
    for n in range(args.N + 1):
        level = tree.level(n)
        print(f"H_{n}\t" + "\t".join(str(v) for v in level))
    nu = dub.embedded_measure(tree, args.N)
    print("embedded\t" + "\t".join(f"{p}:{w}" for p, w in nu.atoms))
    w1 = dub.w1_distance(nu, mu)
    print(f"W1\t{float(w1):.12g}")
    if args.verify_427 is not None:
        u = Fraction(args.verify_427).limit_denominator(10 ** 9)
        lhs, rhs, diff = dub.verify_second_moment(mu, args.N, u)
        print(f"second-moment\tlhs\t{float(lhs):.12g}\trhs\t"
              f"{float(rhs):.12g}\tdiff\t{float(diff):.3g}")
    if args.embed_tlg:
        graph, t_star, sigma = dub.build_embedding_tlg(tree)
        obj = graph.to_json()
        obj["tStar"] = {"edge": [t_star[0].src, t_star[0].dst,
                                 t_star[0].slot], "time": float(t_star[1])}
        obj["sigmaStar"] = {"vertices": list(sigma.vertices),
                            "slots": list(sigma.slots)}
        with open(args.embed_tlg, "w") as fh:
            json.dump(obj, fh, indent=1)
            fh.write("\n")
        print(f"embedding graph\t{args.embed_tlg}")
    fig = _figure_dir(args)
    if fig:
        import matplotlib.pyplot as plt
        xs = [float(x) / 1000 for x in range(1001)]
        f, ax = plt.subplots()
        ax.plot(xs, [float(mu.cdf(Fraction(x).limit_denominator(10 ** 6)))
                     for x in xs], label="target")
        ax.plot(xs, [float(nu.cdf(Fraction(x).limit_denominator(10 ** 6)))
                     for x in xs], label=f"embedded (N={args.N})")
        ax.legend()
        ax.set_xlabel("x")
        ax.set_ylabel("CDF")
        f.savefig(f"{fig}/dubins_cdf.png", dpi=150)
        print(f"figure\t{fig}/dubins_cdf.png")
    if args.manifest:
        _write_manifest(args.manifest, sys.argv[1:], 0, n=args.N,
                        law="dubins")
    return 0


# -- honeycomb ---------------------------------------------------------------------

def cmd_honeycomb(args) -> int:
    if args.chain:
        pi = hc.chain_stationary()
        states = hc.ChainSpec().states
        print("states\t" + "\t".join(f"{s}*rho" for s in states))
        print("stationary\t" + "\t".join(str(p) for p in pi))
        print(f"step-variance\t{hc.step_variance(Fraction(1))}*rho^2")
    if args.u is None:
        return 0
    if args.v is None or args.x is None:
        raise TLGError("honeycomb needs u v x (or --chain alone)")
    rhos = [float(r) for r in args.rhos.split(",")]
    study = hc.convergence_study(args.u, args.v, args.x, rhos,
                                 scaling=args.scaling)
    w = csv.writer(sys.stdout)
    cols = ["rho", "j_star", "sigma2", "finite", "limit", "limit_general",
            "abs_err", "rel_err", "abs_err_general", "rel_err_general",
            "cauchy_diff"]
    w.writerow(cols)
    for r in study.rows:
        w.writerow(["" if getattr(r, c) is None else getattr(r, c)
                    for c in cols])
    print(f"offset-factor\t{study.offset_factor:.6g}")
    if args.out:
        hc.export_convergence_csv(study, args.out)
    if args.mc:
        if args.seed is None:
            raise TLGError("--mc requires --seed (no silent entropy)")
        spec = hc.spec_for(rhos[-1] if not args.mc_rho else args.mc_rho,
                           args.u, args.v, args.x, args.scaling)
        cc = hc.covariance_cross_check(spec, args.u, args.v, args.x,
                                       args.mc, RngSpec(args.seed),
                                       args.scaling)
        print(f"mc-check\tdp\t{cc.dp:.12g}\tengine\t{cc.engine:.12g}\t"
              f"mc\t{cc.mc:.12g}\tstderr\t{cc.mc_stderr:.3g}")
    if args.manifest:
        _write_manifest(args.manifest, sys.argv[1:], args.seed or 0,
                        n=args.mc or 0, law="TwoSidedWienerLaw()")
    fig = _figure_dir(args)
    if fig:
        import matplotlib.pyplot as plt
        f, ax = plt.subplots()
        rs = [r.rho for r in study.rows]
        ax.loglog(rs, [r.abs_err_general for r in study.rows], "o-",
                  label="|finite - limit (self-consistent)|")
        ax.loglog(rs, [r.abs_err for r in study.rows], "s--",
                  label="|finite - limit (verbatim)|")
        ax.set_xlabel("rho")
        ax.set_ylabel("absolute error")
        ax.legend()
        f.savefig(f"{fig}/honeycomb_convergence.png", dpi=150)
        print(f"figure\t{fig}/honeycomb_convergence.png")
    return 0


# -- entry point -------------------------------------------------------------------

def make_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="tlg",
        description="time-like graphs: validation, NCC decision, natural "
                    "Brownian motion, harness walks, mean-splitting "
                    "embeddings, hexagonal-lattice scaling limits")
    p.add_argument("--version", action="version",
                   version=f"tlg {__version__} ({tool_hash()})")
    sub = p.add_subparsers(dest="cmd", required=True)

    c = sub.add_parser("check", help="validate a graph and decide NCC")
    c.add_argument("graph")
    c.set_defaults(func=cmd_check)

    c = sub.add_parser("cov", help="covariance of the natural process")
    c.add_argument("graph")
    c.add_argument("point_a", nargs="?")
    c.add_argument("point_b", nargs="?")
    c.add_argument("--exact", action="store_true", default=True,
                   help="exact engine value (default)")
    c.add_argument("--mc", type=int, metavar="N",
                   help="add a Monte Carlo estimate from N samples")
    c.add_argument("--seed", type=int)
    c.add_argument("--law", choices=("wiener", "two-sided"),
                   default="wiener",
                   help="process law: Wiener from the initial vertex "
                        "(default) or two-sided Wiener pinned at time 0")
    c.add_argument("--cell-formula", action="store_true",
                   help="print the two incompatible cell-formula values "
                        "for the bundled double-cell graph")
    c.add_argument("--manifest")
    c.add_argument("--figures", metavar="DIR")
    c.set_defaults(func=cmd_cov)

    c = sub.add_parser("harness", help="absorption weights of the "
                                       "embedded walk")
    c.add_argument("graph")
    c.add_argument("sigma", help="support path vertex ids, comma separated")
    c.add_argument("t_star", help="edge-interior point")
    c.add_argument("m", type=int, help="filtration level (1-based)")
    c.add_argument("--slots", help="slot per support hop, comma separated")
    c.add_argument("--figures", metavar="DIR")
    c.set_defaults(func=cmd_harness)

    c = sub.add_parser("dubins", help="mean-splitting embedding tree")
    c.add_argument("measure", help="measure JSON file")
    c.add_argument("N", type=int, help="tree depth")
    c.add_argument("--embed-tlg", metavar="OUT",
                   help="write the embedding graph as TLG JSON")
    c.add_argument("--verify-427", metavar="U",
                   help="check the second-moment identity at level N")
    c.add_argument("--manifest")
    c.add_argument("--figures", metavar="DIR")
    c.set_defaults(func=cmd_dubins)

    c = sub.add_parser("honeycomb", help="hexagonal-lattice convergence "
                                         "study")
    c.add_argument("u", nargs="?", type=float)
    c.add_argument("v", nargs="?", type=float)
    c.add_argument("x", nargs="?", type=float)
    c.add_argument("--rhos", default="0.4,0.2,0.1")
    c.add_argument("--scaling", choices=("theorem", "proof"),
                   default="theorem")
    c.add_argument("--chain", action="store_true",
                   help="print the displacement-chain analytics")
    c.add_argument("--mc", type=int, metavar="N",
                   help="Monte Carlo cross-check on a finite window")
    c.add_argument("--mc-rho", type=float,
                   help="rho for the Monte Carlo window (default: "
                        "smallest in --rhos)")
    c.add_argument("--seed", type=int)
    c.add_argument("--out", help="also write the table to a CSV file")
    c.add_argument("--manifest")
    c.add_argument("--figures", metavar="DIR")
    c.set_defaults(func=cmd_honeycomb)
    return p


def main(argv=None) -> int:
    args = make_parser().parse_args(argv)
    try:
        return args.func(args)
    except _ParseFailure as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except NotNCCError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except TLGError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
