"""Command-line front end: constructions, graphs, and walk experiments.

Every stochastic command requires --seed and echoes its full configuration
into the JSON report, so identical invocations produce identical bytes.
Exit codes: 0 success, 1 validation error, 2 structure-check failure,
64 usage error.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from fractions import Fraction

from .exactnum import QuadraticNumber, point_to_text, qn_from_text
from .piecewise import (
    ConstructionFailedError,
    PiecewiseMapError,
    build_hs,
    configuration,
    construct_prechain,
    membership,
    pm_from_matrix,
)
from .psl2 import ProjectiveMatrix
from .schreier import (
    StructureViolationError,
    attach_regions,
    build_orbit_graph,
    comparison_kernel,
    export_csv,
    export_dot,
    verify_tree_structure,
)
from .walk import (
    PrechainTreeModel,
    entropy_estimate,
    estimate_returns,
    lamplighter_demo,
    nontriviality_witness,
    simulate_config_walk,
    summability_diagnostic,
    trajectory_rng,
    uniform_measure,
    witness_measure,
)

USAGE_EXIT = 64


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        sys.stderr.write(f"{self.prog}: error: {message}\n")
        sys.exit(USAGE_EXIT)


def _out_path(args, default_name: str) -> str:
    directory = args.out or os.environ.get("PWPROJ_OUT", ".")
    os.makedirs(directory, exist_ok=True)
    return os.path.join(directory, default_name)


def _emit(args, name: str, payload: dict) -> str:
    path = _out_path(args, name)
    text = json.dumps(payload, indent=2, sort_keys=True)
    with open(path, "w") as handle:
        handle.write(text + "\n")
    print(text)
    return path


def _config_echo(args, fields) -> dict:
    return {f: getattr(args, f) for f in fields if getattr(args, f, None) is not None}


def _parse_point(text: str) -> QuadraticNumber:
    value = qn_from_text(text)
    return value


def _prechain_for(args):
    s = _parse_point(args.s)
    return construct_prechain(s)


def cmd_construct_hs(args) -> int:
    s = _parse_point(args.s)
    built = build_hs(s)
    payload = {
        "command": "construct-hs",
        "config": _config_echo(args, ["s"]),
        "map": built.map.to_text(),
        "branch": built.branch,
        "prime": built.prime,
        "breaks": [point_to_text(b) for b in built.map.breaks],
        "break_fields": [b.k for b in built.map.breaks],
        "configuration": configuration(built.map, s).as_text_dict(),
        "hz_member": membership(built.map, "HZ"),
        "support": [
            [point_to_text(lo), point_to_text(hi)]
            for lo, hi in built.map.support_intervals()
        ],
    }
    _emit(args, "construct_hs.json", payload)
    return 0


def cmd_prechain(args) -> int:
    pre = _prechain_for(args)
    payload = {
        "command": "prechain",
        "config": _config_echo(args, ["s"]),
        "f": pre.f.to_text(),
        "g": pre.g.to_text(),
        "endpoints": {
            "a": point_to_text(pre.a),
            "b": point_to_text(pre.b),
            "c": point_to_text(pre.c),
            "d": point_to_text(pre.d),
        },
        "f_power": pre.f_power,
        "g_power": pre.g_power,
        "interleaving": "a<b<c<d with g^-1(c) < f(b)",
    }
    _emit(args, "prechain.json", payload)
    return 0


def cmd_graph(args) -> int:
    pre = _prechain_for(args)
    graph = build_orbit_graph([pre.f, pre.g], pre.b, args.cap, labels=["f", "g"])
    attach_regions(graph, pre)
    base = f"graph_{args.cap}"
    paths = []
    if args.format in ("dot", "both"):
        p = _out_path(args, base + ".dot")
        export_dot(graph, p)
        paths.append(p)
    if args.format in ("csv", "both"):
        p = _out_path(args, base + ".csv")
        export_csv(graph, p)
        paths.append(p)
    payload = {
        "command": "graph",
        "config": _config_echo(args, ["s", "cap", "format"]),
        "vertices": graph.order(),
        "truncated": graph.truncated,
        "outputs": [os.path.basename(p) for p in paths],
    }
    _emit(args, "graph.json", payload)
    return 0


def cmd_verify_tree(args) -> int:
    pre = _prechain_for(args)
    graph = build_orbit_graph([pre.f, pre.g], pre.b, args.cap, labels=["f", "g"])
    attach_regions(graph, pre)
    try:
        report = verify_tree_structure(graph, pre.f, pre.g, pre.b, pre.c)
    except StructureViolationError as exc:
        payload = {
            "command": "verify-tree",
            "config": _config_echo(args, ["s", "cap"]),
            "verdict": "VIOLATION",
            "detail": str(exc),
        }
        _emit(args, "verify_tree.json", payload)
        return 2
    payload = {
        "command": "verify-tree",
        "config": _config_echo(args, ["s", "cap"]),
        "verdict": "OK",
        "tree_vertices": report.tree_vertices,
        "ray_vertices": report.ray_vertices,
        "region_a": report.region_a,
        "region_b": report.region_b,
        "max_depth": report.max_depth,
    }
    _emit(args, "verify_tree.json", payload)
    return 0


def cmd_kernel(args) -> int:
    pre = _prechain_for(args)
    kernel = comparison_kernel(pre.f, pre.g, pre.a, pre.b, pre.c, pre.d)
    graph = build_orbit_graph([pre.f, pre.g], pre.b, args.cap, labels=["f", "g"])
    rows = []
    bad = 0
    for key in graph.sorted_keys()[: args.sample]:
        p = graph.points[key]
        row = kernel.row(p)
        total = sum(w for _, _, _, w in row)
        sym = kernel.check_symmetry(p)
        if total != 1 or not sym:
            bad += 1
        rows.append(
            {
                "point": point_to_text(p),
                "weights": {f"{lbl}{'+' if d > 0 else '-'}": str(w) for lbl, d, _, w in row},
                "row_sum": str(total),
                "symmetric": sym,
            }
        )
    payload = {
        "command": "kernel",
        "config": _config_echo(args, ["s", "cap", "sample"]),
        "checked": len(rows),
        "violations": bad,
        "rows": rows[: min(len(rows), 16)],
    }
    _emit(args, "kernel.json", payload)
    return 2 if bad else 0


def _witness_measure_for(args):
    pre = _prechain_for(args)
    translation = pm_from_matrix(ProjectiveMatrix.translation(1))
    eps = Fraction(args.epsilon)
    alpha = Fraction(args.alpha)
    return pre, witness_measure(pre.hs.map, pre.companion, translation, eps, alpha)


def cmd_walk(args) -> int:
    pre, mu = _witness_measure_for(args)
    s = pre.hs.base
    tracker = simulate_config_walk(mu, s, s, args.T, trajectory_rng(args.seed, 0))
    payload = {
        "command": "walk",
        "config": _config_echo(args, ["s", "T", "seed", "epsilon", "alpha"]),
        "value": tracker.value,
        "last_change": tracker.last_change,
        "changes": len(tracker.change_log),
        "frozen_at": tracker.frozen_at,
        "final_point": point_to_text(tracker.x),
    }
    _emit(args, "walk.json", payload)
    return 0


def cmd_witness(args) -> int:
    pre, mu = _witness_measure_for(args)
    report = nontriviality_witness(
        mu, pre.hs.base, args.T, args.M, args.seed, threads=args.threads
    )
    payload = {
        "command": "witness",
        "config": _config_echo(args, ["s", "T", "M", "seed", "epsilon", "alpha", "threads"]),
        **report,
    }
    _emit(args, "witness.json", payload)
    return 0


def cmd_summability(args) -> int:
    pre, mu = _witness_measure_for(args)
    s = pre.hs.base
    report = summability_diagnostic(mu, s, s, args.T, args.M, args.seed)
    series_path = _out_path(args, "summability.csv")
    with open(series_path, "w") as handle:
        handle.write("step,hit_mass,cumulative\n")
        for i, (h, c) in enumerate(
            zip(report["per_step_hit_mass"], report["cumulative"]), start=1
        ):
            handle.write(f"{i},{h},{c}\n")
    payload = {
        "command": "summability",
        "config": _config_echo(args, ["s", "T", "M", "seed", "epsilon", "alpha"]),
        "atom_l1_mass": report["atom_l1_mass"],
        "cumulative_final": report["cumulative"][-1] if report["cumulative"] else 0.0,
        "series_file": os.path.basename(series_path),
    }
    _emit(args, "summability.json", payload)
    return 0


def cmd_entropy(args) -> int:
    pre, mu = _witness_measure_for(args)
    report = entropy_estimate(mu, args.n, args.M, args.seed)
    payload = {
        "command": "entropy",
        "config": _config_echo(args, ["s", "n", "M", "seed", "epsilon", "alpha"]),
        **report,
    }
    _emit(args, "entropy.json", payload)
    return 0


def cmd_lamplighter(args) -> int:
    heavy = lamplighter_demo(
        Fraction(args.alpha), args.T, args.M, args.seed, True, threads=args.threads
    )
    control = lamplighter_demo(
        Fraction(args.alpha), args.T, args.M, args.seed, False, threads=args.threads
    )
    payload = {
        "command": "lamplighter",
        "config": _config_echo(args, ["alpha", "T", "M", "seed"]),
        "heavy_tail": heavy,
        "srw_control": control,
    }
    _emit(args, "lamplighter.json", payload)
    return 0


def cmd_returns(args) -> int:
    horizons = [int(h) for h in args.horizons.split(",")]
    if args.target == "z":
        translation = pm_from_matrix(ProjectiveMatrix.translation(1))
        mu = uniform_measure([translation, translation.inverse()])
        rep = estimate_returns(
            mu, QuadraticNumber(0), horizons, args.M, args.seed, threads=args.threads
        )
    else:
        pre = _prechain_for(args)
        rep = estimate_returns(
            PrechainTreeModel(pre), pre.b, horizons, args.M, args.seed,
            threads=args.threads,
        )
    payload = {
        "command": "returns",
        "config": _config_echo(args, ["s", "target", "horizons", "M", "seed"]),
        **rep.as_dict(),
    }
    _emit(args, "returns.json", payload)
    return 0


def build_parser() -> _Parser:
    parser = _Parser(prog="pwproj", description=__doc__)
    parser.add_argument("--out", help="output directory (default: PWPROJ_OUT or .)")
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, fn, *, s=False, seed=False, extras=()):
        p = sub.add_parser(name)
        if s:
            p.add_argument("--s", required=True, help='base point, e.g. "0+1*sqrt(3)"')
        for flag, kw in extras:
            p.add_argument(flag, **kw)
        if seed:
            p.add_argument("--seed", type=int, required=True)
            p.add_argument("--threads", type=int, default=1)
        p.set_defaults(fn=fn)
        return p

    add("construct-hs", cmd_construct_hs, s=True)
    add("prechain", cmd_prechain, s=True)
    add(
        "graph",
        cmd_graph,
        s=True,
        extras=[
            ("--cap", dict(type=int, default=500)),
            ("--format", dict(choices=["dot", "csv", "both"], default="dot")),
        ],
    )
    add(
        "verify-tree",
        cmd_verify_tree,
        s=True,
        extras=[("--cap", dict(type=int, default=2000))],
    )
    add(
        "kernel",
        cmd_kernel,
        s=True,
        extras=[
            ("--cap", dict(type=int, default=500)),
            ("--sample", dict(type=int, default=200)),
        ],
    )
    walk_extras = [
        ("--T", dict(type=int, default=20000)),
        ("--epsilon", dict(default="1/4")),
        ("--alpha", dict(default="4/5")),
    ]
    add("walk", cmd_walk, s=True, seed=True, extras=walk_extras)
    add(
        "witness",
        cmd_witness,
        s=True,
        seed=True,
        extras=walk_extras + [("--M", dict(type=int, default=500))],
    )
    add(
        "summability",
        cmd_summability,
        s=True,
        seed=True,
        extras=[
            ("--T", dict(type=int, default=2000)),
            ("--M", dict(type=int, default=200)),
            ("--epsilon", dict(default="1/4")),
            ("--alpha", dict(default="4/5")),
        ],
    )
    add(
        "entropy",
        cmd_entropy,
        s=True,
        seed=True,
        extras=[
            ("--n", dict(type=int, default=8)),
            ("--M", dict(type=int, default=500)),
            ("--epsilon", dict(default="1/4")),
            ("--alpha", dict(default="4/5")),
        ],
    )
    add(
        "lamplighter",
        cmd_lamplighter,
        seed=True,
        extras=[
            ("--alpha", dict(default="4/5")),
            ("--T", dict(type=int, default=10000)),
            ("--M", dict(type=int, default=1000)),
        ],
    )
    add(
        "returns",
        cmd_returns,
        seed=True,
        extras=[
            ("--target", dict(choices=["z", "prechain"], default="prechain")),
            ("--s", dict(default="0+1*sqrt(3)")),
            ("--horizons", dict(default="10000,20000")),
            ("--M", dict(type=int, default=500)),
        ],
    )
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except (PiecewiseMapError, ConstructionFailedError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
