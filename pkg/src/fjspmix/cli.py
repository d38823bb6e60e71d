"""Command-line interface.

Seven subcommands cover the library surface: inspect the constraint
graph, enumerate feasible schedules, construct transposition paths,
tabulate decomposed gate counts, simulate the ansatz, run the
verification suite, and solve for makespan with the full loop.

Reports are JSON (gate counts also ship as CSV) with sorted keys and
stable float formatting, so a fixed configuration and seed reproduce
byte-identical output. When an output file is requested, report-style
subcommands also render a matplotlib figure next to it.

Exit codes: 0 on success, 1 on validation problems (arguments,
instance files, bitstrings), 2 when a requested verification or path
construction fails.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from pathlib import Path

from .circuit import gate_count_report, mixer_layer_circuit
from .constraint_graph import ConstraintGraph, build_graph, enumerate_feasible, is_feasible
from .control_logic import (
    PlanPreconditionError,
    PlanPrefixError,
    fits_in_first_half,
    plan_transposition_path,
    shortest_transposition_path,
)
from .instance import (
    InstanceError,
    bits_to_str,
    decode,
    encode,
    greedy_schedule,
    makespan,
    parse_instance,
    scaling_instance,
    str_to_bits,
)
from .qaoa import (
    OptimizeConfig,
    QaoaParams,
    build_ansatz,
    default_beta_grid,
    explorability_sweep,
    makespan_cost,
    optimize,
    verify_feasibility,
)
from .simulator import main_marginal, register_mass, sample

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_VERIFY = 2


class CliError(Exception):
    """Validation problem that should terminate with exit code 1."""


def _load_graph(path: str) -> ConstraintGraph:
    try:
        text = Path(path).read_text()
    except OSError as err:
        raise CliError(f"cannot read instance file: {err}")
    try:
        inst = parse_instance(text)
    except InstanceError as err:
        raise CliError(f"invalid instance: {err}")
    return build_graph(inst)


def _parse_bits(graph: ConstraintGraph, text: str, name: str) -> tuple[int, ...]:
    try:
        bits = str_to_bits(text)
    except ValueError as err:
        raise CliError(f"invalid {name} bitstring: {err}")
    if len(bits) != graph.size:
        raise CliError(
            f"{name} bitstring has {len(bits)} bits, expected {graph.size}"
        )
    return bits


def _fmt(value):
    """Normalize floats recursively for stable JSON output."""
    if isinstance(value, float):
        return round(value, 12)
    if isinstance(value, dict):
        return {k: _fmt(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_fmt(v) for v in value]
    return value


def _emit(payload: str, output: str | None) -> None:
    if output is None:
        sys.stdout.write(payload)
        if not payload.endswith("\n"):
            sys.stdout.write("\n")
    else:
        Path(output).write_text(payload)


def _emit_json(data, output: str | None) -> None:
    _emit(json.dumps(_fmt(data), indent=2, sort_keys=True) + "\n", output)


def _figure_path(output: str | None) -> Path | None:
    if output is None:
        return None
    return Path(output).with_suffix(".png")


def _new_figure():
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    return plt


# ---------------------------------------------------------------- graph


def _vertex_rows(graph: ConstraintGraph) -> list[dict]:
    rows = []
    inst = graph.instance
    for v in range(1, graph.size + 1):
        a = graph.index.assignment_of(v)
        rows.append(
            {
                "vertex": v,
                "job": a.job,
                "op": a.op,
                "machine": a.machine,
                "time": a.time,
                "completion": a.time + inst.duration(a.job, a.op, a.machine),
                "degree": graph.degree(v),
            }
        )
    return rows


def cmd_graph(args) -> int:
    graph = _load_graph(args.instance)
    if args.format == "dot":
        lines = ["graph constraints {"]
        for row in _vertex_rows(graph):
            label = (
                f"J{row['job']}O{row['op']} M{row['machine']}@t{row['time']}"
            )
            lines.append(f'  v{row["vertex"]} [label="{label}"];')
        for (u, v), kinds in sorted(graph.edge_kinds.items()):
            label = "+".join(sorted(k.value for k in kinds))
            lines.append(f'  v{u} -- v{v} [label="{label}"];')
        lines.append("}")
        _emit("\n".join(lines) + "\n", args.output)
        return EXIT_OK
    data = {
        "vertex_count": graph.size,
        "operation_count": graph.operation_count,
        "edge_count": graph.edge_count,
        "degree_histogram": {str(d): c for d, c in graph.degree_histogram().items()},
        "vertices": _vertex_rows(graph),
        "edges": [
            {"u": u, "v": v, "kinds": sorted(k.value for k in kinds)}
            for (u, v), kinds in sorted(graph.edge_kinds.items())
        ],
    }
    _emit_json(data, args.output)
    fig_path = _figure_path(args.output)
    if fig_path is not None:
        plt = _new_figure()
        n = graph.size
        angles = [2 * math.pi * i / n for i in range(n)]
        xs = [math.cos(t) for t in angles]
        ys = [math.sin(t) for t in angles]
        fig, ax = plt.subplots(figsize=(6, 6))
        for (u, v) in sorted(graph.edge_kinds):
            ax.plot(
                [xs[u - 1], xs[v - 1]], [ys[u - 1], ys[v - 1]],
                color="#888888", linewidth=0.6, zorder=1,
            )
        ax.scatter(xs, ys, s=120, color="#1f77b4", zorder=2)
        for v in range(1, n + 1):
            ax.annotate(
                str(v), (xs[v - 1], ys[v - 1]),
                ha="center", va="center", fontsize=7, color="white", zorder=3,
            )
        ax.set_aspect("equal")
        ax.axis("off")
        ax.set_title(f"constraint graph: {n} vertices, {graph.edge_count} edges")
        fig.savefig(fig_path, dpi=150, bbox_inches="tight")
        plt.close(fig)
    return EXIT_OK


# ------------------------------------------------------------ enumerate


def cmd_enumerate(args) -> int:
    graph = _load_graph(args.instance)
    inst = graph.instance
    rows = []
    for bits in enumerate_feasible(graph):
        rows.append(
            {
                "bits": bits_to_str(bits),
                "makespan": makespan(inst, decode(graph.index, bits)),
            }
        )
    data = {
        "count": len(rows),
        "schedules": rows,
        "min_makespan": min((r["makespan"] for r in rows), default=0),
    }
    _emit_json(data, args.output)
    return EXIT_OK


# ----------------------------------------------------------------- path


def cmd_path(args) -> int:
    graph = _load_graph(args.instance)
    source = _parse_bits(graph, args.source, "source")
    target = _parse_bits(graph, args.target, "target")
    if not is_feasible(graph, source):
        raise CliError("source bitstring is not feasible")
    if not is_feasible(graph, target):
        raise CliError("target bitstring is not feasible")
    planner = fits_in_first_half(graph, source) and fits_in_first_half(graph, target)
    if planner:
        try:
            plan = plan_transposition_path(graph, source, target)
        except (PlanPreconditionError, PlanPrefixError) as err:
            _emit_json({"found": False, "error": str(err)}, args.output)
            return EXIT_VERIFY
        steps = [sorted(tau.moved_points()) for tau in plan.steps]
        states = [bits_to_str(s) for s in plan.states]
    else:
        path = shortest_transposition_path(graph, source, target)
        if path is None:
            _emit_json(
                {"found": False, "error": "no feasibility-preserving path"},
                args.output,
            )
            return EXIT_VERIFY
        steps = [sorted(tau.moved_points()) for tau in path]
        states = [bits_to_str(source)]
        current = source
        from .control_logic import apply_permutation

        for tau in path:
            current = apply_permutation(tau, current)
            states.append(bits_to_str(current))
    data = {
        "found": True,
        "method": "detour-plan" if planner else "breadth-first",
        "length": len(steps),
        "step_bound": 2 * graph.operation_count,
        "swaps": steps,
        "states": states,
        "all_prefixes_feasible": all(
            is_feasible(graph, str_to_bits(s)) for s in states
        ),
    }
    _emit_json(data, args.output)
    return EXIT_OK


# ---------------------------------------------------------------- gates


def cmd_gates(args) -> int:
    sizes = []
    for chunk in args.sizes.split(","):
        chunk = chunk.strip()
        if not chunk:
            continue
        try:
            sizes.append(int(chunk))
        except ValueError:
            raise CliError(f"invalid size {chunk!r}")
    if not sizes:
        raise CliError("no sizes given")
    graphs = []
    for n in sizes:
        try:
            graphs.append(build_graph(scaling_instance(n, seed=args.seed)))
        except ValueError as err:
            raise CliError(f"size {n}: {err}")
    report = gate_count_report(graphs, corrected=args.mode == "corrected")
    if args.format == "json":
        _emit_json(report, args.output)
    else:
        buf = io.StringIO()
        writer = csv.writer(buf)
        writer.writerow(["n", "p_size", "toffoli", "cnot", "single_qubit", "ancilla"])
        for row in report["rows"]:
            writer.writerow(
                [row["n"], row["p_size"], row["toffoli"], row["cnot"],
                 row["single_qubit"], row["ancilla"]]
            )
        slopes = report["slopes"]
        writer.writerow(
            ["slope", f"{slopes['p_size']:.6f}", f"{slopes['toffoli']:.6f}",
             f"{slopes['cnot']:.6f}", f"{slopes['single_qubit']:.6f}",
             f"{slopes['ancilla']:.6f}"]
        )
        writer.writerow(
            ["partial_mixer_control_slope", f"{slopes['partial_mixer_control']:.6f}"]
        )
        writer.writerow(["layer_control_slope", f"{slopes['layer_control']:.6f}"])
        _emit(buf.getvalue(), args.output)
    fig_path = _figure_path(args.output)
    if fig_path is not None:
        plt = _new_figure()
        ns = [row["n"] for row in report["rows"]]
        fig, ax = plt.subplots(figsize=(6, 4.5))
        for label in ("toffoli", "cnot", "single_qubit"):
            ax.loglog(ns, [row[label] for row in report["rows"]], "o-", label=label)
        ax.loglog(ns, report["partial_mixer_control"], "s--",
                  label="per-move control (T+CNOT)")
        ax.set_xlabel("assignment vertices")
        ax.set_ylabel("decomposed gates per mixer layer")
        ax.legend(fontsize=8)
        ax.grid(True, which="both", alpha=0.3)
        ax.set_title("mixer gate scaling")
        fig.savefig(fig_path, dpi=150, bbox_inches="tight")
        plt.close(fig)
    return EXIT_OK


# ------------------------------------------------------------- simulate


def cmd_simulate(args) -> int:
    graph = _load_graph(args.instance)
    inst = graph.instance
    betas = args.beta if args.beta else [math.pi / 4]
    gammas = args.gamma if args.gamma else [0.0] * len(betas)
    if len(gammas) != len(betas):
        raise CliError("need as many --gamma values as --beta values")
    if args.initial is not None:
        initial = _parse_bits(graph, args.initial, "initial")
    else:
        try:
            initial = encode(graph.index, greedy_schedule(inst))
        except InstanceError as err:
            raise CliError(str(err))
    if not is_feasible(graph, initial):
        raise CliError("initial bitstring is not feasible")
    params = QaoaParams(tuple(betas), tuple(gammas))
    corrected = args.mode == "corrected"
    state = build_ansatz(graph, initial, params, corrected=corrected)
    layout = mixer_layer_circuit(graph, betas, corrected=corrected).layout
    marg = main_marginal(state, layout.main_qubits)
    fset = set(enumerate_feasible(graph))
    cost = makespan_cost(graph)
    scratch = [layout.a(j) for j in range(1, layout.n + 1)]
    scratch += [layout.b(j) for j in range(1, layout.n + 1)]
    counts = sample(state, layout.main_qubits, args.shots, args.seed)
    data = {
        "initial": bits_to_str(initial),
        "mode": args.mode,
        "betas": list(betas),
        "gammas": list(gammas),
        "norm": state.norm_squared(),
        "infeasible_mass": sum(p for b, p in marg.items() if b not in fset),
        "scratch_mass": register_mass(state, scratch),
        "expected_makespan": sum(p * cost(b) for b, p in marg.items()),
        "marginal": {
            bits_to_str(b): p for b, p in sorted(marg.items()) if p > 1e-15
        },
        "samples": {bits_to_str(b): c for b, c in sorted(counts.items())},
        "shots": args.shots,
        "seed": args.seed,
    }
    _emit_json(data, args.output)
    fig_path = _figure_path(args.output)
    if fig_path is not None:
        plt = _new_figure()
        items = sorted(marg.items())
        labels = [bits_to_str(b) for b, _ in items]
        probs = [p for _, p in items]
        colors = ["#2ca02c" if b in fset else "#d62728" for b, _ in items]
        fig, ax = plt.subplots(figsize=(max(6, 0.3 * len(items)), 4))
        ax.bar(range(len(items)), probs, color=colors)
        ax.set_xticks(range(len(items)))
        ax.set_xticklabels(labels, rotation=90, fontsize=6)
        ax.set_ylabel("probability")
        ax.set_title("main-register distribution (green feasible, red not)")
        fig.savefig(fig_path, dpi=150, bbox_inches="tight")
        plt.close(fig)
    return EXIT_OK


# --------------------------------------------------------------- verify


def _feasibility_dict(report) -> dict:
    return {
        "mode": report.mode,
        "betas": list(report.betas),
        "states_checked": report.states_checked,
        "trials": report.trials,
        "predicate_consistent": report.predicate_consistent,
        "predicate_failures": report.predicate_failures,
        "preserved": report.preserved,
        "max_leakage": report.max_leakage,
        "leakage_by_beta": {
            f"{b:.12g}": leak for b, leak in report.leakage_by_beta.items()
        },
        "max_multiply_moved": report.max_multiply_moved,
        "multiply_moved_by_beta": {
            f"{b:.12g}": m for b, m in report.multiply_moved_by_beta.items()
        },
        "scratch_max_mass": report.scratch_max_mass,
        "scratch_restored": report.scratch_restored,
        "norms_ok": report.norms_ok,
        "failures": report.failures,
        "passed": report.passed,
    }


def _sweep_dict(sweep) -> dict:
    return {
        "threshold": sweep.threshold,
        "k_max": sweep.k_max,
        "step_bound": sweep.step_bound,
        "pairs_checked": sweep.pairs_checked,
        "planner_pairs": sweep.planner_pairs,
        "fallback_pairs": sweep.fallback_pairs,
        "hits": sweep.hits,
        "all_connected": sweep.all_connected,
        "all_above_threshold": sweep.all_above_threshold,
        "min_overlap": sweep.min_overlap,
        "worst_pair": (
            None
            if sweep.worst_pair is None
            else [bits_to_str(sweep.worst_pair[0]), bits_to_str(sweep.worst_pair[1])]
        ),
        "max_planned_steps": sweep.max_planned_steps,
        "bound_respected": sweep.bound_respected,
        "betas_used": list(sweep.betas_used),
        "witness_depth_histogram": {
            str(k): c for k, c in sweep.witness_depth_histogram.items()
        },
        "misses": [
            [bits_to_str(a), bits_to_str(b)] for a, b in sweep.misses[:20]
        ],
        "passed": sweep.passed,
    }


def cmd_verify(args) -> int:
    graph = _load_graph(args.instance)
    corrected = args.mode == "corrected"
    betas = tuple(args.beta) if args.beta else default_beta_grid(args.grid)
    report = verify_feasibility(graph, betas, corrected=corrected)
    data = {"feasibility": _feasibility_dict(report), "explorability": None}
    ok = report.passed
    if corrected:
        sweep = explorability_sweep(graph, betas, corrected=True)
        data["explorability"] = _sweep_dict(sweep)
        ok = ok and sweep.passed
    else:
        # The cheaper wiring is expected to leak; the report quantifies
        # the escaped mass rather than enforcing a bound.
        ok = report.predicate_consistent and report.norms_ok
    data["passed"] = ok
    _emit_json(data, args.output)
    fig_path = _figure_path(args.output)
    if fig_path is not None:
        plt = _new_figure()
        pairs = sorted(report.leakage_by_beta.items())
        xs = [b for b, _ in pairs]
        leath = [max(v, 1e-18) for _, v in pairs]
        multi = [max(report.multiply_moved_by_beta[b], 1e-18) for b, _ in pairs]
        fig, ax = plt.subplots(figsize=(6, 4))
        ax.semilogy(xs, leath, "o-", label="infeasible mass")
        ax.semilogy(xs, multi, "s--", label="multiply-moved mass")
        ax.set_xlabel("mixer angle")
        ax.set_ylabel("worst-case escaped probability")
        ax.set_title(f"feasibility preservation ({report.mode} wiring)")
        ax.legend(fontsize=8)
        ax.grid(True, which="both", alpha=0.3)
        fig.savefig(fig_path, dpi=150, bbox_inches="tight")
        plt.close(fig)
    return EXIT_OK if ok else EXIT_VERIFY


# ---------------------------------------------------------------- solve


def cmd_solve(args) -> int:
    graph = _load_graph(args.instance)
    inst = graph.instance
    config = OptimizeConfig(
        layers=args.layers,
        resolution=args.grid,
        seed=args.seed,
        shots=args.shots,
        corrected=args.mode == "corrected",
        refine=args.refine,
    )
    result = optimize(graph, config)
    feasible = set(enumerate_feasible(graph))
    sample_rows = sorted(result.samples.items())
    feasible_shots = sum(c for b, c in sample_rows if b in feasible)
    total_shots = sum(c for _, c in sample_rows)
    best_bits = None
    best_make = None
    for bits, _count in sample_rows:
        if bits not in feasible:
            continue
        m = makespan(inst, decode(graph.index, bits))
        if best_make is None or m < best_make:
            best_make = m
            best_bits = bits
    best_schedule = None
    if best_bits is not None:
        best_schedule = [
            {"job": a.job, "op": a.op, "machine": a.machine, "time": a.time}
            for a in sorted(decode(graph.index, best_bits).assignments)
        ]
    data = {
        "best_params": {
            "betas": list(result.params.betas),
            "gammas": list(result.params.gammas),
        },
        "expected_cost": result.expected_makespan,
        "initial_makespan": result.initial_makespan,
        "optimum_makespan": result.optimum_makespan,
        "initial_optimum_probability": result.initial_optimum_probability,
        "optimum_probability": result.optimum_probability,
        "sample_histogram": {
            bits_to_str(b): c for b, c in sample_rows
        },
        "best_schedule": best_schedule,
        "makespan": best_make,
        "feasible_fraction": feasible_shots / total_shots if total_shots else 0.0,
        "evaluations": result.evaluations,
        "shots": args.shots,
        "seed": args.seed,
        "mode": args.mode,
    }
    _emit_json(data, args.output)
    fig_path = _figure_path(args.output)
    if fig_path is not None:
        plt = _new_figure()
        by_makespan: dict[float, int] = {}
        for bits, count in sample_rows:
            m = makespan(inst, decode(graph.index, bits))
            by_makespan[m] = by_makespan.get(m, 0) + count
        fig, ax = plt.subplots(figsize=(6, 4))
        keys = sorted(by_makespan)
        ax.bar([str(k) for k in keys], [by_makespan[k] for k in keys],
               color="#1f77b4")
        ax.set_xlabel("sampled makespan")
        ax.set_ylabel("shots")
        ax.set_title(
            f"makespan distribution after optimization "
            f"(expected {result.expected_makespan:.3f})"
        )
        fig.savefig(fig_path, dpi=150, bbox_inches="tight")
        plt.close(fig)
    return EXIT_OK


# ----------------------------------------------------------------- main


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fjspmix",
        description="Constraint-preserving permutation mixers for flexible job-shop scheduling.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, instance=True):
        if instance:
            p.add_argument("--instance", required=True, help="instance JSON file")
        p.add_argument("--output", help="write output to this file")

    p = sub.add_parser("graph", help="constraint graph report")
    common(p)
    p.add_argument("--format", choices=["json", "dot"], default="json")

    p = sub.add_parser("enumerate", help="list feasible schedules with makespans")
    common(p)

    p = sub.add_parser("path", help="transposition path between two schedules")
    common(p)
    p.add_argument("--source", required=True, help="source bitstring")
    p.add_argument("--target", required=True, help="target bitstring")

    p = sub.add_parser("gates", help="decomposed gate-count scaling table")
    common(p, instance=False)
    p.add_argument(
        "--sizes",
        default="8,12,16,20,24,28,32,36,40",
        help="comma-separated vertex counts (multiples of 4)",
    )
    p.add_argument("--mode", choices=["corrected", "literal"], default="corrected")
    p.add_argument("--format", choices=["csv", "json"], default="csv")
    p.add_argument("--seed", type=int, default=11)

    p = sub.add_parser("simulate", help="run the ansatz and report the distribution")
    common(p)
    p.add_argument("--mode", choices=["corrected", "literal"], default="corrected")
    p.add_argument("--beta", type=float, action="append", help="mixer angle per layer")
    p.add_argument("--gamma", type=float, action="append", help="phase angle per layer")
    p.add_argument("--initial", help="initial bitstring (default: greedy schedule)")
    p.add_argument("--shots", type=int, default=2048)
    p.add_argument("--seed", type=int, default=11)

    p = sub.add_parser("verify", help="feasibility preservation and explorability checks")
    common(p)
    p.add_argument("--mode", choices=["corrected", "literal"], default="corrected")
    p.add_argument("--grid", type=int, default=16, help="angle grid resolution")
    p.add_argument("--beta", type=float, action="append", help="explicit angle grid")

    p = sub.add_parser("solve", help="optimize makespan with the full loop")
    common(p)
    p.add_argument("--mode", choices=["corrected", "literal"], default="corrected")
    p.add_argument("--layers", type=int, default=1)
    p.add_argument("--grid", type=int, default=8, help="angle grid resolution")
    p.add_argument("--shots", type=int, default=2048)
    p.add_argument("--seed", type=int, default=11)
    p.add_argument("--refine", action="store_true", help="polish angles numerically")

    return parser


_HANDLERS = {
    "graph": cmd_graph,
    "enumerate": cmd_enumerate,
    "path": cmd_path,
    "gates": cmd_gates,
    "simulate": cmd_simulate,
    "verify": cmd_verify,
    "solve": cmd_solve,
}


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as err:
        # argparse exits 2 on bad arguments; fold that into the usage code
        # and keep --help at 0.
        return EXIT_OK if err.code in (None, 0) else EXIT_USAGE
    try:
        return _HANDLERS[args.command](args)
    except CliError as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
