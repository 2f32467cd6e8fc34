"""Command-line front end.

Subcommands: normalize, rewrite, predict, simulate, compare, sweep.
Exit codes: 0 on success, 2 on input errors (syntax, validation, bad
budgets, non-equivalent forms), 3 when an internal invariant is violated
(ideal dominance failing although its precondition holds).
"""

from __future__ import annotations

import argparse
import json
import sys
from typing import Optional

from . import costmodel, dsl, report, rewrite, simulator
from .core import Program, fringe, normal_form, validate


def _comma_ints(text: str) -> list[int]:
    return [int(x) for x in text.split(",") if x.strip()]


def _comma_floats(text: str) -> list[float]:
    return [float(x) for x in text.split(",") if x.strip()]


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="skelnorm",
        description="Normalize, predict and simulate stream-parallel skeleton programs",
    )
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p, sim=False, forms=False):
        p.add_argument("file", help="program source file")
        p.add_argument("--json", action="store_true", help="machine-readable output")
        if sim:
            p.add_argument("--n", type=int, default=200, help="stream length (default 200)")
            p.add_argument("--seed", type=int, default=1, help="workload seed (default 1)")
            p.add_argument("--seeds", type=_comma_ints, default=None, help="comma-separated seeds")
            p.add_argument("--sigma-grid", type=_comma_floats, default=None,
                           help="comma-separated latency sigmas (absolute seconds)")
            p.add_argument("--pe-budget", type=int, default=None, help="total PE budget")
            p.add_argument("--workers", type=int, default=None, help="explicit workers per farm")
            p.add_argument("--csv", metavar="PATH", default=None, help="write run rows as CSV")
            p.add_argument("--no-order", action="store_true",
                           help="let farm collectors release results out of order")
            p.add_argument("--arrival-period", type=float, default=0.0,
                           help="input inter-arrival period (default 0: all items at t=0)")
        if forms:
            p.add_argument("--forms", default="auto",
                           help="'auto' or comma-separated skeleton expressions")
            p.add_argument("--plot", metavar="PATH", default=None,
                           help="render a figure to PATH alongside the delimited output")

    p = sub.add_parser("normalize", help="print the normal form of the program body")
    p.add_argument("file")
    p.add_argument("--trace", action="store_true", help="also print the rewrite steps")
    p.add_argument("--json", action="store_true")

    p = sub.add_parser("rewrite", help="print the rewrite steps driving the body to normal form")
    p.add_argument("file")
    p.add_argument("--trace", action="store_true", help=argparse.SUPPRESS)
    p.add_argument("--json", action="store_true")

    p = sub.add_parser("predict", help="ideal performance of the program body")
    common(p)
    p.add_argument("--n", type=int, default=200)
    p.add_argument("--pe-budget", type=int, default=None)
    p.add_argument("--workers", type=int, default=None)

    p = sub.add_parser("simulate", help="simulate the program body once")
    common(p, sim=True)

    p = sub.add_parser("compare", help="compare equivalent forms of the program")
    common(p, sim=True, forms=True)

    p = sub.add_parser("sweep", help="sweep sigma x seeds over equivalent forms")
    common(p, sim=True, forms=True)

    return ap


def _load(path: str) -> Program:
    with open(path, "r", encoding="utf-8") as fh:
        text = fh.read()
    program = dsl.parse(text)
    problems = [v for v in validate(program) if v.severity == "error"]
    if problems:
        msgs = "; ".join(f"{v.code} at {list(v.path)}: {v.message}" for v in problems)
        raise dsl.ParseError(f"invalid program: {msgs}")
    return program


def _policy(args) -> costmodel.SizingPolicy:
    return costmodel.SizingPolicy(
        workers=getattr(args, "workers", None),
        pe_budget=getattr(args, "pe_budget", None),
    )


def _seeds(args) -> tuple[int, ...]:
    if getattr(args, "seeds", None):
        return tuple(args.seeds)
    return (args.seed,)


def _parse_forms(args, program: Program):
    if args.forms.strip() == "auto":
        return None  # run_compare generates the standard shapes
    out = []
    for text in args.forms.split(","):
        text = text.strip()
        if text:
            out.append(dsl.parse_expr(text, program.decls))
    if not out:
        raise dsl.ParseError("no forms given")
    return out


def cmd_normalize(args) -> int:
    program = _load(args.file)
    nf = normal_form(program.body)
    print(dsl.format_expr(nf))
    if args.trace:
        _, steps = rewrite.normalize_by_rewriting(program.body)
        trace = rewrite.format_trace(steps)
        if trace:
            print(trace)
    return 0


def cmd_rewrite(args) -> int:
    program = _load(args.file)
    final, steps = rewrite.normalize_by_rewriting(program.body)
    trace = rewrite.format_trace(steps)
    if trace:
        print(trace)
    print(dsl.format_expr(final))
    return 0


def cmd_predict(args) -> int:
    program = _load(args.file)
    perf = costmodel.predict(program, n=args.n, policy=_policy(args))
    payload = {
        "service_time": perf.service_time,
        "pe_count": perf.pe_count,
        "efficiency": perf.efficiency,
        "completion_time_estimate": perf.completion_time_estimate,
        "n": args.n,
        "degenerate_farms": [list(p) for p in perf.degenerate_farms],
    }
    if args.json:
        print(json.dumps(payload, sort_keys=True))
    else:
        for key in ("service_time", "pe_count", "efficiency", "completion_time_estimate"):
            print(f"{key}: {payload[key]:.6g}")
        if perf.degenerate_farms:
            print(f"degenerate farms at: {[list(p) for p in perf.degenerate_farms]}")
    return 0


def cmd_simulate(args) -> int:
    program = _load(args.file)
    net = simulator.build_network(program.body, program.decls, _policy(args))
    w = simulator.pregenerate_workload(args.seed, args.n, program.decls, fringe(program.body))
    rep = simulator.simulate(
        net, w, ordered=not args.no_order, arrival_period=args.arrival_period
    )
    sigma = max(p.t_seq.sigma for p in program.decls.values())
    row = simulator.SweepRow(
        form=dsl.format_expr(program.body),
        seed=args.seed,
        sigma=sigma,
        n=args.n,
        pe_count=rep.pe_count,
        service_time=rep.service_time,
        completion_time=rep.completion_time,
        efficiency=rep.efficiency,
    )
    if args.csv:
        with open(args.csv, "w", encoding="utf-8") as fh:
            fh.write(simulator.rows_to_csv([row]))
    if args.json:
        payload = {
            "form": row.form,
            "seed": row.seed,
            "sigma": row.sigma,
            "n": row.n,
            "pe_count": rep.pe_count,
            "service_time": rep.service_time,
            "completion_time": rep.completion_time,
            "efficiency": rep.efficiency,
            "per_node_busy": rep.per_node_busy,
        }
        print(json.dumps(payload, sort_keys=True))
    else:
        print(f"form: {row.form}")
        for key, val in (
            ("service_time", rep.service_time),
            ("completion_time", rep.completion_time),
            ("pe_count", rep.pe_count),
            ("efficiency", rep.efficiency),
        ):
            print(f"{key}: {val:.6g}")
    return 0


def _compare_or_sweep(args, want_sweep: bool) -> int:
    program = _load(args.file)
    forms = _parse_forms(args, program)
    summary, rows = report.run_compare(
        program,
        forms,
        n=args.n,
        seeds=_seeds(args),
        sigma_grid=args.sigma_grid,
        policy=_policy(args),
        ordered=not args.no_order,
        arrival_period=args.arrival_period,
    )
    if args.csv:
        with open(args.csv, "w", encoding="utf-8") as fh:
            fh.write(simulator.rows_to_csv(rows))
    if args.plot:
        if want_sweep:
            report.render_sweep_figure(rows, args.plot)
        else:
            report.render_compare_figure(summary, args.plot)
    if args.json:
        print(json.dumps(report.summary_to_json_dict(summary), sort_keys=True))
    elif want_sweep and not args.csv:
        sys.stdout.write(simulator.rows_to_csv(rows))
    else:
        print(report.format_compare_table(summary))
    if summary.precondition_holds and not summary.ideal_dominance_ok:
        print("internal error: ideal dominance violated under its precondition", file=sys.stderr)
        return 3
    return 0


def main(argv: Optional[list[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    handlers = {
        "normalize": cmd_normalize,
        "rewrite": cmd_rewrite,
        "predict": cmd_predict,
        "simulate": cmd_simulate,
        "compare": lambda a: _compare_or_sweep(a, want_sweep=False),
        "sweep": lambda a: _compare_or_sweep(a, want_sweep=True),
    }
    try:
        return handlers[args.command](args)
    except (
        dsl.ParseError,
        simulator.NonEquivalentForms,
        simulator.BudgetTooSmall,
        FileNotFoundError,
        ValueError,
    ) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
