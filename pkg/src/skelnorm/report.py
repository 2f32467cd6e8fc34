"""Comparison of equivalent program forms, plain-text tables and figures.

``auto_forms`` generates the standard shapes of a k-stage program: the
sequential baseline, the normal form, a farm of a pipeline of farms, a
pipeline of farms, a farm of the pipeline, and the two one-sided farm
placements.  ``run_compare`` simulates every form over shared workloads
and aggregates the results next to the ideal predictions.

Figures are rendered headlessly to files: service time per form for a
comparison, and service time against latency spread for a sweep.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

from .core import (
    Farm,
    Pipe,
    Program,
    SeqComp,
    SeqRef,
    Skeleton,
    fringe,
    normal_form,
)
from .costmodel import (
    DEFAULT_POLICY,
    IdealPerf,
    SizingPolicy,
    ideal_completion_time,
    ideal_pe_count,
    ideal_service_time,
    degenerate_farms,
    efficiency,
    sequential_service_time,
    theorem2_check,
)
from .dsl import format_expr
from .simulator import SweepRow, sweep

IDEAL_TOL = 1e-12
SIM_TOL = 1e-6


def auto_forms(body: Skeleton) -> list[Skeleton]:
    """The standard equivalent shapes of a program, normal form included."""
    refs = tuple(SeqRef(name) for name in fringe(body))
    if len(refs) == 1:
        return [refs[0], Farm(SeqComp(refs))]
    sc = SeqComp(refs)
    return [
        sc,
        Farm(sc),
        Farm(Pipe(tuple(Farm(r) for r in refs))),
        Pipe(tuple(Farm(r) for r in refs)),
        Farm(Pipe(refs)),
        Pipe((Farm(refs[0]),) + refs[1:]),
        Pipe(refs[:-1] + (Farm(refs[-1]),)),
    ]


@dataclass
class FormResult:
    text: str
    skeleton: Skeleton
    is_normal: bool
    ideal: IdealPerf
    pe_count: int
    service_time: float
    completion_time: float
    efficiency: float


@dataclass
class CompareSummary:
    forms: list[FormResult]
    n: int
    seeds: tuple[int, ...]
    precondition_holds: bool
    ideal_dominance_ok: bool
    sim_dominance_ok: bool


def _mean(xs: list[float]) -> float:
    return sum(xs) / len(xs)


def run_compare(
    program: Program,
    forms: Optional[list[Skeleton]] = None,
    *,
    n: int = 200,
    seeds: tuple[int, ...] | list[int] = (1,),
    sigma_grid: Optional[list[float]] = None,
    policy: SizingPolicy = DEFAULT_POLICY,
    ordered: bool = True,
    arrival_period: float = 0.0,
) -> tuple[CompareSummary, list[SweepRow]]:
    """Ideal + simulated analysis of equivalent forms over shared workloads.

    The normal form is appended when missing so exactly one form carries
    the normal flag; exact structural duplicates are dropped.
    """
    body, decls = program.body, program.decls
    if forms is None:
        forms = auto_forms(body)
    nf = normal_form(body)
    deduped: list[Skeleton] = []
    for f in forms:
        if f not in deduped:
            deduped.append(f)
    if nf not in deduped:
        deduped.append(nf)
    forms = deduped

    rows = sweep(
        program,
        forms,
        sigma_grid,
        tuple(seeds),
        n=n,
        policy=policy,
        ordered=ordered,
        arrival_period=arrival_period,
    )

    results: list[FormResult] = []
    for f in forms:
        text = format_expr(f)
        mine = [r for r in rows if r.form == text]
        ts = ideal_service_time(f, decls)
        pe_ideal = ideal_pe_count(f, decls, policy)
        perf = IdealPerf(
            service_time=ts,
            pe_count=pe_ideal,
            efficiency=efficiency(
                sequential_service_time(fringe(f), decls), pe_ideal, ts
            ),
            completion_time_estimate=ideal_completion_time(n, f, decls),
            degenerate_farms=degenerate_farms(f, decls),
        )
        results.append(
            FormResult(
                text=text,
                skeleton=f,
                is_normal=f == nf,
                ideal=perf,
                pe_count=mine[0].pe_count,
                service_time=_mean([r.service_time for r in mine]),
                completion_time=_mean([r.completion_time for r in mine]),
                efficiency=_mean([r.efficiency for r in mine]),
            )
        )

    normal = next(r for r in results if r.is_normal)
    pre = theorem2_check(body, decls).precondition_holds
    ideal_ok = all(
        normal.ideal.service_time <= r.ideal.service_time + IDEAL_TOL for r in results
    )
    sim_ok = all(
        normal.service_time <= r.service_time * (1 + SIM_TOL) for r in results
    )
    summary = CompareSummary(
        forms=results,
        n=n,
        seeds=tuple(seeds),
        precondition_holds=pre,
        ideal_dominance_ok=ideal_ok,
        sim_dominance_ok=sim_ok,
    )
    return summary, rows


# --- plain-text rendering ---------------------------------------------------


def _fmt(x: float) -> str:
    return f"{x:.6g}"


def format_compare_table(summary: CompareSummary) -> str:
    headers = ["form", "T_s(sim)", "T_c(sim)", "#PE", "eff", "T_s(ideal)", "normal"]
    table = [headers]
    for r in summary.forms:
        eff = _fmt(r.efficiency) if r.pe_count > 1 else "-"
        table.append(
            [
                r.text,
                _fmt(r.service_time),
                _fmt(r.completion_time),
                str(r.pe_count),
                eff,
                _fmt(r.ideal.service_time),
                "*" if r.is_normal else "",
            ]
        )
    widths = [max(len(row[c]) for row in table) for c in range(len(headers))]
    lines = []
    for row in table:
        lines.append("  ".join(cell.ljust(w) for cell, w in zip(row, widths)).rstrip())
    lines.append("")
    lines.append(f"dominance(ideal): {'ok' if summary.ideal_dominance_ok else 'VIOLATED'}")
    lines.append(f"dominance(sim):   {'ok' if summary.sim_dominance_ok else 'VIOLATED'}")
    return "\n".join(lines)


def summary_to_json_dict(summary: CompareSummary) -> dict:
    return {
        "n": summary.n,
        "seeds": list(summary.seeds),
        "precondition_holds": summary.precondition_holds,
        "ideal_dominance_ok": summary.ideal_dominance_ok,
        "sim_dominance_ok": summary.sim_dominance_ok,
        "forms": [
            {
                "form": r.text,
                "is_normal": r.is_normal,
                "pe_count": r.pe_count,
                "service_time": r.service_time,
                "completion_time": r.completion_time,
                "efficiency": r.efficiency if r.pe_count > 1 else None,
                "ideal": {
                    "service_time": r.ideal.service_time,
                    "pe_count": r.ideal.pe_count,
                    "efficiency": r.ideal.efficiency,
                    "completion_time_estimate": r.ideal.completion_time_estimate,
                    "degenerate_farms": [list(p) for p in r.ideal.degenerate_farms],
                },
            }
            for r in summary.forms
        ],
    }


# --- figures -----------------------------------------------------------------


def render_compare_figure(summary: CompareSummary, path: str) -> None:
    """Bar chart of simulated/ideal service time and efficiency per form."""
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    labels = [r.text for r in summary.forms]
    xs = range(len(labels))
    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(11, 4.5))
    ax1.bar(xs, [r.service_time for r in summary.forms], color="#4878d0", label="simulated")
    ax1.plot(
        xs,
        [r.ideal.service_time for r in summary.forms],
        "k_",
        markersize=18,
        label="ideal",
    )
    ax1.set_ylabel("service time (s)")
    ax1.set_yscale("log")
    ax1.legend()
    ax2.bar(
        xs,
        [r.efficiency if r.pe_count > 1 else 0.0 for r in summary.forms],
        color="#ee854a",
    )
    ax2.set_ylabel("efficiency")
    ax2.set_ylim(0, 1.05)
    for ax in (ax1, ax2):
        ax.set_xticks(list(xs))
        ax.set_xticklabels(labels, rotation=30, ha="right", fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def render_sweep_figure(rows: list[SweepRow], path: str) -> None:
    """Mean service time per form against the latency sigma grid."""
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    forms = sorted({r.form for r in rows})
    sigmas = sorted({r.sigma for r in rows})
    fig, ax = plt.subplots(figsize=(6.5, 4.5))
    for form in forms:
        means = []
        for s in sigmas:
            pts = [r.service_time for r in rows if r.form == form and r.sigma == s]
            means.append(sum(pts) / len(pts))
        ax.plot(sigmas, means, marker="o", label=form)
    ax.set_xlabel("latency sigma (s)")
    ax.set_ylabel("mean service time (s)")
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
