"""Ideal service-time models, worker sizing and the dominance check.

The models are asymptotic lower bounds for the implementation templates:
a sequential node pays its receive + compute + deliver costs; a pipeline
is limited by its slowest stage; a farm with enough workers is limited
only by its single input/output points.  Boundary costs of a composite
are those of its first and last fringe stages.

Worker sizing follows the service-time ratio heuristic: enough workers
that a farm keeps up with its input point.  PE accounting charges every
farm an emitter and a collector on top of its worker subnetworks; the
counts are this toolkit's convention and are not comparable to any
externally reported processor counts.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

from .core import (
    Farm,
    Path,
    Pipe,
    Program,
    SeqComp,
    SeqProfile,
    SeqRef,
    Skeleton,
    children,
    fringe,
    normal_form,
)

Decls = dict[str, SeqProfile]

_CEIL_EPS = 1e-9


class BudgetTooSmall(ValueError):
    """A PE budget cannot cover the fixed nodes plus one worker per farm."""


def sequential_service_time(names: list[str], decls: Decls) -> float:
    """Service time of running the named stages on one processing element.

    Single fixed evaluation order; every caller that compares service
    times goes through here so equal stage lists give bit-equal results.
    """
    acc = decls[names[0]].t_in
    for n in names:
        acc += decls[n].mean
    acc += decls[names[-1]].t_out
    return acc


def boundary_costs(s: Skeleton, decls: Decls) -> tuple[float, float]:
    """(t_in of the first fringe stage, t_out of the last)."""
    names = fringe(s)
    return decls[names[0]].t_in, decls[names[-1]].t_out


def ideal_service_time(s: Skeleton, decls: Decls) -> float:
    """Recursive ideal service time, distributions reduced to their means."""
    if isinstance(s, (SeqRef, SeqComp)):
        return sequential_service_time(fringe(s), decls)
    if isinstance(s, Pipe):
        return max(ideal_service_time(st, decls) for st in s.stages)
    t_in, t_out = boundary_costs(s.inner, decls)
    return min(max(t_in, t_out), ideal_service_time(s.inner, decls))


def traversal_latency(s: Skeleton, decls: Decls) -> float:
    """Time for one item to cross the template network (pipeline fill)."""
    if isinstance(s, (SeqRef, SeqComp)):
        return sequential_service_time(fringe(s), decls)
    if isinstance(s, Pipe):
        return sum(traversal_latency(st, decls) for st in s.stages)
    t_in, t_out = boundary_costs(s.inner, decls)
    return t_in + traversal_latency(s.inner, decls) + t_out


def ideal_completion_time(n: int, s: Skeleton, decls: Decls) -> float:
    """Fill latency for the first item, then one result per service time."""
    if n < 1:
        raise ValueError("stream length must be >= 1")
    return traversal_latency(s, decls) + (n - 1) * ideal_service_time(s, decls)


def efficiency(ts_seq: float, pe: int, ts: float) -> float:
    """Sequential service time over (PE count x parallel service time)."""
    return ts_seq / (pe * ts)


@dataclass(frozen=True)
class DominanceReport:
    precondition_holds: bool
    ts_original: float
    ts_normal: float
    dominance_holds: bool


def theorem2_check(s: Skeleton, decls: Decls) -> DominanceReport:
    """Normal-form service time never exceeds the original's.

    The precondition (every stage's communication costs strictly below its
    compute time) is reported separately; under the ideal models the
    dominance itself holds whenever costs are non-negative.
    """
    pre = all(
        decls[n].t_in < decls[n].mean and decls[n].t_out < decls[n].mean
        for n in fringe(s)
    )
    ts_orig = ideal_service_time(s, decls)
    ts_norm = ideal_service_time(normal_form(s), decls)
    return DominanceReport(pre, ts_orig, ts_norm, ts_norm <= ts_orig + 1e-12)


# --- worker sizing and PE accounting -------------------------------------


@dataclass(frozen=True)
class SizingPolicy:
    """How to choose farm worker counts when building a process network.

    Default: the ideal ratio Ts(inner) / max(t_in, t_out) per farm, capped
    at ``max_workers`` (the ratio diverges as communication costs vanish).
    ``workers`` forces the same explicit count on every farm; ``pe_budget``
    caps the total PE count, splitting workers proportionally to the ideal
    counts with at least one worker per farm.
    """

    workers: Optional[int] = None
    pe_budget: Optional[int] = None
    max_workers: int = 256


DEFAULT_POLICY = SizingPolicy()


def farm_paths(s: Skeleton, path: Path = ()) -> list[Path]:
    out = [path] if isinstance(s, Farm) else []
    for i, c in enumerate(children(s)):
        out.extend(farm_paths(c, path + (i,)))
    return out


def ideal_workers(inner: Skeleton, decls: Decls, max_workers: int = 256) -> int:
    ts_inner = ideal_service_time(inner, decls)
    t_in, t_out = boundary_costs(inner, decls)
    comm = max(t_in, t_out)
    if comm >= ts_inner:
        return 1  # degenerate: farming cannot beat the inner service time
    if comm <= 0:
        return max_workers
    return min(max_workers, math.ceil(ts_inner / comm - _CEIL_EPS))


def degenerate_farms(s: Skeleton, decls: Decls) -> tuple[Path, ...]:
    """Farms whose input/output cost already dominates the inner compute."""
    flagged = []
    for p in farm_paths(s):
        inner = _subtree(s, p).inner
        t_in, t_out = boundary_costs(inner, decls)
        if max(t_in, t_out) >= ideal_service_time(inner, decls):
            flagged.append(p)
    return tuple(flagged)


def _subtree(s: Skeleton, path: Path) -> Skeleton:
    for i in path:
        s = children(s)[i]
    return s


def _count_with(s: Skeleton, plan: dict[Path, int], path: Path = ()) -> int:
    if isinstance(s, (SeqRef, SeqComp)):
        return 1
    if isinstance(s, Pipe):
        return sum(_count_with(st, plan, path + (i,)) for i, st in enumerate(s.stages))
    return 2 + plan[path] * _count_with(s.inner, plan, path + (0,))


def farm_worker_plan(s: Skeleton, decls: Decls, policy: SizingPolicy = DEFAULT_POLICY) -> dict[Path, int]:
    """Worker count per farm position under the given policy."""
    paths = farm_paths(s)
    if policy.workers is not None:
        if policy.workers < 1:
            raise ValueError("explicit worker count must be >= 1")
        return {p: policy.workers for p in paths}

    ideal = {
        p: ideal_workers(_subtree(s, p).inner, decls, policy.max_workers) for p in paths
    }
    if policy.pe_budget is None:
        return ideal

    budget = policy.pe_budget
    minimal = {p: 1 for p in paths}
    if _count_with(s, minimal) > budget:
        raise BudgetTooSmall(
            f"budget {budget} cannot give every farm one worker "
            f"(minimum is {_count_with(s, minimal)} PEs)"
        )

    def plan_at(lam: float) -> dict[Path, int]:
        return {p: max(1, math.floor(lam * ideal[p])) for p in paths}

    lo, hi = 0.0, float(budget + 1)
    for _ in range(64):
        mid = (lo + hi) / 2
        if _count_with(s, plan_at(mid)) <= budget:
            lo = mid
        else:
            hi = mid
    plan = plan_at(lo)

    # top up leftover budget toward the most under-provisioned farm
    while True:
        ranked = sorted(paths, key=lambda p: (-ideal[p] / plan[p], p))
        for p in ranked:
            trial = dict(plan)
            trial[p] += 1
            if _count_with(s, trial) <= budget:
                plan = trial
                break
        else:
            break
    return plan


def ideal_pe_count(s: Skeleton, decls: Decls, policy: SizingPolicy = DEFAULT_POLICY) -> int:
    """PEs of the template network: 1 per sequential node, workers + 2 per farm."""
    return _count_with(s, farm_worker_plan(s, decls, policy))


@dataclass(frozen=True)
class IdealPerf:
    service_time: float
    pe_count: int
    efficiency: float
    completion_time_estimate: float
    degenerate_farms: tuple[Path, ...] = ()


def predict(program: Program, n: int = 200, policy: SizingPolicy = DEFAULT_POLICY) -> IdealPerf:
    """Ideal performance record for a program's body on an n-item stream."""
    body, decls = program.body, program.decls
    ts = ideal_service_time(body, decls)
    pe = ideal_pe_count(body, decls, policy)
    ts_seq = sequential_service_time(fringe(body), decls)
    return IdealPerf(
        service_time=ts,
        pe_count=pe,
        efficiency=efficiency(ts_seq, pe, ts),
        completion_time_estimate=ideal_completion_time(n, body, decls),
        degenerate_farms=degenerate_farms(body, decls),
    )
