"""Deterministic discrete-event simulation of the implementation templates.

A skeleton is compiled to a process network: one sequential node per
sequential unit, chained stages for pipelines, and emitter / workers /
collector for farms.  Timing rules:

* a sequential node processing task t occupies t_in, then the pre-sampled
  latency of every fringe stage it owns, then t_out;
* an emitter occupies the inner network's boundary t_in per dispatch and
  hands the task to the lowest-indexed idle worker, queueing it (unbounded
  FIFO) when none is idle;
* a collector occupies the boundary t_out per result and, by default,
  releases results in input-stream order through a reordering buffer.

Channels are unbounded FIFOs with zero transit time; communication costs
occupy only the charged node.  All stream items are available at time 0
unless an arrival period is given.  Time is continuous; the event queue is
ordered by (time, node index, task id) so runs are bit-for-bit
reproducible.

Per-task latencies are pre-sampled into a workload table keyed on
(seed, task, fringe position) with a counter-based generator, so every
equivalent form of a program sees identical work.
"""

from __future__ import annotations

import heapq
from collections import deque
from dataclasses import dataclass, field
from typing import Optional, Union

import numpy as np

from .core import (
    Constant,
    Farm,
    Normal,
    Pipe,
    Program,
    SeqComp,
    SeqProfile,
    SeqRef,
    Skeleton,
    equivalent,
    fringe,
)
from .costmodel import (
    DEFAULT_POLICY,
    BudgetTooSmall,
    Decls,
    SizingPolicy,
    farm_worker_plan,
    sequential_service_time,
)

__all__ = [
    "Workload",
    "ProcessNetwork",
    "SimReport",
    "SweepRow",
    "NonEquivalentForms",
    "BudgetTooSmall",
    "pregenerate_workload",
    "build_network",
    "simulate",
    "sweep",
    "rows_to_csv",
    "CSV_HEADER",
]

_KEY_MASK = (1 << 128) - 1
OUTPUT = -2
_SOURCE = -1


class NonEquivalentForms(ValueError):
    """The forms under comparison do not compose the same stages in order."""


# --- workload -------------------------------------------------------------


@dataclass(eq=False)
class Workload:
    """Pre-sampled per-task, per-fringe-position compute latencies."""

    n: int
    seed: int
    fringe_order: tuple[str, ...]
    latencies: np.ndarray  # shape (n, len(fringe_order)), all entries > 0


def _entry_rng(seed: int, task: int, position: int) -> np.random.Generator:
    bitgen = np.random.Philox(key=seed & _KEY_MASK, counter=[task, position, 0, 0])
    return np.random.Generator(bitgen)


def pregenerate_workload(
    seed: int, n: int, decls: Decls, fringe_order: list[str] | tuple[str, ...]
) -> Workload:
    """Sample the latency table; entry [t][j] depends only on (seed, t, j).

    Constant distributions yield their mean exactly; normal samples are
    resampled until strictly above mu/1000, so all entries are positive.
    """
    if n < 1:
        raise ValueError("stream length must be >= 1")
    order = tuple(fringe_order)
    table = np.empty((n, len(order)), dtype=np.float64)
    for j, name in enumerate(order):
        dist = decls[name].t_seq
        if isinstance(dist, Constant) or dist.sigma == 0:
            table[:, j] = dist.mu
            continue
        eps = dist.epsilon
        for t in range(n):
            rng = _entry_rng(seed, t, j)
            v = rng.normal(dist.mu, dist.sigma)
            while v <= eps:
                v = rng.normal(dist.mu, dist.sigma)
            table[t, j] = v
    return Workload(n, seed, order, table)


# --- process networks ------------------------------------------------------


@dataclass
class SeqNode:
    index: int
    label: str
    t_in: float
    t_out: float
    columns: tuple[int, ...]
    next_node: int = OUTPUT


@dataclass
class Emitter:
    index: int
    label: str
    t_in: float
    farm_id: int


@dataclass
class Collector:
    index: int
    label: str
    t_out: float
    farm_id: int
    next_node: int = OUTPUT


Node = Union[SeqNode, Emitter, Collector]


@dataclass
class FarmGroup:
    farm_id: int
    emitter: int
    collector: int
    worker_entries: tuple[int, ...]


@dataclass
class ProcessNetwork:
    nodes: list[Node]
    entry: int
    exit: int
    farms: list[FarmGroup]
    fringe_order: tuple[str, ...]
    worker_entry_farm: dict[int, int]
    sequential_service_time: float

    @property
    def pe_count(self) -> int:
        return len(self.nodes)


def build_network(
    s: Skeleton, decls: Decls, policy: SizingPolicy = DEFAULT_POLICY
) -> ProcessNetwork:
    """Compile a skeleton to its template process network.

    Sequential units become one node each; pipelines chain subnetworks;
    a farm becomes an emitter, W copies of the inner subnetwork and a
    collector, with W taken from the sizing policy.
    """
    plan = farm_worker_plan(s, decls, policy)
    nodes: list[Node] = []
    farms: list[FarmGroup] = []
    worker_entry_farm: dict[int, int] = {}

    def build(sk: Skeleton, path: tuple[int, ...], col: int) -> tuple[int, int, int]:
        if isinstance(sk, (SeqRef, SeqComp)):
            names = fringe(sk)
            node = SeqNode(
                index=len(nodes),
                label="seq[" + ";".join(names) + "]",
                t_in=decls[names[0]].t_in,
                t_out=decls[names[-1]].t_out,
                columns=tuple(range(col, col + len(names))),
            )
            nodes.append(node)
            return node.index, node.index, len(names)
        if isinstance(sk, Pipe):
            entry = prev_exit = None
            used = 0
            for i, st in enumerate(sk.stages):
                e, x, k = build(st, path + (i,), col + used)
                used += k
                if prev_exit is None:
                    entry = e
                else:
                    nodes[prev_exit].next_node = e
                prev_exit = x
            return entry, prev_exit, used
        assert isinstance(sk, Farm)
        names = fringe(sk.inner)
        fid = len(farms)
        farms.append(None)  # reserve the id; filled in below
        em = Emitter(len(nodes), f"emitter#{fid}", decls[names[0]].t_in, fid)
        nodes.append(em)
        entries, exits = [], []
        used = 0
        for _ in range(plan[path]):
            e, x, used = build(sk.inner, path + (0,), col)
            entries.append(e)
            exits.append(x)
        co = Collector(len(nodes), f"collector#{fid}", decls[names[-1]].t_out, fid)
        nodes.append(co)
        for x in exits:
            nodes[x].next_node = co.index
        for e in entries:
            worker_entry_farm[e] = fid
        farms[fid] = FarmGroup(fid, em.index, co.index, tuple(entries))
        return em.index, co.index, used

    entry, exit_, _ = build(s, (), 0)
    order = tuple(fringe(s))
    return ProcessNetwork(
        nodes=nodes,
        entry=entry,
        exit=exit_,
        farms=farms,
        fringe_order=order,
        worker_entry_farm=worker_entry_farm,
        sequential_service_time=sequential_service_time(list(order), decls),
    )


# --- simulation -------------------------------------------------------------


@dataclass
class SimReport:
    service_time: float
    completion_time: float
    pe_count: int
    efficiency: float
    per_node_busy: dict[str, float]
    departures: list[tuple[int, float]]


@dataclass
class _FarmState:
    group: FarmGroup
    central: deque = field(default_factory=deque)
    dispatch_seq: list = field(default_factory=list)
    release_idx: int = 0
    ordered_buffer: set = field(default_factory=set)
    fifo_buffer: deque = field(default_factory=deque)


class _Run:
    def __init__(self, net: ProcessNetwork, w: Workload, ordered: bool, arrival_period: float):
        self.net = net
        self.w = w
        self.ordered = ordered
        self.nodes = net.nodes
        self.busy = [False] * len(net.nodes)
        self.busy_time = [0.0] * len(net.nodes)
        self.queues: list[deque] = [deque() for _ in net.nodes]
        self.farm_state = [_FarmState(g) for g in net.farms]
        self.heap: list[tuple[float, int, int]] = []
        self.departures: list[tuple[int, float]] = []
        # per-task compute totals per distinct column set, summed in column order
        self.col_sums: dict[tuple[int, ...], np.ndarray] = {}
        for node in net.nodes:
            if isinstance(node, SeqNode) and node.columns not in self.col_sums:
                acc = np.zeros(w.n)
                for c in node.columns:
                    acc += w.latencies[:, c]
                self.col_sums[node.columns] = acc
        self.arrival_period = arrival_period

    def run(self) -> None:
        if self.arrival_period <= 0:
            for t in range(self.w.n):
                self.queues[self.net.entry].append(t)
            self.try_start(self.net.entry, 0.0)
        else:
            for t in range(self.w.n):
                heapq.heappush(self.heap, (t * self.arrival_period, _SOURCE, t))
        self.drain_farms(0.0)
        while self.heap:
            now, idx, task = heapq.heappop(self.heap)
            if idx == _SOURCE:
                self.queues[self.net.entry].append(task)
                self.try_start(self.net.entry, now)
            else:
                self.finish(idx, task, now)
            self.drain_farms(now)

    def finish(self, idx: int, task: int, now: float) -> None:
        self.busy[idx] = False
        node = self.nodes[idx]
        if isinstance(node, Emitter):
            st = self.farm_state[node.farm_id]
            st.central.append(task)
            st.dispatch_seq.append(task)
        else:
            dest = node.next_node
            if dest == OUTPUT:
                self.departures.append((task, now))
            else:
                dest_node = self.nodes[dest]
                if isinstance(dest_node, Collector):
                    st = self.farm_state[dest_node.farm_id]
                    if self.ordered:
                        st.ordered_buffer.add(task)
                    else:
                        st.fifo_buffer.append(task)
                else:
                    self.queues[dest].append(task)
                self.try_start(dest, now)
        self.try_start(idx, now)

    def try_start(self, idx: int, now: float) -> None:
        if self.busy[idx]:
            return
        node = self.nodes[idx]
        if isinstance(node, Collector):
            st = self.farm_state[node.farm_id]
            if self.ordered:
                if st.release_idx >= len(st.dispatch_seq):
                    return
                expected = st.dispatch_seq[st.release_idx]
                if expected not in st.ordered_buffer:
                    return
                st.ordered_buffer.discard(expected)
                st.release_idx += 1
                task = expected
            else:
                if not st.fifo_buffer:
                    return
                task = st.fifo_buffer.popleft()
            dur = node.t_out
        else:
            if not self.queues[idx]:
                return
            task = self.queues[idx].popleft()
            if isinstance(node, Emitter):
                dur = node.t_in
            else:
                dur = node.t_in + float(self.col_sums[node.columns][task]) + node.t_out
        self.busy[idx] = True
        self.busy_time[idx] += dur
        heapq.heappush(self.heap, (now + dur, idx, task))

    def worker_ready(self, idx: int) -> bool:
        if self.busy[idx] or self.queues[idx]:
            return False
        node = self.nodes[idx]
        if isinstance(node, Emitter):
            st = self.farm_state[node.farm_id]
            return not st.central and any(
                self.worker_ready(w) for w in st.group.worker_entries
            )
        return True

    def drain_farms(self, now: float) -> None:
        moved = True
        while moved:
            moved = False
            for st in self.farm_state:
                while st.central:
                    target = None
                    for w in st.group.worker_entries:
                        if self.worker_ready(w):
                            target = w
                            break
                    if target is None:
                        break
                    self.queues[target].append(st.central.popleft())
                    self.try_start(target, now)
                    moved = True


def simulate(
    net: ProcessNetwork,
    w: Workload,
    *,
    ordered: bool = True,
    arrival_period: float = 0.0,
) -> SimReport:
    """Run the network over the workload and measure its performance.

    The service time is the mean inter-departure gap over the steady-state
    window: departures sharing the very first departure instant (the
    initial parallel fill of a saturated farm) count as one, so a farm of
    W workers over constant work measures exactly work/W.
    """
    if net.fringe_order != w.fringe_order:
        raise ValueError(
            f"network fringe order {net.fringe_order} does not match "
            f"workload order {w.fringe_order}"
        )
    run = _Run(net, w, ordered, arrival_period)
    run.run()
    deps = run.departures
    n = w.n
    assert len(deps) == n and {t for t, _ in deps} == set(range(n)), "task conservation"
    completion = deps[-1][1]
    t_first = deps[0][1]
    warm = sum(1 for _, t in deps if t == t_first)
    if n - warm > 0:
        service = (completion - t_first) / (n - warm)
    else:
        service = completion  # single departure window
    busy = {
        f"{node.index}:{node.label}": (run.busy_time[node.index] / completion if completion > 0 else 0.0)
        for node in net.nodes
    }
    eff = net.sequential_service_time / (net.pe_count * service)
    return SimReport(
        service_time=service,
        completion_time=completion,
        pe_count=net.pe_count,
        efficiency=eff,
        per_node_busy=busy,
        departures=deps,
    )


# --- parameter sweeps --------------------------------------------------------


@dataclass(frozen=True)
class SweepRow:
    form: str
    seed: int
    sigma: float
    n: int
    pe_count: int
    service_time: float
    completion_time: float
    efficiency: float


CSV_HEADER = "form,seed,sigma,n,pe_count,service_time,completion_time,efficiency"


def _with_sigma(decls: Decls, sigma: Optional[float]) -> Decls:
    if sigma is None:
        return decls
    out = {}
    for name, p in decls.items():
        dist = Normal(p.t_seq.mu, sigma) if sigma > 0 else Constant(p.t_seq.mu)
        out[name] = SeqProfile(name, dist, p.t_in, p.t_out, p.in_type, p.out_type)
    return out


def sweep(
    program: Program,
    forms: list[Skeleton],
    sigma_grid: Optional[list[float]] = None,
    seeds: tuple[int, ...] | list[int] = (1,),
    *,
    n: int = 200,
    policy: SizingPolicy = DEFAULT_POLICY,
    ordered: bool = True,
    arrival_period: float = 0.0,
) -> list[SweepRow]:
    """Simulate every form at every (sigma, seed) grid point.

    All forms at one grid point share a pre-generated workload, so the
    comparison is over identical work.  Grid sigmas replace the declared
    sigma of every stage (absolute seconds); with no grid the declared
    distributions are used and rows carry the largest declared sigma.
    """
    from .dsl import format_expr

    if not forms:
       raise ValueError("no forms to sweep")
    base = forms[0]
    for f in forms[1:]:
        if not equivalent(base, f):
            raise NonEquivalentForms(
                f"{format_expr(f)} has fringe {fringe(f)}, expected {fringe(base)}"
            )
    decls = program.decls
    order = fringe(base)
    nets = [(format_expr(f), build_network(f, decls, policy)) for f in forms]
    grid = [None] if sigma_grid is None else list(sigma_grid)
    declared_sigma = max(p.t_seq.sigma for p in decls.values()) if decls else 0.0

    rows: list[SweepRow] = []
    for sigma in grid:
        decls_s = _with_sigma(decls, sigma)
        row_sigma = declared_sigma if sigma is None else sigma
        for seed in seeds:
            w = pregenerate_workload(seed, n, decls_s, order)
            for text, net in nets:
                rep = simulate(net, w, ordered=ordered, arrival_period=arrival_period)
                rows.append(
                    SweepRow(
                        form=text,
                        seed=seed,
                        sigma=row_sigma,
                        n=n,
                        pe_count=rep.pe_count,
                        service_time=rep.service_time,
                        completion_time=rep.completion_time,
                        efficiency=rep.efficiency,
                    )
                )
    return rows


def _fmt(x: float) -> str:
    return f"{x:.6g}"


def rows_to_csv(rows: list[SweepRow]) -> str:
    lines = [CSV_HEADER]
    for r in rows:
        lines.append(
            f"{r.form},{r.seed},{_fmt(r.sigma)},{r.n},{r.pe_count},"
            f"{_fmt(r.service_time)},{_fmt(r.completion_time)},{_fmt(r.efficiency)}"
        )
    return "\n".join(lines) + "\n"
