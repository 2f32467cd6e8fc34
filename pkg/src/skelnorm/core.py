"""Skeleton expression trees for stream-parallel programs.

A program is built from four constructors: a sequential leaf (a named
reference to declared sequential code), sequential composition of such
leaves, pipelines, and task farms.  All values are immutable and safe to
share; every transformation produces a new tree.

Composite nodes are stored flattened: a pipeline never directly contains
another pipeline, and a sequential composition only ever contains leaves.
Use the :func:`pipe` / :func:`seqcomp` helpers to build trees that respect
this discipline.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Union

Path = tuple[int, ...]


@dataclass(frozen=True)
class SeqRef:
    """Leaf referencing a declared sequential stage by name."""

    name: str


@dataclass(frozen=True)
class SeqComp:
    """Sequential composition ``p1 ; p2 ; ... ; pk`` of leaves.

    A single-part composition is a legal transient form (it shows up while
    rewriting); :func:`validate` flags it with a warning only.
    """

    parts: tuple["Skeleton", ...]


@dataclass(frozen=True)
class Pipe:
    """Pipeline ``s1 | s2 | ... | sk``, k >= 2, stored flattened."""

    stages: tuple["Skeleton", ...]


@dataclass(frozen=True)
class Farm:
    """Task farm ``farm(s)``: functional identity, replicated workers."""

    inner: "Skeleton"


Skeleton = Union[SeqRef, SeqComp, Pipe, Farm]


def ref(name: str) -> SeqRef:
    return SeqRef(name)


def seqcomp(*parts: Skeleton) -> SeqComp:
    """Build a sequential composition, splicing nested compositions."""
    flat: list[Skeleton] = []
    for p in parts:
        if isinstance(p, SeqComp):
            flat.extend(p.parts)
        else:
            flat.append(p)
    return SeqComp(tuple(flat))


def pipe(*stages: Skeleton) -> Pipe:
    """Build a pipeline, splicing nested pipelines."""
    flat: list[Skeleton] = []
    for s in stages:
        if isinstance(s, Pipe):
            flat.extend(s.stages)
        else:
            flat.append(s)
    return Pipe(tuple(flat))


def farm(inner: Skeleton) -> Farm:
    return Farm(inner)


def children(s: Skeleton) -> tuple[Skeleton, ...]:
    if isinstance(s, SeqRef):
        return ()
    if isinstance(s, SeqComp):
        return s.parts
    if isinstance(s, Pipe):
        return s.stages
    return (s.inner,)


def subtree(s: Skeleton, path: Path) -> Skeleton:
    """Subtree addressed by a sequence of child indices from the root."""
    for i in path:
        kids = children(s)
        if i >= len(kids):
            raise IndexError(f"no child {i} at {s!r}")
        s = kids[i]
    return s


def node_count(s: Skeleton) -> int:
    return 1 + sum(node_count(c) for c in children(s))


# --- latency distributions and per-stage cost profiles -----------------


@dataclass(frozen=True)
class Constant:
    """Degenerate latency distribution: every sample equals ``mu``."""

    mu: float

    def __post_init__(self) -> None:
        if self.mu <= 0:
            raise ValueError(f"latency mean must be positive, got {self.mu}")

    @property
    def sigma(self) -> float:
        return 0.0


@dataclass(frozen=True)
class Normal:
    """Gaussian latency, truncated strictly below at ``mu / 1000``.

    Truncation is realised by resampling, so all samples are positive even
    for large sigma.
    """

    mu: float
    sigma: float

    def __post_init__(self) -> None:
        if self.mu <= 0:
            raise ValueError(f"latency mean must be positive, got {self.mu}")
        if self.sigma < 0:
            raise ValueError(f"sigma must be non-negative, got {self.sigma}")

    @property
    def epsilon(self) -> float:
        return self.mu / 1000.0


LatencyDist = Union[Constant, Normal]


@dataclass(frozen=True)
class SeqProfile:
    """Cost record for one declared sequential stage.

    ``t_seq`` is the compute latency distribution; ``t_in`` / ``t_out`` are
    the costs of receiving an input item and delivering an output item.
    ``in_type`` / ``out_type`` are opaque tags used only for chainability
    checks and may be omitted.
    """

    name: str
    t_seq: LatencyDist
    t_in: float = 0.0
    t_out: float = 0.0
    in_type: Optional[str] = None
    out_type: Optional[str] = None

    def __post_init__(self) -> None:
        if self.t_in < 0 or self.t_out < 0:
            raise ValueError(
                f"communication costs must be non-negative for {self.name!r}"
            )

    @property
    def mean(self) -> float:
        return self.t_seq.mu


@dataclass
class Program:
    """A set of stage declarations plus the skeleton body to run."""

    decls: dict[str, SeqProfile]
    body: Skeleton


# --- validation ---------------------------------------------------------

ARITY = "ArityViolation"
NON_SEQUENTIAL_PART = "NonSequentialPart"
UNKNOWN_NAME = "UnknownName"
TYPE_MISMATCH = "TypeMismatch"
UNARY_SEQCOMP = "UnarySeqComp"
NOT_FLATTENED = "NotFlattened"


@dataclass(frozen=True)
class Violation:
    path: Path
    code: str
    message: str
    severity: str = "error"  # "error" | "warning"


def validate(program: Program) -> list[Violation]:
    """Structural checks for a whole program.

    Returns an empty list iff every invariant holds; single-part sequential
    compositions are reported as warnings, everything else as errors.
    Violations are data, never exceptions.
    """
    out: list[Violation] = []
    _validate_tree(program.body, program.decls, (), out)
    return out


def validate_skeleton(s: Skeleton, decls: Optional[dict[str, SeqProfile]] = None) -> list[Violation]:
    """Validate a bare skeleton, optionally resolving names against decls."""
    out: list[Violation] = []
    _validate_tree(s, decls, (), out)
    return out


def is_valid(program: Program) -> bool:
    return not any(v.severity == "error" for v in validate(program))


def _validate_tree(
    s: Skeleton,
    decls: Optional[dict[str, SeqProfile]],
    path: Path,
    out: list[Violation],
) -> None:
    if isinstance(s, SeqRef):
        if decls is not None and s.name not in decls:
            out.append(Violation(path, UNKNOWN_NAME, f"undeclared stage {s.name!r}"))
        return
    if isinstance(s, SeqComp):
        if len(s.parts) < 1:
            out.append(Violation(path, ARITY, "sequential composition needs at least one part"))
        elif len(s.parts) == 1:
            out.append(
                Violation(path, UNARY_SEQCOMP, "single-part composition (transient form)", "warning")
            )
        for i, p in enumerate(s.parts):
            if not isinstance(p, SeqRef):
                out.append(
                    Violation(
                        path + (i,),
                        NON_SEQUENTIAL_PART,
                        "';' composes sequential stages only",
                    )
                )
            else:
                _validate_tree(p, decls, path + (i,), out)
        _check_chain(s.parts, decls, path, out)
        return
    if isinstance(s, Pipe):
        if len(s.stages) < 2:
            out.append(Violation(path, ARITY, "pipeline needs at least two stages"))
        for i, st in enumerate(s.stages):
            if isinstance(st, Pipe):
                out.append(
                    Violation(path + (i,), NOT_FLATTENED, "pipeline nested directly in a pipeline")
                )
            _validate_tree(st, decls, path + (i,), out)
        _check_chain(s.stages, decls, path, out)
        return
    _validate_tree(s.inner, decls, path + (0,), out)


def _check_chain(
    elems: tuple[Skeleton, ...],
    decls: Optional[dict[str, SeqProfile]],
    path: Path,
    out: list[Violation],
) -> None:
    """Type tags, when present, must chain across composed elements."""
    if decls is None:
        return
    for i in range(len(elems) - 1):
        left, right = _last_leaf(elems[i]), _first_leaf(elems[i + 1])
        if left is None or right is None:
            continue
        lp, rp = decls.get(left), decls.get(right)
        if lp is None or rp is None:
            continue
        if lp.out_type is not None and rp.in_type is not None and lp.out_type != rp.in_type:
            out.append(
                Violation(
                    path + (i + 1,),
                    TYPE_MISMATCH,
                    f"{left!r} produces {lp.out_type!r} but {right!r} consumes {rp.in_type!r}",
                )
            )


def _first_leaf(s: Skeleton) -> Optional[str]:
    names = fringe(s)
    return names[0] if names else None


def _last_leaf(s: Skeleton) -> Optional[str]:
    names = fringe(s)
    return names[-1] if names else None


# --- fringe, normal form, equivalence ------------------------------------


def fringe(s: Skeleton) -> list[str]:
    """Left-to-right list of the sequential stage names in ``s``.

    The farm contributes nothing of its own; pipelines append the fringes
    of their stages.
    """
    if isinstance(s, SeqRef):
        return [s.name]
    if isinstance(s, SeqComp):
        out: list[str] = []
        for p in s.parts:
            out.extend(fringe(p))
        return out
    if isinstance(s, Pipe):
        out = []
        for st in s.stages:
            out.extend(fringe(st))
        return out
    return fringe(s.inner)


def normal_form(s: Skeleton) -> Farm:
    """Single farm around the sequential composition of the whole fringe."""
    return Farm(SeqComp(tuple(SeqRef(n) for n in fringe(s))))


def equivalent(s1: Skeleton, s2: Skeleton) -> bool:
    """Functional equality: the two trees compose the same stages in order."""
    return fringe(s1) == fringe(s2)
