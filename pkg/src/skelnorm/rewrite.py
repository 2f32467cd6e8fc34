"""The ten rewriting rules over skeleton trees, plus a normalization strategy.

Rules are position-addressed: ``applicable`` enumerates every (rule, path)
whose left-hand side matches, and ``apply_rule`` rewrites one subtree.
Every rule preserves the fringe, hence the computed function.

Because pipelines and compositions are stored flattened, the two
associativity pairs act on a binary view of an n-ary node and re-flatten,
which makes them identities on storage; they are kept so the rule set is
complete and each rule has its inverse.  Positions directly under a
sequential composition admit no rules: no right-hand side would keep the
part sequential.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

from .core import (
    Farm,
    Path,
    Pipe,
    SeqComp,
    SeqRef,
    Skeleton,
    children,
    fringe,
    normal_form,
    pipe,
    seqcomp,
    subtree,
)


class RuleId(Enum):
    Fi = "Fi"      # s -> farm(s)
    Fe = "Fe"      # farm(s) -> s
    Pas1 = "Pas1"  # s1|(s2|s3) -> (s1|s2)|s3
    Pas2 = "Pas2"  # (s1|s2)|s3 -> s1|(s2|s3)
    SCas1 = "SCas1"  # p1;(p2;p3) -> (p1;p2);p3
    SCas2 = "SCas2"  # (p1;p2);p3 -> p1;(p2;p3)
    Se = "Se"      # ;(p) -> p
    Si = "Si"      # p -> ;(p)
    Coll = "Coll"  # p1|...|pk -> p1;...;pk   (all stages sequential)
    Expd = "Expd"  # p1;...;pk -> p1|...|pk   (k >= 2)


class RuleNotApplicable(Exception):
    pass


@dataclass(frozen=True)
class RewriteStep:
    rule: RuleId
    at: Path
    before: Skeleton
    after: Skeleton


def _matches(s: Skeleton, rule: RuleId) -> bool:
    if rule is RuleId.Fi:
        return True
    if rule is RuleId.Fe:
        return isinstance(s, Farm)
    if rule in (RuleId.Pas1, RuleId.Pas2):
        return isinstance(s, Pipe) and len(s.stages) >= 3
    if rule in (RuleId.SCas1, RuleId.SCas2):
        return isinstance(s, SeqComp) and len(s.parts) >= 3
    if rule is RuleId.Se:
        return isinstance(s, SeqComp) and len(s.parts) == 1
    if rule is RuleId.Si:
        return isinstance(s, SeqRef)
    if rule is RuleId.Coll:
        return isinstance(s, Pipe) and all(isinstance(st, SeqRef) for st in s.stages)
    if rule is RuleId.Expd:
        return isinstance(s, SeqComp) and len(s.parts) >= 2
    return False


def _rhs(s: Skeleton, rule: RuleId) -> Skeleton:
    if rule is RuleId.Fi:
        return Farm(s)
    if rule is RuleId.Fe:
        assert isinstance(s, Farm)
        return s.inner
    if rule is RuleId.Pas1:
        # right-nested binary view, rotate left, re-flatten
        assert isinstance(s, Pipe)
        s1, s2, *rest = s.stages
        return pipe(pipe(s1, s2), *rest)
    if rule is RuleId.Pas2:
        assert isinstance(s, Pipe)
        *front, sk = s.stages
        return pipe(*front[:-1], pipe(front[-1], sk))
    if rule is RuleId.SCas1:
        assert isinstance(s, SeqComp)
        p1, p2, *rest = s.parts
        return seqcomp(seqcomp(p1, p2), *rest)
    if rule is RuleId.SCas2:
        assert isinstance(s, SeqComp)
        *front, pk = s.parts
        return seqcomp(*front[:-1], seqcomp(front[-1], pk))
    if rule is RuleId.Se:
        assert isinstance(s, SeqComp)
        return s.parts[0]
    if rule is RuleId.Si:
        return SeqComp((s,))
    if rule is RuleId.Coll:
        assert isinstance(s, Pipe)
        return SeqComp(s.stages)
    if rule is RuleId.Expd:
        assert isinstance(s, SeqComp)
        return Pipe(s.parts)
    raise RuleNotApplicable(str(rule))


def applicable(s: Skeleton) -> list[tuple[RuleId, Path]]:
    """Every (rule, position) whose left-hand side matches, in preorder
    position then rule-declaration order."""
    out: list[tuple[RuleId, Path]] = []

    def walk(node: Skeleton, path: Path) -> None:
        for rule in RuleId:
            if _matches(node, rule):
                out.append((rule, path))
        if isinstance(node, SeqComp):
            return  # no rule keeps a composition part sequential
        for i, c in enumerate(children(node)):
            walk(c, path + (i,))

    walk(s, ())
    return out


def _replace(s: Skeleton, path: Path, new: Skeleton) -> Skeleton:
    """Substitute at path, splicing nested pipes/compositions back flat."""
    if not path:
        return new
    i, rest = path[0], path[1:]
    kids = children(s)
    if i >= len(kids):
        raise RuleNotApplicable(f"no subtree at {list(path)}")
    replaced = _replace(kids[i], rest, new)
    if isinstance(s, Farm):
        return Farm(replaced)
    if isinstance(s, Pipe):
        stages = s.stages[:i] + (replaced,) + s.stages[i + 1 :]
        return pipe(*stages)
    assert isinstance(s, SeqComp)
    parts = s.parts[:i] + (replaced,) + s.parts[i + 1 :]
    return seqcomp(*parts)


def apply_rule(s: Skeleton, rule: RuleId, at: Path) -> Skeleton:
    """Rewrite the subtree at ``at`` with ``rule``; fringe is preserved.

    Raises RuleNotApplicable when the left-hand side does not match there
    (including positions under a sequential composition).
    """
    try:
        target = subtree(s, at)
    except IndexError as exc:
        raise RuleNotApplicable(str(exc)) from None
    if (rule, at) not in applicable(s):
        raise RuleNotApplicable(f"{rule.value} does not match at {list(at)}")
    return _replace(s, at, _rhs(target, rule))


def _first_farm(s: Skeleton, path: Path = ()) -> Path | None:
    if isinstance(s, Farm):
        return path
    for i, c in enumerate(children(s)):
        found = _first_farm(c, path + (i,))
        if found is not None:
            return found
    return None


def normalize_by_rewriting(s: Skeleton) -> tuple[Skeleton, list[RewriteStep]]:
    """Drive ``s`` to its normal form through single rule applications.

    Strategy: strip every farm top-down (Fe), dissolve composition stages
    of the remaining pipeline into it (Expd, or Se for single-part ones),
    collapse the all-sequential pipeline (Coll), wrap a lone leaf (Si),
    then introduce the one final farm (Fi).  Terminates in O(size) steps
    and the result equals ``normal_form(s)``.
    """
    steps: list[RewriteStep] = []
    cur = s
    if cur == normal_form(cur):
        return cur, steps

    def step(rule: RuleId, at: Path) -> None:
        nonlocal cur
        after = apply_rule(cur, rule, at)
        steps.append(RewriteStep(rule, at, cur, after))
        cur = after

    while True:
        at = _first_farm(cur)
        if at is None:
            break
        step(RuleId.Fe, at)

    if isinstance(cur, SeqRef):
        step(RuleId.Si, ())
    elif isinstance(cur, Pipe):
        i = 0
        while i < len(cur.stages):
            stage = cur.stages[i]
            if isinstance(stage, SeqComp):
                if len(stage.parts) == 1:
                    step(RuleId.Se, (i,))
                    i += 1
                else:
                    width = len(stage.parts)
                    step(RuleId.Expd, (i,))
                    i += width
            else:
                i += 1
        step(RuleId.Coll, ())

    step(RuleId.Fi, ())
    return cur, steps


def format_trace(steps: list[RewriteStep]) -> str:
    """One line per step: ``RULE @ path -> canonical-expr``."""
    from .dsl import format_expr

    return "\n".join(
        f"{st.rule.value} @ {list(st.at)} -> {format_expr(st.after)}" for st in steps
    )
