"""Shared generators for randomized tests."""

from __future__ import annotations

import random

from skelnorm.core import (
    Constant,
    Farm,
    Normal,
    Pipe,
    Program,
    SeqComp,
    SeqProfile,
    SeqRef,
    Skeleton,
)

NAMES = ["a", "b", "c", "d", "e", "f"]


def random_skeleton(rng: random.Random, depth: int = 5) -> Skeleton:
    """A valid random tree: flattened pipes, compositions of leaves only."""
    if depth <= 0:
        kind = rng.choice(["ref", "seqcomp"])
    else:
        kind = rng.choice(["ref", "seqcomp", "farm", "pipe", "pipe"])
    if kind == "ref":
        return SeqRef(rng.choice(NAMES))
    if kind == "seqcomp":
        k = rng.randint(2, 3)
        return SeqComp(tuple(SeqRef(rng.choice(NAMES)) for _ in range(k)))
    if kind == "farm":
        return Farm(random_skeleton(rng, depth - 1))
    stages = []
    for _ in range(rng.randint(2, 3)):
        st = random_skeleton(rng, depth - 1)
        if isinstance(st, Pipe):  # keep storage flattened
            stages.extend(st.stages)
        else:
            stages.append(st)
    return Pipe(tuple(stages))


def random_profiles(rng: random.Random, compliant: bool = True, sigma: float = 0.0) -> dict[str, SeqProfile]:
    """Profiles for every name; compliant ones keep comm costs below t_seq."""
    decls = {}
    for name in NAMES:
        mu = rng.uniform(0.5, 8.0)
        if compliant:
            t_in = rng.uniform(0.0, 0.49 * mu)
            t_out = rng.uniform(0.0, 0.49 * mu)
        else:
            t_in = rng.uniform(0.0, 2.0 * mu)
            t_out = rng.uniform(0.0, 2.0 * mu)
        dist = Normal(mu, sigma) if sigma > 0 else Constant(mu)
        decls[name] = SeqProfile(name, dist, t_in, t_out)
    return decls


def random_program(rng: random.Random, depth: int = 5, compliant: bool = True) -> Program:
    return Program(random_profiles(rng, compliant), random_skeleton(rng, depth))
