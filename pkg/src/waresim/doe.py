"""Pairwise (all-pairs) combination suites for hyperparameter sweeps.

A suite covers every cross-parameter value pair with far fewer rows than
the full Cartesian product.  Construction is greedy: each new row is the
assignment covering the most still-uncovered pairs, ties broken by a seeded
shuffle, so generation is deterministic per seed.  verify_pairwise() checks
coverage by independent enumeration and never trusts the generator's own
bookkeeping.
"""

from __future__ import annotations

import itertools
import random
from dataclasses import dataclass, field
from pathlib import Path

import yaml

Level = object  # parameter levels are opaque scalars (floats, ints, strings)


@dataclass(frozen=True)
class ParameterSpace:
    """Ordered parameters, each with an ordered list of distinct levels."""

    params: tuple[tuple[str, tuple[Level, ...]], ...]

    def __post_init__(self):
        if len(self.params) < 2:
            raise ValueError("a parameter space needs at least two parameters")
        seen = set()
        for name, levels in self.params:
            if name in seen:
                raise ValueError(f"duplicate parameter name {name!r}")
            seen.add(name)
            if not levels:
                raise ValueError(f"parameter {name!r} has no levels")
            if len(set(levels)) != len(levels):
                raise ValueError(f"parameter {name!r} has duplicate levels")

    @property
    def names(self) -> list[str]:
        return [name for name, _ in self.params]

    def product_size(self) -> int:
        size = 1
        for _, levels in self.params:
            size *= len(levels)
        return size

    def pair_count(self) -> int:
        sizes = [len(levels) for _, levels in self.params]
        return sum(
            sizes[i] * sizes[j]
            for i in range(len(sizes))
            for j in range(i + 1, len(sizes))
        )


def _pairs_of(space: ParameterSpace, assignment: dict) -> set:
    names = space.names
    return {
        (names[i], assignment[names[i]], names[j], assignment[names[j]])
        for i in range(len(names))
        for j in range(i + 1, len(names))
    }


def all_required_pairs(space: ParameterSpace) -> set:
    out = set()
    for i, (ni, li) in enumerate(space.params):
        for nj, lj in space.params[i + 1:]:
            for vi in li:
                for vj in lj:
                    out.add((ni, vi, nj, vj))
    return out


@dataclass
class CombinationSuite:
    space: ParameterSpace
    assignments: list[dict] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.assignments)

    def covered_pairs(self) -> set:
        out = set()
        for a in self.assignments:
            out |= _pairs_of(self.space, a)
        return out


# Above this product size the greedy scan samples candidate rows instead of
# enumerating the full Cartesian product each round.
_EXHAUSTIVE_LIMIT = 20_000
_SAMPLED_CANDIDATES = 64


def generate_pairwise(space: ParameterSpace, seed: int = 0) -> CombinationSuite:
    """Greedy covering construction: repeatedly emit the assignment covering
    the most uncovered pairs until none remain."""
    rng = random.Random(seed)
    uncovered = all_required_pairs(space)
    suite = CombinationSuite(space)
    exhaustive = space.product_size() <= _EXHAUSTIVE_LIMIT
    if exhaustive:
        candidates = [
            dict(zip(space.names, combo))
            for combo in itertools.product(*(levels for _, levels in space.params))
        ]

    while uncovered:
        if exhaustive:
            pool = list(candidates)
        else:
            pool = [_sampled_candidate(space, uncovered, rng)
                    for _ in range(_SAMPLED_CANDIDATES)]
        rng.shuffle(pool)  # seeded tie-breaking
        best = max(pool, key=lambda a: len(_pairs_of(space, a) & uncovered))
        gained = _pairs_of(space, best) & uncovered
        if not gained:
            # sampled mode can whiff; force a row from an uncovered pair
            ni, vi, nj, vj = next(iter(sorted(uncovered, key=repr)))
            best = {name: levels[0] for name, levels in space.params}
            best[ni] = vi
            best[nj] = vj
            gained = _pairs_of(space, best) & uncovered
        uncovered -= gained
        suite.assignments.append(best)
    return suite


def _sampled_candidate(space: ParameterSpace, uncovered: set, rng: random.Random) -> dict:
    """Seed a candidate row from a random uncovered pair, fill the rest
    randomly."""
    ni, vi, nj, vj = rng.choice(sorted(uncovered, key=repr))
    row = {name: rng.choice(levels) for name, levels in space.params}
    row[ni] = vi
    row[nj] = vj
    return row


def verify_pairwise(space: ParameterSpace, suite: CombinationSuite) -> tuple[bool, set]:
    """Independent oracle: enumerate every cross-parameter value pair and
    report the ones no suite row covers."""
    missing = set()
    rows = suite.assignments
    for i, (ni, levels_i) in enumerate(space.params):
        for nj, levels_j in space.params[i + 1:]:
            for vi in levels_i:
                for vj in levels_j:
                    if not any(r[ni] == vi and r[nj] == vj for r in rows):
                        missing.add((ni, vi, nj, vj))
    return (not missing, missing)


# -- bundled spaces -----------------------------------------------------------


def a2c_space() -> ParameterSpace:
    """Levels studied for the externally trained advantage actor-critic."""
    return ParameterSpace((
        ("alpha", (1.5625e-06, 0.0001, 0.8192)),
        ("gamma", (0.2302, 0.99)),
        ("vf_coef", (0.1, 0.5, 0.9)),
    ))


def ppo_space() -> ParameterSpace:
    """A2C levels plus the clipping range for the proximal-policy runs."""
    return ParameterSpace((
        ("alpha", (1.5625e-06, 0.0001, 0.8192)),
        ("gamma", (0.2302, 0.99)),
        ("vf_coef", (0.1, 0.5, 0.9)),
        ("clip", (0.08, 0.2, 0.6)),
    ))


def dqn_space() -> ParameterSpace:
    """Reconstructed in-repo DQN grid: centered on the named preset values
    and extended symmetrically; the exact published grid is not available."""
    return ParameterSpace((
        ("alpha", (0.0001, 0.001, 0.01)),
        ("tau", (0.1, 1.0)),
        ("gamma", (0.23, 0.99)),
        ("exploration_fraction", (0.0125, 0.1)),
    ))


BUNDLED_SPACES = {"a2c": a2c_space, "ppo": ppo_space, "dqn": dqn_space}


def load_space(path: str | Path) -> ParameterSpace:
    """YAML schema: {params: [{name: ..., levels: [...]}, ...]}"""
    raw = yaml.safe_load(Path(path).read_text(encoding="utf-8"))
    if not isinstance(raw, dict) or "params" not in raw:
        raise ValueError("parameter-space file must be a mapping with a 'params' list")
    params = []
    for block in raw["params"]:
        params.append((str(block["name"]), tuple(block["levels"])))
    return ParameterSpace(tuple(params))


def serialize_space(space: ParameterSpace) -> str:
    doc = {"params": [{"name": n, "levels": list(lv)} for n, lv in space.params]}
    return yaml.safe_dump(doc, sort_keys=False)


# -- sweeps -------------------------------------------------------------------


@dataclass
class SweepRow:
    combination_id: int
    assignment: dict
    mean_score: float | None
    min_score: float | None
    max_score: float | None
    error: str | None = None


def run_sweep(space: ParameterSpace, runner, seed: int = 0,
              window: int | None = None) -> list[SweepRow]:
    """Evaluate every suite combination with ``runner`` (an assignment,
    seed -> list-of-episode-scores callable) and rank by mean score over the
    trailing window.  Failures are annotated, not raised."""
    suite = generate_pairwise(space, seed)
    rows: list[SweepRow] = []
    for k, assignment in enumerate(suite.assignments):
        try:
            scores = list(runner(assignment, seed + k))
            if not scores:
                raise ValueError("runner returned no episode scores")
            w = min(window or len(scores), len(scores))
            tail = scores[-w:]
            rows.append(SweepRow(k, assignment, sum(tail) / len(tail),
                                 min(tail), max(tail)))
        except Exception as exc:  # annotate and continue with other combos
            rows.append(SweepRow(k, assignment, None, None, None,
                                 error=f"{type(exc).__name__}: {exc}"))
    rows.sort(key=lambda r: (r.mean_score is None,
                             -(r.mean_score if r.mean_score is not None else 0)))
    return rows
