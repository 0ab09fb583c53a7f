"""Seeded Monte Carlo sampling of finite chains.

Cross-validates the exact analytics: empirical completion steps against the
closed form, empirical phase frequencies against the evolved distributions,
and observed exit counts against the generating parameters.

Reproducibility contract: the per-trajectory seed is a SHA-256 hash of the
master seed and the trajectory index, and each trajectory is drawn from its
own Mersenne Twister stream seeded with that hash. Results are therefore
bit-identical across runs and independent of execution order. Rationals are
converted to floating-point weights once per row; the final positive bucket
of each row absorbs rounding residue so sampling can never fall off the end
or select a zero-probability state.
"""

from __future__ import annotations

import hashlib
import json
import math
import random
from bisect import bisect_right
from collections import Counter
from dataclasses import dataclass
from statistics import fmean, stdev

from .errors import UnknownStartState
from .markov import ONE, TransitionMatrix

DEFAULT_MAX_PHASES = 10**6


@dataclass(frozen=True)
class SimulationConfig:
    """Master seed, sample count, and the truncation guard."""

    seed: int
    num_trajectories: int
    max_phases: int = DEFAULT_MAX_PHASES

    def __post_init__(self):
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must fit in an unsigned 64-bit integer")
        if self.num_trajectories < 1:
            raise ValueError("num_trajectories must be at least 1")
        if self.max_phases < 1:
            raise ValueError("max_phases must be at least 1")


@dataclass(frozen=True, eq=False)
class SimulationReport:
    """Aggregate statistics over the sampled trajectories.

    ``empirical_mean_steps`` is the mean trajectory length in phases,
    absorption included (so it estimates t + 1); censored trajectories are
    excluded from it and reported separately, never silently dropped.
    ``standard_error`` is absent when fewer than two trajectories absorbed.
    """

    config: SimulationConfig
    start: str
    phases_of_interest: tuple[int, ...]
    absorbed_count: int
    censored_count: int
    empirical_mean_steps: float | None
    standard_error: float | None
    empirical_phase_distributions: dict[int, dict[str, float]]
    transition_counts: dict[str, dict[str, int]]

    @property
    def r3_exit_counts(self) -> dict[str, int]:
        """Observed transition counts out of state R3, when the chain has one."""
        return dict(self.transition_counts.get("R3", {}))

    def to_dict(self) -> dict:
        return {
            "config": {
                "seed": self.config.seed,
                "num_trajectories": self.config.num_trajectories,
                "max_phases": self.config.max_phases,
            },
            "start": self.start,
            "phases_of_interest": list(self.phases_of_interest),
            "absorbed_count": self.absorbed_count,
            "censored_count": self.censored_count,
            "empirical_mean_steps": self.empirical_mean_steps,
            "standard_error": self.standard_error,
            "empirical_phase_distributions": {
                str(phase): {s: freq for s, freq in sorted(dist.items())}
                for phase, dist in sorted(self.empirical_phase_distributions.items())
            },
            "transition_counts": {
                src: {dst: n for dst, n in sorted(row.items())}
                for src, row in sorted(self.transition_counts.items())
            },
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2) + "\n"


def derive_trajectory_seed(seed: int, index: int) -> int:
    """Deterministic per-trajectory seed: SHA-256 of (master seed, index)."""
    digest = hashlib.sha256(
        seed.to_bytes(8, "big") + index.to_bytes(8, "big")
    ).digest()
    return int.from_bytes(digest[:16], "big")


class _Sampler:
    """Per-row cumulative float weights, built once per matrix."""

    def __init__(self, m: TransitionMatrix):
        self.states = m.states
        self.absorbing = [m.entries[i][i] == ONE for i in range(m.n)]
        self.targets: list[list[int]] = []
        self.cums: list[list[float]] = []
        for row in m.entries:
            targets = [j for j, p in enumerate(row) if p > 0]
            cum: list[float] = []
            acc = 0.0
            for j in targets:
                acc += float(row[j])
                cum.append(acc)
            cum[-1] = 1.0  # last positive bucket takes the rounding residue
            self.targets.append(targets)
            self.cums.append(cum)

    def sample(self, rng: random.Random, start_index: int, max_phases: int) -> list[int]:
        path = [start_index]
        current = start_index
        steps = 0
        while not self.absorbing[current] and steps < max_phases:
            u = rng.random()
            k = bisect_right(self.cums[current], u)
            if k == len(self.cums[current]):
                k -= 1
            current = self.targets[current][k]
            path.append(current)
            steps += 1
        return path


def sample_trajectory(
    m: TransitionMatrix,
    start: str,
    seed: int,
    max_phases: int = DEFAULT_MAX_PHASES,
) -> list[str]:
    """Sample one path from ``start``, stopping at absorption or ``max_phases``.

    ``seed`` is the per-trajectory seed (see :func:`derive_trajectory_seed`);
    identical inputs always produce the identical path.
    """
    if start not in m.states:
        raise UnknownStartState(start)
    sampler = _Sampler(m)
    path = sampler.sample(random.Random(seed), m.index(start), max_phases)
    return [m.states[i] for i in path]


def run_simulation(
    m: TransitionMatrix,
    start: str,
    cfg: SimulationConfig,
    phases_of_interest=(),
) -> SimulationReport:
    """Sample ``cfg.num_trajectories`` paths and aggregate their statistics.

    Per-trajectory seeds are derived from ``cfg.seed`` and the trajectory
    index, so the report is identical no matter how the work is ordered.
    """
    if start not in m.states:
        raise UnknownStartState(start)
    phases = tuple(sorted(set(phases_of_interest)))
    for k in phases:
        if not 0 <= k <= cfg.max_phases:
            raise ValueError(
                f"phase of interest {k} outside [0, max_phases={cfg.max_phases}]"
            )

    sampler = _Sampler(m)
    start_index = m.index(start)
    lengths: list[int] = []
    censored = 0
    phase_counts: dict[int, Counter] = {k: Counter() for k in phases}
    transitions: Counter = Counter()

    for i in range(cfg.num_trajectories):
        rng = random.Random(derive_trajectory_seed(cfg.seed, i))
        path = sampler.sample(rng, start_index, cfg.max_phases)
        if sampler.absorbing[path[-1]]:
            lengths.append(len(path))
        else:
            censored += 1
        for k in phases:
            # Beyond absorption the chain sits in its absorbing state; a
            # censored path always covers phases 0..max_phases itself.
            phase_counts[k][path[k] if k < len(path) else path[-1]] += 1
        for a, b in zip(path, path[1:]):
            transitions[(a, b)] += 1

    mean = fmean(lengths) if lengths else None
    se = stdev(lengths) / math.sqrt(len(lengths)) if len(lengths) >= 2 else None

    distributions = {
        k: {
            m.states[idx]: counter[idx] / cfg.num_trajectories
            for idx in sorted(counter)
        }
        for k, counter in phase_counts.items()
    }
    transition_counts: dict[str, dict[str, int]] = {}
    for (a, b), count in sorted(transitions.items()):
        transition_counts.setdefault(m.states[a], {})[m.states[b]] = count

    return SimulationReport(
        config=cfg,
        start=start,
        phases_of_interest=phases,
        absorbed_count=len(lengths),
        censored_count=censored,
        empirical_mean_steps=mean,
        standard_error=se,
        empirical_phase_distributions=distributions,
        transition_counts=transition_counts,
    )
