"""The four-state Retrieve/Reuse/Revise/Retain process chain.

The process moves R1 -> R2 -> R3 and from R3 either returns to R1 (failed
solution, re-retrieve), stays at R3 (revise again), or moves to R4 (retain)
and stops. R4 is the unique absorbing state. The whole model is parameterized
by the three exit probabilities from R3, which must sum to exactly 1.

Two step-counting conventions coexist and are both exposed:

* ``mean_phases`` (t) counts phases before absorption, with closed form
  (3 - 2*p33) / (1 - p31 - p33) and lower bound 3;
* completion steps counts all phases including the absorbing one, i.e.
  t + 1, which is what :func:`trajectory_step_count` measures on an
  observed walk.
"""

from __future__ import annotations

import io
import re
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path

from .errors import (
    DoesNotStartAtR1,
    EmptyTrajectory,
    IllegalTransition,
    InvalidParameters,
    NoR3Observations,
    NonAbsorbing,
    NotAbsorbed,
    UnknownLabel,
)
from .markov import (
    ONE,
    ZERO,
    ProbabilityVector,
    TransitionMatrix,
    step_distribution,
    validate_stochastic,
)
from .rationals import coerce_rational

STATES: tuple[str, ...] = ("R1", "R2", "R3", "R4")
START_STATE = "R1"
ABSORBING_STATE = "R4"

#: Edges of the process flow diagram; trajectories must follow these.
FLOW_EDGES: dict[str, tuple[str, ...]] = {
    "R1": ("R2",),
    "R2": ("R3",),
    "R3": ("R1", "R3", "R4"),
    "R4": (),
}

_SEPARATORS = re.compile(r"[,\s]+")


@dataclass(frozen=True)
class CbrParameters:
    """Exit probabilities from the Revise step.

    ``p31`` returns to Retrieve, ``p33`` stays at Revise, ``p34`` moves on
    to Retain. They must each lie in [0, 1] and sum to exactly 1. The chain
    is absorbing iff ``p34 > 0``.
    """

    p31: Fraction
    p33: Fraction
    p34: Fraction

    def __post_init__(self):
        for name in ("p31", "p33", "p34"):
            value = coerce_rational(getattr(self, name))
            object.__setattr__(self, name, value)
            if not (0 <= value <= 1):
                raise InvalidParameters(f"{name} = {value} is outside [0, 1]")
        total = self.p31 + self.p33 + self.p34
        if total != ONE:
            raise InvalidParameters(
                f"p31 + p33 + p34 = {total}, expected exactly 1"
            )

    @classmethod
    def from_p31_p33(cls, p31, p33) -> "CbrParameters":
        """Build the triple with p34 derived as 1 - p31 - p33."""
        p31 = coerce_rational(p31)
        p33 = coerce_rational(p33)
        return cls(p31, p33, ONE - p31 - p33)

    @property
    def is_absorbing(self) -> bool:
        return self.p34 > 0


@dataclass(frozen=True)
class Trajectory:
    """An observed walk through the process steps, validated on construction.

    Must begin at R1 and follow :data:`FLOW_EDGES`; if R4 appears it is the
    final element. A trajectory that never reaches R4 is a censored
    observation: still valid, but it has no step count.
    """

    phases: tuple[str, ...]

    def __post_init__(self):
        object.__setattr__(self, "phases", tuple(self.phases))
        if not self.phases:
            raise EmptyTrajectory("trajectory contains no phases")
        for index, label in enumerate(self.phases):
            if label not in FLOW_EDGES:
                raise UnknownLabel(index, label)
        if self.phases[0] != START_STATE:
            raise DoesNotStartAtR1(self.phases[0])
        for index in range(1, len(self.phases)):
            source, target = self.phases[index - 1], self.phases[index]
            if target not in FLOW_EDGES[source]:
                raise IllegalTransition(index, source, target)

    @property
    def is_absorbed(self) -> bool:
        return self.phases[-1] == ABSORBING_STATE


@dataclass(frozen=True)
class R3ExitCounts:
    """Observed transition counts out of the Revise step."""

    to_r1: int
    to_r3: int
    to_r4: int

    @property
    def total(self) -> int:
        return self.to_r1 + self.to_r3 + self.to_r4


@dataclass(frozen=True)
class EstimationResult:
    """Maximum-likelihood parameters and the counts they came from."""

    params: CbrParameters
    r3_exit_counts: R3ExitCounts


def cbr_transition_matrix(p: CbrParameters) -> TransitionMatrix:
    """The 4x4 transition matrix over (R1, R2, R3, R4)."""
    return validate_stochastic(
        STATES,
        [
            [ZERO, ONE, ZERO, ZERO],
            [ZERO, ZERO, ONE, ZERO],
            [p.p31, ZERO, p.p33, p.p34],
            [ZERO, ZERO, ZERO, ONE],
        ],
    )


def mean_phases(p: CbrParameters) -> Fraction:
    """Mean number of phases before absorption, starting from R1.

    Closed form (3 - 2*p33) / (1 - p31 - p33); always >= 3, with equality
    exactly when p31 = p33 = 0.
    """
    if not p.is_absorbing:
        raise NonAbsorbing("p34 = 0: the process never reaches R4")
    return (Fraction(3) - 2 * p.p33) / (ONE - p.p31 - p.p33)


def mean_completion_steps(p: CbrParameters) -> Fraction:
    """Mean number of steps to complete the process, absorption included."""
    return mean_phases(p) + 1


def phase_distribution(p: CbrParameters, i: int) -> ProbabilityVector:
    """Distribution over steps at phase ``i``, starting from R1 at phase 0."""
    if i < 0:
        raise ValueError("phase index must be non-negative")
    matrix = cbr_transition_matrix(p)
    current = ProbabilityVector.point(STATES, START_STATE)
    for _ in range(i):
        current = step_distribution(current, matrix)
    return current


def validate_trajectory(raw) -> Trajectory:
    """Validate a sequence of step labels against the flow diagram."""
    return Trajectory(tuple(raw))


def trajectory_step_count(t: Trajectory) -> int:
    """Number of phases in an absorbed trajectory, the final R4 included.

    Equals 1 + the number of transitions taken.
    """
    if not t.is_absorbed:
        raise NotAbsorbed("trajectory never reaches R4; no step count exists")
    return len(t.phases)


def count_r3_exits(trajectories) -> R3ExitCounts:
    """Tally R3 exit transitions over any iterable of trajectories.

    Censored trajectories contribute the exits they did observe.
    """
    to_r1 = to_r3 = to_r4 = 0
    for t in trajectories:
        phases = t.phases
        for k in range(1, len(phases)):
            if phases[k - 1] == "R3":
                if phases[k] == "R1":
                    to_r1 += 1
                elif phases[k] == "R3":
                    to_r3 += 1
                else:
                    to_r4 += 1
    return R3ExitCounts(to_r1, to_r3, to_r4)


def estimate_parameters(trajectories) -> EstimationResult:
    """Maximum-likelihood exit probabilities from observed trajectories.

    Plain empirical frequencies in lowest terms, no smoothing: an exit kind
    that was never observed gets probability exactly 0.
    """
    counts = count_r3_exits(trajectories)
    if counts.total == 0:
        raise NoR3Observations("no exits from R3 were observed")
    params = CbrParameters(
        Fraction(counts.to_r1, counts.total),
        Fraction(counts.to_r3, counts.total),
        Fraction(counts.to_r4, counts.total),
    )
    return EstimationResult(params, counts)


# --- trajectory text format -------------------------------------------------
#
# One trajectory per line, labels separated by commas or whitespace; '#'
# begins a comment line; blank lines are ignored.

def parse_trajectories(text: str) -> list[Trajectory]:
    trajectories = []
    for line in text.splitlines():
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        labels = [part for part in _SEPARATORS.split(stripped) if part]
        trajectories.append(validate_trajectory(labels))
    return trajectories


def read_trajectories(source) -> list[Trajectory]:
    """Read the trajectory text format from a path or open text stream."""
    if isinstance(source, (str, Path)):
        text = Path(source).read_text(encoding="utf-8")
    elif isinstance(source, io.TextIOBase) or hasattr(source, "read"):
        text = source.read()
    else:
        raise TypeError(f"cannot read trajectories from {type(source).__name__}")
    return parse_trajectories(text)


def format_trajectories(trajectories) -> str:
    """Render trajectories in the text format; round-trips through parsing."""
    return "".join(" ".join(t.phases) + "\n" for t in trajectories)
