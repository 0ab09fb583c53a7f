"""General finite Markov chain engine over exact rationals.

Implements validation, state classification, distribution evolution,
canonical reordering of absorbing chains, the fundamental matrix, and
absorption statistics. Every quantity is a :class:`fractions.Fraction`;
there is no floating point anywhere on this path, so results like 13/27
are reproduced bit-exactly and invariants (row sums, N(I-Q)=I) can be
asserted with no tolerance.
"""

from __future__ import annotations

import threading
from collections import deque
from dataclasses import dataclass, field
from fractions import Fraction

from .errors import (
    DuplicateLabel,
    NegativeEntry,
    NoTransientStates,
    NotAbsorbingChain,
    RowSumNotOne,
    SingularMatrix,
    StateMismatch,
)
from .rationals import coerce_rational

RationalMatrix = tuple[tuple[Fraction, ...], ...]

ZERO = Fraction(0)
ONE = Fraction(1)


@dataclass(frozen=True)
class TransitionMatrix:
    """Row-stochastic square matrix over labelled states.

    ``entries[i][j]`` is the probability of moving from ``states[i]`` to
    ``states[j]`` in one phase. Validation runs at construction: labels must
    be unique, entries non-negative, and every row must sum to exactly 1.
    Instances are immutable and safe to share between threads.
    """

    states: tuple[str, ...]
    entries: RationalMatrix

    def __post_init__(self):
        states = tuple(self.states)
        entries = tuple(tuple(row) for row in self.entries)
        object.__setattr__(self, "states", states)
        object.__setattr__(self, "entries", entries)

        n = len(states)
        if n < 1:
            raise ValueError("a chain needs at least one state")
        seen = set()
        for label in states:
            if label in seen:
                raise DuplicateLabel(label)
            seen.add(label)
        if len(entries) != n or any(len(row) != n for row in entries):
            raise ValueError(f"matrix must be {n}x{n} to match the state labels")
        for i, row in enumerate(entries):
            for j, value in enumerate(row):
                if value < 0:
                    raise NegativeEntry(i, j, value)
            total = sum(row)
            if total != ONE:
                raise RowSumNotOne(i, total)

    @property
    def n(self) -> int:
        return len(self.states)

    def index(self, label: str) -> int:
        return self.states.index(label)


@dataclass(frozen=True)
class ProbabilityVector:
    """Distribution over the chain's states at a given phase.

    ``phase_index`` is the subscript of the phase the distribution refers
    to; probabilities must sum to exactly 1.
    """

    states: tuple[str, ...]
    probs: tuple[Fraction, ...]
    phase_index: int = 0

    def __post_init__(self):
        object.__setattr__(self, "states", tuple(self.states))
        object.__setattr__(self, "probs", tuple(coerce_rational(p) for p in self.probs))
        if len(self.probs) != len(self.states):
            raise ValueError("probability vector length must match the state labels")
        if any(p < 0 for p in self.probs):
            raise ValueError("probabilities must be non-negative")
        if sum(self.probs) != ONE:
            raise ValueError(f"probabilities sum to {sum(self.probs)}, expected exactly 1")
        if self.phase_index < 0:
            raise ValueError("phase index must be non-negative")

    @classmethod
    def point(cls, states, label: str, phase_index: int = 0) -> "ProbabilityVector":
        """Distribution concentrated on a single state."""
        states = tuple(states)
        probs = tuple(ONE if s == label else ZERO for s in states)
        if ONE not in probs:
            raise ValueError(f"{label!r} is not one of the states")
        return cls(states, probs, phase_index)

    def prob(self, label: str) -> Fraction:
        return self.probs[self.states.index(label)]


@dataclass(frozen=True)
class StateClassification:
    """Absorbing/transient split and whether the chain is absorbing.

    A state is absorbing when its self-transition probability is exactly 1.
    The chain is an absorbing chain when every transient state can reach
    some absorbing state through positive-probability edges.
    """

    absorbing: frozenset[str]
    transient: frozenset[str]
    is_absorbing_chain: bool


@dataclass(frozen=True)
class CanonicalChain:
    """Absorbing chain reordered to the block form [I 0; R Q].

    Absorbing states are listed first (keeping their original relative
    order), then transient states (likewise). ``permutation[i]`` is the
    canonical position of original state ``i``. ``q_block`` holds
    transient-to-transient probabilities, ``r_block`` transient-to-absorbing.
    The fundamental matrix is computed lazily, at most once, under a lock.
    """

    permutation: tuple[int, ...]
    a_star: TransitionMatrix
    absorbing_states: tuple[str, ...]
    transient_states: tuple[str, ...]
    q_block: RationalMatrix
    r_block: RationalMatrix
    _fundamental: RationalMatrix | None = field(
        default=None, repr=False, compare=False
    )
    _lock: threading.Lock = field(
        default_factory=threading.Lock, repr=False, compare=False
    )


def validate_stochastic(states, raw) -> TransitionMatrix:
    """Validate raw rows as a transition matrix over ``states``.

    Entries may be ints, Fractions, or rational strings such as "1/3";
    floats are rejected to keep the matrix exact.
    """
    states = tuple(states)
    rows = tuple(tuple(coerce_rational(v) for v in row) for row in raw)
    return TransitionMatrix(states, rows)


def classify_states(m: TransitionMatrix) -> StateClassification:
    """Split states into absorbing and transient and test absorbability."""
    n = m.n
    absorbing_idx = [i for i in range(n) if m.entries[i][i] == ONE]
    absorbing = frozenset(m.states[i] for i in absorbing_idx)
    transient = frozenset(s for s in m.states if s not in absorbing)

    # Breadth-first search along reversed positive-probability edges: a
    # transient state is fine iff some absorbing state is reverse-reachable.
    reached = set(absorbing_idx)
    queue = deque(absorbing_idx)
    while queue:
        i = queue.popleft()
        for j in range(n):
            if j not in reached and m.entries[j][i] > ZERO:
                reached.add(j)
                queue.append(j)
    is_absorbing_chain = all(i in reached for i in range(n) if m.states[i] in transient)
    return StateClassification(absorbing, transient, is_absorbing_chain)


def step_distribution(p: ProbabilityVector, m: TransitionMatrix) -> ProbabilityVector:
    """One exact application of the phase recurrence: p times the matrix."""
    if p.states != m.states:
        raise StateMismatch(
            f"vector states {p.states} do not match matrix states {m.states}"
        )
    n = m.n
    probs = tuple(
        sum((p.probs[i] * m.entries[i][j] for i in range(n)), start=ZERO)
        for j in range(n)
    )
    return ProbabilityVector(m.states, probs, p.phase_index + 1)


def evolve(
    start: ProbabilityVector, m: TransitionMatrix, phases: int
) -> list[ProbabilityVector]:
    """Distributions at phases 0..``phases`` inclusive, starting from ``start``."""
    if start.phase_index != 0:
        raise ValueError("evolution must start from a phase-0 distribution")
    if phases < 0:
        raise ValueError("phases must be non-negative")
    out = [start]
    current = start
    for _ in range(phases):
        current = step_distribution(current, m)
        out.append(current)
    return out


def canonical_form(m: TransitionMatrix) -> CanonicalChain:
    """Reorder an absorbing chain with absorbing states first.

    Ties keep original relative order within the absorbing and transient
    groups, so e.g. a chain ordered (T1, T2, T3, A) canonicalizes to
    (A, T1, T2, T3).
    """
    classification = classify_states(m)
    if not classification.is_absorbing_chain:
        raise NotAbsorbingChain(
            "some transient state cannot reach an absorbing state"
        )
    n = m.n
    absorbing_idx = [i for i in range(n) if m.entries[i][i] == ONE]
    absorbing_set = set(absorbing_idx)
    transient_idx = [i for i in range(n) if i not in absorbing_set]
    if not transient_idx:
        raise NoTransientStates("every state is absorbing")

    order = absorbing_idx + transient_idx
    permutation = [0] * n
    for canonical_pos, original in enumerate(order):
        permutation[original] = canonical_pos

    a_star_states = tuple(m.states[i] for i in order)
    a_star_entries = tuple(
        tuple(m.entries[i][j] for j in order) for i in order
    )
    q_block = tuple(
        tuple(m.entries[i][j] for j in transient_idx) for i in transient_idx
    )
    r_block = tuple(
        tuple(m.entries[i][j] for j in absorbing_idx) for i in transient_idx
    )
    return CanonicalChain(
        permutation=tuple(permutation),
        a_star=TransitionMatrix(a_star_states, a_star_entries),
        absorbing_states=tuple(m.states[i] for i in absorbing_idx),
        transient_states=tuple(m.states[i] for i in transient_idx),
        q_block=q_block,
        r_block=r_block,
    )


def fundamental_matrix(c: CanonicalChain) -> RationalMatrix:
    """Exact inverse of (I - Q), cached on the chain.

    Entry (i, j) is the mean number of visits to transient state j before
    absorption when starting from transient state i.
    """
    if c._fundamental is None:
        with c._lock:
            if c._fundamental is None:
                k = len(c.transient_states)
                i_minus_q = tuple(
                    tuple(
                        (ONE if i == j else ZERO) - c.q_block[i][j]
                        for j in range(k)
                    )
                    for i in range(k)
                )
                object.__setattr__(c, "_fundamental", invert_matrix(i_minus_q))
    return c._fundamental


def expected_absorption_steps(c: CanonicalChain) -> tuple[Fraction, ...]:
    """Mean number of phases before absorption, per transient start state.

    These are the row sums of the fundamental matrix, aligned with
    ``c.transient_states``.
    """
    n = fundamental_matrix(c)
    return tuple(sum(row, start=ZERO) for row in n)


def absorption_probabilities(c: CanonicalChain) -> RationalMatrix:
    """Probability of ending in each absorbing state: B = N * R.

    Rows align with ``c.transient_states``, columns with
    ``c.absorbing_states``; every row sums to exactly 1.
    """
    n = fundamental_matrix(c)
    k = len(c.transient_states)
    a = len(c.absorbing_states)
    return tuple(
        tuple(
            sum((n[i][t] * c.r_block[t][j] for t in range(k)), start=ZERO)
            for j in range(a)
        )
        for i in range(k)
    )


def invert_matrix(matrix: RationalMatrix) -> RationalMatrix:
    """Exact Gauss-Jordan inversion with partial pivoting over rationals."""
    k = len(matrix)
    work = [list(row) for row in matrix]
    inverse = [[ONE if i == j else ZERO for j in range(k)] for i in range(k)]

    for col in range(k):
        pivot_row = max(range(col, k), key=lambda r: abs(work[r][col]))
        if work[pivot_row][col] == ZERO:
            raise SingularMatrix(f"matrix is singular at column {col}")
        if pivot_row != col:
            work[col], work[pivot_row] = work[pivot_row], work[col]
            inverse[col], inverse[pivot_row] = inverse[pivot_row], inverse[col]
        pivot = work[col][col]
        work[col] = [v / pivot for v in work[col]]
        inverse[col] = [v / pivot for v in inverse[col]]
        for r in range(k):
            if r == col:
                continue
            factor = work[r][col]
            if factor == ZERO:
                continue
            work[r] = [a - factor * b for a, b in zip(work[r], work[col])]
            inverse[r] = [a - factor * b for a, b in zip(inverse[r], inverse[col])]

    return tuple(tuple(row) for row in inverse)
