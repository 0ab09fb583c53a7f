"""Exception taxonomy for cbrchain.

Every domain error raised by this package derives from :class:`CbrChainError`,
so callers (notably the CLI) can separate domain failures from programming
errors. Errors that carry structured context expose it as attributes in
addition to the formatted message.
"""

from __future__ import annotations

from fractions import Fraction


class CbrChainError(Exception):
    """Base class for all domain errors raised by cbrchain."""


# --- transition matrix validation ---------------------------------------

class NegativeEntry(CbrChainError):
    def __init__(self, row: int, col: int, value: Fraction):
        self.row, self.col, self.value = row, col, value
        super().__init__(f"entry ({row}, {col}) is negative: {value}")


class RowSumNotOne(CbrChainError):
    def __init__(self, row: int, actual: Fraction):
        self.row, self.actual = row, actual
        super().__init__(f"row {row} sums to {actual}, expected exactly 1")


class DuplicateLabel(CbrChainError):
    def __init__(self, label: str):
        self.label = label
        super().__init__(f"duplicate state label: {label!r}")


class StateMismatch(CbrChainError):
    """Vector and matrix disagree on the state set or its order."""


# --- absorbing-chain structure -------------------------------------------

class NotAbsorbingChain(CbrChainError):
    """Some transient state cannot reach any absorbing state."""


class NoTransientStates(CbrChainError):
    """Canonical form is undefined when every state is absorbing."""


class SingularMatrix(CbrChainError):
    """I - Q is not invertible (the chain cannot be absorbed)."""


# --- CBR parameters and trajectories --------------------------------------

class InvalidParameters(CbrChainError):
    """Exit probabilities out of range or not summing to exactly 1."""


class NonAbsorbing(CbrChainError):
    """Retain probability is zero, so the process never terminates."""


class EmptyTrajectory(CbrChainError):
    """A trajectory must contain at least one phase."""


class DoesNotStartAtR1(CbrChainError):
    def __init__(self, first: str):
        self.first = first
        super().__init__(f"trajectory must start at R1, got {first!r}")


class UnknownLabel(CbrChainError):
    def __init__(self, index: int, label: str):
        self.index, self.label = index, label
        super().__init__(f"unknown step label at position {index}: {label!r}")


class IllegalTransition(CbrChainError):
    """A consecutive pair of steps that the process flow does not allow.

    ``index`` is the position of the destination label within the trajectory.
    """

    def __init__(self, index: int, source: str, target: str):
        self.index, self.source, self.target = index, source, target
        super().__init__(
            f"illegal transition at position {index}: {source} -> {target}"
        )


class NotAbsorbed(CbrChainError):
    """The trajectory never reaches the terminal Retain step."""


class NoR3Observations(CbrChainError):
    """No exits from the Revise step were observed, so the exit
    probabilities cannot be estimated."""


# --- case library ----------------------------------------------------------

class MeasureBelowBound(CbrChainError):
    def __init__(self, case_id: str, value: Fraction):
        self.case_id, self.value = case_id, value
        super().__init__(
            f"case {case_id!r}: stored measure {value} is below the minimum of 3"
        )


class EmptyEpisode(CbrChainError):
    """An episode (including descendants) contains no cases."""


class EmptyLibrary(CbrChainError):
    """The library contains no cases, so efficiency is undefined."""


class ParseError(CbrChainError):
    def __init__(self, location: str, message: str):
        self.location = location
        super().__init__(f"{location}: {message}")


class SchemaError(CbrChainError):
    def __init__(self, field: str, message: str):
        self.field = field
        super().__init__(f"{field}: {message}")


class DuplicateCaseId(CbrChainError):
    def __init__(self, case_id: str):
        self.case_id = case_id
        super().__init__(
            f"case id {case_id!r} appears more than once with conflicting definitions"
        )


class InvalidTrajectory(CbrChainError):
    def __init__(self, context: str, message: str):
        self.context = context
        super().__init__(f"{context}: {message}")


# --- simulation ------------------------------------------------------------

class UnknownStartState(CbrChainError):
    def __init__(self, label: str):
        self.label = label
        super().__init__(f"start state {label!r} is not a state of the chain")
