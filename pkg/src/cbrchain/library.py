"""Case library efficiency over generalized-episode hierarchies.

A library stores past cases grouped into generalized episodes (GEs), which
may nest. Each case carries a completion measure t_i >= 3, stored directly,
derived from chain parameters, or estimated from a single observed
trajectory (per-case maximum likelihood, then the closed form). Efficiency
is a mean of measures: lower is better, with 3 the straightforward-solution
floor.

Two system-level metrics are exposed because they genuinely differ when
episodes have unequal sizes:

* ``flat_efficiency``: mean over all distinct cases, ignoring structure;
* ``system_efficiency``: unweighted mean of the top-level GE efficiencies.

The on-disk document format is JSON; see ``load_library`` for the schema.
"""

from __future__ import annotations

import io
import json
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path

from .cbr import (
    CbrParameters,
    Trajectory,
    estimate_parameters,
    mean_phases,
    validate_trajectory,
)
from .errors import (
    CbrChainError,
    DuplicateCaseId,
    EmptyEpisode,
    EmptyLibrary,
    InvalidParameters,
    InvalidTrajectory,
    MeasureBelowBound,
    NotAbsorbed,
    ParseError,
    SchemaError,
)
from .rationals import coerce_rational, format_rational

MIN_MEASURE = Fraction(3)


@dataclass(frozen=True)
class CaseRecord:
    """A stored case with exactly one source for its completion measure.

    ``measure`` is a direct t value (must be >= 3), ``params`` derives the
    measure from the chain's closed form, and ``trajectory`` derives it from
    one observed absorbed walk.
    """

    id: str
    measure: Fraction | None = None
    trajectory: Trajectory | None = None
    params: CbrParameters | None = None

    def __post_init__(self):
        sources = [
            s for s in (self.measure, self.trajectory, self.params) if s is not None
        ]
        if len(sources) != 1:
            raise ValueError(
                f"case {self.id!r}: exactly one of measure, trajectory, or "
                f"params is required ({len(sources)} given)"
            )
        if self.measure is not None:
            value = coerce_rational(self.measure)
            object.__setattr__(self, "measure", value)
            if value < MIN_MEASURE:
                raise MeasureBelowBound(self.id, value)
        if self.trajectory is not None and not self.trajectory.is_absorbed:
            raise NotAbsorbed(
                f"case {self.id!r}: trajectory never reaches R4"
            )

    @classmethod
    def from_measure(cls, case_id: str, value) -> "CaseRecord":
        return cls(case_id, measure=coerce_rational(value))

    @classmethod
    def from_trajectory(cls, case_id: str, trajectory: Trajectory) -> "CaseRecord":
        return cls(case_id, trajectory=trajectory)

    @classmethod
    def from_parameters(cls, case_id: str, params: CbrParameters) -> "CaseRecord":
        return cls(case_id, params=params)


@dataclass(frozen=True)
class GeneralizedEpisode:
    """A named group of cases, possibly containing sub-episodes."""

    name: str
    cases: tuple[CaseRecord, ...] = ()
    sub_episodes: tuple["GeneralizedEpisode", ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "cases", tuple(self.cases))
        object.__setattr__(self, "sub_episodes", tuple(self.sub_episodes))

    def all_cases(self):
        """Own cases, then descendants', in document order (with repeats)."""
        yield from self.cases
        for sub in self.sub_episodes:
            yield from sub.all_cases()


@dataclass(frozen=True)
class CaseLibrary:
    """Top-level collection of generalized episodes."""

    episodes: tuple[GeneralizedEpisode, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "episodes", tuple(self.episodes))

    def distinct_cases(self) -> list[CaseRecord]:
        all_cases = (c for g in self.episodes for c in g.all_cases())
        return _distinct(all_cases)

    @property
    def n(self) -> int:
        """Number of distinct stored cases."""
        return len(self.distinct_cases())


def _distinct(cases) -> list[CaseRecord]:
    # Dedup by id, keeping the first occurrence; a case shared between an
    # episode and its sub-episodes counts once. The loader guarantees that
    # repeated ids carry identical definitions.
    seen: dict[str, CaseRecord] = {}
    for case in cases:
        seen.setdefault(case.id, case)
    return list(seen.values())


def episode_cases(g: GeneralizedEpisode) -> list[CaseRecord]:
    """The episode's distinct cases, descendants included, document order."""
    return _distinct(g.all_cases())


def case_measure(c: CaseRecord) -> Fraction:
    """The case's completion measure t_i, per its source."""
    if c.measure is not None:
        return c.measure
    if c.params is not None:
        return mean_phases(c.params)
    estimated = estimate_parameters([c.trajectory])
    return mean_phases(estimated.params)


def _mean(values: list[Fraction]) -> Fraction:
    return sum(values, start=Fraction(0)) / len(values)


def episode_efficiency(g: GeneralizedEpisode) -> Fraction:
    """Mean measure over the episode's distinct cases, descendants included."""
    cases = episode_cases(g)
    if not cases:
        raise EmptyEpisode(f"episode {g.name!r} contains no cases")
    return _mean([case_measure(c) for c in cases])


def system_efficiency(lib: CaseLibrary) -> Fraction:
    """Unweighted mean of the top-level episode efficiencies."""
    if not lib.episodes:
        raise EmptyLibrary("library contains no episodes")
    return _mean([episode_efficiency(g) for g in lib.episodes])


def flat_efficiency(lib: CaseLibrary) -> Fraction:
    """Mean measure over all distinct cases, ignoring episode structure."""
    cases = lib.distinct_cases()
    if not cases:
        raise EmptyLibrary("library contains no cases")
    return _mean([case_measure(c) for c in cases])


def efficiency_trend(lib: CaseLibrary) -> list[tuple[str, Fraction]]:
    """Running flat efficiency after each stored case, in document order.

    A growing library whose new cases solve more easily shows this trend
    drifting down toward the floor of 3; the trend is reported, never
    asserted, because it depends on the future case stream.
    """
    trend = []
    total = Fraction(0)
    for k, case in enumerate(lib.distinct_cases(), start=1):
        total += case_measure(case)
        trend.append((case.id, total / k))
    return trend


# --- document format ---------------------------------------------------------
#
# {"episodes": [episode, ...]}
# episode: {"name": str, "cases": [case, ...], "sub_episodes": [episode, ...]}
#   ("cases" and "sub_episodes" may be omitted)
# case: {"id": str} plus exactly one of
#   "t": rational string or integer
#   "trajectory": list of step labels
#   "params": {"p31": rational, "p33": rational, "p34": rational}
# Rational strings: optional sign, integer, optionally "/" and a positive
# integer, e.g. "7" or "1/3".

_EPISODE_KEYS = {"name", "cases", "sub_episodes"}
_CASE_SOURCE_KEYS = {"t", "trajectory", "params"}
_PARAM_KEYS = {"p31", "p33", "p34"}


def load_library(source) -> CaseLibrary:
    """Load and fully validate a library document from a path or stream."""
    if isinstance(source, (str, Path)):
        text = Path(source).read_text(encoding="utf-8")
    elif isinstance(source, io.TextIOBase) or hasattr(source, "read"):
        text = source.read()
    else:
        raise TypeError(f"cannot load a library from {type(source).__name__}")
    return loads_library(text)


def loads_library(text: str) -> CaseLibrary:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"line {exc.lineno} column {exc.colno}", exc.msg) from exc
    return library_from_dict(doc)


def library_from_dict(doc) -> CaseLibrary:
    if not isinstance(doc, dict):
        raise SchemaError("$", "document root must be an object")
    unknown = set(doc) - {"episodes"}
    if unknown:
        raise SchemaError(sorted(unknown)[0], "unknown top-level key")
    episodes_raw = doc.get("episodes")
    if not isinstance(episodes_raw, list):
        raise SchemaError("episodes", "required and must be a list")
    registry: dict[str, CaseRecord] = {}
    episodes = tuple(
        _episode_from_dict(e, f"episodes[{i}]", registry)
        for i, e in enumerate(episodes_raw)
    )
    return CaseLibrary(episodes)


def _episode_from_dict(raw, path: str, registry) -> GeneralizedEpisode:
    if not isinstance(raw, dict):
        raise SchemaError(path, "episode must be an object")
    unknown = set(raw) - _EPISODE_KEYS
    if unknown:
        raise SchemaError(f"{path}.{sorted(unknown)[0]}", "unknown episode key")
    name = raw.get("name")
    if not isinstance(name, str) or not name:
        raise SchemaError(f"{path}.name", "required and must be a non-empty string")
    cases_raw = raw.get("cases", [])
    subs_raw = raw.get("sub_episodes", [])
    if not isinstance(cases_raw, list):
        raise SchemaError(f"{path}.cases", "must be a list")
    if not isinstance(subs_raw, list):
        raise SchemaError(f"{path}.sub_episodes", "must be a list")
    cases = tuple(
        _case_from_dict(c, f"{path}.cases[{i}]", registry)
        for i, c in enumerate(cases_raw)
    )
    subs = tuple(
        _episode_from_dict(s, f"{path}.sub_episodes[{i}]", registry)
        for i, s in enumerate(subs_raw)
    )
    return GeneralizedEpisode(name, cases, subs)


def _case_from_dict(raw, path: str, registry) -> CaseRecord:
    if not isinstance(raw, dict):
        raise SchemaError(path, "case must be an object")
    case_id = raw.get("id")
    if not isinstance(case_id, str) or not case_id:
        raise SchemaError(f"{path}.id", "required and must be a non-empty string")
    unknown = set(raw) - _CASE_SOURCE_KEYS - {"id"}
    if unknown:
        raise SchemaError(f"{path}.{sorted(unknown)[0]}", "unknown case key")
    sources = _CASE_SOURCE_KEYS & set(raw)
    if len(sources) != 1:
        raise SchemaError(
            path, f"exactly one of t, trajectory, or params is required "
            f"({len(sources)} given)"
        )

    if "t" in raw:
        try:
            value = coerce_rational(raw["t"])
        except ValueError as exc:
            raise SchemaError(f"{path}.t", str(exc)) from exc
        try:
            case = CaseRecord(case_id, measure=value)
        except MeasureBelowBound as exc:
            raise SchemaError(f"{path}.t", str(exc)) from exc
    elif "trajectory" in raw:
        labels = raw["trajectory"]
        if not isinstance(labels, list) or not all(
            isinstance(s, str) for s in labels
        ):
            raise SchemaError(f"{path}.trajectory", "must be a list of step labels")
        try:
            trajectory = validate_trajectory(labels)
            case = CaseRecord(case_id, trajectory=trajectory)
        except (CbrChainError, ValueError) as exc:
            raise InvalidTrajectory(f"{path}.trajectory", str(exc)) from exc
    else:
        params_raw = raw["params"]
        if not isinstance(params_raw, dict):
            raise SchemaError(f"{path}.params", "must be an object")
        if set(params_raw) != _PARAM_KEYS:
            raise SchemaError(
                f"{path}.params", "must contain exactly p31, p33, and p34"
            )
        try:
            params = CbrParameters(
                coerce_rational(params_raw["p31"]),
                coerce_rational(params_raw["p33"]),
                coerce_rational(params_raw["p34"]),
            )
        except (InvalidParameters, ValueError) as exc:
            raise SchemaError(f"{path}.params", str(exc)) from exc
        case = CaseRecord(case_id, params=params)

    # The same case may legitimately appear in several episodes (that is
    # what the dedup rule is for); only conflicting redefinitions are errors.
    existing = registry.get(case_id)
    if existing is not None:
        if existing != case:
            raise DuplicateCaseId(case_id)
        return existing
    registry[case_id] = case
    return case


def library_to_dict(lib: CaseLibrary) -> dict:
    return {"episodes": [_episode_to_dict(g) for g in lib.episodes]}


def _episode_to_dict(g: GeneralizedEpisode) -> dict:
    return {
        "name": g.name,
        "cases": [_case_to_dict(c) for c in g.cases],
        "sub_episodes": [_episode_to_dict(s) for s in g.sub_episodes],
    }


def _case_to_dict(c: CaseRecord) -> dict:
    if c.measure is not None:
        return {"id": c.id, "t": format_rational(c.measure)}
    if c.trajectory is not None:
        return {"id": c.id, "trajectory": list(c.trajectory.phases)}
    return {
        "id": c.id,
        "params": {
            "p31": format_rational(c.params.p31),
            "p33": format_rational(c.params.p33),
            "p34": format_rational(c.params.p34),
        },
    }


def dumps_library(lib: CaseLibrary) -> str:
    return json.dumps(library_to_dict(lib), indent=2) + "\n"


def save_library(lib: CaseLibrary, dest) -> None:
    text = dumps_library(lib)
    if isinstance(dest, (str, Path)):
        Path(dest).write_text(text, encoding="utf-8")
    else:
        dest.write(text)
