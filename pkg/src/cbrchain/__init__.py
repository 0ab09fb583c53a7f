"""Exact absorbing Markov chain analytics for the four-step
Retrieve/Reuse/Revise/Retain problem-solving cycle.

The package has four layers:

* :mod:`cbrchain.markov`: a general finite-chain engine over exact
  rationals (validation, classification, evolution, canonical form,
  fundamental matrix, absorption statistics);
* :mod:`cbrchain.cbr`: the specific 4-state process chain, its closed
  forms, trajectory validation, and maximum-likelihood estimation;
* :mod:`cbrchain.library`: case-library efficiency over
  generalized-episode hierarchies, with JSON ingestion;
* :mod:`cbrchain.simulate`: seeded, reproducible Monte Carlo sampling
  that cross-validates the exact results.

The ``cbrchain`` command-line tool exposes all of it.
"""

from .cbr import (
    CbrParameters,
    EstimationResult,
    R3ExitCounts,
    Trajectory,
    cbr_transition_matrix,
    count_r3_exits,
    estimate_parameters,
    format_trajectories,
    mean_completion_steps,
    mean_phases,
    parse_trajectories,
    phase_distribution,
    read_trajectories,
    trajectory_step_count,
    validate_trajectory,
)
from .errors import CbrChainError
from .library import (
    CaseLibrary,
    CaseRecord,
    GeneralizedEpisode,
    case_measure,
    dumps_library,
    efficiency_trend,
    episode_cases,
    episode_efficiency,
    flat_efficiency,
    library_to_dict,
    load_library,
    loads_library,
    save_library,
    system_efficiency,
)
from .markov import (
    CanonicalChain,
    ProbabilityVector,
    StateClassification,
    TransitionMatrix,
    absorption_probabilities,
    canonical_form,
    classify_states,
    evolve,
    expected_absorption_steps,
    fundamental_matrix,
    invert_matrix,
    step_distribution,
    validate_stochastic,
)
from .rationals import decimal_str, format_rational, parse_rational
from .simulate import (
    SimulationConfig,
    SimulationReport,
    derive_trajectory_seed,
    run_simulation,
    sample_trajectory,
)

__version__ = "0.1.0"

__all__ = [
    "CbrChainError",
    "CbrParameters",
    "EstimationResult",
    "R3ExitCounts",
    "Trajectory",
    "CaseLibrary",
    "CaseRecord",
    "GeneralizedEpisode",
    "CanonicalChain",
    "ProbabilityVector",
    "StateClassification",
    "TransitionMatrix",
    "SimulationConfig",
    "SimulationReport",
    "absorption_probabilities",
    "canonical_form",
    "case_measure",
    "cbr_transition_matrix",
    "classify_states",
    "count_r3_exits",
    "decimal_str",
    "derive_trajectory_seed",
    "dumps_library",
    "efficiency_trend",
    "episode_cases",
    "episode_efficiency",
    "estimate_parameters",
    "evolve",
    "expected_absorption_steps",
    "flat_efficiency",
    "format_rational",
    "format_trajectories",
    "fundamental_matrix",
    "invert_matrix",
    "library_to_dict",
    "load_library",
    "loads_library",
    "mean_completion_steps",
    "mean_phases",
    "parse_rational",
    "parse_trajectories",
    "phase_distribution",
    "read_trajectories",
    "run_simulation",
    "sample_trajectory",
    "save_library",
    "step_distribution",
    "system_efficiency",
    "trajectory_step_count",
    "validate_stochastic",
    "validate_trajectory",
]
