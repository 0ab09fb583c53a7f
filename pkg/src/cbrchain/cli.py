"""Command-line surface for chain analysis, evolution, simulation,
estimation, and library efficiency.

Exit codes: 0 on success, 1 on a domain error (the error class is named in
the message on stderr), 2 on a usage error. Table output renders every
rational both as an exact fraction and as a 6-significant-digit decimal;
machine output is JSON in which every exact quantity is a fraction string
that parses back to the identical value.
"""

from __future__ import annotations

import functools
import json
import os
import sys
from fractions import Fraction

import click

from .cbr import (
    STATES,
    CbrParameters,
    cbr_transition_matrix,
    estimate_parameters,
    mean_completion_steps,
    mean_phases,
    phase_distribution,
    read_trajectories,
    trajectory_step_count,
)
from .errors import CbrChainError
from .library import (
    case_measure,
    episode_cases,
    episode_efficiency,
    flat_efficiency,
    load_library,
    system_efficiency,
)
from .markov import (
    absorption_probabilities,
    canonical_form,
    classify_states,
    evolve,
    expected_absorption_steps,
    fundamental_matrix,
    ProbabilityVector,
)
from .rationals import decimal_str, format_rational, parse_rational
from .simulate import DEFAULT_MAX_PHASES, SimulationConfig, run_simulation


class RationalType(click.ParamType):
    name = "rational"

    def convert(self, value, param, ctx):
        if isinstance(value, Fraction):
            return value
        try:
            return parse_rational(value)
        except ValueError as exc:
            self.fail(str(exc), param, ctx)


RATIONAL = RationalType()


def _pair(q: Fraction) -> str:
    """Exact fraction followed by its decimal rendering."""
    return f"{format_rational(q)} ({decimal_str(q)})"


def _heading(text: str) -> str:
    if os.environ.get("NO_COLOR"):
        return text
    return click.style(text, bold=True)


def _columns(rows: list[list[str]]) -> list[str]:
    widths = [max(len(row[i]) for row in rows) for i in range(len(rows[0]))]
    return [
        "  ".join(cell.ljust(w) for cell, w in zip(row, widths)).rstrip()
        for row in rows
    ]


def _emit_machine(payload: dict) -> None:
    click.echo(json.dumps(payload, indent=2))


def _domain_errors(f):
    @functools.wraps(f)
    def wrapper(*args, **kwargs):
        try:
            return f(*args, **kwargs)
        except CbrChainError as exc:
            click.echo(f"error: {type(exc).__name__}: {exc}", err=True)
            sys.exit(1)

    return wrapper


def _format_option(f):
    return click.option(
        "--format",
        "fmt",
        type=click.Choice(["table", "machine"]),
        default="table",
        show_default=True,
        help="Human-readable table or machine-readable JSON.",
    )(f)


def _param_options(f):
    f = click.option(
        "--p33",
        type=RATIONAL,
        required=True,
        help="Probability of staying at R3 for another revision.",
    )(f)
    f = click.option(
        "--p31",
        type=RATIONAL,
        required=True,
        help="Probability of returning from R3 to R1 after a failure.",
    )(f)
    return f


@click.group()
@click.version_option(package_name="cbrchain")
def cli():
    """Exact analytics and Monte Carlo validation for the four-step
    Retrieve/Reuse/Revise/Retain process chain.

    R4 (retain) is absorbing; the revise step R3 either loops to R1,
    stays at R3, or completes to R4. p34 is always derived as
    1 - p31 - p33.
    """


def render_fundamental(p: CbrParameters) -> str:
    """Text block showing N, its visit-count meaning, and its row sums."""
    chain = canonical_form(cbr_transition_matrix(p))
    n = fundamental_matrix(chain)
    steps = expected_absorption_steps(chain)
    rows = [["", *chain.transient_states, "row sum (t)"]]
    for label, row, total in zip(chain.transient_states, n, steps):
        rows.append([label, *[_pair(v) for v in row], _pair(total)])
    lines = [
        _heading("Fundamental matrix N = (I - Q)^-1"),
        "(N[i][j] = mean number of times in state j before absorption,"
        " starting from state i)",
        *_columns(rows),
    ]
    return "\n".join(lines)


def _fundamental_payload(p: CbrParameters) -> dict:
    chain = canonical_form(cbr_transition_matrix(p))
    n = fundamental_matrix(chain)
    steps = expected_absorption_steps(chain)
    return {
        "states": list(chain.transient_states),
        "matrix": [[format_rational(v) for v in row] for row in n],
        "row_sums": [format_rational(v) for v in steps],
    }


@cli.command("cbr-analyze")
@_param_options
@_format_option
@_domain_errors
def cbr_analyze(p31, p33, fmt):
    """Closed-form analysis of the process chain for given parameters."""
    params = CbrParameters.from_p31_p33(p31, p33)
    t = mean_phases(params)
    completion = mean_completion_steps(params)
    if fmt == "machine":
        _emit_machine(
            {
                "command": "cbr-analyze",
                "params": _params_payload(params),
                "mean_phases": format_rational(t),
                "completion_steps": format_rational(completion),
                "fundamental": _fundamental_payload(params),
            }
        )
        return
    click.echo(_heading("CBR chain analysis"))
    click.echo(f"  p31 = {_pair(params.p31)}   revise -> retrieve")
    click.echo(f"  p33 = {_pair(params.p33)}   revise -> revise")
    click.echo(f"  p34 = {_pair(params.p34)}   revise -> retain")
    click.echo()
    click.echo(f"  t = {_pair(t)}   mean phases before absorption, from R1")
    click.echo(f"  completion steps = {_pair(completion)}   (t + 1)")
    click.echo()
    click.echo(render_fundamental(params))


@cli.command("chain-analyze")
@_param_options
@_format_option
@_domain_errors
def chain_analyze(p31, p33, fmt):
    """Generic absorbing-chain analysis of the constructed 4-state matrix.

    Runs the general engine (classification, canonical form, fundamental
    matrix, absorption statistics) rather than the closed form; the two
    must agree exactly.
    """
    params = CbrParameters.from_p31_p33(p31, p33)
    matrix = cbr_transition_matrix(params)
    classification = classify_states(matrix)
    chain = canonical_form(matrix)
    n = fundamental_matrix(chain)
    steps = expected_absorption_steps(chain)
    b = absorption_probabilities(chain)
    if fmt == "machine":
        _emit_machine(
            {
                "command": "chain-analyze",
                "params": _params_payload(params),
                "states": list(matrix.states),
                "transition_matrix": [
                    [format_rational(v) for v in row] for row in matrix.entries
                ],
                "absorbing": sorted(classification.absorbing),
                "transient": sorted(classification.transient),
                "canonical_order": list(chain.a_star.states),
                "q_block": [[format_rational(v) for v in row] for row in chain.q_block],
                "r_block": [[format_rational(v) for v in row] for row in chain.r_block],
                "fundamental": _fundamental_payload(params),
                "expected_absorption_steps": {
                    s: format_rational(v)
                    for s, v in zip(chain.transient_states, steps)
                },
                "absorption_probabilities": {
                    s: {
                        a: format_rational(v)
                        for a, v in zip(chain.absorbing_states, row)
                    }
                    for s, row in zip(chain.transient_states, b)
                },
            }
        )
        return
    click.echo(_heading("Generic absorbing-chain analysis"))
    click.echo(f"  states: {' '.join(matrix.states)}")
    click.echo(f"  absorbing: {' '.join(sorted(classification.absorbing))}")
    click.echo(f"  transient: {' '.join(sorted(classification.transient))}")
    click.echo(f"  canonical order: {' '.join(chain.a_star.states)}")
    click.echo()
    click.echo(_heading("Transition matrix"))
    rows = [["", *matrix.states]]
    for label, row in zip(matrix.states, matrix.entries):
        rows.append([label, *[_pair(v) for v in row]])
    for line in _columns(rows):
        click.echo(line)
    click.echo()
    click.echo(render_fundamental(params))
    click.echo()
    click.echo(_heading("Expected absorption"))
    for s, v in zip(chain.transient_states, steps):
        click.echo(f"  from {s}: t = {_pair(v)}, completion steps = {_pair(v + 1)}")
    click.echo()
    click.echo(_heading("Absorption probabilities (B = N R)"))
    rows = [["", *chain.absorbing_states]]
    for label, row in zip(chain.transient_states, b):
        rows.append([label, *[_pair(v) for v in row]])
    for line in _columns(rows):
        click.echo(line)


@cli.command("cbr-evolve")
@_param_options
@click.option(
    "--phases",
    type=click.IntRange(min=0),
    required=True,
    help="Evolve the phase distribution up to this phase index.",
)
@_format_option
@_domain_errors
def cbr_evolve(p31, p33, phases, fmt):
    """Exact distribution over the steps at phases 0..N, starting at R1."""
    params = CbrParameters.from_p31_p33(p31, p33)
    matrix = cbr_transition_matrix(params)
    start = ProbabilityVector.point(STATES, "R1")
    vectors = evolve(start, matrix, phases)
    if fmt == "machine":
        _emit_machine(
            {
                "command": "cbr-evolve",
                "params": _params_payload(params),
                "states": list(STATES),
                "distributions": [
                    {
                        "phase": v.phase_index,
                        "probs": {
                            s: format_rational(q) for s, q in zip(v.states, v.probs)
                        },
                    }
                    for v in vectors
                ],
            }
        )
        return
    click.echo(_heading(f"Phase distributions over {' '.join(STATES)}"))
    for v in vectors:
        fracs = " ".join(format_rational(q) for q in v.probs)
        decs = " ".join(decimal_str(q) for q in v.probs)
        click.echo(f"P{v.phase_index}: {fracs}  ({decs})")


@cli.command("cbr-simulate")
@_param_options
@click.option(
    "--samples",
    type=click.IntRange(min=1),
    default=100_000,
    show_default=True,
    help="Number of trajectories to sample.",
)
@click.option(
    "--seed",
    type=click.IntRange(min=0, max=2**64 - 1),
    default=0,
    show_default=True,
    help="Master seed; per-trajectory seeds are derived from it.",
)
@click.option(
    "--max-phases",
    type=click.IntRange(min=1),
    default=DEFAULT_MAX_PHASES,
    show_default=True,
    help="Truncation guard; longer trajectories are reported as censored.",
)
@click.option(
    "--phases",
    type=click.IntRange(min=0),
    default=None,
    help="Also report empirical state frequencies at phases 0..N.",
)
@_format_option
@_domain_errors
def cbr_simulate(p31, p33, samples, seed, max_phases, phases, fmt):
    """Monte Carlo sampling of the chain, with analytic values alongside."""
    params = CbrParameters.from_p31_p33(p31, p33)
    matrix = cbr_transition_matrix(params)
    cfg = SimulationConfig(seed=seed, num_trajectories=samples, max_phases=max_phases)
    phases_of_interest = tuple(range(phases + 1)) if phases is not None else ()
    report = run_simulation(matrix, "R1", cfg, phases_of_interest)
    analytic_steps = (
        mean_completion_steps(params) if params.is_absorbing else None
    )
    if fmt == "machine":
        payload = {
            "command": "cbr-simulate",
            "params": _params_payload(params),
            "report": report.to_dict(),
        }
        if analytic_steps is not None:
            payload["analytic_completion_steps"] = format_rational(analytic_steps)
        _emit_machine(payload)
        return
    click.echo(
        _heading(
            f"Simulation: {samples} trajectories, seed {seed}, "
            f"max phases {max_phases}"
        )
    )
    click.echo(
        f"  absorbed = {report.absorbed_count}, censored = {report.censored_count}"
    )
    if report.empirical_mean_steps is not None:
        click.echo(
            f"  empirical mean completion steps = {report.empirical_mean_steps:.6g}"
        )
    if report.standard_error is not None:
        click.echo(f"  standard error = {report.standard_error:.6g}")
    if analytic_steps is not None:
        click.echo(f"  analytic completion steps = {_pair(analytic_steps)}")
    exits = report.r3_exit_counts
    if exits:
        total = sum(exits.values())
        click.echo(_heading("Observed exits from R3"))
        for target in ("R1", "R3", "R4"):
            count = exits.get(target, 0)
            click.echo(
                f"  R3 -> {target}: {count}  (ratio {count / total:.6g})"
            )
    for phase, dist in sorted(report.empirical_phase_distributions.items()):
        freqs = " ".join(f"{s}={dist.get(s, 0.0):.6g}" for s in matrix.states)
        click.echo(f"  phase {phase} frequencies: {freqs}")


@cli.command("estimate")
@click.option(
    "--trajectories",
    "trajectories_path",
    type=click.Path(exists=True, dir_okay=False),
    required=True,
    help="Trajectory text file: one trajectory per line, labels separated "
    "by commas or whitespace, '#' starts a comment line.",
)
@_format_option
@_domain_errors
def estimate(trajectories_path, fmt):
    """Estimate exit probabilities from observed trajectories.

    Prints the maximum-likelihood parameters together with the implied
    mean phases t and completion steps t + 1.
    """
    trajectories = read_trajectories(trajectories_path)
    result = estimate_parameters(trajectories)
    params = result.params
    counts = result.r3_exit_counts
    implied_t = mean_phases(params) if params.is_absorbing else None
    absorbed = [t for t in trajectories if t.is_absorbed]
    if fmt == "machine":
        payload = {
            "command": "estimate",
            "trajectories": len(trajectories),
            "absorbed_trajectories": len(absorbed),
            "observed_step_counts": [trajectory_step_count(t) for t in absorbed],
            "r3_exit_counts": {
                "R1": counts.to_r1,
                "R3": counts.to_r3,
                "R4": counts.to_r4,
            },
            "params": _params_payload(params),
        }
        if implied_t is not None:
            payload["mean_phases"] = format_rational(implied_t)
            payload["completion_steps"] = format_rational(implied_t + 1)
        _emit_machine(payload)
        return
    click.echo(
        _heading(
            f"Parameter estimation from {len(trajectories)} trajectories "
            f"({counts.total} exits from R3)"
        )
    )
    click.echo(f"  R3 -> R1: {counts.to_r1}")
    click.echo(f"  R3 -> R3: {counts.to_r3}")
    click.echo(f"  R3 -> R4: {counts.to_r4}")
    click.echo()
    click.echo(f"  p31 = {_pair(params.p31)}")
    click.echo(f"  p33 = {_pair(params.p33)}")
    click.echo(f"  p34 = {_pair(params.p34)}")
    if implied_t is not None:
        click.echo()
        click.echo(f"  t = {_pair(implied_t)}")
        click.echo(f"  completion steps = {_pair(implied_t + 1)}")
    else:
        click.echo()
        click.echo("  no R3 -> R4 exits observed: the estimated chain is "
                   "non-absorbing, t is undefined")


@cli.command("library-efficiency")
@click.option(
    "--library",
    "library_path",
    type=click.Path(exists=True, dir_okay=False),
    required=True,
    help="Case library document (JSON).",
)
@_format_option
@_domain_errors
def library_efficiency(library_path, fmt):
    """Flat and per-episode efficiency of a case library."""
    lib = load_library(library_path)
    flat = flat_efficiency(lib)
    system = system_efficiency(lib)
    episodes = [
        (g, episode_efficiency(g)) for g in lib.episodes
    ]
    if fmt == "machine":
        _emit_machine(
            {
                "command": "library-efficiency",
                "n": lib.n,
                "flat_efficiency": format_rational(flat),
                "system_efficiency": format_rational(system),
                "episodes": [
                    {
                        "name": g.name,
                        "efficiency": format_rational(eff),
                        "cases": {
                            c.id: format_rational(case_measure(c))
                            for c in episode_cases(g)
                        },
                    }
                    for g, eff in episodes
                ],
            }
        )
        return
    click.echo(
        _heading(
            f"Case library: {lib.n} distinct cases, "
            f"{len(lib.episodes)} top-level episodes"
        )
    )
    click.echo(f"  flat efficiency   = {_pair(flat)}   (mean over all cases)")
    click.echo(f"  system efficiency = {_pair(system)}   (mean over episodes)")
    for g, eff in episodes:
        cases = episode_cases(g)
        click.echo()
        click.echo(f"  {g.name}: efficiency {_pair(eff)}, {len(cases)} cases")
        for c in cases:
            click.echo(f"    {c.id}: t = {_pair(case_measure(c))} [{_case_kind(c)}]")


def _case_kind(c) -> str:
    if c.measure is not None:
        return "direct"
    if c.params is not None:
        return "parameters"
    return "trajectory"


def _params_payload(params: CbrParameters) -> dict:
    return {
        "p31": format_rational(params.p31),
        "p33": format_rational(params.p33),
        "p34": format_rational(params.p34),
    }


def main():
    cli(prog_name="cbrchain")


if __name__ == "__main__":
    main()
