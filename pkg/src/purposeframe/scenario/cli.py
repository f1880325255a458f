"""Command line interface.

Exit codes: 0 success or aligned, 1 misaligned or failed causal check,
2 parse or validation error, 3 any other runtime error.
"""

from __future__ import annotations

import functools
import json
import random
import sys

import click

from ..alignment import CASE_KINDS, case_from_name, check_conditions, check_definition, equivalence_audit
from ..causality import InterventionSpec, check_causality
from ..errors import ParseError, ValidationError
from ..grounding import ground_point, ground_purpose, state_goal
from ..modelgen import generator_for
from .home import build_home_robot_scenario
from .io import dumps_scenario, load_scenario
from .report import emit_report
from .trials import alignment_model_for, run_trials, scenario_check

EXIT_OK, EXIT_FAIL, EXIT_INVALID, EXIT_RUNTIME = 0, 1, 2, 3


def _guarded(fn):
    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        try:
            code = fn(*args, **kwargs)
        except (ParseError, ValidationError) as err:
            click.echo(f"error: {err}", err=True)
            sys.exit(EXIT_INVALID)
        except click.exceptions.Exit:
            raise
        except Exception as err:  # noqa: BLE001 - mapped to an exit code
            trial = getattr(err, "trial", None)
            where = f" (trial {trial})" if trial is not None else ""
            click.echo(f"error{where}: {type(err).__name__}: {err}", err=True)
            sys.exit(EXIT_RUNTIME)
        sys.exit(code or EXIT_OK)

    return wrapper


def _output(doc, report_path, fmt):
    text = emit_report(doc, report_path, fmt)
    if report_path is None:
        click.echo(text, nl=False)


@click.group()
def main() -> None:
    """Check purpose alignment, run scenarios and audit the checkers."""


scenario_arg = click.argument("scenario", type=click.Path(exists=True, dir_okay=False))
format_opt = click.option("--format", "fmt", type=click.Choice(["json", "text"]), default="json", show_default=True)


@main.command()
@scenario_arg
@click.option("--case", "case_name", type=click.Choice(CASE_KINDS), required=True)
@click.option("--mode", type=click.Choice(["semantic", "operational"]), default="semantic", show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--check", "check_id", default=None, help="Which configured check to use (default: the first).")
@click.option("--theta", type=float, default=None, help="Utility threshold for the vut case.")
@click.option("--report", "report_path", type=click.Path(dir_okay=False), default=None)
@format_opt
@_guarded
def check(scenario, case_name, mode, seed, check_id, theta, report_path, fmt):
    """Decide alignment for a scenario's configured check under the final phase."""
    spec = load_scenario(scenario)
    chk = scenario_check(spec, check_id)
    model = alignment_model_for(spec, chk, seed=seed)
    case = case_from_name(case_name, theta if theta is not None else chk.theta, (chk.domain,))
    if mode == "semantic":
        verdict = check_conditions(model, case)
    else:
        verdict = check_definition(model, case, random.Random(seed))
    _output(verdict.to_dict(), report_path, fmt)
    return EXIT_OK if verdict.aligned else EXIT_FAIL


@main.command()
@scenario_arg
@click.option("--trials", type=int, default=None, help="Run only the first N trials.")
@click.option("--seed", type=int, default=None, help="Defaults to the scenario's seed.")
@click.option("--report", "report_path", type=click.Path(dir_okay=False), default=None)
@format_opt
@_guarded
def simulate(scenario, trials, seed, report_path, fmt):
    """Run the scripted trials and emit the report."""
    spec = load_scenario(scenario)
    report = run_trials(spec, seed=spec.seed if seed is None else seed, limit=trials)
    _output(report, report_path, fmt)
    return EXIT_OK


@main.command()
@click.option("--case", "case_name", type=click.Choice(CASE_KINDS), required=True)
@click.option("--count", type=int, default=1000, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@_guarded
def audit(case_name, count, seed):
    """Compare the condition checker with the definition on random models."""
    case = case_from_name(case_name)
    rep = equivalence_audit(generator_for(case), case, count, seed)
    click.echo(json.dumps(rep.to_dict(), indent=2, sort_keys=True))
    return EXIT_OK if rep.agreements == rep.count else EXIT_FAIL


@main.command()
@scenario_arg
@click.option("--baseline", type=click.Choice(["idle", "random"]), default=None,
              help="Defaults to the check's configured baseline, else idle.")
@click.option("--check", "check_id", default=None)
@click.option("--horizon", type=int, default=None)
@click.option("--seed", type=int, default=0, show_default=True)
@format_opt
@_guarded
def cause(scenario, baseline, check_id, horizon, seed, fmt):
    """Actual-cause checks for the robot's pursuit of the checked goal."""
    spec = load_scenario(scenario)
    chk = scenario_check(spec, check_id)
    model = alignment_model_for(spec, chk, seed=seed)
    h = horizon or chk.horizon or chk.timeout
    primary = baseline or chk.causal_baseline or "idle"
    verdict = check_causality(model, InterventionSpec(h, primary, domain=chk.domain), random.Random(seed),
                              alternatives=("idle", "random"))
    _output(verdict.to_dict(), None, fmt)
    return EXIT_OK if verdict.overall else EXIT_FAIL


@main.command("gen-home-scenario")
@click.option("--out", type=click.Path(dir_okay=False), default=None)
@click.option("--seed", type=int, default=0, show_default=True)
@_guarded
def gen_home_scenario(out, seed):
    """Write the home robot scenario file."""
    text = dumps_scenario(build_home_robot_scenario(seed))
    if out is None:
        click.echo(text, nl=False)
    else:
        with open(out, "w", encoding="utf-8") as fh:
            fh.write(text)
    return EXIT_OK


@main.command()
@scenario_arg
@click.option("--purpose", "purpose_id", required=True)
@click.option("--domain", "domain_id", required=True)
@click.option("--point", default=None, help="Ground one point instead of the whole support.")
@click.option("--context", default=None)
@_guarded
def ground(scenario, purpose_id, domain_id, point, context):
    """Show the goal and state goal a purpose grounds to in a domain."""
    spec = load_scenario(scenario)
    if purpose_id not in spec.purposes:
        raise ValidationError("unknown purpose", purpose_id)
    if domain_id not in spec.domains:
        raise ValidationError("unknown domain", domain_id)
    p = spec.purposes[purpose_id]
    enc = spec.encoder(p.owner, p.space, domain_id, context)
    goal = ground_point(p, point, enc) if point is not None else ground_purpose(p, enc)
    sg = state_goal(goal, spec.sensors[p.owner])
    doc = {
        "goal": goal.id,
        "observations": sorted(goal.points),
        "states": sorted(sg.states),
        "utility_per_observation": {o: goal.utility_per_point[o] for o in sorted(goal.points)},
    }
    click.echo(json.dumps(doc, indent=2, sort_keys=True))
    return EXIT_OK


if __name__ == "__main__":  # pragma: no cover
    main()
