"""Scenario files, the home robot scenario, trial execution and reports."""

from .home import build_home_robot_scenario
from .io import dump_scenario, dumps_scenario, load_scenario, loads_scenario, spec_to_dict
from .report import emit_report, render_report
from .spec import ScenarioSpec
from .trials import ReportDocument, run_trials

__all__ = [
    "ScenarioSpec",
    "ReportDocument",
    "load_scenario",
    "loads_scenario",
    "dump_scenario",
    "dumps_scenario",
    "spec_to_dict",
    "build_home_robot_scenario",
    "run_trials",
    "emit_report",
    "render_report",
]
