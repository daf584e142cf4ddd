"""Scenario runner: configs, reports, entropy comparisons and the command line."""
from .runner import CheckRecord, Report, compare_entropies, emit_plot_data, execute, run_scenario
from .scenario import Experiment, Scenario, ScenarioError, load_scenario, parse_scenario

__all__ = [
    "CheckRecord",
    "Experiment",
    "Report",
    "Scenario",
    "ScenarioError",
    "compare_entropies",
    "emit_plot_data",
    "execute",
    "load_scenario",
    "parse_scenario",
    "run_scenario",
]
