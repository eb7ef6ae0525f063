"""Scenario configuration, run records, convergence studies and the command line."""

from .config import ScenarioConfig, load_config, make_state
from .records import RunRecord, emit_outputs, load_record, validate_record
from .runner import convergence_study, run_scenario

__all__ = [
    "ScenarioConfig",
    "RunRecord",
    "load_config",
    "make_state",
    "run_scenario",
    "convergence_study",
    "emit_outputs",
    "load_record",
    "validate_record",
]
