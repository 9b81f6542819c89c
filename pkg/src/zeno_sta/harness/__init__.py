"""Scenario configuration, sweeps, export and the command-line entry point."""
from .config import ScenarioConfig, SweepSpec, load_config, parse_config
from .export import export, to_csv, to_json
from .protocols import RunResult, run
from .sweep import SlopeFit, SweepResult, fit_loglog, sweep

__all__ = ["ScenarioConfig", "SweepSpec", "load_config", "parse_config", "export", "to_csv", "to_json",
           "RunResult", "run", "SlopeFit", "SweepResult", "fit_loglog", "sweep"]
