"""Config-driven batch runner for the exchange scenarios."""

from .config import ConfigError, ScenarioConfig, load_config, parse_config
from .runner import (EmitError, ResultRecord, ScenarioError, emit_results, format_csv, format_json_lines,
                     parse_json_lines, run_scenario)

__all__ = [
    "ConfigError", "ScenarioConfig", "load_config", "parse_config",
    "EmitError", "ResultRecord", "ScenarioError", "emit_results", "format_csv", "format_json_lines",
    "parse_json_lines", "run_scenario",
]
