"""Scenario configuration, sweeps and the command-line interface."""

from .config import ConfigError, ScenarioConfig, load_config, parse_config
from .sweeps import run_ber_sweep, run_packet_trace, run_throughput, simulate_queue

__all__ = ["ConfigError", "ScenarioConfig", "load_config", "parse_config", "run_ber_sweep", "run_packet_trace",
           "run_throughput", "simulate_queue"]
