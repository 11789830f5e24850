"""Configuration parsing, experiment runners, and the gcl-sim CLI."""

from .config import EXPERIMENTS, ExperimentConfig, load_config, parse_config
from .runners import run_experiment

__all__ = ["EXPERIMENTS", "ExperimentConfig", "load_config", "parse_config",
           "run_experiment"]
