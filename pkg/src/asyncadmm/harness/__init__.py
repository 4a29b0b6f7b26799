"""Configuration, experiment runner, reproduction bundles and CLI."""

from .config import RunConfig, load_config, parse_config
from .experiment import ExperimentResult, run_experiment
from .reproduce import reproduce
from .selftest import selftest

__all__ = ["RunConfig", "load_config", "parse_config", "ExperimentResult", "run_experiment",
           "reproduce", "selftest"]
