"""Experiment driver, validation runs and persistence."""
from .config import ConfigError, ExperimentConfig, load_config
from .experiment import TrialRecord, run_experiment, run_trial
from .validation import validate_bias, validate_consistency, validate_normality

__all__ = ["ConfigError", "ExperimentConfig", "load_config", "TrialRecord", "run_experiment",
           "run_trial", "validate_bias", "validate_consistency", "validate_normality"]
