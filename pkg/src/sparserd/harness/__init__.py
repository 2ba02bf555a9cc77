"""Experiment configs, Monte Carlo runners, verifiers and the CLI."""

from .config import ExperimentConfig, load_config, parse_config, parse_grid
from .experiments import (
    TrialResult,
    TrialSummary,
    logistic_crossing,
    phase_transition_sweep,
    run_trial,
    run_trials,
    splitmix64,
    trial_seed,
)
from .verify import verify_lemma_suite, verify_theorem8

__all__ = [
    "ExperimentConfig",
    "load_config",
    "parse_config",
    "parse_grid",
    "TrialResult",
    "TrialSummary",
    "logistic_crossing",
    "phase_transition_sweep",
    "run_trial",
    "run_trials",
    "splitmix64",
    "trial_seed",
    "verify_lemma_suite",
    "verify_theorem8",
]
