"""Stochastic billiards on [0, 1] whose reflections come from thin boundary layers."""

from ._core import (
    BilliardsError,
    BoundaryLayer,
    DegenerateRates,
    InvalidInput,
    ParseError,
    ValidationError,
    boundary_excursions,
    criterion_count,
    derive_rates,
    exit_speed_cdf,
    exit_speed_density,
    level_probabilities,
    noisy_sign_change_prob,
    run_command,
    run_criterion,
    sample_reflection,
    simulate_billiard,
)

__all__ = [
    "BilliardsError",
    "BoundaryLayer",
    "DegenerateRates",
    "InvalidInput",
    "ParseError",
    "ValidationError",
    "boundary_excursions",
    "criterion_count",
    "derive_rates",
    "exit_speed_cdf",
    "exit_speed_density",
    "level_probabilities",
    "noisy_sign_change_prob",
    "run_command",
    "run_criterion",
    "sample_reflection",
    "simulate_billiard",
]
