from ._acpo import (
    Error,
    Policy,
    ValidationError,
    clipped_surrogate_term,
    entropy,
    group_base_advantage,
    k3,
    modulation_weight,
    mutual_information,
    run_cli,
    segment,
    theorem_sweep,
)

__all__ = [
    "Error",
    "Policy",
    "ValidationError",
    "clipped_surrogate_term",
    "entropy",
    "group_base_advantage",
    "k3",
    "modulation_weight",
    "mutual_information",
    "run_cli",
    "segment",
    "theorem_sweep",
]
