"""Teacher-embedding transfer experiments (C++ core)."""

from ._b2m import (
    B2mError,
    ConfigError,
    DomainError,
    IoError,
    ShapeError,
    combined_loss,
    config_fingerprint,
    contrastive_loss,
    default_config,
    detect_divergence,
    epochs_to_convergence,
    exp_filter,
    filter_kernel,
    latent_loss,
    load_config,
    memory_episode,
    rank_sum_test,
    run,
    scenes,
    sweep,
)

__all__ = [
    "B2mError",
    "ConfigError",
    "DomainError",
    "IoError",
    "ShapeError",
    "combined_loss",
    "config_fingerprint",
    "contrastive_loss",
    "default_config",
    "detect_divergence",
    "epochs_to_convergence",
    "exp_filter",
    "filter_kernel",
    "latent_loss",
    "load_config",
    "memory_episode",
    "rank_sum_test",
    "run",
    "scenes",
    "sweep",
]
