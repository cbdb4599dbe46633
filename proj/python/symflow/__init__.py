"""Flow matching for multistable, symmetry-breaking systems."""

import json as _json

from ._core import (
    ConfigError,
    Model,
    NumericalError,
    ShapeError,
    best_circular_shift,
    build_dataset,
    hungarian,
    load_model,
    mlp_apply,
    mlp_gradient,
    mlp_param_count,
    sign_flip_match,
    solve_allen_cahn,
    solve_beam,
    wasserstein_1d,
    wasserstein_assignment,
)
from ._core import config_hash as _config_hash
from ._core import evaluate as _evaluate
from ._core import train as _train


def _text(config):
    return config if isinstance(config, str) else _json.dumps(config)


def config_hash(config):
    """Hash of the canonical run config (dict or JSON string)."""
    return _config_hash(_text(config))


def train(config):
    """Train from a config dict (or JSON string); returns a Model."""
    return _train(_text(config))


def evaluate(model, config):
    """Evaluate on the config's test split; returns the report dict."""
    return _json.loads(_evaluate(model, _text(config)))


__all__ = [
    "ConfigError",
    "Model",
    "NumericalError",
    "ShapeError",
    "best_circular_shift",
    "build_dataset",
    "config_hash",
    "evaluate",
    "hungarian",
    "load_model",
    "mlp_apply",
    "mlp_gradient",
    "mlp_param_count",
    "sign_flip_match",
    "solve_allen_cahn",
    "solve_beam",
    "train",
    "wasserstein_1d",
    "wasserstein_assignment",
]
