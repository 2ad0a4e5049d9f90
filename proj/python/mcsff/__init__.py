"""Python bindings for the mcsff entity alignment library.

Configs may be given as a path to a JSON file, a dict, or a JSON string.
Relative data paths in a dict or string resolve against ``base_dir``.
"""

import json
import os

from ._core import (
    ConfigError,
    IoError,
    NumericError,
    ParseError,
    ShapeError,
    ValidationError,
    align_topk,
    evaluate,
    fuse_similarity,
    run_cli,
)
from . import _core

__all__ = [
    "ConfigError",
    "IoError",
    "NumericError",
    "ParseError",
    "ShapeError",
    "ValidationError",
    "align_topk",
    "evaluate",
    "fuse_similarity",
    "load_config",
    "run_ablation",
    "run_cli",
    "run_experiment",
    "validate",
]


def _resolve(config, base_dir):
    if isinstance(config, os.PathLike) or (isinstance(config, str) and not config.lstrip().startswith("{")):
        path = os.fspath(config)
        return _core.load_config(path), ""
    if isinstance(config, dict):
        config = json.dumps(config)
    return config, os.fspath(base_dir)


def load_config(path):
    """Fully populated config as a dict."""
    return json.loads(_core.load_config(os.fspath(path)))


def validate(config, base_dir="."):
    """Returns (ok, report_text)."""
    return _core.validate(*_resolve(config, base_dir))


def run_experiment(config, base_dir="."):
    """Train and evaluate once. Returns metrics, per-epoch loss and the test score matrix."""
    return _core.run_experiment(*_resolve(config, base_dir))


def run_ablation(config, base_dir="."):
    """List of (variant, metrics) for the five ablation variants."""
    return _core.run_ablation(*_resolve(config, base_dir))
