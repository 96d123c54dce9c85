"""Declarative experiment configuration.

Configs are YAML key-value trees validated against a strict per-command
schema (unknown keys are rejected so sweeps stay diffable and hashable).
The config hash keys every result record.
"""

from __future__ import annotations

import hashlib
import json
from pathlib import Path

import yaml

__all__ = ["ConfigError", "load_config", "default_config", "config_hash", "SCHEMAS"]


class ConfigError(ValueError):
    pass


# Schemas: {key: default} trees. None means "required, no default".
_DATASET = {
    "kind": "blobs",  # blobs | binding | csv
    "n": 1500,
    "d": 7,
    "classes": 10,
    "spread": 0.15,  # calibrated so the MLP twin lands at ~0.90-0.95
    "noise": 0.25,
    "dim": 1000,
    "train_csv": "",
    "test_csv": "",
    "test_frac": 0.2,
    "val_frac": 0.1,
    "seed": 0,
}

_ENCODER = {
    "variant": "dynamical",
    "system": "mixed_oscillator",
    "delta": 10.0,
    "t_max": 8.0,
    "n_steps": 5,
    "h": 0.01,
    "T": 5,
    "threshold": 0.1,
    "decay": 0.95,
}

_NETWORK = {"hidden": [64, 64, 64], "T": 5, "beta0": 0.95, "theta0": 1.0, "k": 25.0}

_TRAIN = {"lr": 5e-5, "batch": 32, "max_epochs": 500, "patience": 5}

_LYAPUNOV = {"t_total": 10.0, "h": 0.01, "qr_interval": 5, "transient_steps": 0}

SCHEMAS = {
    "sweep": {
        "dataset": _DATASET,
        "encoder": _ENCODER,
        "network": _NETWORK,
        "train": _TRAIN,
        "lyapunov": _LYAPUNOV,
        "deltas": [-1.5, -0.6, 0.0, 0.6, 2.0, 5.0, 10.0],
        "seeds": [0, 1, 2],
        "mlp_twin": True,
    },
    "attractors": {
        "dataset": _DATASET,
        "network": _NETWORK,
        "train": _TRAIN,
        "lyapunov": {**_LYAPUNOV, "t_total": 200.0},
        "systems": ["lorenz", "rossler", "aizawa", "nose_hoover", "sprott_c", "chua"],
        "t_max_grid": [8.0],
        "n_steps_grid": [1, 5],
        "seeds": [0, 1, 2],
        "h": 0.01,
    },
    "train": {
        "dataset": _DATASET,
        "encoder": _ENCODER,
        "network": _NETWORK,
        "train": {**_TRAIN, "lr": 1e-3, "max_epochs": 100, "patience": 10},
        "seed": 0,
        "kind": "lif",  # lif | relu
        "checkpoint": "model.npz",
    },
    "rl": {
        "modes": ["mlp", "dissipative", "transition", "expansive"],
        "mode_deltas": {"dissipative": 10.0, "transition": 2.5, "expansive": -1.5},
        "seeds": [0, 1, 2, 3, 4],
        "episodes": 800,
        "lr": 0.001,
        "gamma": 0.99,
        "hidden": [32, 32, 32],
        "encoder": _ENCODER,
    },
    "binding": {
        "dataset": {**_DATASET, "kind": "binding", "n": 5000},
        "pca_dims": 64,
        "modes": ["mlp", "expansive", "transition", "dissipative"],
        "mode_deltas": {"dissipative": 10.0, "transition": 2.0, "expansive": -1.5},
        "seeds": [0, 1, 2, 3, 4],
        "encoder": _ENCODER,
        "network": _NETWORK,
        "train": {**_TRAIN, "lr": 1e-4, "batch": 64, "max_epochs": 100, "patience": 15},
    },
    "theory": {
        "tau_ratios": [0.0, 0.025, 0.083, 0.8],
        "sigma_i2": 1.0,
        "tau_m": 31.19,
        "v_th": 1.0,
        "v_reset": 0.0,
        "mu_grid": [0.0, 0.25, 0.5, 0.75, 1.0],
    },
    "report": {
        "checkpoint": None,
        "dataset": _DATASET,
        "encoder": _ENCODER,
        "deletion_grid": [0.0, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8],
        "deletion_reps": 10,
        "probe_batch": 256,
        "seed": 0,
    },
    "lyapunov": {
        "systems": ["lorenz", "rossler", "aizawa", "nose_hoover", "sprott_c", "chua"],
        "deltas": [],
        "lyapunov": _LYAPUNOV,
        "n_starts": 1,
    },
    "ais": {
        "systems": [],
        "deltas": [-1.5, -0.6, 0.0, 0.6, 2.0, 5.0, 10.0],
        "bins": 16,
        "t_max": 8.0,
    },
    "encode": {
        "dataset": _DATASET,
        "encoder": _ENCODER,
        "seed": 0,
        "cache": "encoded.npz",
    },
    "fit": {
        "input_csv": None,
        "kind": "sigmoid",  # sigmoid | powerlaw | pearson
        "x_column": "x",
        "y_column": "y",
        "lambda_c": 0.0,
    },
}


def _merge(schema, given, path=""):
    if isinstance(schema, dict):
        if given is None:
            given = {}
        if not isinstance(given, dict):
            raise ConfigError(f"{path or 'config'} must be a mapping")
        unknown = set(given) - set(schema)
        if unknown:
            raise ConfigError(f"unknown config keys at {path or 'top level'}: {sorted(unknown)}")
        out = {}
        for key, default in schema.items():
            sub_path = f"{path}.{key}" if path else key
            if key in given:
                out[key] = _merge(default, given[key], sub_path)
            elif default is None:
                raise ConfigError(f"missing required config key: {sub_path}")
            else:
                out[key] = default
        return out
    if schema is None:
        return given
    if given is None:
        return schema
    if isinstance(schema, bool):
        if not isinstance(given, bool):
            raise ConfigError(f"{path} must be a boolean")
        return given
    if isinstance(schema, (int, float)) and isinstance(given, (int, float)):
        return type(schema)(given) if not isinstance(schema, bool) else given
    if isinstance(schema, str) and isinstance(given, str):
        return given
    if isinstance(schema, list):
        if not isinstance(given, list):
            raise ConfigError(f"{path} must be a list")
        return given
    raise ConfigError(f"{path}: expected {type(schema).__name__}, got {type(given).__name__}")


def default_config(command: str) -> dict:
    if command not in SCHEMAS:
        raise ConfigError(f"unknown command {command!r}")
    return _merge(SCHEMAS[command], {})


def load_config(command: str, path=None, overrides: dict | None = None) -> dict:
    """Parse, validate, and default-fill a config file for a command."""
    if command not in SCHEMAS:
        raise ConfigError(f"unknown command {command!r}")
    given = {}
    if path is not None:
        try:
            with open(Path(path)) as fh:
                given = yaml.safe_load(fh) or {}
        except FileNotFoundError:
            raise ConfigError(f"config file not found: {path}")
        except yaml.YAMLError as exc:
            raise ConfigError(f"invalid YAML in {path}: {exc}")
    for key, value in (overrides or {}).items():
        if key in SCHEMAS[command] and key not in given:
            given[key] = value
    return _merge(SCHEMAS[command], given)


def config_hash(cfg: dict) -> str:
    canon = json.dumps(cfg, sort_keys=True, default=str)
    return hashlib.sha256(canon.encode()).hexdigest()[:16]
