"""Feature-vector encoders producing SNN input sequences.

The dynamical encoder evolves each feature through a 3-D system and feeds
the sampled coordinates as analog input current; the remaining variants
are the usual spike-coding baselines (rate, latency, phase, TTFS, delta,
burst) plus a pass-through.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .systems import EncodingConfig, SystemParams, encode_features

__all__ = [
    "InputSequence",
    "EncoderSpec",
    "encode",
    "batch_encode",
    "batch_encode_cached",
    "cache_key",
    "save_cache",
    "load_cache",
]

ANALOG = "analog_current"
BINARY = "binary_spikes"

_NORMALIZED = {"rate", "latency", "phase", "ttfs"}
_VARIANTS = _NORMALIZED | {"dynamical", "delta", "burst", "default"}


@dataclass
class InputSequence:
    values: np.ndarray  # [T, D] input current (or binary spikes) per step
    kind: str

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.float64)
        if self.values.ndim != 2 or self.values.shape[0] < 1:
            raise ValueError("values must be [T, D] with T >= 1")
        if self.kind == BINARY and not np.isin(self.values, (0.0, 1.0)).all():
            raise ValueError("binary spike sequence must contain only 0/1")


@dataclass(frozen=True)
class EncoderSpec:
    variant: str
    system: SystemParams | None = None
    config: EncodingConfig | None = None
    T: int = 5  # steps for the baseline variants
    threshold: float = 0.1  # delta / ttfs / burst base threshold
    decay: float = 0.95  # burst threshold decay

    def __post_init__(self):
        if self.variant not in _VARIANTS:
            raise ValueError(f"unknown encoder variant {self.variant!r}")
        if self.variant == "dynamical":
            if self.system is None:
                raise ValueError("dynamical encoder needs a system")
            if self.config is None:
                object.__setattr__(self, "config", EncodingConfig())
        if self.threshold <= 0:
            raise ValueError("threshold must be positive")
        if not (0 < self.decay < 1):
            raise ValueError("decay must lie in (0, 1)")
        if self.T < 1:
            raise ValueError("T must be >= 1")

    def key(self) -> tuple:
        sys_key = (self.system.kind, self.system.params) if self.system else None
        cfg_key = self.config.key() if self.config else None
        return (self.variant, sys_key, cfg_key, self.T, self.threshold, self.decay)

    @property
    def steps(self) -> int:
        if self.variant == "dynamical":
            return self.config.n_steps + (1 if self.config.include_t0 else 0)
        return self.T

    def width(self, d: int) -> int:
        return 3 * d if self.variant == "dynamical" else d


def _check_normalized(features: np.ndarray, variant: str):
    if np.any(features < 0) or np.any(features > 1):
        raise ValueError(f"{variant} encoding requires features in [0, 1]")


def encode(spec: EncoderSpec, features, rng=None) -> InputSequence:
    """Encode one feature vector into a [T, D] input sequence."""
    features = np.asarray(features, dtype=np.float64).ravel()
    if not np.all(np.isfinite(features)):
        raise ValueError("features must be finite")
    d = len(features)
    rng = np.random.default_rng(rng)
    v = spec.variant
    if v in _NORMALIZED:
        _check_normalized(features, v)

    if v == "dynamical":
        traj = encode_features(spec.system, features, spec.config)  # [d, N, 3]
        vals = traj.transpose(1, 0, 2).reshape(traj.shape[1], 3 * d)
        return InputSequence(vals, ANALOG)
    T = spec.T
    if v == "rate":
        spikes = (rng.random((T, d)) < features).astype(np.float64)
        return InputSequence(spikes, BINARY)
    if v == "latency":
        # Highest value spikes first; one spike per feature.
        steps = np.rint((1.0 - features) * (T - 1)).astype(int) if T > 1 else np.zeros(d, int)
        spikes = np.zeros((T, d))
        spikes[steps, np.arange(d)] = 1.0
        return InputSequence(spikes, BINARY)
    if v == "phase":
        t = np.arange(T)[:, None]
        spikes = (np.sin(features[None, :] * 2.0 * np.pi - t) >= 0).astype(np.float64)
        return InputSequence(spikes, BINARY)
    if v == "ttfs":
        spikes = np.zeros((T, d))
        acc = features.copy()
        for t in range(T):
            fire = acc >= spec.threshold
            spikes[t, fire] = 1.0
            acc[fire] -= spec.threshold
        return InputSequence(spikes, BINARY)
    if v == "delta":
        diffs = np.diff(features, prepend=0.0)
        row = (diffs > spec.threshold).astype(np.float64)
        return InputSequence(np.tile(row, (T, 1)), BINARY)
    if v == "burst":
        spikes = np.zeros((T, d))
        th = np.full(d, spec.threshold)
        for t in range(T):
            fire = features >= th
            spikes[t, fire] = 1.0
            th = np.where(fire, th * spec.decay, spec.threshold)
        return InputSequence(spikes, BINARY)
    if v == "default":
        return InputSequence(np.tile(features, (T, 1)), ANALOG)
    raise AssertionError(v)


def batch_encode(spec: EncoderSpec, dataset, seed: int = 0) -> np.ndarray:
    """Encode every row of an (n, d) dataset; returns [n, T, D].

    Deterministic given (spec, dataset, seed); stochastic variants draw
    from per-row streams derived from the seed, so results do not depend
    on evaluation order.
    """
    X = np.asarray(dataset, dtype=np.float64)
    if X.ndim != 2:
        raise ValueError("dataset must be (n, d)")
    n, d = X.shape
    out = np.zeros((n, spec.steps, spec.width(d)))
    if n == 0:
        return out
    if spec.variant == "dynamical":
        # One batched integration across all rows and features.
        flat = X.ravel()
        traj = encode_features(spec.system, flat, spec.config)  # [n*d, N, 3]
        traj = traj.reshape(n, d, spec.steps, 3)
        return traj.transpose(0, 2, 1, 3).reshape(n, spec.steps, 3 * d)
    seeds = np.random.SeedSequence(seed).spawn(n)
    for i in range(n):
        try:
            out[i] = encode(spec, X[i], rng=np.random.default_rng(seeds[i])).values
        except ValueError as exc:
            raise ValueError(f"row {i}: {exc}") from exc
    return out


def cache_key(spec: EncoderSpec, dataset, seed: int = 0) -> str:
    X = np.ascontiguousarray(np.asarray(dataset, dtype=np.float64))
    digest = hashlib.sha256()
    digest.update(json.dumps(spec.key(), default=str).encode())
    digest.update(str(seed).encode())
    digest.update(str(X.shape).encode())
    digest.update(X.tobytes())
    return digest.hexdigest()[:24]


def save_cache(path, values: np.ndarray, seed: int, spec_hash: str):
    """Tensor container: f64 values plus a {shape, dtype, seed, hash} header."""
    path = Path(path)
    header = {
        "shape": list(values.shape),
        "dtype": "f64",
        "seed": int(seed),
        "spec_hash": spec_hash,
    }
    np.savez(
        path,
        values=np.asarray(values, dtype=np.float64),
        header=np.frombuffer(json.dumps(header).encode(), dtype=np.uint8),
    )


def load_cache(path):
    path = Path(path)
    with np.load(path) as data:
        values = data["values"]
        header = json.loads(bytes(data["header"].tobytes()).decode())
    if list(values.shape) != header["shape"]:
        raise ValueError(f"corrupt cache file {path}")
    return values, header


def batch_encode_cached(
    spec: EncoderSpec, dataset, seed: int = 0, cache_dir=None
) -> np.ndarray:
    """``batch_encode`` with an optional on-disk cache."""
    if cache_dir is None:
        return batch_encode(spec, dataset, seed)
    cache_dir = Path(cache_dir)
    cache_dir.mkdir(parents=True, exist_ok=True)
    key = cache_key(spec, dataset, seed)
    path = cache_dir / f"enc_{key}.npz"
    if path.exists():
        values, header = load_cache(path)
        if header["spec_hash"] == key:
            return values
    values = batch_encode(spec, dataset, seed)
    save_cache(path, values, seed, key)
    return values
