"""Information-dynamics estimators: AIS, autocorrelation time, binned MI.

All estimators are histogram/plug-in based and reported in bits. Active
information storage is the lag-1 mutual information of a series with
itself, computed per trajectory axis after z-scoring and clipping.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .systems import Trajectory

__all__ = [
    "AISResult",
    "AcfResult",
    "ais",
    "acf",
    "mutual_info",
    "mutual_info_shuffle_baseline",
]

_EPS = 1e-10  # Laplace smoothing factor for histogram probabilities
_CLIP = 5.0  # z-score clip range


@dataclass
class AISResult:
    per_axis: np.ndarray  # bits, for x, y, z
    mean: float  # bits
    degenerate_axes: list[int] = field(default_factory=list)


@dataclass
class AcfResult:
    lags: np.ndarray  # time units
    acf: np.ndarray
    tau_corr: float  # inf when the 1/e crossing is beyond the window
    exceeds_window: bool


def _lag1_mi_bits(x: np.ndarray, bins: int) -> float:
    """Plug-in MI (bits) between x[1:] and x[:-1] on an equal-width grid."""
    cur, prev = x[1:], x[:-1]
    joint, _, _ = np.histogram2d(cur, prev, bins=bins)
    n = joint.sum()
    k = bins
    p_joint = (joint + _EPS) / (n + k * k * _EPS)
    p_cur = (joint.sum(axis=1) + _EPS) / (n + k * _EPS)
    p_prev = (joint.sum(axis=0) + _EPS) / (n + k * _EPS)
    denom = np.outer(p_cur, p_prev)
    mi = float(np.sum(p_joint * np.log2(p_joint / denom)))
    return max(mi, 0.0)


def ais(traj, bins: int = 8) -> AISResult:
    """Active information storage per axis (lag 1), averaged over axes.

    Accepts a Trajectory or an (n, 3) state array. Each axis is z-scored,
    clipped to [-5, 5], and stripped of non-finite entries before the 2-D
    histogram estimate. A constant axis contributes 0 bits and is flagged.
    """
    states = traj.states if isinstance(traj, Trajectory) else np.asarray(traj)
    states = np.asarray(states, dtype=np.float64)
    if states.ndim != 2 or states.shape[1] != 3:
        raise ValueError("expected (n, 3) trajectory states")
    if len(states) < 50:
        raise ValueError("trajectory too short for a reliable AIS estimate")
    per_axis = np.zeros(3)
    degenerate = []
    for axis in range(3):
        x = states[:, axis]
        x = x[np.isfinite(x)]
        sd = x.std()
        if len(x) < 50 or sd == 0.0:
            degenerate.append(axis)
            continue
        z = np.clip((x - x.mean()) / sd, -_CLIP, _CLIP)
        per_axis[axis] = _lag1_mi_bits(z, bins)
    return AISResult(
        per_axis=per_axis, mean=float(per_axis.mean()), degenerate_axes=degenerate
    )


def acf(series, dt: float, max_lag: int | None = None) -> AcfResult:
    """Normalized autocorrelation and its 1/e decay time.

    acf[k] = (<x_t x_{t+k}> - <x>^2) / var(x) with global mean/variance;
    tau_corr interpolates linearly between the lags bracketing the first
    crossing below 1/e.
    """
    x = np.asarray(series, dtype=np.float64).ravel()
    n = len(x)
    if n < 100:
        raise ValueError("series too short for ACF estimation")
    var = x.var()
    if var == 0.0:
        raise ValueError("zero variance series")
    if max_lag is None:
        max_lag = n - 2
    max_lag = min(max_lag, n - 2)
    mean = x.mean()
    vals = np.empty(max_lag + 1)
    for k in range(max_lag + 1):
        vals[k] = (np.mean(x[: n - k] * x[k:]) - mean * mean) / var
    lags = dt * np.arange(max_lag + 1)

    thresh = math.exp(-1.0)
    below = np.nonzero(vals < thresh)[0]
    if len(below) == 0:
        return AcfResult(lags=lags, acf=vals, tau_corr=math.inf, exceeds_window=True)
    k = max(int(below[0]), 1)  # acf[0] = 1 for any non-constant series
    frac = (vals[k - 1] - thresh) / (vals[k - 1] - vals[k])
    tau = dt * (k - 1 + frac)
    return AcfResult(lags=lags, acf=vals, tau_corr=float(tau), exceeds_window=False)


def _pca_project(a: np.ndarray, dims: int) -> np.ndarray:
    centered = a - a.mean(axis=0)
    try:
        _, s, vt = np.linalg.svd(centered, full_matrices=False)
    except np.linalg.LinAlgError:
        return a
    if not np.all(np.isfinite(s)) or s[0] == 0.0:
        return a
    return centered @ vt[:dims].T


def _discretize(a: np.ndarray, bins: int) -> np.ndarray:
    """Equal-width binning per column; returns integer codes."""
    a = np.asarray(a, dtype=np.float64)
    if a.ndim == 1:
        a = a[:, None]
    codes = np.empty(a.shape, dtype=np.int64)
    for j in range(a.shape[1]):
        col = a[:, j]
        lo, hi = col.min(), col.max()
        if hi <= lo:
            codes[:, j] = 0
            continue
        edges = np.linspace(lo, hi, bins + 1)
        codes[:, j] = np.clip(np.searchsorted(edges, col, side="right") - 1, 0, bins - 1)
    return codes


def _rows_to_keys(codes: np.ndarray) -> np.ndarray:
    """Map integer-code rows to scalar keys for joint counting."""
    _, keys = np.unique(codes, axis=0, return_inverse=True)
    return keys


def _is_discrete_labels(b) -> bool:
    b = np.asarray(b)
    return b.ndim == 1 and np.issubdtype(b.dtype, np.integer)


def mutual_info(a, b, bins: int = 20, pca_dims: int = 10) -> float:
    """Plug-in mutual information (bits) between two representations.

    Continuous inputs wider than ``pca_dims`` are first projected onto
    their top principal components, then every retained dimension is
    discretized into ``bins`` equal-width bins; integer label vectors are
    used as-is.
    """
    a = np.asarray(a)
    if a.ndim == 1:
        a = a[:, None]
    n = len(a)
    if n < 100:
        raise ValueError("need at least 100 samples")

    def encode(side):
        if _is_discrete_labels(side):
            return np.asarray(side, dtype=np.int64)
        side = np.asarray(side, dtype=np.float64)
        if side.ndim == 1:
            side = side[:, None]
        if side.shape[1] > pca_dims:
            side = _pca_project(side, pca_dims)
        return _rows_to_keys(_discretize(side, bins))

    ka = np.unique(encode(a), return_inverse=True)[1]
    kb = np.unique(encode(b), return_inverse=True)[1]
    if len(kb) != n:
        raise ValueError("a and b must have the same number of samples")

    ca = np.bincount(ka) / n
    cb = np.bincount(kb) / n
    pairs, counts = np.unique(np.stack([ka, kb], axis=1), axis=0, return_counts=True)
    p = counts / n
    mi = float(np.sum(p * np.log2(p / (ca[pairs[:, 0]] * cb[pairs[:, 1]]))))
    return max(mi, 0.0)


def mutual_info_shuffle_baseline(
    a, b, bins: int = 20, pca_dims: int = 10, n_perm: int = 10, rng=None
) -> float:
    """Mean MI after permuting ``b``: the plug-in estimator's bias floor."""
    rng = np.random.default_rng(rng)
    b = np.asarray(b)
    vals = []
    for _ in range(n_perm):
        perm = rng.permutation(len(b))
        vals.append(mutual_info(a, b[perm], bins=bins, pca_dims=pca_dims))
    return float(np.mean(vals))
