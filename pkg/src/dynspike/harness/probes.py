"""Dynamics probes: the measurement conventions behind sweep records.

These wrap the estimator primitives with the conventions used for
characterizing an encoding mode: a fixed reference initial condition, a
finite estimation window matched to the encoding horizon, an amplitude cap
that excludes the numerically meaningless super-exponential escape tail of
expansive systems, and the rule that a globally diverging trajectory has
non-decaying autocorrelation (its correlation time exceeds any window).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .. import backends, infodyn, lyapunov
from ..systems import SystemParams, default_init_map, integrate

__all__ = ["ModeDynamics", "mode_spectrum", "mode_ais", "mode_tau_corr", "mode_dynamics"]

_H = 0.01
_ANALYSIS_GUARD = 1e140  # keeps squared values finite for variance estimates
_AIS_AMP_CAP = 50.0
_REFERENCE_FEATURE = 1.0


@dataclass
class ModeDynamics:
    lambda_max: float
    lambda_sum: float
    ais_mean: float
    ais_per_axis: list
    tau_corr: float  # inf when correlations outlast the window
    tau_window: float
    diverging: bool


def _raw_states(sys: SystemParams, t_max: float, warmup: float = 0.0):
    """States at h resolution up to t_max or the escape point."""
    s0 = np.array(default_init_map(_REFERENCE_FEATURE))
    params = np.asarray(sys.params, dtype=np.float64)
    if warmup > 0:
        states, ok = backends.integrate_states(
            sys.system_id, params, s0, _H, int(warmup / _H), _ANALYSIS_GUARD
        )
        s0 = states[min(ok, len(states) - 1)]
    states, ok = backends.integrate_states(
        sys.system_id, params, s0, _H, int(t_max / _H), _ANALYSIS_GUARD
    )
    return states[: ok + 1], ok == int(t_max / _H)


def mode_spectrum(
    sys: SystemParams, t_total: float = 10.0, qr_interval: int = 5
) -> lyapunov.LyapunovSpectrum:
    """Finite-window Lyapunov spectrum from the reference start."""
    cfg = lyapunov.LyapunovConfig(h=_H, t_total=t_total, qr_interval=qr_interval)
    s0 = np.array(default_init_map(_REFERENCE_FEATURE))
    return lyapunov.spectrum(sys, s0, cfg)


def mode_ais(
    sys: SystemParams,
    bins: int = 16,
    t_max: float = 8.0,
    warmup: float = 0.0,
    amp_cap: float = _AIS_AMP_CAP,
) -> infodyn.AISResult:
    """AIS of the mode's trajectory over the encoding horizon.

    The segment is truncated where the state amplitude exceeds ``amp_cap``:
    past that point z-score binning collapses the informative part of the
    series into a single bin and the estimate reflects floating-point
    range, not dynamics. Attractor systems should pass a warmup so the
    estimate describes the attractor rather than the approach to it.
    """
    states, _ = _raw_states(sys, t_max, warmup)
    amps = np.max(np.abs(states), axis=1)
    over = np.nonzero(amps > amp_cap)[0]
    if len(over):
        states = states[: over[0]]
    if len(states) < 50:
        raise ValueError(
            f"{sys.describe()}: fewer than 50 in-range samples for AIS"
        )
    return infodyn.ais(states, bins=bins)


def mode_tau_corr(
    sys: SystemParams,
    window: float = 30.0,
    max_lag: float = 25.0,
    warmup: float = 0.0,
):
    """Mean per-axis 1/e autocorrelation time of the mode's trajectory.

    A trajectory that escapes before the window completes is globally
    diverging: its state never decorrelates from where it came from, so
    tau_corr is reported as infinite (exceeds the lag window).
    """
    states, completed = _raw_states(sys, window, warmup)
    if not completed:
        return math.inf, True
    lag_cap = int(max_lag / _H)
    taus = []
    exceeded = False
    for axis in range(3):
        x = states[:, axis]
        if x.std() == 0.0:
            continue
        res = infodyn.acf(x, _H, max_lag=min(lag_cap, len(x) - 2))
        if res.exceeds_window:
            exceeded = True
        else:
            taus.append(res.tau_corr)
    if exceeded or not taus:
        return math.inf, True
    return float(np.mean(taus)), False


def mode_dynamics(
    sys: SystemParams,
    spectrum_t: float = 10.0,
    ais_bins: int = 16,
    warmup: float = 0.0,
) -> ModeDynamics:
    """One-stop dynamics characterization of an encoding system."""
    spec = mode_spectrum(sys, t_total=spectrum_t)
    ais_res = mode_ais(sys, bins=ais_bins, warmup=warmup)
    tau, diverging = mode_tau_corr(sys, warmup=warmup)
    return ModeDynamics(
        lambda_max=spec.lambda_max,
        lambda_sum=spec.lambda_sum,
        ais_mean=ais_res.mean,
        ais_per_axis=list(ais_res.per_axis),
        tau_corr=tau,
        tau_window=25.0,
        diverging=diverging,
    )
