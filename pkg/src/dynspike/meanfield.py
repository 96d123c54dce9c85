"""Mean-field machinery for noise-driven LIF units.

Covers the input side (Ornstein-Uhlenbeck simulation, membrane time
constant from the discrete decay factor, effective membrane variance under
correlated input) and the output side (Siegert-type first-passage firing
rate, channel-capacity bound on rate-coded information).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "OUParams",
    "RateInputs",
    "ou_simulate",
    "tau_m_from_beta",
    "beta_from_tau_m",
    "effective_variance",
    "siegert_rate",
    "capacity_bound",
    "erf",
    "erfc",
    "erfcx",
]


@dataclass(frozen=True)
class OUParams:
    mu: float
    sigma2: float
    tau_corr: float
    h: float

    def __post_init__(self):
        if self.sigma2 < 0:
            raise ValueError("sigma2 must be >= 0")
        if self.tau_corr <= 0:
            raise ValueError("tau_corr must be positive")
        if not (self.h < self.tau_corr / 2):
            raise ValueError("h must be < tau_corr / 2 for simulation accuracy")


@dataclass(frozen=True)
class RateInputs:
    mu_v: float
    sigma_eff: float
    v_th: float
    v_reset: float
    tau_m: float

    def __post_init__(self):
        if self.sigma_eff <= 0:
            raise ValueError("sigma_eff must be positive")
        if not (self.v_th > self.v_reset):
            raise ValueError("v_th must exceed v_reset")
        if self.tau_m <= 0:
            raise ValueError("tau_m must be positive")


def _box_muller(rng, n: int) -> np.ndarray:
    m = (n + 1) // 2
    u1 = 1.0 - rng.random(m)  # in (0, 1]
    u2 = rng.random(m)
    r = np.sqrt(-2.0 * np.log(u1))
    z = np.empty(2 * m)
    z[0::2] = r * np.cos(2.0 * np.pi * u2)
    z[1::2] = r * np.sin(2.0 * np.pi * u2)
    return z[:n]


def ou_simulate(p: OUParams, steps: int, rng=None, s0: float | None = None):
    """Euler-Maruyama path of the OU current; returns steps+1 values.

    tau_corr dI = -(I - mu) dt + sqrt(2 tau_corr sigma2) dW, so the
    stationary law is N(mu, sigma2) with exp(-lag/tau_corr) correlation.
    """
    if steps < 1:
        raise ValueError("steps must be >= 1")
    rng = np.random.default_rng(rng)
    x = np.empty(steps + 1)
    x[0] = p.mu if s0 is None else s0
    drift = p.h / p.tau_corr
    diff = math.sqrt(2.0 * p.sigma2 * p.h / p.tau_corr)
    z = _box_muller(rng, steps)
    for i in range(steps):
        x[i + 1] = x[i] + drift * (p.mu - x[i]) + diff * z[i]
    return x


def tau_m_from_beta(beta: float, dt: float) -> float:
    """Membrane time constant implied by per-step decay beta = e^(-dt/tau)."""
    if not (0 < beta < 1):
        raise ValueError("beta must lie in (0, 1)")
    if dt <= 0:
        raise ValueError("dt must be positive")
    return -dt / math.log(beta)


def beta_from_tau_m(tau_m: float, dt: float) -> float:
    if tau_m <= 0 or dt <= 0:
        raise ValueError("tau_m and dt must be positive")
    return math.exp(-dt / tau_m)


def effective_variance(sigma_i2: float, tau_m: float, tau_corr: float) -> float:
    """Membrane-potential variance under exponentially correlated input.

    (tau_m sigma_I^2 / 2) * (1 + tau_corr / tau_m)^-1: the white-noise
    value suppressed by the low-pass correction for input memory
    (proportionality constant fixed to 1; only ratios matter downstream).
    """
    if sigma_i2 < 0 or tau_m <= 0 or tau_corr < 0:
        raise ValueError("need sigma_i2 >= 0, tau_m > 0, tau_corr >= 0")
    return (tau_m * sigma_i2 / 2.0) / (1.0 + tau_corr / tau_m)


# Chebyshev-fit rational approximation of erfc (fractional error < 1.2e-7).
_ERFC_COEF = (
    -1.26551223,
    1.00002368,
    0.37409196,
    0.09678418,
    -0.18628806,
    0.27886807,
    -1.13520398,
    1.48851587,
    -0.82215223,
    0.17087277,
)


def _erfc_poly(t):
    acc = _ERFC_COEF[-1]
    for c in _ERFC_COEF[-2::-1]:
        acc = c + t * acc
    return acc


def erfc(x):
    """Complementary error function, abs/rel error below 1.5e-7."""
    x = np.asarray(x, dtype=np.float64)
    z = np.abs(x)
    t = 1.0 / (1.0 + 0.5 * z)
    ans = t * np.exp(-z * z + _erfc_poly(t))
    return np.where(x >= 0, ans, 2.0 - ans)[()]


def erf(x):
    return 1.0 - erfc(x)


def erfcx(x):
    """Scaled complementary error function e^(x^2) erfc(x) for x >= 0."""
    x = np.asarray(x, dtype=np.float64)
    if np.any(x < 0):
        raise ValueError("erfcx implemented for x >= 0 only")
    t = 1.0 / (1.0 + 0.5 * x)
    return (t * np.exp(_erfc_poly(t)))[()]


_OVERFLOW_Y = 26.0  # e^(y^2) overflows just above this


def _integrand(y):
    """e^(y^2) (1 + erf(y)), evaluated in overflow-safe form."""
    y = np.asarray(y, dtype=np.float64)
    out = np.empty_like(y)
    neg = y <= 0
    out[neg] = erfcx(-y[neg])
    pos = ~neg
    out[pos] = 2.0 * np.exp(y[pos] ** 2) - erfcx(y[pos])
    return out


_GL_LO = np.polynomial.legendre.leggauss(10)
_GL_HI = np.polynomial.legendre.leggauss(20)


def _gl(fn, a, b, rule):
    nodes, weights = rule
    mid = 0.5 * (a + b)
    half = 0.5 * (b - a)
    return half * float(weights @ fn(mid + half * nodes))


def _adaptive_gl(fn, a, b, tol, depth: int = 0) -> float:
    coarse = _gl(fn, a, b, _GL_LO)
    fine = _gl(fn, a, b, _GL_HI)
    if depth >= 30 or abs(fine - coarse) <= tol * max(abs(fine), 1e-300):
        return fine
    mid = 0.5 * (a + b)
    half_tol = tol / 2.0
    return _adaptive_gl(fn, a, mid, half_tol, depth + 1) + _adaptive_gl(
        fn, mid, b, half_tol, depth + 1
    )


def siegert_rate(r: RateInputs, rel_tol: float = 1e-8) -> float:
    """First-passage firing rate of a noise-driven LIF unit.

    nu = [tau_m sqrt(pi) * integral of e^(y^2)(1 + erf y) over
    ((v_reset - mu_V)/sigma', (v_th - mu_V)/sigma')]^-1. Deep-subthreshold
    inputs whose integrand overflows report a silent 0 rate.
    """
    y_lo = (r.v_reset - r.mu_v) / r.sigma_eff
    y_hi = (r.v_th - r.mu_v) / r.sigma_eff
    if y_hi >= _OVERFLOW_Y:
        return 0.0
    integral = _adaptive_gl(_integrand, y_lo, y_hi, rel_tol)
    denom = r.tau_m * math.sqrt(math.pi) * integral
    if not math.isfinite(denom) or denom <= 0:
        return 0.0
    return 1.0 / denom


def capacity_bound(cv: float) -> float:
    """Channel-capacity bound 0.5 log2(1 + 1/CV^2) on rate-coded info."""
    if cv < 0:
        raise ValueError("cv must be >= 0")
    if cv == 0:
        return math.inf
    return 0.5 * math.log2(1.0 + 1.0 / (cv * cv))
