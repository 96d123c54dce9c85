"""Lyapunov spectrum estimation by the tangent-space QR method.

An orthonormal basis is propagated with the matrix exponential of the
Jacobian each step and periodically re-orthonormalized by QR; the averaged
log diagonal of R gives the exponents. The spectrum's sum equals the
time-averaged flow divergence, which serves as an independent check.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .backends import get_backend, numpy_backend
from .systems import BlowUpError, SystemParams, DEFAULT_GUARD

__all__ = [
    "DegenerateBasisError",
    "LyapunovConfig",
    "LyapunovSpectrum",
    "StabilityResult",
    "matrix_exponential",
    "spectrum",
    "stability_check",
]


class DegenerateBasisError(RuntimeError):
    """QR re-orthonormalization produced a non-positive diagonal."""


@dataclass(frozen=True)
class LyapunovConfig:
    h: float = 0.01
    t_total: float = 200.0
    qr_interval: int = 5
    transient_steps: int = 0
    matexp_tolerance: float = 1e-10
    guard: float = DEFAULT_GUARD

    def __post_init__(self):
        if self.qr_interval < 1:
            raise ValueError("qr_interval must be >= 1")
        if self.t_total < 10 * self.h:
            raise ValueError("t_total must cover at least 10 steps")

    @property
    def steps(self) -> int:
        return int(round(self.t_total / self.h))


@dataclass
class LyapunovSpectrum:
    lambdas: np.ndarray  # sorted descending
    lambda_max: float
    lambda_sum: float
    t_total: float
    n_qr: int

    @classmethod
    def from_accumulated(cls, s_acc: np.ndarray, t_total: float, n_qr: int):
        lams = np.sort(np.asarray(s_acc, dtype=np.float64) / t_total)[::-1]
        return cls(
            lambdas=lams,
            lambda_max=float(lams[0]),
            lambda_sum=float(lams.sum()),
            t_total=t_total,
            n_qr=n_qr,
        )


def matrix_exponential(M: np.ndarray, tol: float = 1e-10) -> np.ndarray:
    """e^M for a 3x3 matrix (scaling-and-squaring power series)."""
    M = np.asarray(M, dtype=np.float64)
    if M.shape != (3, 3):
        raise ValueError("expected a 3x3 matrix")
    if not np.all(np.isfinite(M)):
        raise ValueError("matrix entries must be finite")
    return numpy_backend.expm3(M, tol)


def spectrum(
    sys: SystemParams,
    s0,
    cfg: LyapunovConfig = LyapunovConfig(),
    backend: str | None = None,
) -> LyapunovSpectrum:
    """Full three-exponent spectrum from one initial condition."""
    s0 = np.asarray(s0, dtype=np.float64)
    if s0.shape != (3,) or not np.all(np.isfinite(s0)):
        raise ValueError("s0 must be a finite 3-vector")
    impl = get_backend(backend)
    s_acc, t_accum, n_qr, status = impl.lyap_core(
        sys.system_id,
        np.asarray(sys.params, dtype=np.float64),
        s0,
        cfg.h,
        cfg.steps,
        cfg.qr_interval,
        cfg.transient_steps,
        cfg.matexp_tolerance,
        cfg.guard,
    )
    if status == numpy_backend.STATUS_BLOWUP:
        raise BlowUpError("trajectory blow-up", t=t_accum, context=sys.describe())
    if status == numpy_backend.STATUS_DEGENERATE:
        raise DegenerateBasisError(
            f"degenerate tangent basis at t={t_accum:.6g} for {sys.describe()}"
        )
    return LyapunovSpectrum.from_accumulated(s_acc, t_accum, n_qr)


@dataclass
class StabilityResult:
    spectra: list[LyapunovSpectrum]
    mean: np.ndarray  # per-exponent mean
    variance: np.ndarray  # per-exponent variance
    sum_spread: float  # relative spread of lambda_sum across samples
    unstable: bool


def stability_check(
    sys: SystemParams,
    s0_samples,
    cfg: LyapunovConfig = LyapunovConfig(),
) -> StabilityResult:
    """Spectra across initial conditions, flagging unstable estimates.

    The estimate is flagged unstable when the relative spread (std/|mean|)
    of lambda_sum exceeds 5%.
    """
    s0_samples = np.asarray(s0_samples, dtype=np.float64)
    if s0_samples.ndim != 2 or s0_samples.shape[1] != 3 or len(s0_samples) < 2:
        raise ValueError("need at least 2 initial states of dimension 3")
    spectra = []
    for i, s0 in enumerate(s0_samples):
        try:
            spectra.append(spectrum(sys, s0, cfg))
        except (BlowUpError, DegenerateBasisError) as exc:
            raise type(exc)(f"sample {i}: {exc}") from exc
    lams = np.array([sp.lambdas for sp in spectra])
    sums = lams.sum(axis=1)
    mean_sum = float(np.mean(sums))
    spread = float(np.std(sums) / max(abs(mean_sum), 1e-12))
    return StabilityResult(
        spectra=spectra,
        mean=lams.mean(axis=0),
        variance=lams.var(axis=0),
        sum_spread=spread,
        unstable=spread > 0.05,
    )
