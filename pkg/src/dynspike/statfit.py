"""Statistical analysis of sweep outputs.

Pearson correlation with Student-t p-values (incomplete beta by continued
fraction), critical power-law scaling fits on log-log axes, sigmoid
phase-transition fits by Gauss-Newton, and the Mann-Whitney U test.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .meanfield import erfc

__all__ = [
    "FitResult",
    "pearson",
    "powerlaw_fit",
    "sigmoid_fit",
    "sigmoid_curve",
    "mann_whitney_u",
    "bootstrap_mean",
    "student_t_sf2",
    "betainc_reg",
]


@dataclass
class FitResult:
    params: dict[str, float]
    r_squared: float
    p_value: float
    n: int
    n_dropped: int = 0
    converged: bool = True
    label: str = ""


def _betacf(a: float, b: float, x: float) -> float:
    """Continued fraction for the incomplete beta (modified Lentz)."""
    tiny = 1e-300
    qab, qap, qam = a + b, a + 1.0, a - 1.0
    c = 1.0
    d = 1.0 - qab * x / qap
    if abs(d) < tiny:
        d = tiny
    d = 1.0 / d
    h = d
    for m in range(1, 300):
        m2 = 2 * m
        aa = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + aa * d
        if abs(d) < tiny:
            d = tiny
        c = 1.0 + aa / c
        if abs(c) < tiny:
            c = tiny
        d = 1.0 / d
        h *= d * c
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + aa * d
        if abs(d) < tiny:
            d = tiny
        c = 1.0 + aa / c
        if abs(c) < tiny:
            c = tiny
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < 1e-12:
            break
    return h


def betainc_reg(a: float, b: float, x: float) -> float:
    """Regularized incomplete beta I_x(a, b)."""
    if x <= 0.0:
        return 0.0
    if x >= 1.0:
        return 1.0
    ln_bt = (
        math.lgamma(a + b)
        - math.lgamma(a)
        - math.lgamma(b)
        + a * math.log(x)
        + b * math.log1p(-x)
    )
    bt = math.exp(ln_bt)
    if x < (a + 1.0) / (a + b + 2.0):
        return bt * _betacf(a, b, x) / a
    return 1.0 - bt * _betacf(b, a, 1.0 - x) / b


def student_t_sf2(t: float, df: int) -> float:
    """Two-tailed Student-t tail probability P(|T| >= t)."""
    if df < 1:
        raise ValueError("df must be >= 1")
    if not math.isfinite(t):
        return 0.0
    return betainc_reg(df / 2.0, 0.5, df / (df + t * t))


def pearson(x, y) -> tuple[float, float]:
    """Pearson r and its two-tailed p-value."""
    x = np.asarray(x, dtype=np.float64).ravel()
    y = np.asarray(y, dtype=np.float64).ravel()
    n = len(x)
    if n != len(y):
        raise ValueError("x and y must have the same length")
    if n < 3:
        raise ValueError("need at least 3 points")
    sx, sy = x.std(), y.std()
    if sx == 0.0 or sy == 0.0:
        raise ValueError("constant input")
    r = float(np.mean((x - x.mean()) * (y - y.mean())) / (sx * sy))
    r = max(-1.0, min(1.0, r))
    if abs(r) >= 1.0:
        return r, 0.0
    t = abs(r) * math.sqrt((n - 2) / (1.0 - r * r))
    return r, student_t_sf2(t, n - 2)


def _linefit(x: np.ndarray, y: np.ndarray) -> tuple[float, float, float]:
    """Least-squares slope, intercept, and R^2."""
    xm, ym = x.mean(), y.mean()
    sxx = float(np.sum((x - xm) ** 2))
    slope = float(np.sum((x - xm) * (y - ym)) / sxx)
    intercept = ym - slope * xm
    resid = y - (intercept + slope * x)
    sst = float(np.sum((y - ym) ** 2))
    r2 = 1.0 - float(np.sum(resid**2)) / sst if sst > 0 else 0.0
    return slope, intercept, r2


def powerlaw_fit(lambda_vals, metric_vals, lambda_c: float = 0.0, baseline="nearest"):
    """Critical-scaling fits |delta metric| ~ |lambda - lambda_c|^beta.

    Points are split into the expansive (lambda > lambda_c) and
    dissipative (lambda < lambda_c) sides; on each side the metric change
    relative to ``baseline`` is fit on log-log axes (slope = beta).
    ``baseline`` is the metric value at the grid point nearest the
    critical value ("nearest", the default), "none" for metrics that are
    already deltas, or an explicit number. Non-positive deltas are
    dropped and counted.
    """
    lams = np.asarray(lambda_vals, dtype=np.float64).ravel()
    vals = np.asarray(metric_vals, dtype=np.float64).ravel()
    if len(lams) != len(vals):
        raise ValueError("mismatched input lengths")
    if np.any(lams == lambda_c):
        raise ValueError("all |lambda - lambda_c| must be > 0")
    out: dict[str, FitResult] = {}
    for label, mask in (
        ("expansive", lams > lambda_c),
        ("dissipative", lams < lambda_c),
    ):
        if mask.sum() < 3:
            continue
        ls, vs = lams[mask], vals[mask]
        dist = np.abs(ls - lambda_c)
        if baseline == "nearest":
            base = vs[np.argmin(dist)]
        elif baseline == "none":
            base = 0.0
        else:
            base = float(baseline)
        deltas = np.abs(vs - base)
        keep = deltas > 0
        n_dropped = int((~keep).sum())
        if keep.sum() < 3:
            out[label] = FitResult(
                params={}, r_squared=0.0, p_value=1.0, n=int(keep.sum()),
                n_dropped=n_dropped, converged=False, label=label,
            )
            continue
        lx = np.log(dist[keep])
        ly = np.log(deltas[keep])
        slope, intercept, r2 = _linefit(lx, ly)
        _, p = pearson(lx, ly)
        out[label] = FitResult(
            params={"beta": slope, "log_amplitude": intercept},
            r_squared=r2,
            p_value=p,
            n=int(keep.sum()),
            n_dropped=n_dropped,
            label=label,
        )
    return out


def sigmoid_curve(x, L, k, x0, b):
    return b + L / (1.0 + np.exp(-k * (np.asarray(x, dtype=np.float64) - x0)))


def sigmoid_fit(x, y) -> FitResult:
    """Least-squares sigmoid y = b + L / (1 + e^(-k(x - x0))).

    Gauss-Newton with backtracking line search (the residual never
    increases across accepted steps); stops when the step norm drops
    below 1e-10 or after 200 iterations, flagging non-convergence.
    """
    x = np.asarray(x, dtype=np.float64).ravel()
    y = np.asarray(y, dtype=np.float64).ravel()
    n = len(x)
    if n < 5:
        raise ValueError("need at least 5 points")

    def residual(th):
        return y - sigmoid_curve(x, *th)

    def sse(th):
        r = residual(th)
        return float(r @ r)

    def gauss_newton(theta):
        best_sse = sse(theta)
        converged = False
        for _ in range(200):
            L, k, x0, b = theta
            with np.errstate(over="ignore"):
                sig = 1.0 / (1.0 + np.exp(-k * (x - x0)))
            dsig = sig * (1.0 - sig)
            J = np.column_stack(
                [sig, L * dsig * (x - x0), -L * dsig * k, np.ones(n)]
            )
            r = residual(theta)
            step, *_ = np.linalg.lstsq(J, r, rcond=None)
            alpha = 1.0
            accepted = False
            for _ in range(40):
                cand = theta + alpha * step
                if sse(cand) <= best_sse:
                    theta = cand
                    best_sse = sse(cand)
                    accepted = True
                    break
                alpha *= 0.5
            if not accepted:
                break
            if float(np.linalg.norm(alpha * step)) < 1e-10:
                converged = True
                break
        return theta, best_sse, converged

    b0 = float(y.min())
    L0 = float(y.max() - y.min()) or 1.0
    x00 = float(np.median(x))
    order = np.argsort(x)
    xs, ys = x[order], y[order]
    range_slope = (ys[-1] - ys[0]) / (xs[-1] - xs[0]) if xs[-1] > xs[0] else 0.0
    k0 = 4.0 * range_slope / L0
    if k0 == 0.0:
        k0 = 1.0 / (x.std() or 1.0)
    theta, best_sse, converged = gauss_newton(np.array([L0, k0, x00, b0]))
    # Step-like data can strand the primary init; retry from the largest jump.
    if best_sse > 1e-4 * float(np.sum((y - y.mean()) ** 2)):
        jumps = np.abs(np.diff(ys))
        if jumps.max() > 0:
            j = int(np.argmax(jumps))
            x0_alt = 0.5 * (xs[j] + xs[j + 1])
            sign = 1.0 if ys[j + 1] >= ys[j] else -1.0
            width = max((xs[-1] - xs[0]) / (2.0 * n), 1e-12)
            for k_alt in (sign / width, 4.0 * sign / (xs[-1] - xs[0] + 1e-12)):
                cand, cand_sse, cand_conv = gauss_newton(
                    np.array([L0 * sign if sign < 0 else L0, k_alt, x0_alt, b0])
                )
                if cand_sse < best_sse:
                    theta, best_sse, converged = cand, cand_sse, cand_conv
    yhat = sigmoid_curve(x, *theta)
    best_sse = sse(theta)
    sst = float(np.sum((y - y.mean()) ** 2))
    r2 = 1.0 - best_sse / sst if sst > 0 else 0.0
    try:
        _, p = pearson(yhat, y)
    except ValueError:
        p = 1.0
    return FitResult(
        params={"L": theta[0], "k": theta[1], "x0": theta[2], "b": theta[3]},
        r_squared=max(0.0, min(1.0, r2)),
        p_value=p,
        n=n,
        converged=converged,
    )


def bootstrap_mean(values, n_boot: int = 1000, seed: int = 0, ci: float = 0.95):
    """Seed-resampled percentile confidence interval for the mean."""
    values = np.asarray(values, dtype=np.float64).ravel()
    if len(values) < 2:
        raise ValueError("need at least 2 values")
    rng = np.random.default_rng(seed)
    means = np.array(
        [values[rng.integers(0, len(values), len(values))].mean() for _ in range(n_boot)]
    )
    alpha = (1.0 - ci) / 2.0
    return float(np.quantile(means, alpha)), float(np.quantile(means, 1.0 - alpha))


def _midranks(values: np.ndarray) -> np.ndarray:
    order = np.argsort(values, kind="mergesort")
    ranks = np.empty(len(values))
    sorted_vals = values[order]
    i = 0
    while i < len(values):
        j = i
        while j + 1 < len(values) and sorted_vals[j + 1] == sorted_vals[i]:
            j += 1
        ranks[order[i : j + 1]] = 0.5 * (i + j) + 1.0
        i = j + 1
    return ranks


def mann_whitney_u(a, b) -> tuple[float, float]:
    """Mann-Whitney U (first sample's wins) with a two-tailed normal p.

    Midranks resolve ties; the normal approximation carries the tie
    correction and a 0.5 continuity correction.
    """
    a = np.asarray(a, dtype=np.float64).ravel()
    b = np.asarray(b, dtype=np.float64).ravel()
    n1, n2 = len(a), len(b)
    if n1 < 3 or n2 < 3:
        raise ValueError("both samples need at least 3 values")
    pooled = np.concatenate([a, b])
    ranks = _midranks(pooled)
    r1 = float(ranks[:n1].sum())
    u1 = r1 - n1 * (n1 + 1) / 2.0
    n = n1 + n2
    _, counts = np.unique(pooled, return_counts=True)
    tie_term = float(np.sum(counts**3 - counts))
    var_u = n1 * n2 / 12.0 * ((n + 1) - tie_term / (n * (n - 1)))
    if var_u <= 0:
        return u1, 1.0
    diff = u1 - n1 * n2 / 2.0
    z = (diff - math.copysign(0.5, diff)) / math.sqrt(var_u) if diff != 0 else 0.0
    p = float(erfc(abs(z) / math.sqrt(2.0)))
    return u1, min(p, 1.0)
