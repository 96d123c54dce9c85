"""NumPy implementations of the hot kernels (fallback backend).

Formulas and operation order mirror the Cython kernels exactly, so both
backends agree to floating-point round-off (bit-identical in the common
case). Batched routines vectorize over trajectories; the Lyapunov loop is
necessarily sequential in time.
"""

from __future__ import annotations

import numpy as np

# system ids (keep in sync with systems.SYSTEM_IDS and _ckernels.pyx)
LORENZ, ROSSLER, AIZAWA, NOSE_HOOVER, SPROTT_C, CHUA, MIXED, LINEAR = range(8)

STATUS_OK = 0
STATUS_BLOWUP = 1
STATUS_DEGENERATE = 2


def _deriv(sys_id: int, p: np.ndarray, S: np.ndarray) -> np.ndarray:
    """RHS f(S) for a batch of states S with shape (n, 3)."""
    x, y, z = S[:, 0], S[:, 1], S[:, 2]
    out = np.empty_like(S)
    if sys_id == LORENZ:
        sg, rho, b = p
        out[:, 0] = sg * (y - x)
        out[:, 1] = x * (rho - z) - y
        out[:, 2] = x * y - b * z
    elif sys_id == ROSSLER:
        a, b, c = p
        out[:, 0] = -y - z
        out[:, 1] = x + a * y
        out[:, 2] = b + z * (x - c)
    elif sys_id == AIZAWA:
        al, be, ga, de, ep, ze = p
        out[:, 0] = (z - be) * x - de * y
        out[:, 1] = de * x + (z - be) * y
        out[:, 2] = (
            ga + al * z - z * z * z / 3.0 - (x * x + y * y) * (1.0 + ep * z)
            + ze * z * x * x * x
        )
    elif sys_id == NOSE_HOOVER:
        (al,) = p
        out[:, 0] = y
        out[:, 1] = -x - y * z
        out[:, 2] = y * y - al
    elif sys_id == SPROTT_C:
        (a,) = p
        out[:, 0] = y * z
        out[:, 1] = x - y
        out[:, 2] = 1.0 - a * x * x
    elif sys_id == CHUA:
        al, be, ga, m0, m1 = p
        hx = m1 * x + 0.5 * (m0 - m1) * (np.abs(x + 1.0) - np.abs(x - 1.0))
        out[:, 0] = al * (y - x - hx)
        out[:, 1] = x - y + z
        out[:, 2] = -be * y - ga * z
    elif sys_id == MIXED:
        al, be, de, ga, om = p
        out[:, 0] = y
        out[:, 1] = -al * x - be * x * x * x - de * y + ga * z
        out[:, 2] = -om * x - de * z + ga * x * y
    elif sys_id == LINEAR:
        a, b, c = p
        out[:, 0] = a * x
        out[:, 1] = b * y
        out[:, 2] = c * z
    else:
        raise ValueError(f"unknown system id {sys_id}")
    return out


def _jac(sys_id: int, p: np.ndarray, s: np.ndarray) -> np.ndarray:
    """Analytic 3x3 Jacobian at a single state s."""
    x, y, z = s
    if sys_id == LORENZ:
        sg, rho, b = p
        return np.array([[-sg, sg, 0.0], [rho - z, -1.0, -x], [y, x, -b]])
    if sys_id == ROSSLER:
        a, b, c = p
        return np.array([[0.0, -1.0, -1.0], [1.0, a, 0.0], [z, 0.0, x - c]])
    if sys_id == AIZAWA:
        al, be, ga, de, ep, ze = p
        return np.array(
            [
                [z - be, -de, x],
                [de, z - be, y],
                [
                    -2.0 * x * (1.0 + ep * z) + 3.0 * ze * z * x * x,
                    -2.0 * y * (1.0 + ep * z),
                    al - z * z - ep * (x * x + y * y) + ze * x * x * x,
                ],
            ]
        )
    if sys_id == NOSE_HOOVER:
        return np.array([[0.0, 1.0, 0.0], [-1.0, -z, -y], [0.0, 2.0 * y, 0.0]])
    if sys_id == SPROTT_C:
        (a,) = p
        return np.array([[0.0, z, y], [1.0, -1.0, 0.0], [-2.0 * a * x, 0.0, 0.0]])
    if sys_id == CHUA:
        al, be, ga, m0, m1 = p
        hp = m0 if abs(x) <= 1.0 else m1
        return np.array(
            [[al * (-1.0 - hp), al, 0.0], [1.0, -1.0, 1.0], [0.0, -be, -ga]]
        )
    if sys_id == MIXED:
        al, be, de, ga, om = p
        return np.array(
            [
                [0.0, 1.0, 0.0],
                [-al - 3.0 * be * x * x, -de, ga],
                [-om + ga * y, ga * x, -de],
            ]
        )
    if sys_id == LINEAR:
        a, b, c = p
        return np.diag([a, b, c])
    raise ValueError(f"unknown system id {sys_id}")


def _rk4_batch(sys_id, p, S, h):
    k1 = _deriv(sys_id, p, S)
    k2 = _deriv(sys_id, p, S + 0.5 * h * k1)
    k3 = _deriv(sys_id, p, S + 0.5 * h * k2)
    k4 = _deriv(sys_id, p, S + h * k3)
    return S + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def traj_batch(sys_id, params, s0, h, substeps, n_samples, include_t0, guard):
    """Integrate a batch of initial states, sampling every ``substeps`` steps.

    Returns (states, ok): states has shape [n, n_samples(+1), 3]; rows whose
    trajectory exceeded the guard are frozen at the last good state and
    flagged ok=False.
    """
    p = np.asarray(params, dtype=np.float64)
    S = np.array(s0, dtype=np.float64)
    n = S.shape[0]
    total = n_samples + (1 if include_t0 else 0)
    out = np.empty((n, total, 3), dtype=np.float64)
    ok = np.ones(n, dtype=bool)
    col = 0
    if include_t0:
        out[:, 0] = S
        col = 1
    with np.errstate(over="ignore", invalid="ignore"):
        for _ in range(n_samples):
            for _ in range(substeps):
                S_new = _rk4_batch(sys_id, p, S, h)
                bad = ~np.all(np.isfinite(S_new), axis=1) | (
                    np.max(np.abs(S_new), axis=1) > guard
                )
                ok &= ~bad
                S = np.where(ok[:, None], S_new, S)
            out[:, col] = S
            col += 1
    return out, ok


def integrate_states(sys_id, params, s0, h, steps, guard):
    """Full-resolution single trajectory: (steps+1, 3) states, ok_steps."""
    p = np.asarray(params, dtype=np.float64)
    out = np.empty((steps + 1, 3), dtype=np.float64)
    S = np.array(s0, dtype=np.float64)[None, :]
    out[0] = S[0]
    with np.errstate(over="ignore", invalid="ignore"):
        for i in range(steps):
            S = _rk4_batch(sys_id, p, S, h)
            if not np.all(np.isfinite(S)) or np.max(np.abs(S)) > guard:
                return out, i
            out[i + 1] = S[0]
    return out, steps


def expm3(M: np.ndarray, tol: float) -> np.ndarray:
    """e^M for a 3x3 matrix by scaling-and-squaring of the power series.

    The input is halved until its max-row-sum norm is <= 0.5, the series is
    summed until the next term's max-abs entry falls below ``tol``, then the
    result is squared back up.
    """
    norm = float(np.max(np.sum(np.abs(M), axis=1)))
    n_sq = 0
    while norm > 0.5:
        norm *= 0.5
        n_sq += 1
    A = M / (2.0**n_sq)
    result = np.eye(3)
    term = np.eye(3)
    k = 1
    while True:
        term = term @ A / k
        result = result + term
        if float(np.max(np.abs(term))) < tol or k > 60:
            break
        k += 1
    for _ in range(n_sq):
        result = result @ result
    return result


def _qr_mgs(Q: np.ndarray):
    """Modified Gram-Schmidt QR of a 3x3 basis; returns (Q', diag(R))."""
    Qc = Q.copy()
    rdiag = np.empty(3)
    for j in range(3):
        v = Qc[:, j].copy()
        for i in range(j):
            r = float(Qc[:, i] @ v)
            v -= r * Qc[:, i]
        rjj = float(np.sqrt(v @ v))
        rdiag[j] = rjj
        if rjj > 0.0:
            Qc[:, j] = v / rjj
        else:
            Qc[:, j] = v
    return Qc, rdiag


def lyap_core(sys_id, params, s0, h, steps, qr_interval, transient_steps, tol, guard):
    """Tangent-space accumulation for the Lyapunov spectrum.

    Per step: evaluate J at the current state, advance the state one RK4
    step, update the basis Q <- e^(J h) Q; every ``qr_interval`` steps
    re-orthonormalize and accumulate log diag(R).

    Returns (s_acc[3], t_accum, n_qr, status).
    """
    p = np.asarray(params, dtype=np.float64)
    S = np.array(s0, dtype=np.float64)[None, :]
    s_acc = np.zeros(3)
    with np.errstate(over="ignore", invalid="ignore"):
        for _ in range(transient_steps):
            S = _rk4_batch(sys_id, p, S, h)
            if not np.all(np.isfinite(S)) or np.max(np.abs(S)) > guard:
                return s_acc, 0.0, 0, STATUS_BLOWUP
        Q = np.eye(3)
        n_qr = 0
        since_qr = 0
        for step in range(steps):
            J = _jac(sys_id, p, S[0])
            S = _rk4_batch(sys_id, p, S, h)
            if not np.all(np.isfinite(S)) or np.max(np.abs(S)) > guard:
                return s_acc, step * h, n_qr, STATUS_BLOWUP
            Q = expm3(J * h, tol) @ Q
            since_qr += 1
            if since_qr == qr_interval or step == steps - 1:
                Q, rdiag = _qr_mgs(Q)
                if np.any(rdiag <= 0.0):
                    return s_acc, (step + 1) * h, n_qr, STATUS_DEGENERATE
                s_acc += np.log(rdiag)
                n_qr += 1
                since_qr = 0
    return s_acc, steps * h, n_qr, STATUS_OK
