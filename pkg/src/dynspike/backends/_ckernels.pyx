# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled hot kernels: batched RK4 trajectories and the Lyapunov QR loop.

Semantics mirror numpy_backend exactly (same formulas, same operation
order); see that module for documentation.
"""

from libc.math cimport fabs, sqrt, log, isfinite

import numpy as np
cimport numpy as cnp

cnp.import_array()

DEF LORENZ = 0
DEF ROSSLER = 1
DEF AIZAWA = 2
DEF NOSE_HOOVER = 3
DEF SPROTT_C = 4
DEF CHUA = 5
DEF MIXED = 6
DEF LINEAR = 7

STATUS_OK = 0
STATUS_BLOWUP = 1
STATUS_DEGENERATE = 2

cdef int _ST_OK = 0
cdef int _ST_BLOWUP = 1
cdef int _ST_DEGENERATE = 2


cdef inline void _deriv(int sys_id, double* p, double x, double y, double z,
                        double* out) noexcept nogil:
    cdef double hx
    if sys_id == LORENZ:
        out[0] = p[0] * (y - x)
        out[1] = x * (p[1] - z) - y
        out[2] = x * y - p[2] * z
    elif sys_id == ROSSLER:
        out[0] = -y - z
        out[1] = x + p[0] * y
        out[2] = p[1] + z * (x - p[2])
    elif sys_id == AIZAWA:
        # p = (alpha, beta, gamma, delta, epsilon, zeta)
        out[0] = (z - p[1]) * x - p[3] * y
        out[1] = p[3] * x + (z - p[1]) * y
        out[2] = (p[2] + p[0] * z - z * z * z / 3.0
                  - (x * x + y * y) * (1.0 + p[4] * z) + p[5] * z * x * x * x)
    elif sys_id == NOSE_HOOVER:
        out[0] = y
        out[1] = -x - y * z
        out[2] = y * y - p[0]
    elif sys_id == SPROTT_C:
        out[0] = y * z
        out[1] = x - y
        out[2] = 1.0 - p[0] * x * x
    elif sys_id == CHUA:
        # p = (alpha, beta, gamma, m0, m1)
        hx = p[4] * x + 0.5 * (p[3] - p[4]) * (fabs(x + 1.0) - fabs(x - 1.0))
        out[0] = p[0] * (y - x - hx)
        out[1] = x - y + z
        out[2] = -p[1] * y - p[2] * z
    elif sys_id == MIXED:
        # p = (alpha, beta, delta, gamma, omega)
        out[0] = y
        out[1] = -p[0] * x - p[1] * x * x * x - p[2] * y + p[3] * z
        out[2] = -p[4] * x - p[2] * z + p[3] * x * y
    else:  # LINEAR
        out[0] = p[0] * x
        out[1] = p[1] * y
        out[2] = p[2] * z


cdef inline void _jac(int sys_id, double* p, double x, double y, double z,
                      double* J) noexcept nogil:
    # J is row-major 3x3
    cdef double hp
    if sys_id == LORENZ:
        J[0] = -p[0]; J[1] = p[0]; J[2] = 0.0
        J[3] = p[1] - z; J[4] = -1.0; J[5] = -x
        J[6] = y; J[7] = x; J[8] = -p[2]
    elif sys_id == ROSSLER:
        J[0] = 0.0; J[1] = -1.0; J[2] = -1.0
        J[3] = 1.0; J[4] = p[0]; J[5] = 0.0
        J[6] = z; J[7] = 0.0; J[8] = x - p[2]
    elif sys_id == AIZAWA:
        J[0] = z - p[1]; J[1] = -p[3]; J[2] = x
        J[3] = p[3]; J[4] = z - p[1]; J[5] = y
        J[6] = -2.0 * x * (1.0 + p[4] * z) + 3.0 * p[5] * z * x * x
        J[7] = -2.0 * y * (1.0 + p[4] * z)
        J[8] = p[0] - z * z - p[4] * (x * x + y * y) + p[5] * x * x * x
    elif sys_id == NOSE_HOOVER:
        J[0] = 0.0; J[1] = 1.0; J[2] = 0.0
        J[3] = -1.0; J[4] = -z; J[5] = -y
        J[6] = 0.0; J[7] = 2.0 * y; J[8] = 0.0
    elif sys_id == SPROTT_C:
        J[0] = 0.0; J[1] = z; J[2] = y
        J[3] = 1.0; J[4] = -1.0; J[5] = 0.0
        J[6] = -2.0 * p[0] * x; J[7] = 0.0; J[8] = 0.0
    elif sys_id == CHUA:
        hp = p[3] if fabs(x) <= 1.0 else p[4]
        J[0] = p[0] * (-1.0 - hp); J[1] = p[0]; J[2] = 0.0
        J[3] = 1.0; J[4] = -1.0; J[5] = 1.0
        J[6] = 0.0; J[7] = -p[1]; J[8] = -p[2]
    elif sys_id == MIXED:
        J[0] = 0.0; J[1] = 1.0; J[2] = 0.0
        J[3] = -p[0] - 3.0 * p[1] * x * x; J[4] = -p[2]; J[5] = p[3]
        J[6] = -p[4] + p[3] * y; J[7] = p[3] * x; J[8] = -p[2]
    else:  # LINEAR
        J[0] = p[0]; J[1] = 0.0; J[2] = 0.0
        J[3] = 0.0; J[4] = p[1]; J[5] = 0.0
        J[6] = 0.0; J[7] = 0.0; J[8] = p[2]


cdef inline int _rk4(int sys_id, double* p, double* s, double h,
                     double guard) noexcept nogil:
    """One RK4 step in place; returns 0 on success, 1 on blow-up."""
    cdef double k1[3], k2[3], k3[3], k4[3], tmp[3]
    cdef int i
    _deriv(sys_id, p, s[0], s[1], s[2], k1)
    for i in range(3):
        tmp[i] = s[i] + 0.5 * h * k1[i]
    _deriv(sys_id, p, tmp[0], tmp[1], tmp[2], k2)
    for i in range(3):
        tmp[i] = s[i] + 0.5 * h * k2[i]
    _deriv(sys_id, p, tmp[0], tmp[1], tmp[2], k3)
    for i in range(3):
        tmp[i] = s[i] + h * k3[i]
    _deriv(sys_id, p, tmp[0], tmp[1], tmp[2], k4)
    for i in range(3):
        tmp[i] = s[i] + (h / 6.0) * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i])
        if not isfinite(tmp[i]) or fabs(tmp[i]) > guard:
            return 1
    for i in range(3):
        s[i] = tmp[i]
    return 0


def traj_batch(int sys_id, cnp.ndarray[double, ndim=1] params,
               cnp.ndarray[double, ndim=2] s0, double h, int substeps,
               int n_samples, bint include_t0, double guard):
    cdef Py_ssize_t n = s0.shape[0]
    cdef int total = n_samples + (1 if include_t0 else 0)
    cdef cnp.ndarray[double, ndim=3] out = np.empty((n, total, 3))
    cdef cnp.ndarray[cnp.uint8_t, ndim=1] ok = np.ones(n, dtype=np.uint8)
    cdef double* p = <double*> params.data
    cdef double s[3]
    cdef Py_ssize_t r
    cdef int k, sub, col, i
    with nogil:
        for r in range(n):
            for i in range(3):
                s[i] = s0[r, i]
            col = 0
            if include_t0:
                for i in range(3):
                    out[r, 0, i] = s[i]
                col = 1
            for k in range(n_samples):
                if ok[r]:
                    for sub in range(substeps):
                        if _rk4(sys_id, p, s, h, guard):
                            ok[r] = 0
                            break
                for i in range(3):
                    out[r, col, i] = s[i]
                col += 1
    return out, ok.astype(bool)


def integrate_states(int sys_id, cnp.ndarray[double, ndim=1] params,
                     cnp.ndarray[double, ndim=1] s0, double h, int steps,
                     double guard):
    cdef cnp.ndarray[double, ndim=2] out = np.empty((steps + 1, 3))
    cdef double* p = <double*> params.data
    cdef double s[3]
    cdef int i, step
    cdef int ok_steps = steps
    for i in range(3):
        s[i] = s0[i]
        out[0, i] = s[i]
    with nogil:
        for step in range(steps):
            if _rk4(sys_id, p, s, h, guard):
                ok_steps = step
                break
            for i in range(3):
                out[step + 1, i] = s[i]
    return out, ok_steps


cdef inline void _mat_mul(double* A, double* B, double* C) noexcept nogil:
    """C = A @ B for row-major 3x3."""
    cdef int i, j, k
    cdef double acc
    for i in range(3):
        for j in range(3):
            acc = 0.0
            for k in range(3):
                acc += A[3 * i + k] * B[3 * k + j]
            C[3 * i + j] = acc


cdef inline void _expm3(double* M, double tol, double* out) noexcept nogil:
    """Scaling-and-squaring power series, matching numpy_backend.expm3."""
    cdef double norm = 0.0, row
    cdef double A[9], term[9], nxt[9], sq[9]
    cdef int i, j, n_sq = 0, k
    cdef double maxt
    for i in range(3):
        row = fabs(M[3 * i]) + fabs(M[3 * i + 1]) + fabs(M[3 * i + 2])
        if row > norm:
            norm = row
    while norm > 0.5:
        norm *= 0.5
        n_sq += 1
    cdef double scale = 1.0
    for i in range(n_sq):
        scale *= 2.0
    for i in range(9):
        A[i] = M[i] / scale
        out[i] = 0.0
        term[i] = 0.0
    for i in range(3):
        out[4 * i] = 1.0
        term[4 * i] = 1.0
    k = 1
    while True:
        _mat_mul(term, A, nxt)
        maxt = 0.0
        for i in range(9):
            term[i] = nxt[i] / k
            out[i] = out[i] + term[i]
            if fabs(term[i]) > maxt:
                maxt = fabs(term[i])
        if maxt < tol or k > 60:
            break
        k += 1
    for i in range(n_sq):
        _mat_mul(out, out, sq)
        for j in range(9):
            out[j] = sq[j]


cdef inline int _qr_mgs(double* Q, double* rdiag) noexcept nogil:
    """Modified Gram-Schmidt on columns; returns 1 if a diagonal is <= 0."""
    cdef int i, j, k
    cdef double r, v[3]
    for j in range(3):
        for k in range(3):
            v[k] = Q[3 * k + j]
        for i in range(j):
            r = Q[i] * v[0] + Q[3 + i] * v[1] + Q[6 + i] * v[2]
            for k in range(3):
                v[k] -= r * Q[3 * k + i]
        r = sqrt(v[0] * v[0] + v[1] * v[1] + v[2] * v[2])
        rdiag[j] = r
        if r > 0.0:
            for k in range(3):
                Q[3 * k + j] = v[k] / r
        else:
            for k in range(3):
                Q[3 * k + j] = v[k]
            return 1
    return 0


def lyap_core(int sys_id, cnp.ndarray[double, ndim=1] params,
              cnp.ndarray[double, ndim=1] s0, double h, int steps,
              int qr_interval, int transient_steps, double tol, double guard):
    cdef double* p = <double*> params.data
    cdef double s[3], J[9], E[9], Q[9], Qn[9], rdiag[3]
    cdef double s_acc[3]
    cdef int i, step, n_qr = 0, since_qr = 0, status = STATUS_OK
    cdef double t_accum = 0.0
    for i in range(3):
        s[i] = s0[i]
        s_acc[i] = 0.0
    with nogil:
        for step in range(transient_steps):
            if _rk4(sys_id, p, s, h, guard):
                status = _ST_BLOWUP
                break
        if status == _ST_OK:
            for i in range(9):
                Q[i] = 0.0
            for i in range(3):
                Q[4 * i] = 1.0
            for step in range(steps):
                _jac(sys_id, p, s[0], s[1], s[2], J)
                if _rk4(sys_id, p, s, h, guard):
                    status = _ST_BLOWUP
                    t_accum = step * h
                    break
                for i in range(9):
                    J[i] = J[i] * h
                _expm3(J, tol, E)
                _mat_mul(E, Q, Qn)
                for i in range(9):
                    Q[i] = Qn[i]
                since_qr += 1
                if since_qr == qr_interval or step == steps - 1:
                    if _qr_mgs(Q, rdiag):
                        status = _ST_DEGENERATE
                        t_accum = (step + 1) * h
                        break
                    for i in range(3):
                        if rdiag[i] <= 0.0:
                            status = _ST_DEGENERATE
                    if status != _ST_OK:
                        t_accum = (step + 1) * h
                        break
                    for i in range(3):
                        s_acc[i] += log(rdiag[i])
                    n_qr += 1
                    since_qr = 0
            if status == _ST_OK:
                t_accum = steps * h
    return (np.array([s_acc[0], s_acc[1], s_acc[2]]), t_accum, n_qr, status)
