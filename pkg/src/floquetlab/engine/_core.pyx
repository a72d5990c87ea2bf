# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled twin of the pure-Python stepper (same tableau, same control)."""

import numpy as np

cimport numpy as cnp
from libc.math cimport fabs, sqrt, pow as cpow

from .tableau import A as A_py, B as B_py, C as C_py, E3 as E3_py, E5 as E5_py

cnp.import_array()

cdef extern from "complex.h":
    double complex cexp(double complex) nogil
    double cabs(double complex) nogil

cdef int N_STAGES = 12
cdef double SAFETY = 0.9
cdef double MIN_FACTOR = 0.2
cdef double MAX_FACTOR = 6.0
cdef double BETA = 0.04
cdef double ALPHA = 1.0 / 8.0 - 0.75 * 0.04
cdef long MAX_STEPS = 20000000

cdef double complex IM = 1j

cdef double[:, :] A_TAB = np.ascontiguousarray(A_py)
cdef double[:] B_TAB = np.ascontiguousarray(B_py)
cdef double[:] C_TAB = np.ascontiguousarray(C_py)
cdef double[:] E3_TAB = np.ascontiguousarray(E3_py)
cdef double[:] E5_TAB = np.ascontiguousarray(E5_py)

STATUS_OK = 0
STATUS_STEP_UNDERFLOW = 1
STATUS_OVERFLOW = 2


cdef inline void _rhs(
    long n, long m, long ncoef,
    long[:] harm_m, double complex[:] harm_c, long[:] offsets,
    double omega0, double complex lam,
    double x, double complex[:, :] Y, double complex[:, :] out,
) nogil:
    cdef long i, j, k, t
    cdef double complex v, acc, phase
    for i in range(n - 1):
        for j in range(m):
            out[i, j] = Y[i + 1, j]
    for j in range(m):
        out[n - 1, j] = lam * Y[0, j]
    for k in range(ncoef):
        v = 0
        for t in range(offsets[k], offsets[k + 1]):
            phase = cexp(IM * (omega0 * harm_m[t] * x))
            v = v + harm_c[t] * phase
        if v != 0:
            for j in range(m):
                out[n - 1, j] = out[n - 1, j] - v * Y[k, j]


def integrate(harm_m_in, harm_c_in, double omega0, double complex lam,
              Y0_in, double x0, targets_in, double rtol, double atol, double hmax):
    """Mirror of stepper.integrate (no step_log support)."""
    cdef cnp.ndarray[cnp.complex128_t, ndim=2] Y0 = np.ascontiguousarray(Y0_in, dtype=np.complex128)
    cdef long n = Y0.shape[0]
    cdef long m = Y0.shape[1]
    cdef cnp.ndarray[cnp.float64_t, ndim=1] targets = np.ascontiguousarray(targets_in, dtype=np.float64)
    cdef long nt = targets.shape[0]
    cdef cnp.ndarray[cnp.complex128_t, ndim=3] out = np.empty((nt, n, m), dtype=np.complex128)

    # flatten coefficient harmonics
    cdef long ncoef = len(harm_m_in)
    lens = [len(arr) for arr in harm_m_in]
    cdef cnp.ndarray[cnp.int64_t, ndim=1] offsets = np.zeros(ncoef + 1, dtype=np.int64)
    for k in range(ncoef):
        offsets[k + 1] = offsets[k] + lens[k]
    total = int(offsets[ncoef])
    cdef cnp.ndarray[cnp.int64_t, ndim=1] hm = np.zeros(max(total, 1), dtype=np.int64)
    cdef cnp.ndarray[cnp.complex128_t, ndim=1] hc = np.zeros(max(total, 1), dtype=np.complex128)
    for k in range(ncoef):
        if lens[k]:
            hm[offsets[k]:offsets[k + 1]] = np.asarray(harm_m_in[k], dtype=np.int64)
            hc[offsets[k]:offsets[k + 1]] = np.asarray(harm_c_in[k], dtype=np.complex128)

    cdef double direction = 0.0
    cdef long it
    for it in range(nt):
        if targets[it] != x0:
            direction = 1.0 if targets[it] > x0 else -1.0
            break
    if direction == 0.0:
        for it in range(nt):
            out[it] = Y0
        return out, 0.0, 0, STATUS_OK, x0

    cdef cnp.ndarray[cnp.complex128_t, ndim=2] Y = Y0.copy()
    cdef cnp.ndarray[cnp.complex128_t, ndim=3] K = np.empty((N_STAGES + 1, n, m), dtype=np.complex128)
    cdef cnp.ndarray[cnp.complex128_t, ndim=2] work = np.empty((n, m), dtype=np.complex128)
    cdef cnp.ndarray[cnp.complex128_t, ndim=2] Ynew = np.empty((n, m), dtype=np.complex128)

    cdef double complex[:, :] Yv = Y
    cdef double complex[:, :, :] Kv = K
    cdef double complex[:, :] workv = work
    cdef double complex[:, :] Ynewv = Ynew
    cdef long[:] hmv = hm
    cdef double complex[:] hcv = hc
    cdef long[:] offv = offsets

    cdef double x = x0
    cdef double span = fabs(targets[nt - 1] - x0)
    cdef double h_abs = hmax if span <= 0 else min(hmax, span / 10.0)
    cdef double err_old = 1e-4
    cdef double est_error = 0.0
    cdef long n_steps = 0
    cdef bint rejected = False
    cdef long i_target = 0
    cdef long N_comp = n * m

    _rhs(n, m, ncoef, hmv, hcv, offv, omega0, lam, x, Yv, workv)
    cdef cnp.ndarray[cnp.complex128_t, ndim=2] f_cur = work.copy()
    cdef double complex[:, :] fv = f_cur

    while i_target < nt and targets[i_target] == x0:
        out[i_target] = Y
        i_target += 1

    cdef double min_step, h, x_new, a, bb, e5, e3, err_norm, factor, maxy, sc, av
    cdef long s, jj, i, j
    cdef double complex err5_ij, err3_ij, tmp
    cdef bint finite_ok

    while i_target < nt:
        maxy = 0.0
        for i in range(n):
            for j in range(m):
                av = cabs(Yv[i, j])
                if av > maxy:
                    maxy = av
        if maxy > 1e290:
            return out, est_error, n_steps, STATUS_OVERFLOW, x
        min_step = 2.3e-15 * (fabs(x) if fabs(x) > 1e-100 else 1e-100)
        if h_abs < min_step:
            h_abs = min_step
        h = direction * h_abs
        if direction * (x + h - targets[i_target]) > 0:
            h = targets[i_target] - x
        x_new = x + h

        with nogil:
            for i in range(n):
                for j in range(m):
                    Kv[0, i, j] = fv[i, j]
            for s in range(1, N_STAGES):
                for i in range(n):
                    for j in range(m):
                        tmp = Yv[i, j]
                        for jj in range(s):
                            a = A_TAB[s, jj]
                            if a != 0.0:
                                tmp = tmp + (h * a) * Kv[jj, i, j]
                        workv[i, j] = tmp
                _rhs(n, m, ncoef, hmv, hcv, offv, omega0, lam, x + C_TAB[s] * h, workv, Kv[s])
            for i in range(n):
                for j in range(m):
                    tmp = Yv[i, j]
                    for jj in range(N_STAGES):
                        bb = B_TAB[jj]
                        if bb != 0.0:
                            tmp = tmp + (h * bb) * Kv[jj, i, j]
                    Ynewv[i, j] = tmp
            _rhs(n, m, ncoef, hmv, hcv, offv, omega0, lam, x_new, Ynewv, Kv[N_STAGES])

            e5 = 0.0
            e3 = 0.0
            for i in range(n):
                for j in range(m):
                    sc = cabs(Yv[i, j])
                    av = cabs(Ynewv[i, j])
                    if av > sc:
                        sc = av
                    sc = atol + rtol * sc
                    err5_ij = 0
                    err3_ij = 0
                    for jj in range(N_STAGES + 1):
                        if E5_TAB[jj] != 0.0:
                            err5_ij = err5_ij + E5_TAB[jj] * Kv[jj, i, j]
                        if E3_TAB[jj] != 0.0:
                            err3_ij = err3_ij + E3_TAB[jj] * Kv[jj, i, j]
                    av = cabs(err5_ij) / sc
                    e5 = e5 + av * av
                    av = cabs(err3_ij) / sc
                    e3 = e3 + av * av

        finite_ok = (e5 == e5) and (e3 == e3) and (e5 < 1e280) and (e3 < 1e280)
        if finite_ok:
            for i in range(n):
                for j in range(m):
                    av = cabs(Ynewv[i, j])
                    if av != av or av > 1e300:
                        finite_ok = False
                        break
                if not finite_ok:
                    break
        if not finite_ok:
            err_norm = np.inf
        elif e5 == 0.0 and e3 == 0.0:
            err_norm = 0.0
        else:
            err_norm = fabs(h) * e5 / sqrt((e5 + 0.01 * e3) * N_comp)

        n_steps += 1
        if n_steps > MAX_STEPS:
            raise RuntimeError(f"step budget exhausted at x={x} (lambda={lam})")

        if err_norm < 1.0:
            if err_norm == 0.0:
                factor = MAX_FACTOR
            else:
                factor = SAFETY * cpow(err_norm, -ALPHA) * cpow(err_old, BETA)
                if factor > MAX_FACTOR:
                    factor = MAX_FACTOR
                if factor < MIN_FACTOR:
                    factor = MIN_FACTOR
            if rejected and factor > 1.0:
                factor = 1.0
            rejected = False
            err_old = err_norm if err_norm > 1e-4 else 1e-4
            maxy = 0.0
            for i in range(n):
                for j in range(m):
                    av = cabs(Ynewv[i, j])
                    if av > maxy:
                        maxy = av
            est_error += err_norm * (atol + rtol * maxy)
            x = x_new
            Y, Ynew = Ynew, Y
            Yv = Y
            Ynewv = Ynew
            for i in range(n):
                for j in range(m):
                    fv[i, j] = Kv[N_STAGES, i, j]
            h_abs = fabs(h) * factor
            if h_abs > hmax:
                h_abs = hmax
            while i_target < nt and x == targets[i_target]:
                out[i_target] = Y
                i_target += 1
        else:
            if h_abs <= min_step:
                return out, est_error, n_steps, STATUS_STEP_UNDERFLOW, x
            factor = SAFETY * cpow(err_norm, -1.0 / 8.0)
            if factor < MIN_FACTOR:
                factor = MIN_FACTOR
            h_abs = fabs(h) * factor
            rejected = True

    return out, est_error, n_steps, STATUS_OK, x
