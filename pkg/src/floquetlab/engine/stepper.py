"""Pure-Python adaptive stepper for the companion system u' = C(x; lambda) u.

Reference implementation of the order-8 embedded pair with PI step control;
the compiled kernel in ``_core.pyx`` mirrors this logic operation for
operation.  State is an n x m complex matrix (m initial-condition columns
integrated together).
"""

from __future__ import annotations

import numpy as np

from .tableau import A, B, C, E3, E5, N_STAGES

SAFETY = 0.9
MIN_FACTOR = 0.2
MAX_FACTOR = 6.0
BETA = 0.04                      # PI controller memory weight
ALPHA = 1.0 / 8.0 - 0.75 * BETA
MAX_STEPS = 20_000_000

STATUS_OK = 0
STATUS_STEP_UNDERFLOW = 1
STATUS_OVERFLOW = 2


def _coeff_values(harm_m, harm_c, omega0, x):
    """Values of the n-1 coefficient functions at x."""
    vals = np.empty(len(harm_m), dtype=complex)
    for k in range(len(harm_m)):
        ms = harm_m[k]
        if len(ms) == 0:
            vals[k] = 0.0
        else:
            vals[k] = np.sum(harm_c[k] * np.exp((1j * omega0 * x) * ms))
    return vals


def _rhs(harm_m, harm_c, omega0, lam, x, Y, out):
    out[:-1] = Y[1:]
    acc = lam * Y[0]
    vals = _coeff_values(harm_m, harm_c, omega0, x)
    for k in range(len(vals)):
        v = vals[k]
        if v != 0.0:
            acc = acc - v * Y[k]
    out[-1] = acc


def integrate(
    harm_m,
    harm_c,
    omega0,
    lam,
    Y0,
    x0,
    targets,
    rtol,
    atol,
    hmax,
    step_log=None,
):
    """Integrate from x0 through the monotone target points.

    Returns (states, est_error, n_steps, status, fail_x) where states has
    shape (len(targets), n, m).  status != 0 signals step-size underflow at
    fail_x (stiffness beyond the configured budget).
    """
    Y0 = np.asarray(Y0, dtype=complex)
    n, m = Y0.shape
    targets = np.asarray(targets, dtype=float)
    out = np.empty((len(targets), n, m), dtype=complex)

    direction = 0.0
    for t in targets:
        if t != x0:
            direction = 1.0 if t > x0 else -1.0
            break
    if direction == 0.0:
        out[:] = Y0
        return out, 0.0, 0, STATUS_OK, x0

    x = float(x0)
    Y = Y0.copy()
    K = np.empty((N_STAGES + 1, n, m), dtype=complex)
    work = np.empty((n, m), dtype=complex)
    _rhs(harm_m, harm_c, omega0, lam, x, Y, work)
    f_cur = work.copy()

    span = abs(targets[-1] - x0)
    h_abs = min(hmax, span / 10.0) if span > 0 else hmax
    err_old = 1e-4
    est_error = 0.0
    n_steps = 0
    rejected = False
    i_target = 0
    N_comp = n * m

    while i_target < len(targets) and targets[i_target] == x0:
        out[i_target] = Y
        i_target += 1

    x_end = targets[-1]
    while i_target < len(targets):
        if float(np.max(np.abs(Y))) > 1e290:
            # at the double-precision ceiling; no step size can continue
            return out, est_error, n_steps, STATUS_OVERFLOW, x
        min_step = 2.3e-15 * max(abs(x), 1e-100)
        if h_abs < min_step:
            h_abs = min_step
        next_target = targets[i_target]
        h = direction * h_abs
        if direction * (x + h - next_target) > 0:
            h = next_target - x
        x_new = x + h

        # stages (stage 12 at x_new doubles as next step's first stage)
        with np.errstate(over="ignore", invalid="ignore"):
            K[0] = f_cur
            for s in range(1, N_STAGES):
                work[:] = Y
                for j in range(s):
                    a = A[s, j]
                    if a != 0.0:
                        work += (h * a) * K[j]
                _rhs(harm_m, harm_c, omega0, lam, x + C[s] * h, work, K[s])
            Y_new = Y.copy()
            for j in range(N_STAGES):
                b = B[j]
                if b != 0.0:
                    Y_new += (h * b) * K[j]
            _rhs(harm_m, harm_c, omega0, lam, x_new, Y_new, K[N_STAGES])

            scale = atol + rtol * np.maximum(np.abs(Y), np.abs(Y_new))
            err5 = np.zeros((n, m), dtype=complex)
            err3 = np.zeros((n, m), dtype=complex)
            for j in range(N_STAGES + 1):
                if E5[j] != 0.0:
                    err5 += E5[j] * K[j]
                if E3[j] != 0.0:
                    err3 += E3[j] * K[j]
            e5 = float(np.sum(np.abs(err5 / scale) ** 2))
            e3 = float(np.sum(np.abs(err3 / scale) ** 2))
        if not (np.isfinite(e5) and np.isfinite(e3)) or not np.all(np.isfinite(Y_new)):
            err_norm = np.inf
        elif e5 == 0.0 and e3 == 0.0:
            err_norm = 0.0
        else:
            err_norm = abs(h) * e5 / np.sqrt((e5 + 0.01 * e3) * N_comp)

        n_steps += 1
        if n_steps > MAX_STEPS:
            raise RuntimeError(f"step budget exhausted at x={x} (lambda={lam})")

        if err_norm < 1.0:
            if err_norm == 0.0:
                factor = MAX_FACTOR
            else:
                factor = SAFETY * err_norm ** (-ALPHA) * err_old ** BETA
                factor = min(MAX_FACTOR, max(MIN_FACTOR, factor))
            if rejected:
                factor = min(1.0, factor)
            rejected = False
            err_old = max(err_norm, 1e-4)
            est_error += err_norm * (atol + rtol * float(np.max(np.abs(Y_new))))
            if step_log is not None:
                step_log.append((x, h, err_norm))
            x = x_new
            Y, Y_new = Y_new, Y
            f_cur, _ = K[N_STAGES].copy(), None
            h_abs = min(hmax, abs(h) * factor)
            while i_target < len(targets) and x == targets[i_target]:
                out[i_target] = Y
                i_target += 1
        else:
            if h_abs <= min_step:
                return out, est_error, n_steps, STATUS_STEP_UNDERFLOW, x
            factor = max(MIN_FACTOR, SAFETY * err_norm ** (-1.0 / 8.0))
            h_abs = abs(h) * factor
            rejected = True
        _ = x_end

    return out, est_error, n_steps, STATUS_OK, x
