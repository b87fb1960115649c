"""Hot loops: tridiagonal elimination, per-step assembly and the theta march.

Every function here takes and returns plain float64 arrays / scalars so it can
be compiled by numba.  Interfaces are indexed ``j = 0..N`` (the face between
nodes ``j`` and ``j+1``); the flux through face ``j`` is linear in the two
neighbouring nodal values, ``F_j = left[j] * u[j] + right[j] * u[j+1]``.
"""

from __future__ import annotations

import numpy as np

from ._accel import kernel

PIVOT_FLOOR = 1e-300


@kernel
def thomas(sub, main, sup, rhs):
    """Solve a tridiagonal system; returns ``(x, failed_row)``.

    ``failed_row`` is -1 on success, otherwise the row whose eliminated pivot
    fell below ``PIVOT_FLOOR`` in magnitude (``x`` is then garbage).
    """
    n = main.shape[0]
    cp = np.empty(n)
    dp = np.empty(n)
    x = np.empty(n)
    piv = main[0]
    if abs(piv) < PIVOT_FLOOR:
        return x, 0
    cp[0] = sup[0] / piv if n > 1 else 0.0
    dp[0] = rhs[0] / piv
    for i in range(1, n):
        piv = main[i] - sub[i - 1] * cp[i - 1]
        if abs(piv) < PIVOT_FLOOR:
            return x, i
        if i < n - 1:
            cp[i] = sup[i] / piv
        dp[i] = (rhs[i] - sub[i - 1] * dp[i - 1]) / piv
    x[n - 1] = dp[n - 1]
    for i in range(n - 2, -1, -1):
        x[i] = dp[i] - cp[i] * x[i + 1]
    return x, -1


@kernel
def tridiag_matvec(sub, main, sup, u):
    n = main.shape[0]
    out = main * u
    if n > 1:
        out[1:] += sub * u[:-1]
        out[:-1] += sup * u[1:]
    return out


@kernel
def face_coefficients(tau, face_x, x1, a, b, fitted, upwind):
    """Left/right nodal weights of the discrete flux through every face."""
    bp = max(b, 0.0)
    bm = min(b, 0.0)
    left = tau.copy()
    right = -tau
    if upwind:
        # drift -b*x carries the upstream node: u_j when b < 0, u_{j+1} when b > 0
        left -= face_x * bm
        right -= face_x * bp
    else:
        left -= face_x * bp
        right -= face_x * bm
    if fitted:
        left[0] = 0.25 * x1 * (a - b)
        right[0] = -0.25 * x1 * (a + b)
    return left, right


@kernel
def assemble_rows(tau, face_x, cell_l, x1, a, b, c, fitted, upwind):
    """Diagonals of ``(A u)_i = F_i - F_{i-1} + c l_i u_i`` for interior rows.

    Returns ``(sub, main, sup, left_coupling, right_coupling)`` where the
    couplings multiply the boundary values ``u_0`` (row 1) and ``u_{N+1}``
    (row N).
    """
    left, right = face_coefficients(tau, face_x, x1, a, b, fitted, upwind)
    n = cell_l.shape[0]
    main = left[1:] - right[:n] + c * cell_l
    sup = right[1:n].copy()
    sub = -left[1:n]
    return sub, main, sup, -left[0], right[n]


@kernel
def march(u0, x_int, cell_l, tau_unit, face_x, x1, sig2, bs, cs, dts,
          src_const, src_slope, theta, fitted, upwind, store_all):
    """Theta-Euler march with the operator frozen at ``t_{m+theta}``.

    ``sig2, bs, cs`` hold sigma^2, b and c at ``t_{m+theta}`` for each step;
    the lumped source at ``t_m`` is ``src_const[m] + src_slope[m] * x_i``.
    Returns ``(history, failed_step)`` with ``failed_step = -1`` on success.
    """
    n_steps = dts.shape[0]
    n = u0.shape[0]
    rows = n_steps + 1 if store_all else 1
    hist = np.zeros((rows, n))
    hist[0] = u0
    u = u0.copy()
    for m in range(n_steps):
        dt = dts[m]
        sub, main, sup, _, _ = assemble_rows(
            sig2[m] * tau_unit, face_x, cell_l, x1, 0.5 * sig2[m], bs[m], cs[m],
            fitted, upwind)
        mass = cell_l / dt
        au = tridiag_matvec(sub, main, sup, u)
        f_old = src_const[m] + src_slope[m] * x_int
        f_new = src_const[m + 1] + src_slope[m + 1] * x_int
        rhs = mass * u - (1.0 - theta) * au + cell_l * (theta * f_new + (1.0 - theta) * f_old)
        u, bad = thomas(theta * sub, mass + theta * main, theta * sup, rhs)
        if bad >= 0:
            return hist, m
        if store_all:
            hist[m + 1] = u
    if not store_all:
        hist[0] = u
    return hist, -1
