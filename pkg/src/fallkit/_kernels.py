"""Integration kernels for the pendulum simulator.

Everything here is a plain scalar-loop function so numba can compile it.
When numba is unavailable the same code runs as pure Python (slow but
correct), so the public API never changes behaviour, only speed.
"""

from __future__ import annotations

import math

import numpy as np

try:
    from numba import njit

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    HAVE_NUMBA = False

    def njit(*args, **kwargs):
        if args and callable(args[0]):
            return args[0]

        def deco(fn):
            return fn

        return deco


@njit(cache=True)
def rk4_step(coeff, theta, omega, dt):
    """One classical RK4 step of theta'' = coeff * sin(theta)."""
    k1t = omega
    k1w = coeff * math.sin(theta)
    k2t = omega + 0.5 * dt * k1w
    k2w = coeff * math.sin(theta + 0.5 * dt * k1t)
    k3t = omega + 0.5 * dt * k2w
    k3w = coeff * math.sin(theta + 0.5 * dt * k2t)
    k4t = omega + dt * k3w
    k4w = coeff * math.sin(theta + dt * k3t)
    theta_next = theta + dt * (k1t + 2.0 * k2t + 2.0 * k3t + k4t) / 6.0
    omega_next = omega + dt * (k1w + 2.0 * k2w + 2.0 * k3w + k4w) / 6.0
    return theta_next, omega_next


@njit(cache=True)
def rk4_advance(coeff, theta, omega, dt, n_steps):
    """n_steps RK4 steps without recording intermediate states."""
    for _ in range(n_steps):
        theta, omega = rk4_step(coeff, theta, omega, dt)
    return theta, omega


@njit(cache=True)
def passive_trajectory(coeff, theta0, omega0, dt_sim, stride, n_rec_max, stop_angle, extra_after_stop):
    """Integrate a torque-free pendulum, recording every `stride` sim steps.

    Stops `extra_after_stop` recorded samples after |theta| first reaches
    stop_angle (0 means stop at the crossing sample), or after n_rec_max
    recorded steps.

    Returns (thetas, omegas, stop_index); stop_index is -1 if stop_angle
    was never reached.
    """
    thetas = np.empty(n_rec_max + 1)
    omegas = np.empty(n_rec_max + 1)
    thetas[0] = theta0
    omegas[0] = omega0
    th = theta0
    om = omega0
    stop_idx = -1
    if abs(theta0) >= stop_angle:
        stop_idx = 0
    n = 0
    for i in range(1, n_rec_max + 1):
        if stop_idx >= 0 and i > stop_idx + extra_after_stop:
            break
        for _ in range(stride):
            th, om = rk4_step(coeff, th, om, dt_sim)
        thetas[i] = th
        omegas[i] = om
        n = i
        if stop_idx < 0 and abs(th) >= stop_angle:
            stop_idx = i
    return thetas[: n + 1], omegas[: n + 1], stop_idx


@njit(cache=True)
def _controlled_accel(coeff, inv_inertia, theta, omega, kp, kd, tau_pert, tau_limit):
    u = -kp * theta - kd * omega + tau_pert
    if u > tau_limit:
        u = tau_limit
    elif u < -tau_limit:
        u = -tau_limit
    return coeff * math.sin(theta) + u * inv_inertia


@njit(cache=True)
def controlled_step(coeff, inv_inertia, theta, omega, dt, kp, kd, tau_pert, tau_limit):
    """RK4 step with an ankle torque u = clamp(-kp*theta - kd*omega + tau_pert).

    tau_pert is held constant over the step (zero-order hold).
    """
    k1t = omega
    k1w = _controlled_accel(coeff, inv_inertia, theta, omega, kp, kd, tau_pert, tau_limit)
    k2t = omega + 0.5 * dt * k1w
    k2w = _controlled_accel(
        coeff, inv_inertia, theta + 0.5 * dt * k1t, omega + 0.5 * dt * k1w, kp, kd, tau_pert, tau_limit
    )
    k3t = omega + 0.5 * dt * k2w
    k3w = _controlled_accel(
        coeff, inv_inertia, theta + 0.5 * dt * k2t, omega + 0.5 * dt * k2w, kp, kd, tau_pert, tau_limit
    )
    k4t = omega + dt * k3w
    k4w = _controlled_accel(coeff, inv_inertia, theta + dt * k3t, omega + dt * k3w, kp, kd, tau_pert, tau_limit)
    theta_next = theta + dt * (k1t + 2.0 * k2t + 2.0 * k3t + k4t) / 6.0
    omega_next = omega + dt * (k1w + 2.0 * k2w + 2.0 * k3w + k4w) / 6.0
    return theta_next, omega_next


@njit(cache=True)
def stabilized_trajectory(coeff, inv_inertia, theta0, omega0, dt_sim, stride, n_rec, kp, kd, tau_limit, pert):
    """PD-stabilized sway for exactly n_rec recorded steps.

    pert holds one perturbation-torque value per sim step (length n_rec*stride).
    Returns (thetas, omegas, max_abs_theta) with the maximum taken over every
    sim step, not just the recorded ones.
    """
    thetas = np.empty(n_rec + 1)
    omegas = np.empty(n_rec + 1)
    thetas[0] = theta0
    omegas[0] = omega0
    th = theta0
    om = omega0
    max_abs = abs(theta0)
    k = 0
    for i in range(1, n_rec + 1):
        for _ in range(stride):
            th, om = controlled_step(coeff, inv_inertia, th, om, dt_sim, kp, kd, pert[k], tau_limit)
            k += 1
            a = abs(th)
            if a > max_abs:
                max_abs = a
        thetas[i] = th
        omegas[i] = om
    return thetas, omegas, max_abs


@njit(cache=True)
def recovery_trajectory(
    coeff,
    inv_inertia,
    theta0,
    omega0,
    dt_sim,
    stride,
    n_rec,
    react_steps,
    kp,
    kd,
    tau_limit,
    stop_angle,
):
    """Passive fall for react_steps sim steps, then torque-limited PD recovery.

    Runs for n_rec recorded steps unless |theta| reaches stop_angle first.
    Returns (thetas, omegas, stop_index); stop_index is -1 when the angle
    never reached stop_angle (whether the recovery settled is judged by the
    caller from the tail of the series).
    """
    thetas = np.empty(n_rec + 1)
    omegas = np.empty(n_rec + 1)
    thetas[0] = theta0
    omegas[0] = omega0
    th = theta0
    om = omega0
    k = 0
    n = 0
    stop_idx = -1
    for i in range(1, n_rec + 1):
        for _ in range(stride):
            if k < react_steps:
                th, om = rk4_step(coeff, th, om, dt_sim)
            else:
                th, om = controlled_step(coeff, inv_inertia, th, om, dt_sim, kp, kd, 0.0, tau_limit)
            k += 1
        thetas[i] = th
        omegas[i] = om
        n = i
        if abs(th) >= stop_angle:
            stop_idx = i
            break
    return thetas[: n + 1], omegas[: n + 1], stop_idx


@njit(cache=True)
def ar1_series(phi, scale, eps):
    """First-order autoregression x[k] = phi*x[k-1] + scale*eps[k], x[-1] = 0.

    The discretized Ornstein-Uhlenbeck process used as the band-limited
    perturbation torque in the non-fall generator.
    """
    out = np.empty(eps.shape[0])
    x = 0.0
    for i in range(eps.shape[0]):
        x = phi * x + scale * eps[i]
        out[i] = x
    return out


@njit(cache=True)
def gru_seq_forward(xp, U_zr, U_h):
    """Single-sequence GRU pass for low-latency inference.

    xp is the precomputed input projection x @ [Wz|Wr|Wh] + [bz|br|bh]
    of shape (T, 3H); U_zr is [Uz|Ur] of shape (H, 2H).  Returns the
    (T, H) hidden-state sequence.
    """
    T = xp.shape[0]
    H = U_h.shape[0]
    hs = np.empty((T, H))
    h = np.zeros(H)
    for t in range(T):
        rec = np.dot(h, U_zr)
        z = 1.0 / (1.0 + np.exp(-(xp[t, :H] + rec[:H])))
        r = 1.0 / (1.0 + np.exp(-(xp[t, H:2 * H] + rec[H:])))
        hc = np.tanh(xp[t, 2 * H:] + np.dot(r * h, U_h))
        h = (1.0 - z) * h + z * hc
        hs[t] = h
    return hs


@njit(cache=True)
def lstm_seq_forward(xp, U_all):
    """Single-sequence LSTM pass; gate order i, f, o, g.

    xp is x @ [Wi|Wf|Wo|Wg] + biases of shape (T, 4H); U_all is
    [Ui|Uf|Uo|Ug] of shape (H, 4H).  Returns the (T, H) hidden-state
    sequence.
    """
    T = xp.shape[0]
    H = U_all.shape[0]
    hs = np.empty((T, H))
    h = np.zeros(H)
    c = np.zeros(H)
    for t in range(T):
        a = xp[t] + np.dot(h, U_all)
        i = 1.0 / (1.0 + np.exp(-a[:H]))
        f = 1.0 / (1.0 + np.exp(-a[H:2 * H]))
        o = 1.0 / (1.0 + np.exp(-a[2 * H:3 * H]))
        g = np.tanh(a[3 * H:])
        c = f * c + i * g
        h = o * np.tanh(c)
        hs[t] = h
    return hs
