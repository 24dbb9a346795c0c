"""Numba kernels for the method-of-lines integrator.

All loops are sequential with fixed order so results are bit-reproducible.
Parameters travel as a flat float64 vector (see PAR_* indices); the
sensitivity polynomial as 5 Horner coefficients.
"""
import numpy as np
from numba import njit

# indices into the parameter vector
PAR_D1, PAR_D2, PAR_D3 = 0, 1, 2
PAR_A1, PAR_A2, PAR_A3 = 3, 4, 5
PAR_B1, PAR_B2, PAR_B31, PAR_B32 = 6, 7, 8, 9
PAR_CHI, PAR_XI = 10, 11
NPAR = 12

# advance() status codes
OK = 0
BLOWUP = 1
NONFINITE = 2
DT_UNDERFLOW = 3
VIOL_POSITIVITY = 4
VIOL_W_RANGE = 5
VIOL_L1 = 6

BLOWUP_LIMIT = 1.0e6
DT_FLOOR = 1.0e-14
POSITIVITY_TOL = 1.0e-10
W_RANGE_TOL = 1.0e-10
L1_TOL = 1.0e-6


@njit(cache=True, inline="always")
def _phi(wv, c):
    return (((c[4] * wv + c[3]) * wv + c[2]) * wv + c[1]) * wv + c[0]


@njit(cache=True)
def rhs(u, v, w, du, dv, dw, h, pr, c):
    """Conservative flux-form right-hand side with zero-flux boundaries.

    Interface fluxes use arithmetic means; each flux value is applied to
    both neighbouring cells, so the transport part telescopes exactly.
    """
    n = u.shape[0]
    d1, d2, d3 = pr[PAR_D1], pr[PAR_D2], pr[PAR_D3]
    a1, a2, a3 = pr[PAR_A1], pr[PAR_A2], pr[PAR_A3]
    b1, b2, b31, b32 = pr[PAR_B1], pr[PAR_B2], pr[PAR_B31], pr[PAR_B32]
    chi, xi = pr[PAR_CHI], pr[PAR_XI]
    fum = 0.0
    fvm = 0.0
    fwm = 0.0
    for i in range(n):
        if i < n - 1:
            gw = (w[i + 1] - w[i]) / h
            pf = _phi(0.5 * (w[i] + w[i + 1]), c)
            fup = d1 * (u[i + 1] - u[i]) / h - chi * 0.5 * (u[i] + u[i + 1]) * pf * gw
            fvp = d2 * (v[i + 1] - v[i]) / h - xi * 0.5 * (v[i] + v[i + 1]) * pf * gw
            fwp = d3 * gw
        else:
            fup = 0.0
            fvp = 0.0
            fwp = 0.0
        ui = u[i]
        vi = v[i]
        wi = w[i]
        du[i] = (fup - fum) / h + a1 * (1.0 - ui) * ui + b1 * ui * wi
        dv[i] = (fvp - fvm) / h + a2 * (1.0 - vi) * vi + b2 * vi * wi
        dw[i] = (fwp - fwm) / h + a3 * (1.0 - wi) * wi - b31 * ui * wi - b32 * vi * wi
        fum = fup
        fvm = fvp
        fwm = fwp


@njit(cache=True)
def interface_phimax(w, h, c):
    """max over interfaces of |phi(w_face) * w_x|, the taxis speed scale."""
    n = w.shape[0]
    best = 0.0
    for i in range(n - 1):
        val = abs(_phi(0.5 * (w[i] + w[i + 1]), c) * (w[i + 1] - w[i]) / h)
        if val > best:
            best = val
    return best


@njit(cache=True)
def rhs_maxnorm(u, v, w, du, dv, dw, h, pr, c):
    rhs(u, v, w, du, dv, dw, h, pr, c)
    n = u.shape[0]
    best = 0.0
    for i in range(n):
        if abs(du[i]) > best:
            best = abs(du[i])
        if abs(dv[i]) > best:
            best = abs(dv[i])
        if abs(dw[i]) > best:
            best = abs(dw[i])
    return best


@njit(cache=True)
def rk4_step(u, v, w, dt, h, pr, c, ut, vt, wt,
             k1u, k1v, k1w, k2u, k2v, k2w, k3u, k3v, k3w, k4u, k4v, k4w):
    n = u.shape[0]
    rhs(u, v, w, k1u, k1v, k1w, h, pr, c)
    for i in range(n):
        ut[i] = u[i] + 0.5 * dt * k1u[i]
        vt[i] = v[i] + 0.5 * dt * k1v[i]
        wt[i] = w[i] + 0.5 * dt * k1w[i]
    rhs(ut, vt, wt, k2u, k2v, k2w, h, pr, c)
    for i in range(n):
        ut[i] = u[i] + 0.5 * dt * k2u[i]
        vt[i] = v[i] + 0.5 * dt * k2v[i]
        wt[i] = w[i] + 0.5 * dt * k2w[i]
    rhs(ut, vt, wt, k3u, k3v, k3w, h, pr, c)
    for i in range(n):
        ut[i] = u[i] + dt * k3u[i]
        vt[i] = v[i] + dt * k3v[i]
        wt[i] = w[i] + dt * k3w[i]
    rhs(ut, vt, wt, k4u, k4v, k4w, h, pr, c)
    sixth = dt / 6.0
    for i in range(n):
        u[i] += sixth * (k1u[i] + 2.0 * k2u[i] + 2.0 * k3u[i] + k4u[i])
        v[i] += sixth * (k1v[i] + 2.0 * k2v[i] + 2.0 * k3v[i] + k4v[i])
        w[i] += sixth * (k1w[i] + 2.0 * k2w[i] + 2.0 * k3w[i] + k4w[i])


@njit(cache=True)
def advance(u, v, w, t, t_target, h, L, pr, c,
            cfl, dt_max, state, w_monitor_armed,
            ut, vt, wt, k1u, k1v, k1w, k2u, k2v, k2w,
            k3u, k3v, k3w, k4u, k4v, k4w, viol):
    """Integrate in place until t >= t_target or a guard fires.

    state holds running scalars: [phimax, sup_w, l1u0, l1v0, steps].
    viol receives (species, cell, value) of the first offending monitor hit.
    Targets never clamp dt, so the trajectory is bit-identical whatever the
    recording cadence; the first step crossing t_target ends the call.
    """
    n = u.shape[0]
    dmax = max(pr[PAR_D1], max(pr[PAR_D2], pr[PAR_D3]))
    taxis = abs(pr[PAR_CHI]) + abs(pr[PAR_XI])
    a1, a2 = pr[PAR_A1], pr[PAR_A2]
    b1, b2 = pr[PAR_B1], pr[PAR_B2]
    while t < t_target:
        pm = interface_phimax(w, h, c)
        if pm > state[0]:
            state[0] = pm
        dt = cfl * h * h / (2.0 * dmax + h * taxis * state[0])
        if dt > dt_max:
            dt = dt_max
        if dt < DT_FLOOR:
            return DT_UNDERFLOW, t
        rk4_step(u, v, w, dt, h, pr, c, ut, vt, wt,
                 k1u, k1v, k1w, k2u, k2v, k2w, k3u, k3v, k3w, k4u, k4v, k4w)
        t += dt
        state[4] += 1.0
        # guards and monitors on the accepted state
        l1u = 0.0
        l1v = 0.0
        for i in range(n):
            ui = u[i]
            vi = v[i]
            wi = w[i]
            if not (np.isfinite(ui) and np.isfinite(vi) and np.isfinite(wi)):
                return NONFINITE, t
            if abs(ui) > BLOWUP_LIMIT or abs(vi) > BLOWUP_LIMIT or abs(wi) > BLOWUP_LIMIT:
                return BLOWUP, t
            if ui < -POSITIVITY_TOL:
                viol[0] = 0.0
                viol[1] = i
                viol[2] = ui
                return VIOL_POSITIVITY, t
            if vi < -POSITIVITY_TOL:
                viol[0] = 1.0
                viol[1] = i
                viol[2] = vi
                return VIOL_POSITIVITY, t
            if wi < -POSITIVITY_TOL:
                viol[0] = 2.0
                viol[1] = i
                viol[2] = wi
                return VIOL_POSITIVITY, t
            if w_monitor_armed and (wi < -W_RANGE_TOL or wi > 1.0 + W_RANGE_TOL):
                viol[0] = 2.0
                viol[1] = i
                viol[2] = wi
                return VIOL_W_RANGE, t
            if wi > state[1]:
                state[1] = wi
            l1u += ui
            l1v += vi
        l1u *= h
        l1v *= h
        bound_u = max(state[2], L * (1.0 + b1 / a1 * state[1])) + L1_TOL
        bound_v = max(state[3], L * (1.0 + b2 / a2 * state[1])) + L1_TOL
        if l1u > bound_u:
            viol[0] = 0.0
            viol[1] = -1.0
            viol[2] = l1u
            return VIOL_L1, t
        if l1v > bound_v:
            viol[0] = 1.0
            viol[1] = -1.0
            viol[2] = l1v
            return VIOL_L1, t
    return OK, t
