"""Pure numpy implementations of the hot kernels.

Same contracts as the compiled module: a fused energy/gradient evaluation on
a radial grid and a batched center-value shooting integrator.  The compiled
path only covers the parametric generator families; this module also handles
custom generators via the vectorized evaluations in ``nfunction``.
"""

from __future__ import annotations

import numpy as np

from .. import nfunction

BLOWUP_CAP = 1e12

STATUS_OK = 0
STATUS_BLOWUP = 1
STATUS_RANGE = 2


def _f_eval(s, fx, fy, f0, cut, right_mode):
    v = np.interp(s, fx, fy)
    if right_mode == 1:
        v = np.where(s > cut, 0.0, v)
    return np.where(s <= 0.0, f0, v)


def _F_eval(s, fx, fy, Fy, f0, cut):
    sc = np.clip(s, 0.0, cut)
    j = np.clip(np.searchsorted(fx, sc, side="right") - 1, 0, fx.size - 2)
    ds = sc - fx[j]
    slope = (fy[j + 1] - fy[j]) / (fx[j + 1] - fx[j])
    val = Fy[j] + fy[j] * ds + 0.5 * slope * ds * ds
    return np.where(s <= 0.0, f0 * s, val)


def energy_and_gradient(u, lam, grid, spec, fk, want_grad=True):
    """Discrete energy and its exact nodal gradient.

    Gradient term: cell-midpoint difference quotients against exact cell
    masses of r^(N-1) dr.  Nonlinearity term: nodal trapezoid weights.  The
    Dirichlet node carries a zero gradient entry.
    """
    fx, fy, Fy, f0, cut, Fcut = fk
    h, mcell, wnode = grid.h, grid.cell_mass, grid.node_weight
    du = np.diff(u) / h
    with np.errstate(over="ignore", invalid="ignore"):
        energy = float(mcell @ nfunction.phi_big_vec(spec, du))
        energy -= lam * float(wnode @ _F_eval(u, fx, fy, Fy, f0, cut))
    if not want_grad:
        return energy, None
    with np.errstate(over="ignore", invalid="ignore"):
        flow = mcell * nfunction.g_vec(spec, du) / h
        grad = np.zeros_like(u)
        grad[:-1] -= flow
        grad[1:] += flow
        grad[:-1] -= lam * wnode[:-1] * _f_eval(u[:-1], fx, fy, f0, cut, 1)
    grad[-1] = 0.0
    return energy, grad


def shoot_batch(d, lam, N, R, n_steps, spec, farr, series_steps=3):
    """Integrate the center-value problem for a batch of center heights d.

    State per lane: u and the running right-hand integral H with
    H(r) = lam * integral of f(u) t^(N-1) over [0, r] (trapezoid), and the
    slope u'(r) = -Ginv(H / r^(N-1)).  The first few steps use the series
    slope -Ginv(lam f(d) r / N) to avoid the 0/0 at the origin.  Lanes that
    blow up or leave the invertible range are frozen with a status code.
    """
    fx, fy, f0, cut, right_mode = farr
    d = np.atleast_1d(np.asarray(d, dtype=float))
    B = d.size
    n = n_steps + 1
    r = np.linspace(0.0, R, n)
    hstep = r[1] - r[0]
    rw = r ** (N - 1)
    u = np.zeros((B, n))
    slope = np.zeros((B, n))
    H = np.zeros((B, n))
    status = np.full(B, STATUS_OK, dtype=np.int8)
    alive = np.ones(B, dtype=bool)
    u[:, 0] = d
    fd = _f_eval(d, fx, fy, f0, cut, right_mode)
    fcur = fd.copy()
    series_steps = max(1, int(series_steps))
    for i in range(n_steps):
        scur = slope[:, i]
        ok = np.ones(B, dtype=bool)
        with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
            if i < series_steps:
                s1, ok1 = nfunction.g_inv_vec(spec, lam * fd * r[i + 1] / N, guess=np.abs(scur))
                s1 = -s1
                unew = u[:, i] + 0.5 * hstep * (scur + s1)
                ok &= ok1
            else:
                up = u[:, i] + hstep * scur
                Hp = H[:, i] + 0.5 * hstep * lam * (
                    fcur * rw[i] + _f_eval(up, fx, fy, f0, cut, right_mode) * rw[i + 1]
                )
                s1, ok1 = nfunction.g_inv_vec(spec, Hp / rw[i + 1], guess=np.abs(scur))
                s1 = -s1
                unew = u[:, i] + 0.5 * hstep * (scur + s1)
                ok &= ok1
            fnew = _f_eval(unew, fx, fy, f0, cut, right_mode)
            Hnew = H[:, i] + 0.5 * hstep * lam * (fcur * rw[i] + fnew * rw[i + 1])
            if i + 1 < series_steps:
                snew, ok2 = nfunction.g_inv_vec(spec, lam * fd * r[i + 1] / N, guess=np.abs(s1))
            else:
                snew, ok2 = nfunction.g_inv_vec(spec, Hnew / rw[i + 1], guess=np.abs(s1))
            snew = -snew
            ok &= ok2
        overflow = ~np.isfinite(unew) | (np.abs(unew) > BLOWUP_CAP)
        newly_range = alive & ~ok
        newly_blow = alive & ok & overflow
        status[newly_range] = STATUS_RANGE
        status[newly_blow] = STATUS_BLOWUP
        alive &= ~(newly_range | newly_blow)
        u[:, i + 1] = np.where(alive, unew, u[:, i])
        H[:, i + 1] = np.where(alive, Hnew, H[:, i])
        slope[:, i + 1] = np.where(alive, snew, 0.0)
        fcur = np.where(alive, fnew, fcur)
    return u, slope, H, status
