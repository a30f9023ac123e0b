"""Jitted Prufer-phase sweeps on a half-line.

The phase theta = arg(lambda*v + i*v') of a recessive solution is integrated
inward from x_max to 0 on a fixed graded grid.  Cells are advanced with a
fifth-order Runge-Kutta step on the phase equation

    theta' = (V - E) cos^2(theta) / lambda - lambda sin^2(theta),

except deep in the classically forbidden region, where the explicit step
would be unstable for small lambda; there the cell is crossed with the exact
constant-potential propagator of (v, v') evaluated at the cell midpoint.
That branch is self-correcting: the recessive direction is attracting when
integrating inward, so local errors decay instead of accumulating.
"""

import math

import numpy as np
from numba import njit, prange

# Dormand-Prince 5(4) tableau (5th-order weights only; no adaptivity)
_C = (0.0, 0.2, 0.3, 0.8, 8.0 / 9.0, 1.0)
_A21 = 0.2
_A31, _A32 = 3.0 / 40.0, 9.0 / 40.0
_A41, _A42, _A43 = 44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0
_A51, _A52, _A53, _A54 = (19372.0 / 6561.0, -25360.0 / 2187.0,
                          64448.0 / 6561.0, -212.0 / 729.0)
_A61, _A62, _A63, _A64, _A65 = (9017.0 / 3168.0, -355.0 / 33.0,
                                46732.0 / 5247.0, 49.0 / 176.0,
                                -5103.0 / 18656.0)
_B1, _B3, _B4, _B5, _B6 = (35.0 / 384.0, 500.0 / 1113.0, 125.0 / 192.0,
                           -2187.0 / 6784.0, 11.0 / 84.0)

STAGE_OFFSETS = np.array(_C)

_TWO_PI = 2.0 * math.pi


@njit(inline="always")
def _fphase(theta, v, e, lam):
    # (V-E) cos^2/lam - lam sin^2, in double-angle form (one trig call)
    a = (v - e) / lam
    return 0.5 * (a - lam) + 0.5 * (a + lam) * math.cos(2.0 * theta)


@njit(inline="always")
def _famp(theta, v, e, lam):
    return 0.5 * (lam + (v - e) / lam) * math.sin(2.0 * theta)


@njit(inline="always")
def _exact_cell(theta, ell, h, q, lam):
    """Exact constant-q crossing of one cell for q = V_mid - E > 0.

    Input direction (lam*v, v') = (cos theta, sin theta); returns the new
    unwrapped phase and the log-amplitude increment.  Scaled by exp(-|w h|)
    internally so it never overflows.
    """
    w = math.sqrt(q)
    a = math.exp(-2.0 * abs(w * h))
    ch = 0.5 * (1.0 + a)
    sh = 0.5 * (1.0 - a)
    if h < 0.0:
        sh = -sh
    v0 = math.cos(theta) / lam
    dv0 = math.sin(theta)
    v1 = v0 * ch + dv0 * sh / w
    dv1 = v0 * w * sh + dv0 * ch
    tp = math.atan2(dv1, lam * v1)
    d = tp - theta
    d -= _TWO_PI * math.floor(d / _TWO_PI + 0.5)
    nrm = math.sqrt(lam * lam * v1 * v1 + dv1 * dv1)
    return theta + d, ell + abs(w * h) + math.log(nrm)


@njit(inline="always")
def _rk_cell(theta, ell, h, vs, e, lam, with_amp):
    """One Dormand-Prince step across a cell; vs holds V at the 6 stages."""
    k1 = _fphase(theta, vs[0], e, lam)
    k2 = _fphase(theta + h * _A21 * k1, vs[1], e, lam)
    k3 = _fphase(theta + h * (_A31 * k1 + _A32 * k2), vs[2], e, lam)
    k4 = _fphase(theta + h * (_A41 * k1 + _A42 * k2 + _A43 * k3), vs[3], e, lam)
    k5 = _fphase(theta + h * (_A51 * k1 + _A52 * k2 + _A53 * k3 + _A54 * k4),
                 vs[4], e, lam)
    k6 = _fphase(theta + h * (_A61 * k1 + _A62 * k2 + _A63 * k3 + _A64 * k4
                              + _A65 * k5), vs[5], e, lam)
    tnew = theta + h * (_B1 * k1 + _B3 * k3 + _B4 * k4 + _B5 * k5 + _B6 * k6)
    if with_amp:
        # amplitude via the same stages on the midpoint-sampled theta path
        g1 = _famp(theta, vs[0], e, lam)
        g2 = _famp(theta + h * _A21 * k1, vs[1], e, lam)
        g3 = _famp(theta + h * (_A31 * k1 + _A32 * k2), vs[2], e, lam)
        g4 = _famp(theta + h * (_A41 * k1 + _A42 * k2 + _A43 * k3), vs[3],
                   e, lam)
        g5 = _famp(theta + h * (_A51 * k1 + _A52 * k2 + _A53 * k3
                                + _A54 * k4), vs[4], e, lam)
        g6 = _famp(theta + h * (_A61 * k1 + _A62 * k2 + _A63 * k3 + _A64 * k4
                                + _A65 * k5), vs[5], e, lam)
        ell = ell + h * (_B1 * g1 + _B3 * g3 + _B4 * g4 + _B5 * g5 + _B6 * g6)
    return tnew, ell


@njit(parallel=True, cache=True)
def sweep_phase(E, lam, xn, vstage, vmid, stiff_tol=1.0):
    """Phase at x = 0 for each energy, integrating from xn[-1] down to xn[0].

    xn: (M+1,) increasing nodes with xn[0] = 0.
    vstage: (M, 6) potential at the RK stage abscissae of each cell,
            oriented for the inward step (stage 0 at the outer edge).
    vmid: (M,) potential at cell midpoints.
    """
    M = xn.shape[0] - 1
    nE = E.shape[0]
    out = np.empty(nE)
    for k in prange(nE):
        e = E[k]
        lm = lam[k]
        qtop = vstage[M - 1, 0] - e
        if qtop < 0.0:
            qtop = 0.0
        theta = -math.atan(math.sqrt(qtop) / lm)
        ell = 0.0
        for j in range(M - 1, -1, -1):
            h = xn[j] - xn[j + 1]
            qm = vmid[j] - e
            if abs(h) * (abs(qm) + lm * lm) / lm > stiff_tol and qm > 0.0:
                theta, ell = _exact_cell(theta, ell, h, qm, lm)
            else:
                theta, ell = _rk_cell(theta, ell, h, vstage[j], e, lm, False)
        out[k] = theta
    return out


@njit(parallel=True, cache=True)
def sweep_profile(E, lam, xn, vstage, vmid, stiff_tol=1.0):
    """Phase and log-amplitude at every node, for each energy."""
    M = xn.shape[0] - 1
    nE = E.shape[0]
    theta_out = np.empty((nE, M + 1))
    ell_out = np.empty((nE, M + 1))
    for k in prange(nE):
        e = E[k]
        lm = lam[k]
        qtop = vstage[M - 1, 0] - e
        if qtop < 0.0:
            qtop = 0.0
        theta = -math.atan(math.sqrt(qtop) / lm)
        ell = 0.0
        theta_out[k, M] = theta
        ell_out[k, M] = ell
        for j in range(M - 1, -1, -1):
            h = xn[j] - xn[j + 1]
            qm = vmid[j] - e
            if abs(h) * (abs(qm) + lm * lm) / lm > stiff_tol and qm > 0.0:
                theta, ell = _exact_cell(theta, ell, h, qm, lm)
            else:
                theta, ell = _rk_cell(theta, ell, h, vstage[j], e, lm, True)
            theta_out[k, j] = theta
            ell_out[k, j] = ell
    return theta_out, ell_out
