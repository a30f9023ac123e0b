"""Quadrature helpers shared across the package.

Everything here works on arbitrary (nonuniform) strictly increasing grids,
so the graded eigenfunction grids can be integrated with plain dot products.
"""

import numpy as np


def simpson_weights(x):
    """Composite Simpson weights for a nonuniform grid.

    Returns w such that ``w @ f`` matches ``scipy.integrate.simpson(f, x=x)``
    up to rounding.  Works for any len(x) >= 2; an odd number of intervals is
    closed with the standard asymmetric three-point correction on the last
    interval.
    """
    x = np.asarray(x, dtype=float)
    n = x.size
    if n < 2:
        raise ValueError("need at least two nodes")
    w = np.zeros(n)
    if n == 2:
        h = x[1] - x[0]
        w[0] = w[1] = h / 2.0
        return w
    npairs = (n - 1) // 2
    for k in range(npairs):
        i = 2 * k
        h0 = x[i + 1] - x[i]
        h1 = x[i + 2] - x[i + 1]
        s = h0 + h1
        w[i] += s * (2.0 - h1 / h0) / 6.0
        w[i + 1] += s * s * s / (6.0 * h0 * h1)
        w[i + 2] += s * (2.0 - h0 / h1) / 6.0
    if (n - 1) % 2 == 1:
        # leftover interval [x[-2], x[-1]]: quadratic through last 3 nodes
        h0 = x[-2] - x[-3]
        h1 = x[-1] - x[-2]
        w[-1] += h1 * (2.0 * h1 + 3.0 * h0) / (6.0 * (h0 + h1))
        w[-2] += h1 * (h1 + 3.0 * h0) / (6.0 * h0)
        w[-3] -= h1 ** 3 / (6.0 * h0 * (h0 + h1))
    return w


def gauss_panels(a, b, n_panels, order=16, log_spaced=False):
    """Gauss-Legendre nodes and weights on panels subdividing [a, b].

    With ``log_spaced`` the panel edges are geometric (requires a > 0), which
    suits integrands living on several dyadic scales.
    """
    if not b > a:
        raise ValueError("empty interval")
    if log_spaced:
        if a <= 0:
            raise ValueError("log panels need a > 0")
        edges = np.geomspace(a, b, n_panels + 1)
    else:
        edges = np.linspace(a, b, n_panels + 1)
    g, gw = np.polynomial.legendre.leggauss(order)
    lo, hi = edges[:-1], edges[1:]
    half = 0.5 * (hi - lo)
    mid = 0.5 * (hi + lo)
    nodes = (mid[:, None] + half[:, None] * g[None, :]).ravel()
    weights = (half[:, None] * gw[None, :]).ravel()
    return nodes, weights


def invert_monotone(f, targets, lo=0.0, hi0=1.0, iters=200):
    """Vectorised inverse of a strictly increasing scalar function on [lo, inf).

    ``f`` must accept numpy arrays.  Brackets each target by doubling from
    ``hi0``, then bisects a fixed number of iterations.
    """
    t = np.atleast_1d(np.asarray(targets, dtype=float))
    hi = np.full(t.shape, float(hi0))
    for _ in range(400):
        bad = f(hi) < t
        if not bad.any():
            break
        hi[bad] *= 2.0
    else:
        raise RuntimeError("failed to bracket monotone inverse")
    lo_arr = np.full(t.shape, float(lo))
    for _ in range(iters):
        mid = 0.5 * (lo_arr + hi)
        below = f(mid) < t
        lo_arr = np.where(below, mid, lo_arr)
        hi = np.where(below, hi, mid)
    out = 0.5 * (lo_arr + hi)
    if np.isscalar(targets) or np.asarray(targets).ndim == 0:
        return float(out[0])
    return out
