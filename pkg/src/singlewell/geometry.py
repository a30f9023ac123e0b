"""Metric geometry attached to the degenerate operator -dx^2 - V(x) dy^2.

Provides the explicit two-sided surrogate of the control distance, the ball
volume function, the weight family used in the weighted kernel estimates,
and numerical verification of the weight-integrability and volume-doubling
properties.  The surrogate is a quasi-distance: all downstream bounds hold
up to fixed constants against it, and the quasi-triangle constant is
measured rather than assumed.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ._quad import simpson_weights
from .errors import DomainError, TruncationError
from .potentials import Potential, classify


@dataclass(frozen=True)
class PlanePoint:
    x: float
    y: float


def as_point(z) -> PlanePoint:
    if isinstance(z, PlanePoint):
        return z
    x, y = z
    return PlanePoint(float(x), float(y))


class GeometryContext:
    """Potential plus its measured doubling order D and the homogeneous
    dimension Q = 2 + D/2 of the associated metric measure space."""

    def __init__(self, potential: Potential, D: float = None):
        self.potential = potential
        if D is None:
            D = classify(potential).D_measured
        self.D = float(D)
        self.Q = 2.0 + self.D / 2.0
        if not self.Q > 2:
            raise DomainError("homogeneous dimension must exceed 2")
        # cache for the sublevel length U(t) = |{x V(x)^{1/2} <= t}|,
        # which involves a root-find per call
        self._u_t = None
        self._u_v = None

    def u_interp(self, t):
        """U evaluated through a dense monotone log-log table (fast path for
        quadrature grids; exact root-finds seed the table)."""
        t = np.asarray(t, dtype=float)
        scalar = t.ndim == 0
        t = np.atleast_1d(t)
        out = np.zeros_like(t)
        pos = t > 0
        if pos.any():
            lo, hi = float(t[pos].min()), float(t[pos].max())
            if (self._u_t is None or lo < self._u_t[0]
                    or hi > self._u_t[-1]):
                grid = np.geomspace(max(lo / 2.0, 1e-300), hi * 2.0, 400)
                self._u_t = grid
                self._u_v = self.potential.u_function(grid)
            out[pos] = np.exp(np.interp(np.log(t[pos]), np.log(self._u_t),
                                        np.log(self._u_v)))
        return float(out[0]) if scalar else out


def dist_surrogate(ctx: GeometryContext, z, zp):
    """|x - x'| + min(|y - y'| / max(V(x), V(x'))^{1/2}, U(|y - y'|)).

    Symmetric in its arguments; the ratio term is +inf when both potential
    values vanish, in which case the sublevel length U takes over.
    Accepts arrays in z = (x, y) broadcast against a single z'.
    """
    zp = as_point(zp)
    x, y = z if not isinstance(z, PlanePoint) else (z.x, z.y)
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    dy = np.abs(y - zp.y)
    vmax = np.maximum(np.asarray(ctx.potential(x)),
                      float(ctx.potential(zp.x)))
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(vmax > 0, dy / np.sqrt(np.where(vmax > 0, vmax, 1.0)),
                         np.inf)
    ratio = np.where(dy == 0.0, 0.0, ratio)
    u = ctx.u_interp(dy)
    out = np.abs(x - zp.x) + np.minimum(ratio, u)
    return float(out) if out.ndim == 0 else out


def volume(ctx: GeometryContext, z, r):
    """Ball volume surrogate r^2 max(V(r), V(x))^{1/2}."""
    z = as_point(z)
    r = np.asarray(r, dtype=float)
    if np.any(r < 0):
        raise DomainError("radius must be nonnegative")
    out = r ** 2 * np.sqrt(np.maximum(np.asarray(ctx.potential(r)),
                                      float(ctx.potential(z.x))))
    return float(out) if out.ndim == 0 else out


def weight(ctx: GeometryContext, r: float, z, zp):
    """The y-increment weight |y - y'| / (r max(V(r), V(x'))^{1/2})."""
    if r <= 0:
        raise DomainError("scale r must be positive")
    zp = as_point(zp)
    x, y = z if not isinstance(z, PlanePoint) else (z.x, z.y)
    y = np.asarray(y, dtype=float)
    denom = r * np.sqrt(max(float(ctx.potential(r)),
                            float(ctx.potential(zp.x))))
    out = np.abs(y - zp.y) / denom
    return float(out) if out.ndim == 0 else out


def _graded_axis(center: float, scale: float, far: float, n: int):
    """Symmetric grid about center, log-graded from scale/1e3 out to
    scale*far, dense near the center where the integrand peaks."""
    g = np.geomspace(scale * 1e-3, scale * far, n)
    return np.concatenate([center - g[::-1], [center], center + g])


def weight_integral_check(ctx: GeometryContext, zp, r: float, alpha: float,
                          beta: float, n_axis: int = 300,
                          tail_tol: float = 1e-8) -> float:
    """Ratio of int (1 + dist/r)^{-alpha} (1 + weight)^{-beta} dz to the
    ball volume at (z', r).

    The admissible range beta in [0,1) and alpha > 1 + (1 + D/2)(1 - beta)
    guarantees integrability; the integration box is enlarged until the
    boundary integrand falls below tail_tol.
    """
    if not (0 <= beta < 1):
        raise DomainError("beta must lie in [0, 1)")
    if not alpha > 1 + (1 + ctx.D / 2.0) * (1 - beta):
        raise DomainError("alpha too small for an integrable weight")
    if r <= 0:
        raise DomainError("scale r must be positive")
    zp = as_point(zp)
    wden = r * np.sqrt(max(float(ctx.potential(r)),
                           float(ctx.potential(zp.x))))

    def integrand(x, y):
        d = dist_surrogate(ctx, (x, y), zp)
        w = np.abs(y - zp.y) / wden
        return (1.0 + d / r) ** (-alpha) * (1.0 + w) ** (-beta)

    # x-direction: decay (1+|x-x'|/r)^{-alpha}; y-direction: dist decays like
    # a root of |y-y'| so the box there must be much larger
    far_x = tail_tol ** (-1.0 / alpha) + 1.0
    far_y = 4.0
    for _ in range(80):
        ytest = zp.y + far_y * wden
        if integrand(np.array([zp.x]), np.array([ytest]))[0] < tail_tol:
            break
        far_y *= 2.0
    else:
        raise TruncationError("integrand tail does not reach the tolerance")
    xs = _graded_axis(zp.x, r, far_x, n_axis)
    ys = _graded_axis(zp.y, wden, far_y, n_axis)
    wx = simpson_weights(xs)
    wy = simpson_weights(ys)
    X, Y = np.meshgrid(xs, ys, indexing="ij")
    F = integrand(X.ravel(), Y.ravel()).reshape(X.shape)
    val = float(wx @ F @ wy)
    return val / volume(ctx, zp, r)


def quasi_triangle_constant(ctx: GeometryContext, rng=None,
                            n_triples: int = 200,
                            span: float = 10.0) -> float:
    """Measured sup of dist(z, z'') / (dist(z, z') + dist(z', z'')) over
    random triples; the surrogate satisfies only a quasi-triangle
    inequality, with a constant that depends on the potential."""
    rng = np.random.default_rng(rng)
    pts = rng.uniform(-span, span, size=(n_triples, 3, 2))
    worst = 0.0
    for a, b, c in pts:
        d_ac = dist_surrogate(ctx, tuple(a), tuple(c))
        d_ab = dist_surrogate(ctx, tuple(a), tuple(b))
        d_bc = dist_surrogate(ctx, tuple(b), tuple(c))
        if d_ab + d_bc > 0:
            worst = max(worst, d_ac / (d_ab + d_bc))
    return worst


def doubling_constants(ctx: GeometryContext, rng=None, n_samples: int = 200,
                       lams=(2.0, 8.0), span: float = 10.0):
    """Measured sup of volume(z, lam r) / (lam^Q volume(z, r)) per lam."""
    rng = np.random.default_rng(rng)
    xs = rng.uniform(-span, span, n_samples)
    rs = np.exp(rng.uniform(np.log(1e-2), np.log(span), n_samples))
    out = {}
    for lam in lams:
        worst = 0.0
        for x, r in zip(xs, rs):
            z = PlanePoint(x, 0.0)
            worst = max(worst, volume(ctx, z, lam * r)
                        / (lam ** ctx.Q * volume(ctx, z, r)))
        out[lam] = worst
    return out


def export_weight_report_csv(path, rows):
    """rows: iterable of (r, xprime, alpha, beta, ratio)."""
    arr = np.asarray(list(rows), dtype=float)
    np.savetxt(path, arr, delimiter=",",
               header="r,xprime,alpha,beta,ratio", comments="")
