"""Compactly supported spectral multipliers and their smoothness norms.

A multiplier is a bounded (possibly complex) function of the spectral
parameter with compact support.  The module provides a fixed dyadic cutoff
chi supported in [1, 4] whose dilates tile the half-line, the dyadic pieces
G_A(lambda, tau) = m(lambda) chi(A tau), a second-difference Holder-norm
surrogate for fractional sup-norm smoothness, and a small catalog of
standard test multipliers.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.interpolate import CubicSpline

from .errors import ConfigurationError, DomainError

_CACHE_POINTS = 2 ** 16


def _expstep(u):
    """Smooth transition 0 -> 1 on [0, 1] built from exp(-1/u)."""
    u = np.asarray(u, dtype=float)
    with np.errstate(divide="ignore", over="ignore"):
        a = np.where(u > 0, np.exp(-1.0 / np.maximum(u, 1e-300)), 0.0)
        b = np.where(u < 1, np.exp(-1.0 / np.maximum(1.0 - u, 1e-300)), 0.0)
    return a / (a + b)


def _plateau(lam, lo, rise, fall, hi):
    """Smooth bump: 0 outside [lo, hi], exactly 1 on [rise, fall]."""
    lam = np.asarray(lam, dtype=float)
    up = _expstep((lam - lo) / (rise - lo))
    down = 1.0 - _expstep((lam - fall) / (hi - fall))
    return up * down


def dyadic_cutoff(tau):
    """chi supported in [1, 4] with sum_j chi(2^j tau) = 1 for tau > 0.

    Built by telescoping a smooth step h (h = 1 below 2, h = 0 above 4):
    chi(tau) = h(tau) - h(2 tau).
    """
    tau = np.asarray(tau, dtype=float)

    def h(t):
        return 1.0 - _expstep(t / 2.0 - 1.0)

    return h(tau) - h(2.0 * tau)


def dyadic_cutoff_tilde(tau, h: float = 1e-6):
    """chi_tilde(tau) = tau * chi'(tau), by central differences on the
    smooth cutoff (used in the scale-derivative Leibniz split)."""
    tau = np.asarray(tau, dtype=float)
    return tau * (dyadic_cutoff(tau + h) - dyadic_cutoff(tau - h)) / (2.0 * h)


class Multiplier:
    """Compactly supported spectral multiplier with cached evaluation.

    eval_raw is sampled once on a dense grid over the support and replaced
    by a cubic spline, so repeated kernel quadratures do not re-evaluate
    potentially expensive formulas; the derivative comes from the same
    spline.  Complex-valued multipliers are handled componentwise.
    """

    def __init__(self, eval_raw: Callable, support: tuple, tag: str,
                 cache: bool = True):
        lo, hi = float(support[0]), float(support[1])
        if not hi > lo:
            raise ConfigurationError("empty multiplier support")
        self.support = (lo, hi)
        self.tag = tag
        self._raw = eval_raw
        probe = np.asarray(eval_raw(np.linspace(lo, hi, 32)))
        self.is_complex = np.iscomplexobj(probe)
        if cache:
            grid = np.linspace(lo, hi, _CACHE_POINTS)
            vals = np.asarray(eval_raw(grid),
                              dtype=complex if self.is_complex else float)
            self._spline = CubicSpline(grid, vals, extrapolate=False)
            self._dspline = self._spline.derivative()
        else:
            self._spline = None
            self._dspline = None

    def __call__(self, lam):
        lam = np.asarray(lam, dtype=float)
        scalar = lam.ndim == 0
        lam = np.atleast_1d(lam)
        lo, hi = self.support
        inside = (lam >= lo) & (lam <= hi)
        out = np.zeros(lam.shape,
                       dtype=complex if self.is_complex else float)
        if inside.any():
            if self._spline is not None:
                out[inside] = self._spline(lam[inside])
            else:
                out[inside] = self._raw(lam[inside])
        return out[0] if scalar else out

    def deriv(self, lam):
        lam = np.asarray(lam, dtype=float)
        scalar = lam.ndim == 0
        lam = np.atleast_1d(lam)
        lo, hi = self.support
        inside = (lam > lo) & (lam < hi)
        out = np.zeros(lam.shape,
                       dtype=complex if self.is_complex else float)
        if inside.any():
            if self._dspline is not None:
                out[inside] = self._dspline(lam[inside])
            else:
                h = (hi - lo) * 1e-7
                out[inside] = (np.asarray(self._raw(lam[inside] + h))
                               - np.asarray(self._raw(lam[inside] - h))) / (2 * h)
        return out[0] if scalar else out

    def scaled(self, r: float) -> "Multiplier":
        """The multiplier lambda -> m(r^2 lambda), i.e. the symbol of
        m(r^2 L) read as a function of the spectrum of L."""
        if r <= 0:
            raise DomainError("scale must be positive")
        lo, hi = self.support
        s = r * r
        out = Multiplier.__new__(Multiplier)
        out.support = (lo / s, hi / s)
        out.tag = f"{self.tag}@r={r:g}"
        out.is_complex = self.is_complex
        out._raw = lambda lam: self._raw(np.asarray(lam) * s)
        parent = self
        out._spline = (lambda lam: parent._spline(np.asarray(lam) * s)) \
            if parent._spline is not None else None
        out._dspline = (lambda lam: s * parent._dspline(np.asarray(lam) * s)) \
            if parent._dspline is not None else None
        return out


@dataclass
class DyadicPiece:
    """G_A(lambda, tau) = m(lambda) chi(A tau), supported in
    tau in [1/A, 4/A]."""

    m: Multiplier
    A: float

    def __post_init__(self):
        if not self.A > 0:
            raise DomainError("dyadic scale must be positive")

    def __call__(self, lam, tau):
        return self.m(lam) * dyadic_cutoff(self.A * np.asarray(tau))

    @property
    def tau_support(self):
        return (1.0 / self.A, 4.0 / self.A)


def dyadic_piece(m: Multiplier, A: float) -> DyadicPiece:
    return DyadicPiece(m, A)


def sobolev_inf_norm(m: Multiplier, s: float, n_grid: int = 4096,
                     h_scales: int = 24, h_per_octave: int = 4) -> float:
    """Holder-Zygmund norm surrogate of fractional order s in (0, 2):
    sup |m| plus the sup over a dense grid of |second difference| / h^s.

    This is the sup-norm Besov seminorm of order s; it is comparable to,
    not equal to, the fractional Sobolev sup-norm, and all consumers use
    ratios of this one fixed functional so the comparability constant
    cancels.
    """
    if not (0 < s < 2):
        raise DomainError("smoothness order must lie in (0, 2)")
    lo, hi = m.support
    width = hi - lo
    # widen so second differences straddling the support edges are seen
    t = np.linspace(lo - 0.1 * width, hi + 0.1 * width, n_grid)
    sup = float(np.max(np.abs(m(t))))
    semi = 0.0
    for k in range(1, h_scales * h_per_octave + 1):
        h = width * 2.0 ** (-k / h_per_octave)
        d2 = np.abs(m(t + h) - 2.0 * m(t) + m(t - h))
        semi = max(semi, float(np.max(d2)) / h ** s)
    return sup + semi


def bump_multiplier() -> Multiplier:
    """Smooth bump supported in [1/4, 1], identically 1 on [3/8, 3/4]."""
    return Multiplier(lambda lam: _plateau(lam, 0.25, 0.375, 0.75, 1.0),
                      (0.25, 1.0), "bump")


def imaginary_power_multiplier(alpha: float) -> Multiplier:
    """lambda^{i alpha} times the standard bump cutoff."""

    def f(lam):
        lam = np.asarray(lam, dtype=float)
        eta = _plateau(lam, 0.25, 0.375, 0.75, 1.0)
        with np.errstate(divide="ignore", invalid="ignore"):
            phase = np.where(lam > 0, np.log(np.maximum(lam, 1e-300)), 0.0)
        return eta * np.exp(1j * alpha * phase)

    return Multiplier(f, (0.25, 1.0), f"imaginary_power({alpha:g})")


def heat_multiplier(cutoff: float = 40.0) -> Multiplier:
    """exp(-lambda) truncated at lambda = cutoff (tail below 1e-17)."""
    return Multiplier(lambda lam: np.exp(-np.asarray(lam, dtype=float)),
                      (0.0, cutoff), "heat")


def smoothed_indicator_multiplier(width: float) -> Multiplier:
    """Indicator of [1/4, 1] mollified over edge layers of the given
    relative width."""
    if not (0 < width < 0.5):
        raise DomainError("smoothing width must lie in (0, 1/2)")
    w = width * 0.75  # absolute edge layer, relative to the interval length
    return Multiplier(
        lambda lam: _plateau(lam, 0.25 - w, 0.25 + w, 1.0 - w, 1.0 + w),
        (0.25 - w, 1.0 + w), f"indicator_smoothed({width:g})")


def standard_multipliers() -> dict:
    """Catalog of the standard test multipliers, keyed by string id."""
    cat = {"bump": bump_multiplier(), "heat": heat_multiplier()}
    for alpha in (1.0, 4.0, 16.0):
        cat[f"imaginary_power_{alpha:g}"] = imaginary_power_multiplier(alpha)
    for width in (0.05, 0.15, 0.3):
        cat[f"indicator_smoothed_{width:g}"] = \
            smoothed_indicator_multiplier(width)
    return cat
