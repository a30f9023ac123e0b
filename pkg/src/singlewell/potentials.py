"""Single-well potentials: evaluation, scaling, classification, sublevel sets.

A potential here is a continuous V >= 0 with V(0) = 0, strictly increasing on
x > 0 and strictly decreasing on x < 0, diverging at infinity.  The class
carries an analytic derivative and the two scalings tau*V and r^2 V(r .)
used throughout the rest of the package.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np
from scipy.interpolate import PchipInterpolator

from ._quad import invert_monotone
from .errors import ConfigurationError, DomainError

_FAMILIES = ("power", "two_power", "reciprocal_two_power", "log_modulated",
             "tabulated")


@dataclass(frozen=True)
class PotentialSpec:
    """Family tag plus positive parameters describing the base potential."""

    family: str
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.family not in _FAMILIES:
            raise ConfigurationError(f"unknown potential family {self.family!r}")
        for key in ("d", "D"):
            if key in self.params and not self.params[key] > 0:
                raise DomainError(f"exponent {key} must be positive")
        if self.family == "two_power" or self.family == "reciprocal_two_power":
            if not {"d", "D"} <= set(self.params):
                raise ConfigurationError(self.family + " needs exponents d and D")
        if self.family == "power" and "d" not in self.params:
            raise ConfigurationError("power needs exponent d")
        if self.family == "log_modulated" and "D" not in self.params:
            raise ConfigurationError("log_modulated needs exponent D")


def _tabulated_halfline(x, v):
    """Monotone log-log interpolant of one half-line of a tabulated potential."""
    if not (np.all(np.diff(x) > 0) and np.all(np.diff(v) > 0)):
        raise DomainError("tabulated potential must be strictly increasing in |x|")
    lx, lv = np.log(x), np.log(v)
    interp = PchipInterpolator(lx, lv, extrapolate=True)
    dinterp = interp.derivative()

    def f(t):
        return np.exp(interp(np.log(t)))

    def df(t):
        return f(t) * dinterp(np.log(t)) / t

    return f, df


class Potential:
    """Evaluable single-well potential with derivative and scaling maps.

    The value is ``tau * r**2 * f(r * x)`` where f is the base family; scale()
    and rescale() adjust (tau, r) without touching the base spec, so the
    classification data of the base is preserved by construction.
    """

    def __init__(self, spec: PotentialSpec, tau: float = 1.0, r: float = 1.0):
        if tau <= 0 or r <= 0:
            raise DomainError("tau and r must be positive")
        self.spec = spec
        self.tau = float(tau)
        self.r = float(r)
        self._base, self._base_deriv = self._build(spec)
        # homogeneous degree (power family only): enables exact scaling
        # shortcuts downstream
        self.degree = spec.params["d"] if spec.family == "power" else None

    @staticmethod
    def _build(spec):
        p = spec.params
        fam = spec.family
        if fam == "power":
            d = p["d"]
            return (lambda x: np.abs(x) ** d,
                    lambda x: d * np.abs(x) ** (d - 1) * np.sign(x))
        if fam == "two_power":
            d, D = p["d"], p["D"]
            return (lambda x: np.abs(x) ** d + np.abs(x) ** D,
                    lambda x: (d * np.abs(x) ** (d - 1)
                               + D * np.abs(x) ** (D - 1)) * np.sign(x))
        if fam == "reciprocal_two_power":
            d, D = p["d"], p["D"]

            def f(x):
                a = np.abs(x)
                with np.errstate(divide="ignore"):
                    out = 1.0 / (a ** (-d) + a ** (-D))
                return np.where(a == 0.0, 0.0, out)

            def df(x):
                a = np.abs(x)
                with np.errstate(divide="ignore", invalid="ignore"):
                    num = d * a ** (-d - 1) + D * a ** (-D - 1)
                    out = num / (a ** (-d) + a ** (-D)) ** 2
                return np.where(a == 0.0, 0.0, out * np.sign(x))

            return f, df
        if fam == "log_modulated":
            D = p["D"]

            def f(x):
                a = np.abs(x)
                return a ** D * np.log(2.0 + a)

            def df(x):
                a = np.abs(x)
                return (D * a ** (D - 1) * np.log(2.0 + a)
                        + a ** D / (2.0 + a)) * np.sign(x)

            return f, df
        # tabulated
        xs = np.asarray(p["x"], dtype=float)
        vs = np.asarray(p["v"], dtype=float)
        pos = xs > 0
        neg = xs < 0
        if pos.sum() < 2 or neg.sum() < 2:
            raise ConfigurationError("tabulated potential needs >= 2 samples per half-line")
        fp, dfp = _tabulated_halfline(xs[pos], vs[pos])
        order = np.argsort(-xs[neg])
        fm, dfm = _tabulated_halfline(-xs[neg][order], vs[neg][order])

        def f(x):
            x = np.asarray(x, dtype=float)
            out = np.zeros_like(x)
            m = x > 0
            out[m] = fp(x[m])
            m = x < 0
            out[m] = fm(-x[m])
            return out

        def df(x):
            x = np.asarray(x, dtype=float)
            out = np.zeros_like(x)
            m = x > 0
            out[m] = dfp(x[m])
            m = x < 0
            out[m] = -dfm(-x[m])
            return out

        return f, df

    # -- evaluation ---------------------------------------------------------

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        out = self.tau * self.r ** 2 * self._base(self.r * x)
        return out if out.ndim else float(out)

    def deriv(self, x):
        x = np.asarray(x, dtype=float)
        out = self.tau * self.r ** 3 * self._base_deriv(self.r * x)
        return out if out.ndim else float(out)

    # -- scalings -----------------------------------------------------------

    def scale(self, tau: float) -> "Potential":
        """tau * V"""
        if tau <= 0:
            raise DomainError("tau must be positive")
        return Potential(self.spec, tau=self.tau * tau, r=self.r)

    def rescale(self, r: float) -> "Potential":
        """V_r(x) = r^2 V(r x)"""
        if r <= 0:
            raise DomainError("r must be positive")
        return Potential(self.spec, tau=self.tau, r=self.r * r)

    # -- sublevel sets and the auxiliary length U ---------------------------

    def inverse(self, E, side: str = "right"):
        """x >= 0 with V(sgn * x) = E on the given half-line."""
        E = np.asarray(E, dtype=float)
        if np.any(E <= 0):
            raise DomainError("energy must be positive")
        sgn = 1.0 if side == "right" else -1.0
        return invert_monotone(lambda x: np.asarray(self(sgn * x)), E)

    def sublevel_measure(self, E):
        """|{V <= E}| = V_+^{-1}(E) + V_-^{-1}(E)."""
        return self.inverse(E, "right") + self.inverse(E, "left")

    def u_function(self, t):
        """U(t) = |{x : |x| V(x)^{1/2} <= t}|, via the half-line inverses of
        W_pm(x) = x V(pm x)^{1/2}."""
        t = np.asarray(t, dtype=float)
        if np.any(t < 0):
            raise DomainError("t must be nonnegative")
        scalar = t.ndim == 0
        t = np.atleast_1d(t)
        out = np.zeros_like(t)
        pos = t > 0
        if pos.any():
            tp = t[pos]
            wp = invert_monotone(lambda x: x * np.sqrt(np.asarray(self(x))), tp)
            wm = invert_monotone(lambda x: x * np.sqrt(np.asarray(self(-x))), tp)
            out[pos] = wp + wm
        return float(out[0]) if scalar else out

    # -- serialization ------------------------------------------------------

    def to_json(self) -> str:
        p = {k: (list(v) if isinstance(v, np.ndarray) else v)
             for k, v in self.spec.params.items()}
        return json.dumps({"family": self.spec.family, "params": p,
                           "tau": self.tau, "r": self.r})

    @classmethod
    def from_json(cls, text: str) -> "Potential":
        obj = json.loads(text)
        return cls(PotentialSpec(obj["family"], obj.get("params", {})),
                   tau=obj.get("tau", 1.0), r=obj.get("r", 1.0))

    @classmethod
    def from_csv(cls, path) -> "Potential":
        data = np.loadtxt(path, delimiter=",")
        return cls(PotentialSpec("tabulated",
                                 {"x": data[:, 0], "v": data[:, 1]}))

    def __repr__(self):
        return (f"Potential({self.spec.family}, {self.spec.params}, "
                f"tau={self.tau}, r={self.r})")


# -- convenience constructors ----------------------------------------------

def power(d: float, ) -> Potential:
    return Potential(PotentialSpec("power", {"d": d}))


def two_power(d: float, D: float) -> Potential:
    return Potential(PotentialSpec("two_power", {"d": d, "D": D}))


def reciprocal_two_power(d: float, D: float) -> Potential:
    return Potential(PotentialSpec("reciprocal_two_power", {"d": d, "D": D}))


def log_modulated(D: float) -> Potential:
    return Potential(PotentialSpec("log_modulated", {"D": D}))


# -- classification ---------------------------------------------------------

@dataclass
class ClassificationReport:
    kappa_measured: float
    theta_measured: float
    D_measured: float
    in_P1: bool
    in_P1_theta: bool
    ratio_min: float
    ratio_max: float
    parity_max: float


def default_grid(lo: float = 1e-4, hi: float = 1e4,
                 per_decade: int = 200) -> np.ndarray:
    n = int(np.log10(hi / lo) * per_decade) + 1
    return np.geomspace(lo, hi, n)


def default_h_samples(kmax: int = 20) -> np.ndarray:
    h = 2.0 ** -np.arange(1, kmax + 1)
    return np.concatenate([h, -h])


def classify(V: Potential, grid: np.ndarray | None = None,
             h_samples: np.ndarray | None = None,
             kappa_cap: float = 50.0) -> ClassificationReport:
    """Measure the doubling constant, Holder exponent of V' and doubling
    order of V on a log-spaced grid, and flag class membership.

    kappa is the single max of the upper ratio sup xV'/V, the reciprocal of
    the lower ratio, and the parity ratio sup V(-x)/V(x) (both orientations).
    """
    if grid is None:
        grid = default_grid()
    grid = np.asarray(grid, dtype=float)
    if grid.size < 2:
        raise ConfigurationError("classification grid needs >= 2 points per half-line")
    if h_samples is None:
        h_samples = default_h_samples()

    ratios = []
    for sgn in (1.0, -1.0):
        x = sgn * grid
        v = np.asarray(V(x))
        dv = np.asarray(V.deriv(x))
        if np.any(v <= 0):
            raise DomainError("potential must be positive away from 0")
        ratios.append(x * dv / v)
    q = np.concatenate(ratios)
    q_min, q_max = float(q.min()), float(q.max())
    if q_min <= 0:
        raise DomainError("xV'/V must be positive for a single-well potential")

    vp = np.asarray(V(grid))
    vm = np.asarray(V(-grid))
    parity = float(np.max(np.maximum(vp / vm, vm / vp)))
    kappa = max(q_max, 1.0 / q_min, parity)
    in_p1 = np.isfinite(kappa) and kappa <= kappa_cap

    # scale-invariant Holder fit for V'
    hs = np.asarray(h_samples, dtype=float)
    ys = []
    for h in hs:
        num = np.abs(np.asarray(V.deriv(np.exp(h) * grid))
                     - np.asarray(V.deriv(grid)))
        den = np.abs(np.asarray(V.deriv(grid)))
        ok = den > 0
        ys.append(np.max(num[ok] / den[ok]) if ok.any() else 0.0)
    ys = np.asarray(ys)
    pos = ys > 0
    if pos.sum() >= 2:
        slope = np.polyfit(np.log(np.abs(hs[pos])), np.log(ys[pos]), 1)[0]
        theta = float(min(max(slope, 0.0), 1.0))
    else:
        theta = 1.0  # V' constant on each half-line under log shifts

    # doubling order: largest effective exponent of V(lambda x)/V(x)
    d_meas = 0.0
    for lam in (2.0, 4.0, 8.0):
        for sgn in (1.0, -1.0):
            x = sgn * grid
            ratio = np.asarray(V(lam * x)) / np.asarray(V(x))
            d_meas = max(d_meas, float(np.max(np.log(ratio) / np.log(lam))))

    return ClassificationReport(
        kappa_measured=kappa,
        theta_measured=theta,
        D_measured=d_meas,
        in_P1=bool(in_p1),
        in_P1_theta=bool(in_p1 and theta > 0),
        ratio_min=q_min,
        ratio_max=q_max,
        parity_max=parity,
    )
