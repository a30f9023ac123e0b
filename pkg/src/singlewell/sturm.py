"""Eigenvalues and eigenfunctions of H[tau V] = -d^2/dx^2 + tau V on the line.

The solver shoots the Prufer phase of the recessive solution inward from
+/- x_max on a graded grid and matches the two half-line phases at x = 0:
theta(0;E) + theta_tilde(0;E) = (n-1) pi exactly at the n-th eigenvalue.
The matching phase is strictly increasing in E, so eigenvalues are found by
(vectorised) bisection, all levels at once.
"""

from __future__ import annotations

import hashlib
import os
from dataclasses import dataclass

import numpy as np

from ._quad import simpson_weights
from ._shoot import STAGE_OFFSETS, sweep_phase, sweep_profile
from .errors import DomainError, RangeError, TruncationError
from .potentials import Potential

DELTA_DEFAULT = 2.0 * np.pi / 48.0   # >= 48 nodes per local wavelength
LAMBDA_TRUNC = 10.0                  # V(x_max) >= 10 E_max
AGMON_MARGIN = 40.0                  # x_max sqrt(V(x_max)) >= 40


def _find_x_max(vf, e_max):
    x = 1.0
    for _ in range(200):
        v = float(vf(x))
        if v >= LAMBDA_TRUNC * e_max and x * np.sqrt(v) >= AGMON_MARGIN:
            break
        x *= 2.0
    else:
        raise TruncationError("could not satisfy the truncation margin")
    lo, hi = x / 2.0, x
    for _ in range(30):
        mid = 0.5 * (lo + hi)
        v = float(vf(mid))
        if v >= LAMBDA_TRUNC * e_max and mid * np.sqrt(v) >= AGMON_MARGIN:
            hi = mid
        else:
            lo = mid
    return hi


class HalfLineGrid:
    """Graded nodes on [0, x_max] for one half-line, with cached stage values.

    Node density follows sqrt(E_max + V(x)), which resolves the local
    wavelength in the classical region and keeps the explicit phase step
    stable in the transition region.
    """

    def __init__(self, vf, e_max, delta=DELTA_DEFAULT):
        self.vf = vf
        self.e_max = float(e_max)
        x_max = _find_x_max(vf, e_max)
        # place nodes uniformly in the cumulative density coordinate
        xs = np.linspace(0.0, x_max, 8192)
        vxs = np.asarray(vf(xs))
        dens = np.sqrt(self.e_max + vxs) / delta
        # deep forbidden region (V > 4 E_max for every usable energy): the
        # exact cell step only needs V resolved to a few percent per cell
        dlogv = np.abs(np.gradient(np.log(np.maximum(vxs, 1e-300)), xs))
        with np.errstate(divide="ignore"):
            relax = np.maximum(25.0 * dlogv, 4.0 / np.maximum(xs, 1e-300))
        forb = vxs > 4.0 * self.e_max
        dens[forb] = np.minimum(dens[forb], relax[forb])
        cum = np.concatenate([[0.0], np.cumsum(
            0.5 * (dens[1:] + dens[:-1]) * np.diff(xs))])
        n_cells = max(int(np.ceil(cum[-1])), 64)
        self.nodes = np.interp(np.arange(n_cells + 1) * cum[-1] / n_cells,
                               cum, xs)
        self.nodes[0], self.nodes[-1] = 0.0, x_max
        h = self.nodes[:-1] - self.nodes[1:]          # signed, negative
        base = self.nodes[1:]
        stage_x = base[:, None] + STAGE_OFFSETS[None, :] * h[:, None]
        self.vstage = np.asarray(vf(stage_x))
        self.vmid = np.asarray(vf(base + 0.5 * h))
        self.x_max = x_max
        self.v_at_xmax = float(vf(x_max))

    def phase_at_zero(self, E, lam):
        E = np.atleast_1d(np.asarray(E, dtype=float))
        lam = np.atleast_1d(np.asarray(lam, dtype=float))
        if np.any(E > self.v_at_xmax / 2.0):
            raise TruncationError("energy exceeds the truncation margin of the grid")
        return sweep_phase(E, lam, self.nodes, self.vstage, self.vmid)

    def profile(self, E, lam):
        E = np.atleast_1d(np.asarray(E, dtype=float))
        lam = np.atleast_1d(np.asarray(lam, dtype=float))
        return sweep_profile(E, lam, self.nodes, self.vstage, self.vmid)


@dataclass
class EigenPair:
    n: int
    E: float
    psi: np.ndarray
    psi_prime: np.ndarray


@dataclass
class DiffEigenPair:
    n: int
    sigma: np.ndarray
    F: float


class EigenSystem:
    """Truncated spectrum of H[tau V] with sampled eigenfunctions.

    x is the full-line graded grid, w the matching quadrature weights; psi
    and dpsi have shape (N, len(x)) and rows are L2-normalised with the
    sign convention psi_n > 0 near +infinity.
    """

    def __init__(self, potential, tau, x, E, psi, dpsi):
        self.potential = potential
        self.tau = float(tau)
        self.x = x
        self.w = simpson_weights(x)
        self.E = E
        self.psi = psi
        self.dpsi = dpsi
        if E.size > 1 and not np.all(np.diff(E) > 0):
            raise RuntimeError("computed spectrum is not strictly increasing")

    @property
    def n_levels(self):
        return self.E.size

    @property
    def e_max(self):
        return float(self.E[-1]) if self.E.size else 0.0

    def scaled_potential(self) -> Potential:
        return self.potential.scale(self.tau)

    def pair(self, n: int) -> EigenPair:
        return EigenPair(n, float(self.E[n - 1]), self.psi[n - 1],
                         self.dpsi[n - 1])

    def inner(self, f, g):
        """Quadrature inner product of two sample vectors on self.x."""
        return float(np.dot(self.w, f * g))

    def export_eigenvalues_csv(self, path):
        np.savetxt(path, np.column_stack([np.arange(1, self.n_levels + 1),
                                          self.E]),
                   delimiter=",", header="n,E_n", comments="")

    def export_eigenfunction_csv(self, path, n):
        np.savetxt(path, np.column_stack([self.x, self.psi[n - 1],
                                          self.dpsi[n - 1]]),
                   delimiter=",", header="x,psi,psi_prime", comments="")


class ShootingSolver:
    """Two-sided Prufer shooting for one scaled potential tau*V."""

    def __init__(self, V: Potential, e_ceiling: float,
                 delta: float = DELTA_DEFAULT):
        self.V = V
        self.e_ceiling = float(e_ceiling)
        self.right = HalfLineGrid(lambda x: V(x), e_ceiling, delta)
        self.left = HalfLineGrid(lambda x: V(-np.asarray(x)), e_ceiling, delta)

    def matching_phase(self, E):
        """theta(0;E) + theta_tilde(0;E); equals (n-1) pi at E = E_n."""
        E = np.atleast_1d(np.asarray(E, dtype=float))
        lam = np.sqrt(E)
        return (self.right.phase_at_zero(E, lam)
                + self.left.phase_at_zero(E, lam))

    def count_below(self, E: float):
        """Number of eigenvalues strictly below E, with an ambiguity flag
        when E sits within phase resolution of an eigenvalue."""
        if E <= 0:
            raise DomainError("energy must be positive")
        f = float(self.matching_phase(E)[0])
        frac = f / np.pi
        ambiguous = abs(frac - round(frac)) < 1e-7
        return int(np.floor(frac)) + 1, ambiguous

    def eigenvalues(self, N: int, tol: float = 1e-10):
        """E_1 < ... < E_N by vectorised bisection on the matching phase."""
        if N == 0:
            return np.empty(0)
        targets = (np.arange(1, N + 1) - 1) * np.pi
        e_sup = self.e_ceiling
        if self.matching_phase(np.array([e_sup]))[0] <= targets[-1]:
            raise RangeError("bracket not found below the configured ceiling")
        # coarse pass to seed narrow per-level brackets
        n_coarse = max(4 * N, 64)
        e_grid = np.geomspace(e_sup * 1e-5, e_sup, n_coarse)
        f_grid = self.matching_phase(e_grid)
        idx = np.searchsorted(f_grid, targets)
        lo = np.where(idx > 0, e_grid[np.maximum(idx - 1, 0)],
                      e_grid[0] * 1e-3)
        flo = np.where(idx > 0, f_grid[np.maximum(idx - 1, 0)] - targets,
                       -np.pi)
        hi = np.where(idx >= n_coarse, e_sup,
                      e_grid[np.minimum(idx, n_coarse - 1)])
        fhi = np.where(idx >= n_coarse, 1.0,
                       f_grid[np.minimum(idx, n_coarse - 1)] - targets)
        # Illinois-damped regula falsi on the matching defect
        side = np.zeros(N)  # -1: last new point went to lo, +1: to hi
        for _ in range(60):
            mid = hi - fhi * (hi - lo) / (fhi - flo)
            mid = np.clip(mid, lo + 1e-3 * (hi - lo), hi - 1e-3 * (hi - lo))
            fm = self.matching_phase(mid) - targets
            below = fm < 0.0
            # repeated side: halve the opposite endpoint's retained defect
            fhi = np.where(below & (side < 0), 0.5 * fhi, fhi)
            flo = np.where(~below & (side > 0), 0.5 * flo, flo)
            flo = np.where(below, fm, flo)
            lo = np.where(below, mid, lo)
            fhi = np.where(~below, fm, fhi)
            hi = np.where(~below, mid, hi)
            side = np.where(below, -1.0, 1.0)
            if np.max((hi - lo) / np.maximum(mid, 1e-300)) < 0.25 * tol:
                break
        return 0.5 * (lo + hi)

    def eigenfunction_samples(self, E_n):
        """Two-sided recessive profiles matched at 0 on the union grid.

        Returns (x, psi, dpsi, mismatch) with psi L2-normalised and positive
        near +infinity; mismatch is |sin(theta_r + theta_l)| at x = 0.
        """
        E_arr = np.atleast_1d(np.asarray(E_n, dtype=float))
        lam = np.sqrt(E_arr)
        th_r, ell_r = self.right.profile(E_arr, lam)
        th_l, ell_l = self.left.profile(E_arr, lam)
        xl = self.left.nodes
        xr = self.right.nodes
        x = np.concatenate([-xl[:0:-1], xr])
        w = simpson_weights(x)
        n_e = E_arr.size
        psi = np.empty((n_e, x.size))
        dpsi = np.empty((n_e, x.size))
        mism = np.empty(n_e)
        for k in range(n_e):
            lm = lam[k]
            amp_r = np.exp(ell_r[k] - ell_r[k, 0])
            amp_l = np.exp(ell_l[k] - ell_l[k, 0])
            mu = np.cos(th_r[k, 0] + th_l[k, 0])
            mism[k] = abs(np.sin(th_r[k, 0] + th_l[k, 0]))
            u_r = amp_r * np.cos(th_r[k]) / lm
            du_r = amp_r * np.sin(th_r[k])
            u_l = mu * amp_l * np.cos(th_l[k]) / lm
            du_l = -mu * amp_l * np.sin(th_l[k])
            pk = np.concatenate([u_l[:0:-1], u_r])
            dk = np.concatenate([du_l[:0:-1], du_r])
            nrm = np.sqrt(np.dot(w, pk * pk))
            psi[k] = pk / nrm
            dpsi[k] = dk / nrm
        return x, psi, dpsi, mism


def bohr_sommerfeld_energy(V: Potential, n: float) -> float:
    """Invert sqrt(E) |{V <= E}| = pi n for E (semiclassical level estimate)."""
    from ._quad import invert_monotone

    def g(E):
        E = np.atleast_1d(E)
        return np.array([np.sqrt(e) * V.sublevel_measure(e) for e in E])

    return float(invert_monotone(g, np.pi * n, iters=80))


# ---------------------------------------------------------------------------
# public operations

def prufer_phase(V: Potential, E: float, lam: float, side: str = "right"):
    """Prufer phase at x = 0 of the recessive solution on one half-line."""
    if E <= 0 or lam <= 0:
        raise DomainError("E and lambda must be positive")
    if side == "right":
        grid = HalfLineGrid(lambda x: V(x), E)
    else:
        grid = HalfLineGrid(lambda x: V(-np.asarray(x)), E)
    return float(grid.phase_at_zero(np.array([E]), np.array([lam]))[0])


def count_below(V: Potential, E: float):
    solver = ShootingSolver(V, e_ceiling=2.0 * E)
    return solver.count_below(E)


def eigenvalue(V: Potential, n: int, tol: float = 1e-10) -> float:
    if n < 1:
        raise DomainError("level index starts at 1")
    solver = make_solver(V, n_levels=n)
    return float(solver.eigenvalues(n, tol=tol)[-1])


def make_solver(V: Potential, n_levels: int = None,
                e_max: float = None) -> ShootingSolver:
    """Solver with its grid sized from a semiclassical ceiling estimate."""
    if e_max is None:
        if n_levels is None:
            raise DomainError("need a level count or an energy ceiling")
        e_max = bohr_sommerfeld_energy(V, n_levels + 2) * 1.5
    return ShootingSolver(V, e_ceiling=e_max)


def eigenfunction(V: Potential, E_n: float, n: int = None,
                  solver: ShootingSolver = None) -> EigenPair:
    """Normalised eigenfunction at an already-solved eigenvalue."""
    if solver is None:
        solver = ShootingSolver(V, e_ceiling=2.0 * E_n)
    x, psi, dpsi, mism = solver.eigenfunction_samples(E_n)
    if mism[0] > 1e-6:
        raise TruncationError(
            f"matching mismatch {mism[0]:.2e} at E={E_n}; refine E first")
    if n is None:
        w = simpson_weights(x)
        f = float(solver.matching_phase(E_n)[0])
        n = int(round(f / np.pi)) + 1
        del w
    return EigenPair(n, float(E_n), psi[0], dpsi[0])


def eigen_system(V: Potential, tau: float = 1.0, n_levels: int = None,
                 e_max: float = None, tol: float = 1e-10,
                 cache: bool = True) -> EigenSystem:
    """All eigenpairs up to a level count or an energy ceiling."""
    if tau <= 0:
        raise DomainError("tau must be positive")
    Vs = V.scale(tau) if tau != 1.0 else V
    if n_levels == 0:
        return EigenSystem(V, tau, np.array([0.0, 1.0]), np.empty(0),
                           np.empty((0, 2)), np.empty((0, 2)))
    key = None
    if cache:
        key = _cache_key(V, tau, n_levels, e_max, tol)
        sys = _cache_load(key, V, tau)
        if sys is not None:
            return sys
    solver = make_solver(Vs, n_levels=n_levels, e_max=(
        None if e_max is None else 1.5 * e_max))
    if n_levels is None:
        # count levels below e_max, then solve them
        n_levels, _ = solver.count_below(e_max)
        if n_levels == 0:
            return EigenSystem(V, tau, np.array([0.0, 1.0]), np.empty(0),
                               np.empty((0, 2)), np.empty((0, 2)))
    E = solver.eigenvalues(n_levels, tol=tol)
    if e_max is not None:
        E = E[E <= e_max]
    x, psi, dpsi, mism = solver.eigenfunction_samples(E)
    if np.max(mism) > 1e-6:
        raise TruncationError("eigenfunction matching mismatch above 1e-6")
    sys = EigenSystem(V, tau, x, E, psi, dpsi)
    if cache and key is not None:
        _cache_store(key, sys)
    return sys


def differentiated_eigenfunction(sys: EigenSystem, n: int,
                                 A: np.ndarray) -> DiffEigenPair:
    """sigma_n = sum_m A_nm psi_m and the differentiated eigenvalue F_n.

    Requires the expansion matrix on the same truncated basis; levels in the
    top 25 percent of the basis are refused since their row tails are not
    representable.
    """
    N = sys.n_levels
    if n > int(0.8 * N):
        raise TruncationError("level too close to the basis truncation edge")
    sigma = A[n - 1] @ sys.psi
    Vx = np.asarray(sys.scaled_potential()(sys.x))
    F = float(np.dot(sys.w, Vx * sys.psi[n - 1] ** 2))
    return DiffEigenPair(n, sigma, F)


def sigma_finite_difference(V: Potential, tau: float, n: int,
                            x_out: np.ndarray, h: float = 1e-4,
                            n_levels: int = None) -> np.ndarray:
    """Central finite difference (psi_n(.;(1+h)tau V)-psi_n(.;(1-h)tau V))/2h,
    the independent cross-check route for sigma_n."""
    n_levels = n_levels or (n + 2)
    up = eigen_system(V, tau * (1.0 + h), n_levels=n_levels, cache=False)
    dn = eigen_system(V, tau * (1.0 - h), n_levels=n_levels, cache=False)
    pu = np.interp(x_out, up.x, up.psi[n - 1])
    pd = np.interp(x_out, dn.x, dn.psi[n - 1])
    return (pu - pd) / (2.0 * h)


# ---------------------------------------------------------------------------
# residuals of the half-line identities (diagnostics for solver quality)

def halfline_energy_residual(sys: EigenSystem, n: int, a: float) -> float:
    """int_a^inf (u')^2 + int_a^inf V u^2 - E int_a^inf u^2 + u(a) u'(a)."""
    m = sys.x >= a
    x = sys.x[m]
    w = simpson_weights(x)
    u = sys.psi[n - 1][m]
    du = sys.dpsi[n - 1][m]
    Vx = np.asarray(sys.scaled_potential()(x))
    E = sys.E[n - 1]
    return float(np.dot(w, du ** 2) + np.dot(w, Vx * u ** 2)
                 - E * np.dot(w, u ** 2) + u[0] * du[0])


def sonin_residual(sys: EigenSystem, n: int, a: float) -> float:
    """(E - V(a)) u(a)^2 + u'(a)^2 - int_a^inf V' u^2."""
    m = sys.x >= a
    x = sys.x[m]
    w = simpson_weights(x)
    u = sys.psi[n - 1][m]
    du = sys.dpsi[n - 1][m]
    Vs = sys.scaled_potential()
    E = sys.E[n - 1]
    return float((E - Vs(x[0])) * u[0] ** 2 + du[0] ** 2
                 - np.dot(w, np.asarray(Vs.deriv(x)) * u ** 2))


# ---------------------------------------------------------------------------
# disk cache

def _cache_dir():
    return os.environ.get("GRUSHIN_CACHE_DIR")


def _cache_key(V, tau, n_levels, e_max, tol):
    text = f"{V.to_json()}|{tau!r}|{n_levels!r}|{e_max!r}|{tol!r}|v1"
    return hashlib.sha1(text.encode()).hexdigest()


def _cache_load(key, V, tau):
    d = _cache_dir()
    if not d:
        return None
    path = os.path.join(d, key + ".npz")
    if not os.path.exists(path):
        return None
    data = np.load(path)
    return EigenSystem(V, tau, data["x"], data["E"], data["psi"],
                       data["dpsi"])


def _cache_store(key, sys):
    d = _cache_dir()
    if not d:
        return
    os.makedirs(d, exist_ok=True)
    path = os.path.join(d, key + ".npz")
    np.savez(path, x=sys.x, E=sys.E, psi=sys.psi, dpsi=sys.dpsi)
