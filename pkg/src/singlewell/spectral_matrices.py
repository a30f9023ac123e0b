"""Matrices of the multiplication operator V in a truncated eigenbasis.

P_nm = <V psi_n, psi_m> collects the overlaps of the eigenfunctions against
the potential; its diagonal gives the differentiated eigenvalues F_n, and
A_nm = P_nm / (E_n - E_m) expands the tau-derivative of the eigenfunctions of
H[tau V] over the eigenbasis.  The module also provides the near/far cutoff
masks, the modified differentiated eigenfunctions rho_n, residual reports for
the virial identities, and decay-exponent fits of the matrix entries.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError, RangeError
from .sturm import EigenSystem

GUARD_FRACTION = 0.8     # rows above this fraction of N are truncation-tainted
NEAR_FAR_T = 2.0         # default near/far band threshold


@dataclass
class MatrixP:
    """Symmetric overlap matrix P_nm = <V psi_n, psi_m>."""

    entries: np.ndarray
    asymmetry: float       # max |P - P^T| before symmetrisation

    @property
    def n(self):
        return self.entries.shape[0]


@dataclass
class MatrixA:
    """Antisymmetric expansion matrix A_nm = P_nm / (E_n - E_m), zero diagonal."""

    entries: np.ndarray

    @property
    def n(self):
        return self.entries.shape[0]


@dataclass
class CutoffMask:
    """0/1 mask of the band T^{-1} n <= m <= T n (near) or its complement."""

    T: float
    kind: str              # "near" or "far"
    entries: np.ndarray


@dataclass
class RhoSet:
    """Samples of rho_n = sum_m (A * far-mask)_nm psi_m, the far-band part
    of the differentiated eigenfunctions."""

    rho: np.ndarray        # (N, len(x))
    T0: float
    split_residual: float  # max mismatch of the two defining expressions


@dataclass
class VirialReport:
    r1: np.ndarray         # |P_nn - finite-difference dE_n(t tau V)/dt|
    r2: np.ndarray         # |int x V' psi_n^2 - 2 int (psi_n')^2|
    F: np.ndarray          # the diagonal P_nn
    diag_in_range: bool    # 0 <= P_nn <= E_n for all checked n


@dataclass
class DecayReport:
    alpha_near: float
    alpha_stderr: float
    band_points: int
    sparse_band: bool      # too few nonzero band entries to fit
    far_constant: float    # sup |A_nm| sqrt(nm) (E_n/E_m)^{3/4} over n >= 2m
    row_sum_max: float     # max_n sum_m A_nm^2 / n^2
    guard_n: int           # rows n <= guard_n entered the fit

    def to_json(self) -> str:
        return json.dumps({k: (v.item() if hasattr(v, "item") else v)
                           for k, v in self.__dict__.items()})


def matrix_P(sys: EigenSystem, asym_tol: float = 1e-6) -> MatrixP:
    """Assemble P by quadrature on the system grid.

    The quadrature product (psi * w V) @ psi^T is symmetric up to rounding
    because both triangles use identical sample products; the measured
    asymmetry is still recorded and checked against asym_tol as a
    grid-resolution diagnostic.
    """
    Vx = np.asarray(sys.scaled_potential()(sys.x))
    P = (sys.psi * (sys.w * Vx)) @ sys.psi.T
    asym = float(np.max(np.abs(P - P.T))) if P.size else 0.0
    if asym > asym_tol:
        raise RangeError(f"quadrature asymmetry {asym:.2e} exceeds {asym_tol:.0e}")
    P = 0.5 * (P + P.T)
    return MatrixP(P, asym)


def matrix_A(P: MatrixP, E: np.ndarray) -> MatrixA:
    """A_nm = P_nm / (E_n - E_m) off the diagonal, zero on it."""
    E = np.asarray(E, dtype=float)
    if E.size != P.n:
        raise DomainError("eigenvalue vector does not match the matrix size")
    if E.size > 1 and not np.all(np.diff(E) > 0):
        raise DomainError("eigenvalues must be strictly increasing")
    gap = E[:, None] - E[None, :]
    if E.size > 1:
        off = ~np.eye(E.size, dtype=bool)
        if np.min(np.abs(gap[off])) < 1e-12 * E[-1]:
            raise DomainError("degenerate eigenvalue gap")
    with np.errstate(divide="ignore", invalid="ignore"):
        A = P.entries / gap
    np.fill_diagonal(A, 0.0)
    return MatrixA(A)


def cutoff_mask(N: int, T: float = NEAR_FAR_T, kind: str = "near") -> CutoffMask:
    """Mask of the band m in [n/T, T n] (kind="near") or its complement."""
    if not T > 1:
        raise DomainError("threshold T must exceed 1")
    n = np.arange(1, N + 1, dtype=float)
    near = (n[None, :] >= n[:, None] / T) & (n[None, :] <= n[:, None] * T)
    ent = near if kind == "near" else ~near
    if kind not in ("near", "far"):
        raise DomainError(f"unknown mask kind {kind!r}")
    return CutoffMask(T, kind, ent.astype(float))


def virial_checks(sys: EigenSystem, P: MatrixP, n_max: int = None,
                  h: float = 1e-4) -> VirialReport:
    """Residuals of the two virial identities for n <= n_max.

    r1 compares P_nn with a central finite difference of E_n(t tau V) in t at
    t = 1; r2 compares int x V' psi_n^2 with twice the kinetic energy.
    """
    from .sturm import eigen_system

    N = sys.n_levels
    n_max = min(n_max or N, int(GUARD_FRACTION * N) or N)
    F = np.diag(P.entries)[:n_max].copy()
    Vs = sys.scaled_potential()
    xVp = sys.x * np.asarray(Vs.deriv(sys.x))
    r1 = np.empty(n_max)
    r2 = np.empty(n_max)
    up = eigen_system(sys.potential, sys.tau * (1.0 + h), n_levels=n_max,
                      cache=False)
    dn = eigen_system(sys.potential, sys.tau * (1.0 - h), n_levels=n_max,
                      cache=False)
    dE = (up.E[:n_max] - dn.E[:n_max]) / (2.0 * h)
    for i in range(n_max):
        r1[i] = abs(F[i] - dE[i])
        pot_side = float(np.dot(sys.w, xVp * sys.psi[i] ** 2))
        kin_side = 2.0 * float(np.dot(sys.w, sys.dpsi[i] ** 2))
        r2[i] = abs(pot_side - kin_side)
    ok = bool(np.all(F >= -1e-10) and np.all(F <= sys.E[:n_max] + 1e-10))
    return VirialReport(r1, r2, F, ok)


def projector_sum(sys: EigenSystem, E0: float, x) -> np.ndarray:
    """Partial sum of psi_n(x)^2 over E_n <= E0, by linear interpolation of
    the stored samples."""
    if E0 > sys.e_max:
        raise RangeError("E0 exceeds the computed part of the spectrum")
    x = np.asarray(x, dtype=float)
    scalar = x.ndim == 0
    xq = np.atleast_1d(x)
    k = int(np.searchsorted(sys.E, E0, side="right"))
    out = np.zeros(xq.shape)
    for i in range(k):
        out += np.interp(xq, sys.x, sys.psi[i]) ** 2
    return float(out[0]) if scalar else out


def rho_set(sys: EigenSystem, A: MatrixA, T0: float = NEAR_FAR_T) -> RhoSet:
    """rho_n = (A * far-mask) row n applied to the eigenfunction samples.

    Also evaluates the equivalent form sigma_n minus the near-band part and
    records the largest discrepancy between the two (zero up to rounding,
    since near + far masks tile the square)."""
    N = sys.n_levels
    far = cutoff_mask(N, T0, "far").entries
    near = cutoff_mask(N, T0, "near").entries
    rho = (A.entries * far) @ sys.psi
    sigma = A.entries @ sys.psi
    alt = sigma - (A.entries * near) @ sys.psi
    resid = float(np.max(np.abs(rho - alt))) if rho.size else 0.0
    return RhoSet(rho, T0, resid)


def operator_norm(B: np.ndarray, iterations: int = 50) -> float:
    """l2 operator norm of B by power iteration on B^T B.

    Seeded with the deterministic vector (1/sqrt(n))_n, which also witnesses
    the Schur-test bound for the far part of |A|."""
    N = B.shape[0]
    if N == 0:
        return 0.0
    v = 1.0 / np.sqrt(np.arange(1, N + 1, dtype=float))
    v /= np.linalg.norm(v)
    s = 0.0
    for _ in range(iterations):
        w = B.T @ (B @ v)
        s = np.linalg.norm(w)
        if s == 0.0:
            return 0.0
        v = w / s
    return float(np.sqrt(s))


def decay_fit(P: MatrixP, A: MatrixA, E: np.ndarray,
              min_band_points: int = 8,
              noise_floor: float = 1e-6) -> DecayReport:
    """Fit the near-diagonal decay exponent and check the far-diagonal bound.

    The near fit regresses log(|P_nm|/E_n) on log|n-m| over the band
    n/2 <= m <= 2n, excluding |n-m| < 3 and rows in the truncation guard
    band; the far constant is sup of |A_nm| sqrt(nm) (E_n/E_m)^{3/4} over
    n >= 2m.
    """
    N = P.n
    if N < 64:
        raise RangeError("need a basis of at least 64 levels for stable fits")
    E = np.asarray(E, dtype=float)
    guard_n = int(GUARD_FRACTION * N)
    n = np.arange(1, N + 1, dtype=float)
    nn = n[:, None]
    mm = n[None, :]
    band = (mm >= nn / 2.0) & (mm <= 2.0 * nn)
    sep = np.abs(nn - mm)
    fit_region = band & (sep >= 3) & (nn <= guard_n) & (mm <= guard_n)
    vals = np.abs(P.entries) / E[:, None]
    # entries at quadrature-noise level carry no decay information
    pts = fit_region & (vals > noise_floor)
    k = int(np.count_nonzero(pts))
    sparse = k < min_band_points
    if sparse:
        alpha, stderr = np.inf, 0.0
    else:
        lx = np.log(sep[pts])
        ly = np.log(vals[pts])
        # envelope fit: bin by separation and regress on the per-bin maxima,
        # since the bound is on the envelope rather than the mean
        seps = np.unique(sep[pts])
        bx, by = [], []
        for s0 in seps:
            sel = sep[pts] == s0
            bx.append(np.log(s0))
            by.append(np.max(ly[sel]))
        bx = np.asarray(bx)
        by = np.asarray(by)
        if bx.size < 3:
            alpha, stderr = np.inf, 0.0
            sparse = True
        else:
            coef, cov = np.polyfit(bx, by, 1, cov=True)
            alpha = float(-coef[0])
            stderr = float(np.sqrt(cov[0, 0]))
    farpts = (nn >= 2.0 * mm) & (nn <= guard_n)
    far_c = 0.0
    if farpts.any():
        q = (np.abs(A.entries) * np.sqrt(nn * mm)
             * (E[:, None] / E[None, :]) ** 0.75)
        far_c = float(np.max(q[farpts]))
    rows = slice(0, guard_n)
    row_sums = np.sum(A.entries[rows] ** 2, axis=1) / n[rows] ** 2
    return DecayReport(alpha, stderr, k, sparse, far_c,
                       float(np.max(row_sums)), guard_n)


def av_identity_residual(P: MatrixP, A: MatrixA, E: np.ndarray) -> float:
    """max_{n != m} |A_nm (E_n - E_m) - P_nm|."""
    E = np.asarray(E, dtype=float)
    gap = E[:, None] - E[None, :]
    R = A.entries * gap - P.entries
    np.fill_diagonal(R, 0.0)
    return float(np.max(np.abs(R))) if R.size else 0.0


def export_matrix_csv(path, M: np.ndarray):
    """Write dense matrix entries as rows (n, m, value)."""
    N = M.shape[0]
    n, m = np.meshgrid(np.arange(1, N + 1), np.arange(1, N + 1),
                       indexing="ij")
    np.savetxt(path, np.column_stack([n.ravel(), m.ravel(), M.ravel()]),
               delimiter=",", header="n,m,value", comments="",
               fmt=("%d", "%d", "%.16e"))


def identity_report(sys: EigenSystem, P: MatrixP, A: MatrixA) -> dict:
    """JSON-ready residuals of the exact algebraic identities."""
    sym = float(np.max(np.abs(P.entries - P.entries.T)))
    antisym = float(np.max(np.abs(A.entries + A.entries.T)))
    return {
        "symmetry_residual": sym,
        "pre_average_asymmetry": P.asymmetry,
        "antisymmetry_residual": antisym,
        "av_identity_residual": av_identity_residual(P, A, sys.E),
        "diag_zero": float(np.max(np.abs(np.diag(A.entries)))),
        "e_top": sys.e_max,
    }
