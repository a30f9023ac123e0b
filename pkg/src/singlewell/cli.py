"""Config-driven command line runner.

Subcommands run the classification, eigensolve, matrix-identity, geometry
and Plancherel suites from a JSON config and write reports plus plot-ready
CSV bundles to an output directory.  Hard algebraic identities (symmetry,
antisymmetry, the A-P relation, virial residuals) decide the exit code;
comparability constants are measured and reported without failing the run.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys
import time
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigurationError
from .potentials import Potential, classify
from . import spectral_matrices as sm
from .sturm import eigen_system

SUITES = ("classify", "eigensolve", "matrices", "geometry", "plancherel")


@dataclass
class RunConfig:
    potential: Potential
    n_levels: int = 64
    tolerance: float = 1e-10
    multipliers: list = field(default_factory=lambda: ["bump"])
    thetas: list = field(default_factory=lambda: [0.0, 0.25])
    r_grid: list = field(default_factory=lambda: [0.5, 1.0, 2.0])
    xprimes: list = field(default_factory=lambda: [0.0, 1.0])
    alphas: list = field(default_factory=lambda: [4.0])
    betas: list = field(default_factory=lambda: [0.0, 0.5])
    out_dir: str = "out"
    seed: int = 0
    config_hash: str = ""

    @classmethod
    def from_file(cls, path) -> "RunConfig":
        with open(path) as fh:
            text = fh.read()
        try:
            obj = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigurationError(f"config is not valid JSON: {exc}")
        if "potential" not in obj:
            raise ConfigurationError("config needs a 'potential' entry")
        pot = Potential.from_json(json.dumps(obj["potential"]))
        kw = {k: obj[k] for k in ("n_levels", "tolerance", "multipliers",
                                  "thetas", "r_grid", "xprimes", "alphas",
                                  "betas", "out_dir", "seed") if k in obj}
        if kw.get("tolerance", 1.0) <= 0:
            raise ConfigurationError("tolerance must be positive")
        cfg = cls(potential=pot, **kw)
        cfg.config_hash = hashlib.sha1(
            json.dumps(obj, sort_keys=True).encode()).hexdigest()[:12]
        return cfg


@dataclass
class CheckResult:
    name: str
    status: str            # "pass", "fail" or "measured"
    value: float
    runtime: float


@dataclass
class SuiteReport:
    checks: list = field(default_factory=list)
    tables: dict = field(default_factory=dict)

    def add(self, name, status, value, runtime):
        if any(c.name == name for c in self.checks):
            raise ConfigurationError(f"duplicate check name {name!r}")
        self.checks.append(CheckResult(name, status, float(value),
                                       float(runtime)))

    @property
    def failed(self):
        return [c for c in self.checks if c.status == "fail"]

    def to_json(self):
        return json.dumps({
            "checks": [c.__dict__ for c in self.checks],
        }, indent=2)


def _run_classify(cfg: RunConfig, rep: SuiteReport):
    t0 = time.time()
    cl = classify(cfg.potential)
    dt = time.time() - t0
    rep.add("classify.kappa", "measured", cl.kappa_measured, dt)
    rep.add("classify.theta", "measured", cl.theta_measured, 0.0)
    rep.add("classify.doubling_order", "measured", cl.D_measured, 0.0)
    rep.add("classify.in_P1", "pass" if cl.in_P1 else "fail",
            float(cl.in_P1), 0.0)
    rep.tables["classification"] = cl.__dict__


def _run_eigensolve(cfg: RunConfig, rep: SuiteReport):
    t0 = time.time()
    sys_ = eigen_system(cfg.potential, n_levels=cfg.n_levels,
                        tol=cfg.tolerance)
    dt = time.time() - t0
    rep.add("eigensolve.n_levels", "pass" if sys_.n_levels == cfg.n_levels
            else "fail", sys_.n_levels, dt)
    mono = bool(np.all(np.diff(sys_.E) > 0))
    rep.add("eigensolve.monotone", "pass" if mono else "fail", float(mono),
            0.0)
    rep.tables["eigenvalues"] = sys_.E.tolist()
    return sys_


def _run_matrices(cfg: RunConfig, rep: SuiteReport, sys_=None):
    sys_ = sys_ or eigen_system(cfg.potential, n_levels=cfg.n_levels,
                                tol=cfg.tolerance)
    t0 = time.time()
    P = sm.matrix_P(sys_)
    A = sm.matrix_A(P, sys_.E)
    res = sm.identity_report(sys_, P, A)
    dt = time.time() - t0
    tol = 1e-8 * sys_.e_max
    rep.add("matrices.av_identity",
            "pass" if res["av_identity_residual"] < tol else "fail",
            res["av_identity_residual"], dt)
    rep.add("matrices.antisymmetry",
            "pass" if res["antisymmetry_residual"] < 1e-10 else "fail",
            res["antisymmetry_residual"], 0.0)
    rep.add("matrices.symmetry",
            "pass" if res["symmetry_residual"] < 1e-10 else "fail",
            res["symmetry_residual"], 0.0)
    t0 = time.time()
    vir = sm.virial_checks(sys_, P, n_max=min(20, sys_.n_levels))
    bound = 1e-4 * sys_.E[:vir.r1.size]
    ok = bool(np.all(vir.r1 < bound) and np.all(vir.r2 < bound)
              and vir.diag_in_range)
    rep.add("matrices.virial", "pass" if ok else "fail",
            float(np.max(vir.r1 / sys_.E[:vir.r1.size])), time.time() - t0)
    if sys_.n_levels >= 64:
        t0 = time.time()
        fit = sm.decay_fit(P, A, sys_.E)
        rep.add("matrices.alpha_near", "measured",
                fit.alpha_near if np.isfinite(fit.alpha_near) else -1.0,
                time.time() - t0)
        rep.add("matrices.far_constant", "measured", fit.far_constant, 0.0)
        rep.tables["decay"] = fit.__dict__.copy()
    rep.tables["matrix_P"] = P.entries
    rep.tables["matrix_A"] = A.entries
    return P, A


def _run_geometry(cfg: RunConfig, rep: SuiteReport):
    from .geometry import (GeometryContext, doubling_constants,
                           quasi_triangle_constant, weight_integral_check)
    ctx = GeometryContext(cfg.potential)
    t0 = time.time()
    rows = []
    for r in cfg.r_grid:
        for xp in cfg.xprimes:
            for a in cfg.alphas:
                for b in cfg.betas:
                    if not (0 <= b < 1 and a > 1 + (1 + ctx.D / 2) * (1 - b)):
                        continue
                    rows.append((r, xp, a, b, weight_integral_check(
                        ctx, (xp, 0.0), r, a, b)))
    dt = time.time() - t0
    ratios = np.array([row[4] for row in rows]) if rows else np.array([1.0])
    rep.add("geometry.weight_ratio_spread", "measured",
            float(ratios.max() / max(np.median(ratios), 1e-300)), dt)
    t0 = time.time()
    dbl = doubling_constants(ctx, rng=cfg.seed)
    worst = max(dbl.values())
    rep.add("geometry.doubling", "pass" if worst <= 4.0 else "fail",
            worst, time.time() - t0)
    qt = quasi_triangle_constant(ctx, rng=cfg.seed)
    rep.add("geometry.quasi_triangle", "measured", qt, 0.0)
    rep.tables["weight_integrals"] = rows


def _run_plancherel(cfg: RunConfig, rep: SuiteReport):
    from .grushin import KernelMachine, weighted_moment
    from .multipliers import standard_multipliers
    cat = standard_multipliers()
    rows = []
    for mid in cfg.multipliers:
        if mid not in cat:
            raise ConfigurationError(f"unknown multiplier id {mid!r}")
        m = cat[mid]
        t0 = time.time()
        for r in cfg.r_grid:
            mach = KernelMachine(cfg.potential, m, r)
            for th in cfg.thetas:
                for xp in cfg.xprimes:
                    pr = weighted_moment(m, r, (xp, 0.0), th, cfg.potential,
                                         machine=mach)
                    rows.append((mid, th, r, xp, pr.moment, pr.norm_sq,
                                 pr.ratio))
        dt = time.time() - t0
        # spreads are only comparable at fixed weight power theta
        for th in cfg.thetas:
            ratios = np.array([row[6] for row in rows
                               if row[0] == mid and row[1] == th])
            rep.add(f"plancherel.ratio_spread.{mid}.theta={th:g}",
                    "measured", float(ratios.max() / ratios.min()), dt)
            dt = 0.0
    rep.tables["plancherel"] = rows


def run(cfg: RunConfig, suites=SUITES) -> SuiteReport:
    rep = SuiteReport()
    sys_ = None
    for name in suites:
        if name == "classify":
            _run_classify(cfg, rep)
        elif name == "eigensolve":
            sys_ = _run_eigensolve(cfg, rep)
        elif name == "matrices":
            _run_matrices(cfg, rep, sys_)
        elif name == "geometry":
            _run_geometry(cfg, rep)
        elif name == "plancherel":
            _run_plancherel(cfg, rep)
        else:
            raise ConfigurationError(f"unknown suite {name!r}")
    return rep


def emit_plot_data(rep: SuiteReport, out_dir: str):
    os.makedirs(out_dir, exist_ok=True)
    if "eigenvalues" in rep.tables:
        E = np.asarray(rep.tables["eigenvalues"])
        np.savetxt(os.path.join(out_dir, "eigenvalues.csv"),
                   np.column_stack([np.arange(1, E.size + 1), E]),
                   delimiter=",", header="n,E_n", comments="")
    if "matrix_P" in rep.tables:
        P = rep.tables["matrix_P"]
        E = np.asarray(rep.tables["eigenvalues"])
        N = P.shape[0]
        n, m = np.meshgrid(np.arange(1, N + 1), np.arange(1, N + 1),
                           indexing="ij")
        sep = np.abs(n - m).ravel()
        order = np.argsort(sep, kind="stable")
        data = np.column_stack([sep, n.ravel(), m.ravel(),
                                (np.abs(P) / E[:, None]).ravel()])[order]
        np.savetxt(os.path.join(out_dir, "matrix_decay.csv"), data,
                   delimiter=",", header="sep,n,m,abs_P_over_En",
                   comments="")
    if "plancherel" in rep.tables:
        rows = rep.tables["plancherel"]
        with open(os.path.join(out_dir, "plancherel_ratios.csv"), "w") as fh:
            fh.write("multiplier,theta,r,xprime,moment,norm_sq,ratio\n")
            for row in rows:
                fh.write(",".join(str(v) for v in row) + "\n")
    if "weight_integrals" in rep.tables:
        rows = rep.tables["weight_integrals"]
        with open(os.path.join(out_dir, "weight_integrals.csv"), "w") as fh:
            fh.write("r,xprime,alpha,beta,ratio\n")
            for row in rows:
                fh.write(",".join(str(v) for v in row) + "\n")


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(
        prog="singlewell",
        description="Spectral computations for one-dimensional single-well "
                    "Schrodinger operators and their planar degenerate "
                    "extensions.")
    ap.add_argument("command", choices=SUITES + ("all",))
    ap.add_argument("--config", required=True, help="JSON config file")
    ap.add_argument("--suite", default=None,
                    help="comma-separated suite subset (with command 'all')")
    ap.add_argument("--out", default=None, help="output directory")
    ap.add_argument("--threads", type=int, default=None,
                    help="worker thread cap for the jit-compiled sweeps")
    ap.add_argument("--seed", type=int, default=None,
                    help="seed for randomized geometry checks")
    args = ap.parse_args(argv)
    try:
        cfg = RunConfig.from_file(args.config)
    except (ConfigurationError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    if args.out:
        cfg.out_dir = args.out
    if args.seed is not None:
        cfg.seed = args.seed
    if args.threads:
        os.environ["NUMBA_NUM_THREADS"] = str(args.threads)
        try:
            import numba
            numba.set_num_threads(args.threads)
        except (ImportError, ValueError):
            pass
    if args.command == "all":
        suites = tuple(args.suite.split(",")) if args.suite else SUITES
    else:
        suites = (args.command,)
    try:
        rep = run(cfg, suites)
    except (ConfigurationError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    os.makedirs(cfg.out_dir, exist_ok=True)
    with open(os.path.join(cfg.out_dir, "report.json"), "w") as fh:
        fh.write(rep.to_json())
    emit_plot_data(rep, cfg.out_dir)
    for c in rep.checks:
        print(f"[{c.status:8s}] {c.name}: {c.value:.6g} ({c.runtime:.2f}s)")
    print(f"config hash: {cfg.config_hash}")
    return 1 if rep.failed else 0


if __name__ == "__main__":
    sys.exit(main())
