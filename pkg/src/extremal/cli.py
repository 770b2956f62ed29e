"""Command-line driver: ``python3 -m extremal <command> --config run.ini``.

Exit codes: 0 all checks pass, 1 usage or configuration error, 2 numerical
failure, 3 a guaranteed property was violated.
"""
from __future__ import annotations

import argparse
import configparser
import logging
import math
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from .continuation import (ContinuationOptions, extremal_estimate, solve_minimal, trace_ray,
                           trace_upsilon)
from .core import ParamPoint, RadialMesh, SystemSpec, default_grading, make_mesh
from .errors import ConfigError, DomainError, ExtremalError, NonConvergence
from .records import (BRANCH_COLUMNS, PROFILE_COLUMNS, UPSILON_COLUMNS, VERDICT_COLUMNS,
                      branch_rows, profile_rows, upsilon_rows, write_csv, write_json)
from .stability import dirichlet_mu1, inequality_sweep
from .verify import (check_pointwise_G, check_pointwise_H, check_power_integrals,
                     fit_blowup, stabpol_sides, threshold_report)

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC, EXIT_VIOLATION = 0, 1, 2, 3

log = logging.getLogger("extremal")


@dataclass
class RunConfig:
    variant: str = "E"
    p: Optional[float] = None
    q: Optional[float] = None
    M: int = 256
    N: float = 2.0
    grading: Optional[float] = None
    lam: Optional[float] = None
    gamma: Optional[float] = None
    sigma: float = 1.0
    sigmas: tuple = ()
    seed: Optional[int] = None
    min_step: float = 1e-8
    lambda0: Optional[float] = None
    n_test: int = 100
    window: Optional[tuple] = None
    stabpol_t: tuple = (1.5, 2.0)
    power_t: float = 1.5
    workers: int = 1
    extra: dict = field(default_factory=dict)

    def spec(self) -> SystemSpec:
        if self.variant == "E":
            return SystemSpec("E")
        if self.p is None or self.q is None:
            raise ConfigError(f"variant {self.variant} needs p and q in [spec]")
        try:
            return SystemSpec.power(self.variant, self.p, self.q)
        except DomainError as exc:
            raise ConfigError(str(exc)) from exc

    def mesh(self) -> RadialMesh:
        g = self.grading if self.grading is not None else default_grading(self.N)
        try:
            return make_mesh(self.M, self.N, g)
        except DomainError as exc:
            raise ConfigError(str(exc)) from exc

    def options(self) -> ContinuationOptions:
        return ContinuationOptions(min_step=self.min_step, lambda0=self.lambda0)

    def describe(self) -> dict:
        return {"variant": self.variant, "p": self.p, "q": self.q, "M": self.M, "N": self.N,
                "grading": self.grading if self.grading is not None else default_grading(self.N),
                "sigma": self.sigma, "seed": self.seed, "min_step": self.min_step,
                "lambda0": self.lambda0}


def _floats(text):
    return tuple(float(x) for x in text.replace(",", " ").split())


def load_config(path) -> RunConfig:
    cp = configparser.ConfigParser()
    try:
        if not cp.read(path):
            raise ConfigError(f"cannot read config file {path}")
    except configparser.Error as exc:
        raise ConfigError(f"malformed config: {exc}") from exc
    for sec in cp.sections():
        if sec not in ("spec", "mesh", "run"):
            raise ConfigError(f"unknown section [{sec}]")
    cfg = RunConfig()
    try:
        s, m, r = (cp[x] if cp.has_section(x) else {} for x in ("spec", "mesh", "run"))
        cfg.variant = s.get("variant", "E").strip().upper()
        if "p" in s:
            cfg.p = float(s["p"])
        if "q" in s:
            cfg.q = float(s["q"])
        cfg.M = int(m.get("M", m.get("m", 256)))
        cfg.N = float(m.get("N", m.get("n", 2)))
        if "grading" in m:
            cfg.grading = float(m["grading"])
        if "lambda" in r:
            cfg.lam = float(r["lambda"])
        if "gamma" in r:
            cfg.gamma = float(r["gamma"])
        cfg.sigma = float(r.get("sigma", 1.0))
        if "sigmas" in r:
            cfg.sigmas = _floats(r["sigmas"])
        if "seed" in r:
            cfg.seed = int(r["seed"])
        cfg.min_step = float(r.get("min_step", 1e-8))
        if "lambda0" in r:
            cfg.lambda0 = float(r["lambda0"])
        cfg.n_test = int(r.get("n_test", 100))
        if "window" in r:
            cfg.window = _floats(r["window"])
        if "stabpol_t" in r:
            cfg.stabpol_t = _floats(r["stabpol_t"])
        cfg.power_t = float(r.get("power_t", 1.5))
        cfg.workers = int(r.get("workers", 1))
    except (ValueError, KeyError) as exc:
        raise ConfigError(f"bad config value: {exc}") from exc
    if cfg.variant not in ("G", "H", "E"):
        raise ConfigError(f"variant must be G, H or E, got {cfg.variant!r}")
    if not cfg.sigma > 0:
        raise ConfigError("sigma must be positive")
    if cfg.window is not None and len(cfg.window) != 2:
        raise ConfigError("window needs two numbers r_lo, r_hi")
    return cfg


# ---------------------------------------------------------------- commands

def cmd_solve(cfg: RunConfig, out: Path) -> int:
    if cfg.lam is None or cfg.gamma is None:
        raise ConfigError("solve needs lambda and gamma in [run]")
    try:
        p = ParamPoint(cfg.lam, cfg.gamma)
    except DomainError as exc:
        raise ConfigError(str(exc)) from exc
    spec, mesh = cfg.spec(), cfg.mesh()
    rec = {"command": "solve", "config": cfg.describe(), "lambda": p.lam, "gamma": p.gamma}
    try:
        pt = solve_minimal(spec, mesh, p, cfg.options())
    except ExtremalError as exc:
        rec.update(status="failed", error=f"{type(exc).__name__}: {exc}",
                   residual=getattr(exc, "residual", math.nan))
        write_json(out / "record.json", rec)
        print(f"solve failed: {exc}")
        return EXIT_NUMERIC
    sol = pt.sol
    symmetric = bool(np.max(np.abs(sol.u - sol.v)) <= 1e-8 * max(1.0, sol.sup_u))
    rec.update(status="ok", residual=pt.residual, eta=pt.eta, u0=float(sol.u[0]),
               v0=float(sol.v[0]), sup_u=sol.sup_u, sup_v=sol.sup_v, u_equals_v=symmetric)
    write_csv(out / "profile.csv", PROFILE_COLUMNS, profile_rows(sol))
    write_json(out / "record.json", rec)
    print(f"sup u = {sol.sup_u:.6g}  sup v = {sol.sup_v:.6g}  eta = {pt.eta:.6g}")
    return EXIT_OK


def _trace(cfg, spec, mesh):
    br = trace_ray(spec, mesh, cfg.sigma, cfg.options())
    if br.fold is None or not br.fold.converged:
        raise NonConvergence("fold not bracketed within max_steps")
    return br


def _fold_record(br):
    f = br.fold
    return {"lambda_star": f.lambda_star, "lambda_ok": f.lambda_ok, "lambda_fail": f.lambda_fail,
            "bracket_width": f.width, "converged": f.converged, "n_points": len(br.points),
            "events": [list(e) for e in br.events]}


def cmd_trace(cfg: RunConfig, out: Path) -> int:
    spec, mesh = cfg.spec(), cfg.mesh()
    rec = {"command": "trace", "config": cfg.describe()}
    try:
        br = _trace(cfg, spec, mesh)
    except ExtremalError as exc:
        rec.update(status="failed", error=f"{type(exc).__name__}: {exc}")
        write_json(out / "record.json", rec)
        print(f"trace failed: {exc}")
        return EXIT_NUMERIC
    sol = extremal_estimate(br)
    write_csv(out / "branch.csv", BRANCH_COLUMNS, branch_rows(br))
    write_csv(out / "profile.csv", PROFILE_COLUMNS, profile_rows(sol))
    floor = -1e-6 * dirichlet_mu1(mesh)
    eta_ok = all(pt.eta >= floor for pt in br.points)
    rec.update(status="ok", fold=_fold_record(br), eta_min=min(pt.eta for pt in br.points),
               eta_ok=eta_ok, sup_u=sol.sup_u, sup_v=sol.sup_v)
    write_json(out / "record.json", rec)
    f = br.fold
    print(f"lambda_star ≈ {f.lambda_star:.2f}  bracket ({f.lambda_ok:.10g}, {f.lambda_fail:.10g})"
          f"  sup u = {sol.sup_u:.6g}")
    return EXIT_OK if eta_ok else EXIT_VIOLATION


def cmd_upsilon(cfg: RunConfig, out: Path) -> int:
    spec, mesh = cfg.spec(), cfg.mesh()
    sigmas = cfg.sigmas or (cfg.sigma,)
    try:
        curve = trace_upsilon(spec, mesh, sigmas, cfg.options(), workers=cfg.workers)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    write_csv(out / "upsilon.csv", UPSILON_COLUMNS, upsilon_rows(curve))
    failed = [s for s in curve.samples if not s.ok]
    write_json(out / "record.json", {
        "command": "upsilon", "config": cfg.describe(), "sigmas": [s.sigma for s in curve.samples],
        "errors": {fmt_sigma(s.sigma): s.error for s in failed}})
    for s in curve.samples:
        print(f"sigma = {s.sigma:<8g} lambda* = {s.lambda_star:.10g}  gamma* = {s.gamma_star:.10g}"
              + (f"  [{s.error}]" if s.error else ""))
    return EXIT_NUMERIC if failed else EXIT_OK


def fmt_sigma(s: float) -> str:
    return format(s, ".17g")


def _verdicts(cfg, spec, mesh, br):
    """(name, value, passed, guaranteed) rows; guaranteed rows decide the exit code."""
    rows = []
    mu1 = dirichlet_mu1(mesh)
    eta_min = min(pt.eta for pt in br.points)
    rows.append(("eta_min", eta_min, eta_min >= -1e-6 * mu1, True))
    seed = cfg.seed
    kinds = {"G": ["gra"], "H": ["twist"], "E": []}[spec.variant] + ["radialstab"]
    # the radial inequality is proven for the gradient system; for the others
    # it follows on the diagonal of a symmetric system only
    radial_ok = spec.variant == "G" or (spec.is_symmetric and cfg.sigma == 1.0)
    for kind in kinds:
        worst, ok = math.inf, True
        for i, pt in enumerate(br.points):
            res = inequality_sweep(kind, spec, mesh, pt.sol.param, pt.sol, n=cfg.n_test,
                                   seed=seed + i)
            worst = min(worst, res.min_relative)
            ok &= res.passed
        rows.append((f"{kind}_min_rel_margin", worst, ok, kind != "radialstab" or radial_ok))
    if spec.variant in ("G", "H"):
        pe, qe = spec.exponents
        lam_s, gam_s = br.fold.lambda_star, cfg.sigma * br.fold.lambda_star
        rep = threshold_report(pe, qe, lam_s, gam_s, mesh.N)
        for v in rep.verdicts.values():
            if v.applicable:
                rows.append((f"threshold_{v.name}", v.slack, v.passed, False))
        tol = 10 * cfg.options().newton.tol
        if spec.variant == "G" and cfg.sigma * qe <= pe:
            worst = min(min(check_pointwise_G(spec, pt.sol)) for pt in br.points)
            rows.append(("pointwise_G_min_slack", worst, worst >= -tol, True))
        if spec.variant == "H" and cfg.sigma * pe <= qe:
            worst = min(check_pointwise_H(spec, pt.sol) for pt in br.points)
            rows.append(("pointwise_H_min_slack", worst, worst >= -tol, True))
        if spec.variant == "G":
            mid = br.points[len(br.points) // 2]
            for t in cfg.stabpol_t:
                lhs, rhs = stabpol_sides(spec, mesh, mid.sol, t, t)
                rows.append((f"stabpol_t{t:g}_margin", rhs - lhs, rhs - lhs >= -1e-6 * abs(rhs), True))
        if spec.variant == "H":
            t = cfg.power_t
            res = check_power_integrals(spec, mesh, br, t, t)
            rows.append(("power_integrals_growth", res.growth, res.bounded, False))
            rows.append(("power_integrals_cauchy_schwarz", res.sup_1, res.cauchy_schwarz_ok, True))
    else:
        lam_s = br.fold.lambda_star
        rep = threshold_report(2.0, 2.0, lam_s, cfg.sigma * lam_s, mesh.N)
        v = rep["exp"]
        rows.append(("threshold_exp", v.slack, v.passed, False))
    return rows


def cmd_verify(cfg: RunConfig, out: Path) -> int:
    if cfg.seed is None:
        raise ConfigError("verify needs a seed ([run] seed or --seed)")
    spec, mesh = cfg.spec(), cfg.mesh()
    try:
        br = _trace(cfg, spec, mesh)
    except ExtremalError as exc:
        write_json(out / "record.json", {"command": "verify", "config": cfg.describe(),
                                         "status": "failed", "error": f"{type(exc).__name__}: {exc}"})
        print(f"verify failed: {exc}")
        return EXIT_NUMERIC
    rows = _verdicts(cfg, spec, mesh, br)
    write_csv(out / "verdicts.csv", VERDICT_COLUMNS, rows)
    write_csv(out / "branch.csv", BRANCH_COLUMNS, branch_rows(br))
    violated = [r[0] for r in rows if r[3] and not r[2]]
    write_json(out / "record.json", {"command": "verify", "config": cfg.describe(), "status": "ok",
                                     "fold": _fold_record(br), "violated": violated})
    for name, value, passed, guaranteed in rows:
        tag = "PASS" if passed else "FAIL"
        print(f"{tag}  {name:<34} {value: .6g}" + ("" if guaranteed else "  (condition)"))
    return EXIT_VIOLATION if violated else EXIT_OK


def cmd_ratefit(cfg: RunConfig, out: Path) -> int:
    spec, mesh = cfg.spec(), cfg.mesh()
    try:
        br = _trace(cfg, spec, mesh)
        fit = fit_blowup(br, cfg.window)
    except DomainError as exc:
        raise ConfigError(str(exc)) from exc
    except ExtremalError as exc:
        write_json(out / "record.json", {"command": "ratefit", "config": cfg.describe(),
                                         "status": "failed", "error": f"{type(exc).__name__}: {exc}"})
        print(f"ratefit failed: {exc}")
        return EXIT_NUMERIC
    sol = extremal_estimate(br)
    write_csv(out / "profile.csv", PROFILE_COLUMNS, profile_rows(sol))
    write_csv(out / "branch.csv", BRANCH_COLUMNS, branch_rows(br))
    write_json(out / "record.json", {
        "command": "ratefit", "config": cfg.describe(), "status": "ok", "fold": _fold_record(br),
        "regime": fit.regime, "slope": fit.slope, "log_coeff": fit.log_coeff,
        "exponent": fit.exponent, "C": fit.C, "ratio": fit.ratio, "bound_ok": fit.bound_ok})
    print(f"regime {fit.regime}  exponent {fit.exponent:.5f}  slope {fit.slope:.5f}  "
          f"log coeff {fit.log_coeff:.5f}  bound_ok {fit.bound_ok}")
    return EXIT_OK if fit.bound_ok else EXIT_VIOLATION


COMMANDS = {"solve": cmd_solve, "trace": cmd_trace, "upsilon": cmd_upsilon,
            "verify": cmd_verify, "ratefit": cmd_ratefit}


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="extremal", description=__doc__.splitlines()[0])
    ap.add_argument("command", choices=sorted(COMMANDS))
    ap.add_argument("--config", required=True, help="INI file with [spec], [mesh], [run]")
    ap.add_argument("--out", default=".", help="output directory (created if missing)")
    ap.add_argument("--mesh-M", type=int, default=None, help="override [mesh] M")
    ap.add_argument("--seed", type=int, default=None, help="override [run] seed")
    ap.add_argument("-v", "--verbose", action="store_true")
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_CONFIG
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING)
    try:
        cfg = load_config(args.config)
        if args.mesh_M is not None:
            cfg.M = args.mesh_M
        if args.seed is not None:
            cfg.seed = args.seed
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        return COMMANDS[args.command](cfg, out)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
