"""Command-line driver: ``phase-minmax <subcommand> [flags]``.

Exit codes: 0 when every check passes, 2 when a check fails, 1 on a usage
error (bad flags, bad config, inadmissible parameters).

Each run writes ``summary.json`` into ``--out`` together with the CSV/JSON
artifacts of the subcommand.  Floats are written with 17 significant digits
and no timing or host data is recorded, so identical inputs and thread count
give byte-identical files.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import os
import sys
from dataclasses import dataclass

import numpy as np

from . import competitor as comp
from .checkpoint import dump_field, fmt, load_field
from .config import SUBCOMMANDS, RunConfig, apply_overrides, load_config
from .energy import EnergyParams, constant_energy, stable_constants
from .errors import (
    AdmissibilityError, EigenError, FieldParseError, GridError, InfeasibleModelError,
    OptimizationError, ParameterError, PhaseMinmaxError, QuadratureError,
)
from .index import capacity_cutoff_test, jacobi_fd_spectrum, potential_term, stability_spectrum
from .manifold import SymmetricSphereGrid
from .minmax import RelaxOptions, run_minmax
from .parallel import THREADS_ENV, thread_count
from .potential import BETA_STANDARD, TruncatedProfile
from .slidepath import constant_segments, recovery_trace, slide_samples
from .tube import Interface, coarea_volume, coverage_count, sweep_check, tube_profile

__all__ = ["main", "run", "dump_field", "load_field", "Check", "RunResult"]

USAGE_ERRORS = (ParameterError, AdmissibilityError, GridError, FieldParseError)
CHECK_ERRORS = (InfeasibleModelError, OptimizationError, EigenError, QuadratureError)


# ---------------------------------------------------------------------------
# output helpers


def to_json(obj, indent=2, _level=0):
    """JSON text with every float at 17 significant digits (NaN/inf as null)."""
    pad = " " * (indent * (_level + 1))
    end = " " * (indent * _level)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{pad}{_json_str(str(k))}: {to_json(v, indent, _level + 1)}" for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + "\n" + end + "}"
    if isinstance(obj, (list, tuple)):
        if not obj:
            return "[]"
        items = [f"{pad}{to_json(v, indent, _level + 1)}" for v in obj]
        return "[\n" + ",\n".join(items) + "\n" + end + "]"
    if isinstance(obj, (bool, np.bool_)):
        return "true" if obj else "false"
    if obj is None:
        return "null"
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        return fmt(obj) if math.isfinite(obj) else "null"
    if isinstance(obj, str):
        return _json_str(obj)
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def _json_str(s):
    return json.dumps(s, ensure_ascii=False)


def write_json(path, obj):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(to_json(obj) + "\n")


def write_csv(path, header, rows):
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([fmt(x) if isinstance(x, (float, np.floating)) else x for x in row])


@dataclass
class Check:
    name: str
    passed: bool
    value: object = None
    threshold: object = None

    def as_dict(self):
        return {"name": self.name, "passed": bool(self.passed), "value": self.value,
                "threshold": self.threshold}


@dataclass
class RunResult:
    subcommand: str
    exit_code: int
    summary: dict
    artifacts: list


def _finish(sub, cfg, out, results, checks, constants, artifacts):
    passed = all(c.passed for c in checks)
    summary = {
        "subcommand": sub,
        "config": cfg.as_dict(),
        "threads": thread_count(),
        "constants": constants,
        "results": results,
        "checks": [c.as_dict() for c in checks],
        "passed": passed,
        "exit_code": 0 if passed else 2,
    }
    path = os.path.join(out, "summary.json")
    write_json(path, summary)
    return RunResult(sub, summary["exit_code"], summary, [path] + artifacts)


def _well_constants(p):
    prof = TruncatedProfile(p.eps, p.well)
    return {"sigma": p.sigma, "beta": BETA_STANDARD, "Lambda": prof.Lambda,
            "support_2_eps_Lambda": prof.support}


# ---------------------------------------------------------------------------
# subcommands


def _run_minmax(cfg: RunConfig, out):
    grid = SymmetricSphereGrid(cfg.ambient_dim, cfg.grid)
    p = EnergyParams(cfg.epsilon, cfg.lam)
    sc = stable_constants(p)
    mb = cfg.minmax
    opts = RelaxOptions(step_fraction=mb.step_fraction, tol=mb.tol, max_sweeps=mb.max_sweeps)
    res = run_minmax(grid, p, cfg.path_nodes, opts, newton_tol=mb.newton_tol)
    M = Interface.cmc(cfg.lam, cfg.ambient_dim)
    vol = grid.geometry_constants().vol
    Fa, Fb = (float(constant_energy(c, p, vol)) for c in (sc.a_eps, sc.b_eps))
    trace, slide = recovery_trace(M, p, grid=grid)
    _, e1, _, e2 = constant_segments(p, vol)
    grid_path_max = float(max(np.max(trace.energy_grid), e1.max(), e2.max()))
    geo = stability_spectrum(M, cfg.lam, M.n)
    checks = [
        Check("newton residual <= tol", res.residual <= mb.newton_tol, res.residual, mb.newton_tol),
        Check("beta_eps > max(F(a_eps), F(b_eps))", res.beta_eps > max(Fa, Fb), res.beta_eps, max(Fa, Fb)),
        Check("morse index == 1", res.morse_index == 1, res.morse_index, 1),
        Check("one interface component", res.sign_changes == 1, res.sign_changes, 1),
        Check("interface within one cell of the CMC latitude",
              abs(res.interface_theta_estimate - M.theta_star) <= grid.dtheta,
              abs(res.interface_theta_estimate - M.theta_star), grid.dtheta),
        Check("beta_eps <= recovery path max", res.beta_eps <= grid_path_max, res.beta_eps, grid_path_max),
        Check("geometric index == PDE morse index", geo.index == res.morse_index, geo.index, res.morse_index),
    ]
    tpath = os.path.join(out, "minmax_trace.csv")
    write_csv(tpath, ("sweep", "max_energy", "residual"),
              [(int(s), float(e), float(r)) for s, e, r in res.relax.trace])
    rpath = os.path.join(out, "minmax_result.json")
    write_json(rpath, {"config": cfg.as_dict(), **res.summary()})
    upath = dump_field(os.path.join(out, "u_crit.csv"), res.newton.u, grid)
    results = {
        **res.summary(),
        "F_a_eps": Fa, "F_b_eps": Fb,
        "recovery_path_max_grid": grid_path_max,
        "recovery_path_max_coarea": slide.max_path_energy,
        "A2": slide.A2,
        "cmc_latitude": M.theta_star,
        "sign_changes": res.sign_changes,
        "relax_converged": res.relax.converged,
        "newton_converged": res.newton.converged,
        "eigenvalues": [float(x) for x in res.morse.eigenvalues[:6]],
        "geometric_index": geo.index,
    }
    constants = {"a_eps": sc.a_eps, "b_eps": sc.b_eps, "c_eps": sc.c_eps, "eps0": p.eps0(),
                 **_well_constants(p)}
    return _finish("minmax", cfg, out, results, checks, constants, [tpath, rpath, upath])


def _run_slide(cfg: RunConfig, out):
    M = Interface.cmc(cfg.lam, cfg.ambient_dim)
    p = EnergyParams(cfg.epsilon, cfg.lam)
    sc = stable_constants(p)
    sb = cfg.slide
    grid = SymmetricSphereGrid(cfg.ambient_dim, cfg.grid) if sb.grid_check else None
    t = slide_samples(M, p, sb.samples, sb.samples)
    trace, s0 = recovery_trace(M, p, grid=None, t=t)
    tau = 0.05 * s0.A2 if cfg.tau is None else cfg.tau
    trace, s = recovery_trace(M, p, grid=grid, tau=tau, t=t)
    support = TruncatedProfile(p.eps, p.well).support
    checks = [
        Check("wall: H(M) > lambda vol(E)", s.wall_lhs > s.wall_rhs, s.wall_lhs, s.wall_rhs),
        Check("|argmax t| <= 2 eps Lambda", abs(s.argmax_t) <= support, s.argmax_t, support),
        Check("recovery path max < A2 + tau", s.max_path_energy < s.A2 + tau, s.max_path_energy, s.A2 + tau),
    ]
    results = {**s.as_dict(), "tau": tau, "support_2_eps_Lambda": support,
               "max_relative_to_A2": s.max_energy / s.A2 - 1.0}
    if grid is not None:
        scale = float(np.max(np.abs(trace.energy_coarea)))
        gap = float(np.max(np.abs(trace.energy_coarea - trace.energy_grid)))
        checks.append(Check("co-area and grid energies agree", gap <= sb.agree_rtol * scale,
                            gap / scale, sb.agree_rtol))
        results["coarea_grid_gap_relative"] = gap / scale
    path = os.path.join(out, "slide_trace.csv")
    write_csv(path, ("t", "energy_coarea", "energy_grid"),
              [(float(a), float(b), float(c)) for a, b, c in trace.rows()])
    constants = {"a_eps": sc.a_eps, "b_eps": sc.b_eps, "c_eps": sc.c_eps, **_well_constants(p)}
    return _finish("slide", cfg, out, results, checks, constants, [path])


def _run_tube(cfg: RunConfig, out):
    tb = cfg.tube
    M = (Interface.cmc(cfg.lam, cfg.ambient_dim) if tb.theta_star is None
         else Interface(tb.theta_star, cfg.ambient_dim))
    lam, m = M.mean_curvature, float(M.n)
    t = np.linspace(M.sigma_minus, M.sigma_plus, tb.samples)[1:-1]
    prof = tube_profile(M, t, lam, m)
    pos, neg = t > 0, t < 0
    tol = 1e-12
    h_gap_pos = float(np.min(prof.H[pos] - prof.bound_H[pos])) if pos.any() else 0.0
    h_gap_neg = float(np.max(prof.H[neg] - prof.bound_H[neg])) if neg.any() else 0.0
    theta_gap = float(np.max(prof.theta - prof.bound_theta))
    # finite differences need the level set well away from the poles
    inner = np.sin(M.theta_star - t) >= 0.1
    h = tb.fd_step
    ti = t[inner]
    dlog = (np.log(tube_profile(M, ti + h).theta) - np.log(tube_profile(M, ti - h).theta)) / (2 * h)
    ode = float(np.max(np.abs(dlog + prof.H[inner])))
    dH = (tube_profile(M, ti + h).H - tube_profile(M, ti - h).H) / (2 * h)
    ricc = float(np.min(dH - m))
    sw = sweep_check(M, lam)
    vol = coarea_volume(M)
    grid = SymmetricSphereGrid(cfg.ambient_dim, cfg.grid)
    cover = coverage_count(grid, M)
    checks = [
        Check("H_t >= lambda + m t for t > 0", h_gap_pos >= -tol, h_gap_pos, 0.0),
        Check("H_t <= lambda + m t for t < 0", h_gap_neg <= tol, h_gap_neg, 0.0),
        Check("theta_t <= exp(-t(lambda + m t / 2))", theta_gap <= tol, theta_gap, 0.0),
        Check("d/dt log theta_t + H_t = 0", ode <= tb.ode_tol, ode, tb.ode_tol),
        Check("d/dt H_t >= m", ricc >= -tb.ode_tol, ricc, -tb.ode_tol),
        Check("F_lambda(E_t) <= F_lambda(E_0)", sw.passed, sw.max_value, sw.value_at_zero),
        Check("co-area volume", abs(vol / M.total_volume - 1) <= 5e-3, vol, M.total_volume),
        Check("every grid node reached", cover == grid.K, cover, grid.K),
    ]
    path = os.path.join(out, "tube_sweep.csv")
    write_csv(path, ("t", "level_measure", "H", "theta", "bound_H", "bound_theta"),
              [tuple(float(x) for x in r) for r in prof.rows()])
    results = {
        "theta_star": M.theta_star, "lambda": lam, "m": m,
        "sigma_minus": M.sigma_minus, "sigma_plus": M.sigma_plus,
        "level_measure_0": M.area, "F_lambda_E0": sw.value_at_zero,
        "ode_residual": ode, "coarea_volume": vol, "total_volume": M.total_volume,
    }
    return _finish("tube", cfg, out, results, checks, {"m": m}, [path])


def _model(cfg: RunConfig):
    cb = cfg.competitor
    return comp.build_model(n=cb.n, R=cb.radius, C1=cb.c1, lam=cfg.lam, m=cb.m,
                            S_minus=cb.s_minus, S_plus=cb.s_plus)


def _run_competitor(cfg: RunConfig, out):
    cb = cfg.competitor
    model = _model(cfg)
    ledger = comp.choose_constants(model, tau_fraction=cb.tau_fraction)
    eps = cb.eps_factor * ledger.eps_tau.value
    rep = comp.contradiction_path(model, ledger, eps, tau=cfg.tau, samples=cb.samples)
    vs = ledger.varsigma
    sigma = ledger.measured["sigma"]
    k1 = comp.kappa(model, ledger, eps, 1.0)
    checks = [
        Check("ledger inequalities", ledger.passed, len(ledger.failures()), 0),
        Check("kappa(1) < -sigma/3", k1 < -sigma / 3, k1, -sigma / 3),
        Check("contradiction path verdict", rep.verdict, rep.max_excess, rep.bound),
    ]
    lpath = os.path.join(out, "ledger.json")
    write_json(lpath, {"config": cfg.as_dict(), "model": model.as_dict(), "ledger": ledger.as_dict()})
    tpath = os.path.join(out, "competitor_trace.csv")
    write_csv(tpath, ("segment", "r", "energy", "bound"),
              [(s, float(r), float(e), float(b)) for s, r, e, b in rep.rows])
    results = {**rep.summary(), "eps_tau": ledger.eps_tau.value, "kappa_1": k1,
               "margin_over_varsigma": rep.margin / vs, "tube_checks": model.tube_checks()}
    constants = {"model": model.as_dict(), "measured": ledger.as_dict()["measured"],
                 **{e.name: e.value for e in ledger.entries()}}
    return _finish("competitor", cfg, out, results, checks, constants, [lpath, tpath])


def _run_index(cfg: RunConfig, out):
    ib = cfg.index
    M = Interface.cmc(cfg.lam, cfg.ambient_dim)
    spec = stability_spectrum(M, cfg.lam, M.n, ib.kmax)
    cert = capacity_cutoff_test(M)
    fd_vals, fd_idx, fd_nul = jacobi_fd_spectrum(M, ib.fd_nodes, 10, ib.fd_tol)
    exact = spec.eigenvalues[:fd_vals.size]
    scale = potential_term(M)
    # discretization error grows with the degree, so compare relative to each eigenvalue
    fd_err = float(np.max(np.abs(fd_vals - exact) / np.maximum(np.abs(exact), scale)))
    checks = [
        Check("index >= 1", spec.index >= 1, spec.index, 1),
        Check("B_M(1,1) < 0", cert.negative, cert.value, 0.0),
        Check("B_M(1,1) == kappa_1 |M|", cert.consistent, cert.value, cert.spectral_value),
        Check("finite-difference index and nullity", (fd_idx, fd_nul) == (spec.index, spec.nullity),
              [fd_idx, fd_nul], [spec.index, spec.nullity]),
        Check("finite-difference eigenvalues", fd_err <= ib.fd_tol, fd_err, ib.fd_tol),
    ]
    spath = os.path.join(out, "spectrum.json")
    write_json(spath, {"config": cfg.as_dict(), **spec.summary()})
    results = {**spec.summary(), "certificate": cert.as_dict(),
               "fd_eigenvalues": [float(x) for x in fd_vals], "fd_max_error": fd_err}
    return _finish("index", cfg, out, results, checks, {"potential_term": scale}, [spath])


ERROR_COLUMNS = ("eps", "support", "measure_sigma_minus_above", "q1_int", "q2_int", "p1_max", "p2",
                 "m1", "m2", "M_total", "R_eps")
DECAY_KEYS = ("measure_sigma_minus_above", "q1_int", "q2_int", "p1_max", "p2", "M_total")


def _decreasing(x):
    """|x| strictly decreasing (monotone approach to 0, either sign)."""
    a = np.abs(np.asarray(x, dtype=float))
    return bool(np.all(a[1:] < a[:-1]))


def _run_errors(cfg: RunConfig, out):
    model = _model(cfg)
    ledger = comp.choose_constants(model, tau_fraction=cfg.competitor.tau_fraction, find_eps=False)
    table = comp.decay_table(model, ledger, cfg.errors.eps_values)
    checks = [Check(f"|{k}| decreasing", _decreasing([r[k] for r in table]), [r[k] for r in table])
              for k in DECAY_KEYS]
    for name in table[0]["M_max"]:
        col = [r["M_max"][name] for r in table]
        checks.append(Check(f"max_r M_eps[{name}] decreasing", _decreasing(col), col))
    path = os.path.join(out, "errors.csv")
    write_csv(path, ERROR_COLUMNS, [tuple(float(r[k]) for k in ERROR_COLUMNS) for r in table])
    results = {"table": table}
    constants = {"model": model.as_dict(), **{e.name: e.value for e in ledger.entries()},
                 "varsigma": ledger.varsigma}
    return _finish("errors", cfg, out, results, checks, constants, [path])


RUNNERS = {
    "minmax": _run_minmax, "slide": _run_slide, "tube": _run_tube,
    "competitor": _run_competitor, "index": _run_index, "errors": _run_errors,
}


def run(subcommand, config: RunConfig, out="."):
    """Run one subcommand; returns a :class:`RunResult`.

    Usage errors propagate as :class:`ParameterError` (or another usage
    exception); failed checks give ``exit_code == 2``.
    """
    if subcommand not in RUNNERS:
        raise ParameterError(f"unknown subcommand {subcommand!r}; choose from {', '.join(SUBCOMMANDS)}")
    config.validate()
    os.makedirs(out, exist_ok=True)
    return RUNNERS[subcommand](config, out)


# ---------------------------------------------------------------------------
# argument parsing


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def build_parser():
    ap = _Parser(prog="phase-minmax",
                 description="Allen-Cahn min-max solver and verification harness.",
                 epilog=f"{THREADS_ENV} caps worker threads (default 1).")
    sub = ap.add_subparsers(dest="subcommand", metavar="subcommand")
    sub.required = True
    helps = {
        "minmax": "relax the recovery path, refine the saddle, compute its Morse index",
        "slide": "sliding-profile trace, limit energy A2 and the wall inequality",
        "tube": "level-set sweep and tube inequality report",
        "competitor": "constants ledger and contradiction-path verdict",
        "index": "Jacobi spectrum of the CMC latitude",
        "errors": "decay table of the remainder terms",
    }
    for name in SUBCOMMANDS:
        sp = sub.add_parser(name, help=helps[name], description=helps[name])
        sp.add_argument("--manifold", choices=("s2", "s3"), type=str.lower)
        sp.add_argument("--grid", type=int, metavar="K")
        sp.add_argument("--epsilon", type=float)
        sp.add_argument("--lambda", dest="lam", type=float)
        sp.add_argument("--tau", type=float)
        sp.add_argument("--path-nodes", dest="path_nodes", type=int, metavar="P")
        sp.add_argument("--config", metavar="FILE")
        sp.add_argument("--out", default="phase_minmax_out", metavar="DIR")
    return ap


def main(argv=None):
    ap = build_parser()
    args = ap.parse_args(argv)
    try:
        thread_count()
        cfg = load_config(args.config, validate=False) if args.config else RunConfig()
        apply_overrides(cfg, manifold=args.manifold, grid=args.grid, epsilon=args.epsilon,
                        lam=args.lam, tau=args.tau, path_nodes=args.path_nodes)
        result = run(args.subcommand, cfg, args.out)
    except USAGE_ERRORS as exc:
        print(f"phase-minmax {args.subcommand}: error: {exc}", file=sys.stderr)
        return 1
    except CHECK_ERRORS as exc:
        print(f"phase-minmax {args.subcommand}: FAIL: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2
    except PhaseMinmaxError as exc:
        print(f"phase-minmax {args.subcommand}: error: {exc}", file=sys.stderr)
        return 1
    for c in result.summary["checks"]:
        print(f"{'PASS' if c['passed'] else 'FAIL'}  {c['name']}")
    print(f"{args.subcommand}: {'PASS' if result.exit_code == 0 else 'FAIL'} "
          f"-> {os.path.join(args.out, 'summary.json')}")
    return result.exit_code


if __name__ == "__main__":
    sys.exit(main())
