"""Batch command-line front door.

Subcommands map one-to-one onto the library: `indices` (structural indices
and hypothesis tables), `certify` (parameter synthesis plus grid
certification), `solve` (radial profiles to CSV), `verify` (estimate checks),
`appendix` (the exact-family verification bundle), `implications` (corpus
arrow checks), and `suite` (the acceptance battery).

Reports are canonical JSON (sorted keys, 17 significant digits) embedding a
content hash of the run configuration, so identical configurations produce
byte-identical files.  Exit codes: 0 success, 1 a verification failed,
2 usage or configuration error.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import acceptance
from . import constants as ct
from . import modelspace as ms
from . import nonlinearity as nl
from . import pdelab as pde
from . import relations as rel
from . import reporting
from .errors import ConfigError, LabError


def parse_nonlinearity(text: str) -> nl.NonlinearitySpec:
    if text.strip().startswith("{"):
        return nl.from_json(json.loads(text))
    kind, _, rest = text.partition(":")
    kind = kind.strip().lower()
    try:
        if kind == "power":
            return nl.power(float(rest))
        if kind == "powersum":
            terms = [tuple(float(x) for x in grp.split(","))
                     for grp in rest.split(";")]
            return nl.power_sum(terms)
        if kind in ("lich", "lichnerowicz"):
            a, b, sigma, c, tau = (float(x) for x in rest.split(","))
            return nl.lichnerowicz(a, b, sigma, c, tau)
    except (ValueError, TypeError) as exc:
        raise ConfigError(f"bad nonlinearity {text!r}: {exc}") from exc
    raise ConfigError(f"unknown nonlinearity {text!r}")


def parse_space(text: str) -> ms.WeightedSpace:
    if text.strip().startswith("{"):
        return ms.from_json(json.loads(text))
    kind, _, rest = text.partition(":")
    kind = kind.strip().lower()
    try:
        if kind == "flat":
            parts = rest.split(":")
            n = int(parts[0])
            N = float(parts[1]) if len(parts) > 1 else None
            return ms.flat(n, N)
        if kind == "appendix":
            N, alpha, K = (float(x) for x in rest.split(","))
            return ms.appendix_space(N, alpha, K).space
    except (ValueError, TypeError, LabError) as exc:
        raise ConfigError(f"bad space {text!r}: {exc}") from exc
    raise ConfigError(f"unknown space {text!r}")


def _write_report(obj: dict, out: str | None, default_name: str) -> Path:
    path = Path(out) if out else Path(default_name)
    reporting.dump(obj, path)
    return path


def _config_dict(args, keys) -> dict:
    return {k: getattr(args, k) for k in keys if getattr(args, k, None) is not None}


# --- subcommands -------------------------------------------------------------


def cmd_indices(args) -> int:
    spec = parse_nonlinearity(args.f)
    idx = nl.compute_indices(spec)
    N = args.N
    report = {"nonlinearity": nl.to_json(spec), "indices": idx.as_dict()}
    if N is not None:
        upper = idx.upper if idx.upper_finite else None
        es = nl.critical_exponents(N, upper if N > 1 else None)
        report["exponents"] = es.as_dict()
        hyp = {}
        for thm in ("1.3", "1.7"):
            hyp[thm] = nl.check_hypotheses(spec, N, thm, indices=idx).as_dict()
        if args.alpha is not None:
            hyp["1.5"] = nl.check_hypotheses(spec, N, "1.5", alpha=args.alpha,
                                             indices=idx).as_dict()
        report["hypotheses"] = hyp
    cfg = _config_dict(args, ("f", "N", "alpha", "seed"))
    report["config_hash"] = reporting.config_hash(cfg)
    path = _write_report(report, args.out, "indices.json")
    print(f"wrote {path}")
    return 0


def cmd_certify(args) -> int:
    spec = parse_nonlinearity(args.f)
    if args.N is None:
        raise ConfigError("certify needs --N")
    if args.theorem is None:
        raise ConfigError("certify needs --theorem")
    idx = nl.compute_indices(spec)
    cert = ct.synthesize(args.N, idx, args.theorem, spec=spec,
                         alpha=args.alpha, delta=args.delta)
    cert = ct.certify(cert, spec, args.N)
    report = cert.as_dict()
    report["nonlinearity"] = nl.to_json(spec)
    cfg = _config_dict(args, ("f", "N", "theorem", "alpha", "delta", "seed"))
    report["config_hash"] = reporting.config_hash(cfg)
    path = _write_report(report, args.out, f"certificate_{cert.theorem}.json")
    print(f"wrote {path} (status: {cert.status}, "
          f"worst margin {cert.verification['worst_margin']:.3e})")
    return 0 if cert.status == "certified" else 1


def cmd_solve(args) -> int:
    spec = parse_nonlinearity(args.f)
    space = parse_space(args.space)
    if args.R is None or args.bv is None:
        raise ConfigError("solve needs --R and --bv")
    cfg = pde.SolverConfig(m=args.grid, tol=args.tol)
    prof = pde.solve_radial_bvp(space, spec, args.R, args.bv, cfg)
    header, cols = pde.profile_table(prof)
    path = Path(args.out) if args.out else Path("profile.csv")
    reporting.write_csv(path, header, cols)
    print(f"wrote {path} (residual {prof.residual_norm:.3e}, "
          f"{prof.meta['newton_iterations']} Newton steps)")
    if args.emit_plot_data:
        q = pde.estimate_quantity(prof, spec)
        reporting.write_csv(path.with_suffix(".plot.csv"), ["r", "diag"],
                            [prof.r, q])
        print(f"wrote {path.with_suffix('.plot.csv')}")
    return 0


def cmd_verify(args) -> int:
    spec = parse_nonlinearity(args.f)
    space = parse_space(args.space)
    if args.R is None or args.theorem is None:
        raise ConfigError("verify needs --R and --theorem")
    N = args.N if args.N is not None else float(space.N)
    idx = nl.compute_indices(spec)
    cert = ct.synthesize(N, idx, args.theorem, spec=spec,
                         alpha=args.alpha, delta=args.delta)
    cert = ct.certify(cert, spec, N)
    K = args.K if args.K is not None else ms.curvature_bound(space, 2 * args.R).K
    bv = args.bv if args.bv is not None else 0.5
    prof = pde.solve_radial_bvp(space, spec, args.R, bv,
                                pde.SolverConfig(m=args.grid, tol=args.tol))
    kind = pde._KIND_FOR_THEOREM[cert.theorem][0]
    rep = pde.check_estimate(prof, cert, K, args.R, kind)
    report = rep.as_dict()
    report["certificate"] = cert.as_dict()
    cfg = _config_dict(args, ("f", "space", "N", "K", "R", "theorem", "alpha",
                              "bv", "grid", "tol", "seed"))
    report["config_hash"] = reporting.config_hash(cfg)
    path = _write_report(report, args.out, "estimate.json")
    print(f"wrote {path} (kind {rep.kind}: measured {rep.measured:.6g} "
          f"vs bound {rep.bound:.6g} -> {'pass' if rep.passed else 'FAIL'})")
    return 0 if rep.passed else 1


def cmd_appendix(args) -> int:
    if args.N is None or args.alpha is None or args.K is None:
        raise ConfigError("appendix needs --N, --alpha and --K")
    asp = ms.appendix_space(args.N, args.alpha, args.K)
    r = np.linspace(0.0, 100.0, 20001)
    u, _, _, res = ms.appendix_solution(asp, r)
    rel_res = float(np.max(np.abs(res)) / np.max(u**asp.alpha))
    rng = np.random.default_rng(args.seed if args.seed is not None else 0)
    worst_eig = 0.0
    for _ in range(100):
        x = rng.normal(size=asp.n)
        x *= rng.uniform(0.01, 10.0) / np.linalg.norm(x)
        eig = np.linalg.eigvalsh(ms.ricci_tensor(asp.space, x))
        rr = float(np.linalg.norm(x))
        expected = np.sort(np.array(
            [float(ms.radial_eigenvalue(asp.space, rr))]
            + [float(ms.tangential_eigenvalue(asp.space, rr))] * (asp.n - 1)))
        worst_eig = max(worst_eig, float(np.max(np.abs(eig - expected))))
    curv = ms.curvature_bound(asp.space, 50.0 * asp.mu)
    sup, ratio, argmax = ms.sharpness_quantity(asp)
    checks = {
        "residual_ok": rel_res <= 1e-10,
        "eigenvalues_ok": worst_eig <= 1e-10,
        "curvature_round_trip_ok": abs(curv.K - args.K) <= 1e-10 * args.K,
    }
    report = {
        "space": asp.as_dict(),
        "max_relative_residual": rel_res,
        "worst_eigenvalue_deviation": worst_eig,
        "recovered_K": curv.K,
        "sharpness_sup": sup,
        "sharpness_ratio": ratio,
        "sharpness_argmax_r": argmax,
        "checks": checks,
    }
    cfg = _config_dict(args, ("N", "alpha", "K", "seed"))
    report["config_hash"] = reporting.config_hash(cfg)
    path = _write_report(report, args.out, "appendix.json")
    ok = all(checks.values())
    print(f"wrote {path} (mu {asp.mu:.12g}, residual {rel_res:.3e}, "
          f"sharpness ratio {ratio:.9g})")
    return 0 if ok else 1


def cmd_implications(args) -> int:
    spec = parse_nonlinearity(args.f)
    space = parse_space(args.space)
    R = args.R if args.R is not None else 1.0
    N = args.N if args.N is not None else float(space.N)
    K = args.K if args.K is not None else ms.curvature_bound(space, 2 * R).K
    solve = lambda bv: pde.solve_radial_bvp(space, spec, R, bv,
                                            pde.SolverConfig(m=args.grid))
    values, corpus = rel.boundary_sweep(solve, args.bv or 1e-3, 0.1, count=20)
    rep = rel.implication_suite(corpus, N, spec, K, R)
    report = rep.as_dict()
    cfg = _config_dict(args, ("f", "space", "N", "K", "R", "bv", "grid", "seed"))
    report["config_hash"] = reporting.config_hash(cfg)
    path = _write_report(report, args.out, "implications.json")
    header, cols = rep.csv_matrix()
    csv_path = path.with_suffix(".csv")
    reporting.write_csv(csv_path, header, cols)
    ok = rep.arrows["gradient_to_harnack"]["sharp_bound_holds"]
    print(f"wrote {path} and {csv_path} "
          f"({len(rep.rows)} profiles, arrows "
          f"{'hold' if ok else 'VIOLATED'})")
    return 0 if ok else 1


def cmd_suite(args) -> int:
    results = acceptance.run_suite(printer=print)
    report = {"criteria": [
        {"number": r.number, "name": r.name, "passed": r.passed,
         "details": r.details}
        for r in results]}
    report["all_passed"] = all(r.passed for r in results)
    if args.out:
        _write_report(report, args.out, "suite.json")
        print(f"wrote {args.out}")
    total = len(results)
    good = sum(r.passed for r in results)
    print(f"{good}/{total} criteria passed")
    return 0 if good == total else 1


COMMANDS = {
    "indices": cmd_indices,
    "certify": cmd_certify,
    "solve": cmd_solve,
    "verify": cmd_verify,
    "appendix": cmd_appendix,
    "implications": cmd_implications,
    "suite": cmd_suite,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ellab",
        description="estimate laboratory for semilinear elliptic equations "
                    "on weighted model spaces")
    parser.add_argument("command", choices=sorted(COMMANDS))
    parser.add_argument("--f", help="nonlinearity: power:2 | powersum:1,2;1,3 "
                                    "| lich:a,b,sigma,c,tau | JSON")
    parser.add_argument("--space", help="space: flat:n[:N] | appendix:N,alpha,K | JSON")
    parser.add_argument("--N", type=float, help="synthetic dimension")
    parser.add_argument("--K", type=float, help="curvature constant")
    parser.add_argument("--R", type=float, help="estimate radius (domain is [0, 2R])")
    parser.add_argument("--theorem", help="estimate id: 1.3 | 1.5 | 1.7 | 1.8 | 1.9 | 8")
    parser.add_argument("--alpha", type=float, help="power/comparison exponent")
    parser.add_argument("--delta", type=float, help="quadratic-loss parameter")
    parser.add_argument("--bv", type=float, help="boundary value")
    parser.add_argument("--grid", type=int, default=1024, help="grid intervals")
    parser.add_argument("--tol", type=float, default=1e-11, help="solver tolerance")
    parser.add_argument("--out", help="output path")
    parser.add_argument("--emit-plot-data", action="store_true",
                        help="also write (r, diagnostic) tables")
    parser.add_argument("--seed", type=int, help="seed for sampled checks")
    parser.add_argument("--config", help="JSON file with the same keys as the flags")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.config:
        try:
            loaded = json.loads(Path(args.config).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            print(f"config error: {exc}", file=sys.stderr)
            return 2
        for key, value in loaded.items():
            key = key.replace("-", "_")
            if not hasattr(args, key):
                print(f"config error: unknown key {key!r}", file=sys.stderr)
                return 2
            if getattr(args, key) in (None, False):
                setattr(args, key, value)
    try:
        return COMMANDS[args.command](args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except LabError as exc:
        print(f"check failure: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
