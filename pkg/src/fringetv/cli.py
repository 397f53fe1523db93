"""Command-line front end: ``fringetv {synth,demod,denoise,sweep,compare}``.

Exit codes: 0 success, 2 usage error, 3 input error, 4 solver did not reach
its stopping rule (all outputs are still written).
"""

from __future__ import annotations

import argparse
import csv
import logging
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import io
from .alm import alm_demodulate
from .common import SolverConfig
from .fp import fp_demodulate
from .linsolve import LinearSolveError, LinSolveConfig
from .synth import SyntheticSpec, q_error, synthesize
from .tvdenoise import tv_denoise

log = logging.getLogger("fringetv")

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_INPUT = 3
EXIT_NOT_CONVERGED = 4

METHODS = {"alm": alm_demodulate, "fp": fp_demodulate}


class InputError(Exception):
    pass


def _out_dir(path) -> Path:
    out = Path(path)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise InputError(f"cannot create output directory {out}: {exc}") from exc
    return out


def _load(path, what: str) -> np.ndarray:
    p = Path(path)
    if not p.is_file():
        raise InputError(f"{what} file not found: {p}")
    try:
        if p.suffix.lower() == ".pgm":
            return io.read_pgm(p)
        return io.read_field(p)
    except io.FormatError as exc:
        raise InputError(f"{what} file {p}: {exc}") from exc


def _require_scalar(a: np.ndarray, what: str) -> np.ndarray:
    if a.ndim != 2:
        raise InputError(f"{what} must be a scalar field")
    return a


def write_config(out: Path, command: str, params: dict) -> None:
    """Echo the effective parameters, one ``key = value`` per line."""
    lines = [f"command = {command}"]
    lines += [f"{k} = {params[k]!r}" if isinstance(params[k], float) else f"{k} = {params[k]}"
              for k in sorted(params)]
    (out / "config.txt").write_text("\n".join(lines) + "\n")


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------


def _synth_spec(args, sigma=None) -> SyntheticSpec:
    try:
        return SyntheticSpec(width=args.width, height=args.height, carrier_fx=args.carrier,
                             phase_amplitude=args.amplitude, step_height=args.step,
                             background_a=args.background, modulation_b=args.modulation,
                             noise_sigma=args.sigma if sigma is None else sigma, seed=args.seed)
    except ValueError as exc:
        raise InputError(str(exc)) from exc


def _spec_params(spec: SyntheticSpec) -> dict:
    return {"width": spec.width, "height": spec.height, "carrier": spec.carrier_fx,
            "amplitude": spec.phase_amplitude, "step": spec.step_height,
            "background": spec.background_a, "modulation": spec.modulation_b,
            "sigma": spec.noise_sigma, "seed": spec.seed}


def write_synthetic(spec: SyntheticSpec, out: Path) -> None:
    gt = synthesize(spec)
    io.write_field(gt.g_noisy, out / "g.f64f")
    io.write_preview(gt.g_noisy, out / "g.pgm")
    io.write_field(gt.phi, out / "phi_true.f64f")
    io.write_field(gt.omega, out / "omega.f64f")
    io.write_field(gt.a, out / "a_true.f64f")
    io.write_field(gt.b, out / "b_true.f64f")
    write_config(out, "synth", _spec_params(spec))


def cmd_synth(args) -> int:
    write_synthetic(_synth_spec(args), _out_dir(args.out))
    return EXIT_OK


def _solver_config(args) -> SolverConfig:
    try:
        return SolverConfig(lam=args.lam, r=args.r, beta=args.beta, eps=args.tol,
                            max_outer_iters=args.max_iter, sweep=args.sweep,
                            linsolve=LinSolveConfig(rel_residual_tol=args.inner_tol,
                                                    max_inner_iters=args.inner_max_iter))
    except ValueError as exc:
        raise InputError(str(exc)) from exc


def _solver_params(method: str, cfg: SolverConfig) -> dict:
    return {"method": method, "lambda": cfg.lam, "r": cfg.r, "beta": cfg.beta, "tol": cfg.eps,
            "max_iter": cfg.max_outer_iters, "sweep": cfg.sweep,
            "inner_tol": cfg.linsolve.rel_residual_tol,
            "inner_max_iter": cfg.linsolve.max_inner_iters}


def run_demod(method: str, g, omega, cfg: SolverConfig, out: Path, truth=None, timing=False):
    if g.shape != omega.shape:
        raise InputError(f"pattern {g.shape} and carrier {omega.shape} differ in size")
    if truth is not None and truth.shape != g.shape:
        raise InputError(f"truth {truth.shape} and pattern {g.shape} differ in size")
    try:
        est, report = METHODS[method](g, omega, cfg, truth=truth)
    except LinearSolveError as exc:
        raise InputError(f"{method} solver failed: {exc}") from exc
    io.write_field(est.phi, out / "phi.f64f")
    io.write_field(est.a, out / "a.f64f")
    io.write_field(est.b, out / "b.f64f")
    io.write_preview(est.phi, out / "phi.pgm")
    io.write_report(report, out / "report.csv", timing=timing)
    return est, report


def cmd_demod(args) -> int:
    g = _require_scalar(_load(args.pattern, "pattern"), "pattern")
    omega = _require_scalar(_load(args.carrier, "carrier"), "carrier")
    truth = _require_scalar(_load(args.truth, "truth"), "truth") if args.truth else None
    cfg = _solver_config(args)
    out = _out_dir(args.out)
    params = _solver_params(args.method, cfg)
    params.update(pattern=args.pattern, carrier=args.carrier, truth=args.truth or "")
    write_config(out, "demod", params)
    _, report = run_demod(args.method, g, omega, cfg, out, truth, timing=args.with_timing)
    final = report.final
    msg = f"{args.method}: {report.iterations} iterations"
    if final.q_err is not None:
        msg += f", Q = {final.q_err:.6f}"
    print(msg)
    if not report.converged:
        log.warning("%s stopped at max-iter %d before reaching tol %g", args.method, cfg.max_outer_iters, cfg.eps)
        return EXIT_NOT_CONVERGED
    return EXIT_OK


def cmd_denoise(args) -> int:
    f = _require_scalar(_load(args.image, "image"), "image")
    truth = _require_scalar(_load(args.truth, "truth"), "truth") if args.truth else None
    if truth is not None and truth.shape != f.shape:
        raise InputError("truth and image differ in size")
    if args.lam <= 0 or args.r <= 0:
        raise InputError("lambda and r must be positive")
    out = _out_dir(args.out)
    write_config(out, "denoise", {"image": args.image, "truth": args.truth or "", "lambda": args.lam,
                                  "r": args.r, "tol": args.tol, "max_iter": args.max_iter})
    u, report = tv_denoise(f, args.lam, args.r, args.tol, args.max_iter, truth=truth)
    io.write_field(u, out / "u.f64f")
    io.write_pgm(u, out / "u.pgm")
    io.write_report(report, out / "report.csv", timing=args.with_timing)
    print(f"tv: {report.iterations} iterations")
    return EXIT_OK if report.converged else EXIT_NOT_CONVERGED


def _sweep_cell(job):
    method, sigma, spec, cfg, cell = job
    cell = Path(cell)
    cell.mkdir(parents=True, exist_ok=True)
    write_synthetic(spec, cell)
    gt = synthesize(spec)
    params = _solver_params(method, cfg)
    params.update(pattern="g.f64f", carrier="omega.f64f", truth="phi_true.f64f")
    write_config(cell, "demod", params)
    _, report = run_demod(method, gt.g_noisy, gt.omega, cfg, cell, gt.phi)
    return method, sigma, report.iterations, report.final.q_err, report.wall_ms, report.converged


def cmd_sweep(args) -> int:
    try:
        sigmas = [float(s) for s in args.sigmas.split(",") if s.strip()]
    except ValueError as exc:
        raise InputError(f"bad --sigmas: {exc}") from exc
    methods = [m.strip() for m in args.methods.split(",") if m.strip()]
    bad = [m for m in methods if m not in METHODS]
    if bad or not methods or not sigmas:
        raise InputError(f"bad --methods/--sigmas (unknown: {bad})")
    cfg = _solver_config(args)
    out = _out_dir(args.out)
    base = _spec_params(_synth_spec(args, 0.0))
    base.pop("sigma")
    params = {**base, **_solver_params(",".join(methods), cfg), "sigmas": args.sigmas}
    write_config(out, "sweep", params)

    jobs = [(m, s, _synth_spec(args, s), cfg, str(out / f"{m}_sigma{s:g}")) for m in methods for s in sigmas]
    if args.jobs > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            results = list(pool.map(_sweep_cell, jobs))
    else:
        results = [_sweep_cell(j) for j in jobs]

    with open(out / "sweep.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["method", "sigma", "iters", "q_err", "wall_ms"])
        for method, sigma, iters, q, wall, _ in results:
            w.writerow([method, f"{sigma:g}", iters, f"{q:.9g}", f"{wall:.9g}"])
    for method, sigma, iters, q, _, conv in results:
        print(f"{method} sigma={sigma:g}: {iters} iterations, Q = {q:.6f}{'' if conv else ' (not converged)'}")
    return EXIT_OK if all(r[-1] for r in results) else EXIT_NOT_CONVERGED


def cmd_compare(args) -> int:
    a = _load(args.a, "--a")
    b = _load(args.b, "--b")
    if a.shape != b.shape:
        raise InputError(f"dimension mismatch: {a.shape} vs {b.shape}")
    try:
        q = q_error(a, b)
    except ValueError as exc:
        raise InputError(str(exc)) from exc
    print(f"{q:.6f}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------


def _add_synth_flags(p, with_sigma=True):
    d = SyntheticSpec()
    p.add_argument("--width", type=int, default=d.width)
    p.add_argument("--height", type=int, default=d.height)
    p.add_argument("--carrier", type=float, default=d.carrier_fx, help="carrier frequency, rad/pixel along x")
    p.add_argument("--amplitude", type=float, default=d.phase_amplitude, help="smooth phase amplitude, rad")
    p.add_argument("--step", type=float, default=d.step_height, help="phase step height, rad")
    p.add_argument("--background", type=float, default=d.background_a)
    p.add_argument("--modulation", type=float, default=d.modulation_b)
    if with_sigma:
        p.add_argument("--sigma", type=float, default=d.noise_sigma)
    p.add_argument("--seed", type=int, default=d.seed)


def _add_solver_flags(p, lam):
    d = SolverConfig()
    p.add_argument("--lambda", dest="lam", type=float, default=lam)
    p.add_argument("--r", type=float, default=d.r)
    p.add_argument("--beta", type=float, default=d.beta)
    p.add_argument("--tol", type=float, default=d.eps)
    p.add_argument("--max-iter", type=int, default=d.max_outer_iters)
    p.add_argument("--inner-tol", type=float, default=d.linsolve.rel_residual_tol)
    p.add_argument("--inner-max-iter", type=int, default=d.linsolve.max_inner_iters)
    p.add_argument("--sweep", choices=("gauss-seidel", "jacobi"), default=d.sweep,
                   help="primal update order across phi, b, a")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="fringetv", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="write a synthetic fringe pattern and its ground truth")
    p.add_argument("--out", required=True)
    _add_synth_flags(p)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("demod", help="demodulate a fringe pattern")
    p.add_argument("--method", choices=sorted(METHODS), default="alm")
    p.add_argument("--pattern", required=True)
    p.add_argument("--carrier", required=True)
    p.add_argument("--truth")
    p.add_argument("--out", required=True)
    p.add_argument("--with-timing", action="store_true", help="fill wall_ms in report.csv")
    _add_solver_flags(p, 10.0)
    p.set_defaults(func=cmd_demod)

    p = sub.add_parser("denoise", help="TV-denoise an image")
    p.add_argument("--image", required=True)
    p.add_argument("--truth")
    p.add_argument("--lambda", dest="lam", type=float, default=10.0)
    p.add_argument("--r", type=float, default=11.5)
    p.add_argument("--tol", type=float, default=1e-5)
    p.add_argument("--max-iter", type=int, default=5000)
    p.add_argument("--with-timing", action="store_true")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_denoise)

    p = sub.add_parser("sweep", help="noise sweep over methods and sigmas")
    p.add_argument("--sigmas", default="0,0.05,0.1,0.15,0.2")
    p.add_argument("--methods", default="alm,fp")
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--out", required=True)
    _add_synth_flags(p, with_sigma=False)
    _add_solver_flags(p, 6.0)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("compare", help="print Q between two fields")
    p.add_argument("--a", required=True)
    p.add_argument("--b", required=True)
    p.set_defaults(func=cmd_compare)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s: %(message)s")
    try:
        return args.func(args)
    except InputError as exc:
        print(f"fringetv {args.command}: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
