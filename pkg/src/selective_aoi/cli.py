"""Command-line front end.

Exit codes: 0 success, 1 invalid input or failed validation, 2 solver
non-convergence.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from selective_aoi.figures import FIGURES, figure_data
from selective_aoi.model import EncodingPolicy, SystemParams, conditional_pmf, load_pmf, zipf_pmf
from selective_aoi.optimizer import DEFAULT_TOL, ConvergenceError, round_lengths, solve
from selective_aoi.simulator import MODES, SimConfig, simulate, validate, write_trace
from selective_aoi.sweep import sweep_alpha, sweep_k

EXIT_OK, EXIT_INVALID, EXIT_NONCONVERGED = 0, 1, 2


class ValidationFailed(Exception):
    pass


def _add_source(p: argparse.ArgumentParser) -> None:
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--zipf", nargs=2, metavar=("N", "S"), help="Zipf(N, S) source pmf")
    src.add_argument("--pmf", type=Path, metavar="PATH", help="file with one probability per line")
    p.add_argument("--normalize", action="store_true", help="rescale and sort the --pmf weights")
    p.add_argument("--lambda", dest="lam", type=float, required=True, help="Poisson arrival rate")


def _add_output(p: argparse.ArgumentParser, formats: tuple[str, ...]) -> None:
    p.add_argument("-o", "--output", type=Path, help="write to file instead of stdout")
    p.add_argument("--format", choices=formats, default=formats[0])


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="selective-aoi", description=__doc__.splitlines()[0])
    parser.add_argument("--error-json", action="store_true", help="report errors as JSON on stderr")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--error-json", action="store_true", default=argparse.SUPPRESS)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("optimize", parents=[common], help="age-optimal real codeword lengths for one (k, alpha)")
    _add_source(p)
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--alpha", type=float, default=0.0)
    p.add_argument("--tol", type=float, default=DEFAULT_TOL)
    p.add_argument("--round", action="store_true", help="also report ceil-rounded integer lengths")
    _add_output(p, ("text", "json"))

    p = sub.add_parser("sweep-k", parents=[common], help="optimal age for k = 1..n")
    _add_source(p)
    p.add_argument("--alpha", type=float, default=0.0)
    p.add_argument("--workers", type=int, default=None)
    _add_output(p, ("csv", "json"))

    p = sub.add_parser("sweep-alpha", parents=[common], help="optimal age over an alpha grid at fixed k")
    _add_source(p)
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--alphas", help="comma-separated grid (default 0,0.05,...,1)")
    p.add_argument("--workers", type=int, default=None)
    _add_output(p, ("csv", "json"))

    for name, helptext in (("simulate", "Monte-Carlo average age"), ("validate", "simulation vs closed form")):
        p = sub.add_parser(name, parents=[common], help=helptext)
        _add_source(p)
        p.add_argument("--k", type=int, required=True)
        p.add_argument("--alpha", type=float, default=0.0)
        p.add_argument("--lengths", type=Path, help="codeword lengths file (default: solve for the optimum)")
        p.add_argument("--cycles", type=int, default=1_000_000)
        p.add_argument("--seed", type=int, default=0)
        if name == "simulate":
            p.add_argument("--mode", choices=MODES, default="cycle")
            p.add_argument("--trace", type=Path, help="per-cycle trace CSV (first 100000 cycles)")
        p.add_argument("-o", "--output", type=Path)

    p = sub.add_parser("figures", parents=[common], help="CSV grids behind the Zipf experiments")
    p.add_argument("figure", choices=sorted(FIGURES))
    p.add_argument("--workers", type=int, default=None)
    p.add_argument("-o", "--output", type=Path)
    return parser


def _source(args):
    if args.zipf is not None:
        return zipf_pmf(int(args.zipf[0]), float(args.zipf[1]))
    return load_pmf(args.pmf, normalize=args.normalize)


def _emit(text: str, path: Path | None) -> None:
    if path is None:
        sys.stdout.write(text)
    else:
        with open(path, "w", newline="\n") as fh:
            fh.write(text)


def _read_lengths(path: Path) -> np.ndarray:
    lines = (ln.split("#", 1)[0].strip() for ln in path.read_text().splitlines())
    return np.array([float(ln) for ln in lines if ln])


def _design_text(design) -> str:
    out = ["lengths:"]
    out += [f"  {i + 1}\t{ell:.6f}" for i, ell in enumerate(design.lengths)]
    out.append(f"optimal_age: {design.optimal_age:.12g}")
    out.append(f"beta: {design.beta_star:.12g}")
    out.append(f"kraft_sum: {design.kraft_sum:.9f}")
    out.append(f"mean_len: {design.mean_len:.12g}")
    if design.rounded_lengths is not None:
        out.append("rounded_lengths: " + " ".join(str(int(v)) for v in design.rounded_lengths))
        out.append(f"rounded_age: {design.rounded_age:.12g}")
    return "\n".join(out) + "\n"


def _design_json(design) -> str:
    payload = {
        "lengths": design.lengths.tolist(),
        "optimal_age": design.optimal_age,
        "beta": design.beta_star,
        "kraft_sum": design.kraft_sum,
        "p_value": design.p_value,
        "mean_len": design.mean_len,
        "q": design.cond.q,
        "a": design.cond.a,
    }
    if design.rounded_lengths is not None:
        payload["rounded_lengths"] = design.rounded_lengths.tolist()
        payload["rounded_age"] = design.rounded_age
    return json.dumps(payload, indent=2) + "\n"


def _sim_config(args, mode: str = "cycle") -> SimConfig:
    pmf = _source(args)
    policy = EncodingPolicy(args.k, args.alpha)
    params = SystemParams(args.lam)
    if args.lengths is not None:
        lengths = _read_lengths(args.lengths)
    else:
        lengths = solve(conditional_pmf(pmf, policy, params)).lengths
    return SimConfig(pmf, policy, params, lengths, num_cycles=args.cycles, seed=args.seed, mode=mode)


def run(args: argparse.Namespace) -> int:
    cmd = args.command
    if cmd == "optimize":
        cond = conditional_pmf(_source(args), EncodingPolicy(args.k, args.alpha), SystemParams(args.lam))
        design = solve(cond, args.tol)
        if args.round:
            design = round_lengths(design)
        _emit(_design_json(design) if args.format == "json" else _design_text(design), args.output)
    elif cmd in ("sweep-k", "sweep-alpha"):
        pmf, params = _source(args), SystemParams(args.lam)
        if cmd == "sweep-k":
            result = sweep_k(pmf, params, args.alpha, workers=args.workers)
        else:
            alphas = None if args.alphas is None else [float(x) for x in args.alphas.split(",")]
            result = sweep_alpha(pmf, params, args.k, alphas, workers=args.workers)
        _emit(result.to_json() if args.format == "json" else result.to_csv(), args.output)
        if any(not pt.converged for pt in result.points):
            return EXIT_NONCONVERGED
    elif cmd == "simulate":
        result = simulate(_sim_config(args, args.mode), trace=args.trace is not None)
        if args.trace is not None:
            write_trace(result, args.trace)
        _emit(result.to_json(), args.output)
    elif cmd == "validate":
        report = validate(_sim_config(args))
        _emit(report.to_json(), args.output)
        if not report.passed:
            raise ValidationFailed("simulation disagrees with the closed-form age")
    elif cmd == "figures":
        data = figure_data(args.figure, workers=args.workers)
        _emit(data.to_csv(), args.output)
        argmins = ", ".join(f"lambda={lam:g}: {data.axis}={x:g}" for lam, x in data.argmins().items())
        print(f"argmin {argmins}", file=sys.stderr)
    return EXIT_OK


def _fail(args, code: int, exc: Exception) -> int:
    if getattr(args, "error_json", False):
        payload = {"error": type(exc).__name__, "message": str(exc), "exit_code": code}
        print(json.dumps(payload), file=sys.stderr)
    else:
        print(f"error: {exc}", file=sys.stderr)
    return code


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return run(args)
    except ConvergenceError as exc:
        return _fail(args, EXIT_NONCONVERGED, exc)
    except (ValueError, OSError, ValidationFailed) as exc:
        return _fail(args, EXIT_INVALID, exc)


if __name__ == "__main__":
    sys.exit(main())
