"""Grid searches over k and alpha for the age-optimal operating point."""

from __future__ import annotations

import io
import json
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from selective_aoi.model import EncodingPolicy, SourcePmf, SystemParams, conditional_pmf
from selective_aoi.optimizer import DEFAULT_TOL, CodeDesign, ConvergenceError, solve

WORKERS_ENV = "SELECTIVE_AOI_WORKERS"
CSV_COLUMNS = ("k", "alpha", "optimal_age", "mean_len", "kraft_sum")


def default_alpha_grid() -> list[float]:
    return [round(0.05 * i, 2) for i in range(21)]


def default_workers() -> int:
    try:
        return max(1, int(os.environ.get(WORKERS_ENV, "1")))
    except ValueError:
        return 1


def fmt_num(x: float) -> str:
    """12 significant digits, stable across platforms."""
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if math.isnan(x):
        return "nan"
    return format(float(x), ".12g")


@dataclass(frozen=True)
class SweepPoint:
    k: int
    alpha: float
    optimal_age: float
    design: CodeDesign | None
    error: str | None = None

    @property
    def converged(self) -> bool:
        return self.error is None


@dataclass(frozen=True)
class SweepResult:
    points: list[SweepPoint]
    min_age: float
    argmin_k: int
    argmin_alpha: float

    def ages(self) -> np.ndarray:
        return np.array([pt.optimal_age for pt in self.points])

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write(",".join(CSV_COLUMNS) + "\n")
        for pt in self.points:
            if pt.design is None:
                mean_len = kraft = float("nan")
            else:
                mean_len, kraft = pt.design.mean_len, pt.design.kraft_sum
            row = (pt.k, fmt_num(pt.alpha), fmt_num(pt.optimal_age), fmt_num(mean_len), fmt_num(kraft))
            buf.write(",".join(str(v) for v in row) + "\n")
        return buf.getvalue()

    def to_json(self) -> str:
        payload = {
            "argmin_k": self.argmin_k,
            "argmin_alpha": self.argmin_alpha,
            "min_age": self.min_age,
            "points": [
                {
                    "k": pt.k,
                    "alpha": pt.alpha,
                    "optimal_age": None if math.isnan(pt.optimal_age) else pt.optimal_age,
                    "mean_len": None if pt.design is None else pt.design.mean_len,
                    "kraft_sum": None if pt.design is None else pt.design.kraft_sum,
                    "lengths": None if pt.design is None else pt.design.lengths.tolist(),
                    "error": pt.error,
                }
                for pt in self.points
            ],
        }
        return json.dumps(payload, indent=2) + "\n"


def solve_point(pmf: SourcePmf, params: SystemParams, k: int, alpha: float, tol: float = DEFAULT_TOL) -> SweepPoint:
    cond = conditional_pmf(pmf, EncodingPolicy(k, alpha), params)
    try:
        design = solve(cond, tol)
    except ConvergenceError as exc:
        return SweepPoint(k=k, alpha=alpha, optimal_age=float("nan"), design=None, error=str(exc))
    return SweepPoint(k=k, alpha=alpha, optimal_age=design.optimal_age, design=design)


def _run_grid(pmf, params, grid, tol, workers) -> list[SweepPoint]:
    workers = default_workers() if workers is None else workers
    if workers <= 1 or len(grid) < 2:
        return [solve_point(pmf, params, k, alpha, tol) for k, alpha in grid]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        futures = [pool.submit(solve_point, pmf, params, k, alpha, tol) for k, alpha in grid]
        return [f.result() for f in futures]


def _summarize(points: list[SweepPoint]) -> SweepResult:
    ok = [pt for pt in points if pt.converged]
    if not ok:
        raise ConvergenceError("no sweep point converged", None)
    # Ties go to the smaller k, then the smaller alpha.
    best = min(ok, key=lambda pt: (pt.optimal_age, pt.k, pt.alpha))
    return SweepResult(points=points, min_age=best.optimal_age, argmin_k=best.k, argmin_alpha=best.alpha)


def sweep_k(
    pmf: SourcePmf,
    params: SystemParams,
    alpha: float = 0.0,
    *,
    tol: float = DEFAULT_TOL,
    workers: int | None = None,
) -> SweepResult:
    """Optimal age for every k = 1..n at a fixed alpha."""
    grid = [(k, alpha) for k in range(1, pmf.n + 1)]
    return _summarize(_run_grid(pmf, params, grid, tol, workers))


def sweep_alpha(
    pmf: SourcePmf,
    params: SystemParams,
    k: int,
    alphas: list[float] | None = None,
    *,
    tol: float = DEFAULT_TOL,
    workers: int | None = None,
) -> SweepResult:
    """Optimal age for each alpha in ``alphas`` (default 0, 0.05, ..., 1) at a fixed k."""
    alphas = default_alpha_grid() if alphas is None else sorted(float(x) for x in alphas)
    if any(not 0.0 <= x <= 1.0 for x in alphas):
        raise ValueError("alpha values must lie in [0, 1]")
    grid = [(k, alpha) for alpha in alphas]
    return _summarize(_run_grid(pmf, params, grid, tol, workers))
