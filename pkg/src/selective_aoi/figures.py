"""Data grids for the published Zipf experiments (plot-ready CSV, no rendering)."""

from __future__ import annotations

import io
from dataclasses import dataclass

from selective_aoi.model import SystemParams, zipf_pmf
from selective_aoi.sweep import SweepResult, fmt_num, sweep_alpha, sweep_k


@dataclass(frozen=True)
class FigureSpec:
    zipf_n: int
    zipf_s: float
    rates: tuple[float, ...]
    k: int | None = None  # fixed k for alpha sweeps


FIGURES = {
    "fig3": FigureSpec(zipf_n=100, zipf_s=0.4, rates=(0.3, 0.5, 1.0)),
    "fig4": FigureSpec(zipf_n=100, zipf_s=0.4, rates=(2.0, 10.0)),
    "fig5": FigureSpec(zipf_n=100, zipf_s=0.2, rates=(0.6, 1.2), k=70),
}


@dataclass(frozen=True)
class FigureData:
    name: str
    axis: str
    sweeps: dict[float, SweepResult]

    def argmins(self) -> dict[float, float]:
        if self.axis == "k":
            return {lam: res.argmin_k for lam, res in self.sweeps.items()}
        return {lam: res.argmin_alpha for lam, res in self.sweeps.items()}

    def to_csv(self) -> str:
        rates = list(self.sweeps)
        buf = io.StringIO()
        buf.write(",".join([self.axis] + [f"lambda={fmt_num(lam)}" for lam in rates]) + "\n")
        columns = [self.sweeps[lam].points for lam in rates]
        for row in zip(*columns):
            x = row[0].k if self.axis == "k" else row[0].alpha
            buf.write(",".join([fmt_num(x)] + [fmt_num(pt.optimal_age) for pt in row]) + "\n")
        return buf.getvalue()


def figure_data(name: str, *, workers: int | None = None) -> FigureData:
    try:
        spec = FIGURES[name]
    except KeyError:
        raise ValueError(f"unknown figure {name!r}; choose from {sorted(FIGURES)}") from None
    pmf = zipf_pmf(spec.zipf_n, spec.zipf_s)
    if spec.k is None:
        sweeps = {lam: sweep_k(pmf, SystemParams(lam), 0.0, workers=workers) for lam in spec.rates}
        return FigureData(name=name, axis="k", sweeps=sweeps)
    sweeps = {lam: sweep_alpha(pmf, SystemParams(lam), spec.k, workers=workers) for lam in spec.rates}
    return FigureData(name=name, axis="alpha", sweeps=sweeps)
