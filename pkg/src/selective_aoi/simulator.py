"""Monte-Carlo estimate of the long-run average age.

Two modes:

* ``cycle``: draws each update cycle directly, with the idle wait exponential
  at rate lam*q and the service time sampled from the conditional pmf.
  The age area of cycle j is Y_j^2/2 + Y_j S_{j+1}.
* ``event``: draws every Poisson arrival, its realization and its selection
  coin, drops arrivals that are not selected or find the server busy, and
  integrates the receiver's sawtooth age between deliveries.

Both report the ratio estimator sum(area) / sum(time) with a batch-means
standard error.
"""

from __future__ import annotations

import csv
import json
import math
from bisect import bisect_right
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from selective_aoi.age import average_age
from selective_aoi.model import (
    ConditionalPmf,
    EncodingPolicy,
    SourcePmf,
    SystemParams,
    conditional_pmf,
)

MODES = ("cycle", "event")
NUM_BATCHES = 50
TRACE_CAP = 100_000
ARRIVAL_CHUNK = 1 << 20
REL_TOL = 0.005


@dataclass(frozen=True)
class SimConfig:
    pmf: SourcePmf
    policy: EncodingPolicy
    params: SystemParams
    lengths: np.ndarray
    num_cycles: int = 1_000_000
    seed: int = 0
    mode: str = "cycle"

    def __post_init__(self) -> None:
        ell = np.array(self.lengths, dtype=np.float64)
        ell.setflags(write=False)
        object.__setattr__(self, "lengths", ell)
        if self.num_cycles < 1:
            raise ValueError("num_cycles must be at least 1")
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}, got {self.mode!r}")
        if np.any(ell < 0.0) or not np.all(np.isfinite(ell)):
            raise ValueError("lengths must be finite and non-negative")
        if self.policy.k > self.pmf.n:
            raise ValueError("k exceeds the number of realizations")
        support = self.policy.k if self.policy.alpha == 0.0 else self.pmf.n
        if ell.size != support:
            raise ValueError(f"expected {support} lengths for this policy, got {ell.size}")

    @property
    def cond(self) -> ConditionalPmf:
        return conditional_pmf(self.pmf, self.policy, self.params)


@dataclass(frozen=True)
class SimResult:
    empirical_age: float
    stderr: float
    num_cycles: int
    mean_cycle: float
    mean_service: float
    mode: str = "cycle"
    mean_cycle_stderr: float = float("nan")
    discarded_fraction: float | None = None
    discarded_stderr: float | None = None
    trace: list[tuple[int, float, float, float, float]] | None = field(default=None, compare=False, repr=False)

    def to_json(self) -> str:
        payload = asdict(self)
        payload.pop("trace")
        return json.dumps(payload, indent=2) + "\n"


def _streams(seed: int) -> dict[str, np.random.Generator]:
    children = np.random.SeedSequence(seed).spawn(3)
    return {name: np.random.default_rng(ss) for name, ss in zip(("arrivals", "symbols", "coins"), children)}


def _batch_ratio(num: np.ndarray, den: np.ndarray) -> tuple[float, float]:
    est = float(num.sum() / den.sum())
    nb = min(NUM_BATCHES, num.size)
    if nb < 2:
        return est, float("nan")
    edges = np.linspace(0, num.size, nb + 1).astype(int)
    ratios = np.add.reduceat(num, edges[:-1]) / np.add.reduceat(den, edges[:-1])
    return est, float(ratios.std(ddof=1) / math.sqrt(nb))


def _batch_mean(x: np.ndarray) -> tuple[float, float]:
    return _batch_ratio(x, np.ones_like(x))


def _trace_rows(y: np.ndarray, s: np.ndarray, q: np.ndarray) -> list[tuple[int, float, float, float, float]]:
    m = min(TRACE_CAP, y.size)
    return [(j + 1, float(y[j] - s[j]), float(s[j]), float(y[j]), float(q[j])) for j in range(m)]


def _simulate_cycles(config: SimConfig, rng: dict[str, np.random.Generator], trace: bool) -> SimResult:
    cond = config.cond
    n = config.num_cycles
    rate = config.params.lam * cond.q
    waits = rng["arrivals"].exponential(1.0 / rate, size=n)
    symbols = rng["symbols"].choice(cond.size, size=n + 1, p=cond.probs)
    service = config.lengths[symbols]
    y = service[:-1] + waits
    area = 0.5 * y * y + y * service[1:]
    est, se = _batch_ratio(area, y)
    mc, mc_se = _batch_mean(y)
    return SimResult(
        empirical_age=est,
        stderr=se,
        num_cycles=n,
        mean_cycle=mc,
        mean_service=float(service[:-1].mean()),
        mode="cycle",
        mean_cycle_stderr=mc_se,
        trace=_trace_rows(y, service[:-1], area) if trace else None,
    )


class _ArrivalStream:
    """Chunked Poisson arrivals tagged with realization and selection."""

    def __init__(self, config: SimConfig, rng: dict[str, np.random.Generator]):
        self.rng = rng
        self.lam = config.params.lam
        self.probs = config.pmf.probs
        self.k = config.policy.k
        self.alpha = config.policy.alpha
        self.t0 = 0.0
        self._refill()

    def _refill(self) -> None:
        gaps = self.rng["arrivals"].exponential(1.0 / self.lam, size=ARRIVAL_CHUNK)
        times = self.t0 + np.cumsum(gaps)
        symbols = self.rng["symbols"].choice(self.probs.size, size=ARRIVAL_CHUNK, p=self.probs)
        coins = self.rng["coins"].random(ARRIVAL_CHUNK)
        selected = (symbols < self.k) | (coins < self.alpha)
        self.t0 = float(times[-1])
        self.times = times.tolist()
        self.sel_idx = np.flatnonzero(selected)
        self.sel_times = times[self.sel_idx].tolist()
        self.sel_symbols = symbols[self.sel_idx].tolist()

    def next_selected(self, t_free: float) -> tuple[float, int, int]:
        """First selected arrival strictly after ``t_free``, and the number of
        idle arrivals discarded before it."""
        discarded = 0
        while True:
            # Strict: with a zero-length codeword the server frees at the arrival instant itself.
            j = bisect_right(self.sel_times, t_free)
            if j < len(self.sel_times):
                t = self.sel_times[j]
                idle = bisect_right(self.times, t) - bisect_right(self.times, t_free)
                return t, self.sel_symbols[j], discarded + idle - 1
            discarded += len(self.times) - bisect_right(self.times, t_free)
            t_free = max(t_free, self.t0)
            self._refill()


def _simulate_events(config: SimConfig, rng: dict[str, np.random.Generator], trace: bool) -> SimResult:
    n = config.num_cycles
    lengths = config.lengths.tolist()
    stream = _ArrivalStream(config, rng)
    starts = np.empty(n + 2)
    service = np.empty(n + 2)
    discarded = np.empty(n + 2)
    t_free = 0.0
    for j in range(n + 2):
        t, sym, d = stream.next_selected(t_free)
        s = lengths[sym]
        starts[j] = t
        service[j] = s
        discarded[j] = d
        t_free = t + s
    # Deliveries happen at start + service; the age just after one equals its service time.
    deliveries = starts + service
    gaps = np.diff(deliveries)[1:]
    age0 = service[1:-1]
    area = age0 * gaps + 0.5 * gaps * gaps
    est, se = _batch_ratio(area, gaps)
    y = np.diff(starts)[1:]
    mc, mc_se = _batch_mean(y)
    # Each cycle sees discarded + 1 idle arrivals, each selected with prob q.
    idle = discarded[1:-1] + 1.0
    frac, frac_se = _batch_ratio(discarded[1:-1], idle)
    rows = None
    if trace:
        s = service[1:-1]
        rows = _trace_rows(y, s, 0.5 * y * y + y * service[2:])
    return SimResult(
        empirical_age=est,
        stderr=se,
        num_cycles=n,
        mean_cycle=mc,
        mean_service=float(service[1:-1].mean()),
        mode="event",
        mean_cycle_stderr=mc_se,
        discarded_fraction=frac,
        discarded_stderr=frac_se,
        trace=rows,
    )


def simulate(config: SimConfig, *, trace: bool = False) -> SimResult:
    """Run one seeded replication; identical configs give identical results."""
    rng = _streams(config.seed)
    if config.mode == "cycle":
        return _simulate_cycles(config, rng, trace)
    return _simulate_events(config, rng, trace)


def write_trace(result: SimResult, path: str | Path) -> None:
    if result.trace is None:
        raise ValueError("result was produced without trace=True")
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["j", "W_j", "S_j", "Y_j", "Q_j"])
        for j, w, s, y, q in result.trace:
            writer.writerow([j, format(w, ".12g"), format(s, ".12g"), format(y, ".12g"), format(q, ".12g")])


@dataclass(frozen=True)
class ValidationReport:
    analytic_age: float
    results: dict[str, SimResult]
    rel_errors: dict[str, float]
    mode_passed: dict[str, bool]

    @property
    def passed(self) -> bool:
        return all(self.mode_passed.values())

    def to_json(self) -> str:
        payload = {
            "passed": self.passed,
            "analytic_age": self.analytic_age,
            "rel_errors": self.rel_errors,
            "mode_passed": self.mode_passed,
            "results": {m: json.loads(r.to_json()) for m, r in self.results.items()},
        }
        return json.dumps(payload, indent=2) + "\n"


def agrees(estimate: float, stderr: float, target: float) -> bool:
    return abs(estimate - target) <= max(3.0 * stderr, REL_TOL * abs(target))


def validate(config: SimConfig, *, q_override: float | None = None) -> ValidationReport:
    """Compare both simulation modes against the closed-form age.

    ``q_override`` replaces the selection mass on the analytic side only; it
    exists as a negative control.
    """
    cond = config.cond
    if q_override is not None:
        cond = ConditionalPmf(probs=cond.probs, q=q_override, a=1.0 / (config.params.lam * q_override))
    target = average_age(cond, config.lengths).delta
    results, rel, ok = {}, {}, {}
    for mode in MODES:
        res = simulate(_with_mode(config, mode))
        results[mode] = res
        rel[mode] = abs(res.empirical_age - target) / target
        ok[mode] = agrees(res.empirical_age, res.stderr, target)
    return ValidationReport(analytic_age=target, results=results, rel_errors=rel, mode_passed=ok)


def _with_mode(config: SimConfig, mode: str) -> SimConfig:
    return SimConfig(
        pmf=config.pmf,
        policy=config.policy,
        params=config.params,
        lengths=config.lengths,
        num_cycles=config.num_cycles,
        seed=config.seed,
        mode=mode,
    )
