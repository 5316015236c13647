"""Source distribution, encoding policy and the conditional pmfs used for encoding."""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

PROB_TOL = 1e-12


def _frozen(values) -> np.ndarray:
    arr = np.array(values, dtype=np.float64)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class SourcePmf:
    """Pmf over n realizations, indexed by position, sorted non-increasing."""

    probs: np.ndarray

    def __post_init__(self) -> None:
        probs = _frozen(self.probs)
        if probs.ndim != 1 or probs.size < 1:
            raise ValueError("pmf must be a non-empty 1-d sequence")
        if not np.all(np.isfinite(probs)) or np.any(probs <= 0.0):
            raise ValueError("pmf entries must be strictly positive")
        if abs(probs.sum() - 1.0) > PROB_TOL:
            raise ValueError(f"pmf sums to {probs.sum()!r}, expected 1")
        if np.any(np.diff(probs) > 0.0):
            raise ValueError("pmf must be sorted in non-increasing order")
        object.__setattr__(self, "probs", probs)

    @property
    def n(self) -> int:
        return int(self.probs.size)


@dataclass(frozen=True)
class EncodingPolicy:
    """Always encode the first ``k`` realizations; encode each other one with prob ``alpha``."""

    k: int
    alpha: float = 0.0

    def __post_init__(self) -> None:
        if int(self.k) != self.k or self.k < 1:
            raise ValueError(f"k must be a positive integer, got {self.k!r}")
        if not 0.0 <= self.alpha <= 1.0:
            raise ValueError(f"alpha must lie in [0, 1], got {self.alpha!r}")
        object.__setattr__(self, "k", int(self.k))
        object.__setattr__(self, "alpha", float(self.alpha))


@dataclass(frozen=True)
class SystemParams:
    lam: float

    def __post_init__(self) -> None:
        if not (self.lam > 0.0 and np.isfinite(self.lam)):
            raise ValueError(f"arrival rate must be positive, got {self.lam!r}")
        object.__setattr__(self, "lam", float(self.lam))


@dataclass(frozen=True)
class ConditionalPmf:
    """Pmf of an encoded update.

    ``probs`` covers the first ``k`` realizations when ``alpha == 0`` and all
    ``n`` otherwise. ``q`` is the probability that an arrival is selected and
    ``a = 1 / (lam * q)`` the mean idle wait for a selected arrival.
    """

    probs: np.ndarray
    q: float
    a: float

    def __post_init__(self) -> None:
        probs = _frozen(self.probs)
        if probs.ndim != 1 or probs.size < 1 or np.any(probs <= 0.0):
            raise ValueError("conditional pmf must have strictly positive entries")
        if abs(probs.sum() - 1.0) > PROB_TOL:
            raise ValueError(f"conditional pmf sums to {probs.sum()!r}")
        if not 0.0 < self.q <= 1.0 + PROB_TOL:
            raise ValueError(f"selection mass must lie in (0, 1], got {self.q!r}")
        if not self.a > 0.0:
            raise ValueError("mean idle parameter must be positive")
        object.__setattr__(self, "probs", probs)
        object.__setattr__(self, "q", float(self.q))
        object.__setattr__(self, "a", float(self.a))

    @property
    def size(self) -> int:
        return int(self.probs.size)

    @property
    def lam(self) -> float:
        return 1.0 / (self.a * self.q)


def conditional_pmf(pmf: SourcePmf, policy: EncodingPolicy, params: SystemParams) -> ConditionalPmf:
    if policy.k > pmf.n:
        raise ValueError(f"k={policy.k} exceeds the number of realizations n={pmf.n}")
    head = pmf.probs[: policy.k]
    if policy.alpha == 0.0:
        weights = head
    else:
        weights = np.concatenate([head, policy.alpha * pmf.probs[policy.k :]])
    if policy.alpha == 1.0 or policy.k == pmf.n:
        # Everything is encoded; avoid rounding drift in the partial sum.
        weights = pmf.probs
        q = 1.0
    else:
        q = min(float(weights.sum()), 1.0)
    return ConditionalPmf(probs=weights / weights.sum(), q=q, a=1.0 / (params.lam * q))


def zipf_pmf(n: int, s: float) -> SourcePmf:
    """Zipf(n, s): P(x_i) proportional to i**-s for i = 1..n."""
    if int(n) != n or n < 1:
        raise ValueError(f"n must be a positive integer, got {n!r}")
    if s < 0:
        raise ValueError(f"Zipf exponent must be non-negative, got {s!r}")
    ranks = np.arange(1, int(n) + 1, dtype=np.float64)
    weights = ranks ** (-float(s))
    return SourcePmf(weights / weights.sum())


def normalize_pmf(values) -> tuple[SourcePmf, np.ndarray]:
    """Normalize and sort arbitrary positive weights.

    Returns the sorted pmf and the permutation ``order`` such that
    ``pmf.probs[i]`` is the normalized weight of ``values[order[i]]``.
    """
    weights = np.asarray(values, dtype=np.float64)
    if weights.ndim != 1 or weights.size < 1 or np.any(weights <= 0.0):
        raise ValueError("weights must be a non-empty sequence of positive numbers")
    order = np.argsort(-weights, kind="stable")
    return SourcePmf(weights[order] / weights.sum()), order


def load_pmf(path: str | Path, *, normalize: bool = False) -> SourcePmf:
    """Read one probability per line; blank lines and ``#`` comments are ignored.

    The file must already hold a sorted, normalized pmf unless ``normalize``
    is set, in which case the weights are rescaled and sorted.
    """
    values = []
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        try:
            values.append(float(line))
        except ValueError:
            raise ValueError(f"{path}:{lineno}: not a number: {line!r}") from None
    if normalize:
        return normalize_pmf(values)[0]
    return SourcePmf(values)
