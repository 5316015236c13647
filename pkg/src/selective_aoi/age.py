"""Closed-form long-run average age under (randomized) highest-k selective encoding.

One bit is sent per unit time, so codeword lengths double as service times.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from selective_aoi.model import ConditionalPmf


@dataclass(frozen=True)
class CodeMoments:
    mean_len: float
    second_moment: float


@dataclass(frozen=True)
class CycleMoments:
    mean_cycle: float
    second_moment_cycle: float


@dataclass(frozen=True)
class AgeReport:
    delta: float
    code_moments: CodeMoments
    q: float
    a: float


def moments_of_M(q: float) -> tuple[float, float]:
    """First two moments of the number of arrivals up to the first selected one."""
    if not 0.0 < q <= 1.0:
        raise ValueError(f"selection probability must lie in (0, 1], got {q!r}")
    return 1.0 / q, (2.0 - q) / (q * q)


def _check_lengths(cond: ConditionalPmf, lengths) -> np.ndarray:
    ell = np.asarray(lengths, dtype=np.float64)
    if ell.shape != cond.probs.shape:
        raise ValueError(f"expected {cond.size} lengths, got {ell.size}")
    if np.any(ell < 0.0) or not np.all(np.isfinite(ell)):
        raise ValueError("codeword lengths must be finite and non-negative")
    return ell


def code_moments(cond: ConditionalPmf, lengths) -> CodeMoments:
    ell = _check_lengths(cond, lengths)
    return CodeMoments(
        mean_len=float(cond.probs @ ell),
        second_moment=float(cond.probs @ (ell * ell)),
    )


def cycle_moments(code: CodeMoments, q: float, lam: float) -> CycleMoments:
    """Moments of the update cycle Y = S + W, where W sums M exponential(lam) gaps."""
    if lam <= 0.0:
        raise ValueError("arrival rate must be positive")
    m1, m2 = moments_of_M(q)
    z1, z2 = 1.0 / lam, 2.0 / lam**2
    el, el2 = code.mean_len, code.second_moment
    mean = el + m1 * z1
    second = el2 + 2.0 * m1 * z1 * el + m1 * z2 + (m2 - m1) * z1**2
    return CycleMoments(mean_cycle=mean, second_moment_cycle=second)


def age_from_moments(mean_len: float, second_moment: float, a: float) -> float:
    return (second_moment + 2.0 * a * mean_len + 2.0 * a * a) / (2.0 * (mean_len + a)) + mean_len


def average_age(cond: ConditionalPmf, lengths) -> AgeReport:
    """Average age for the code ``lengths`` over the encodable support of ``cond``.

    The same expression covers the randomized scheme, since ``cond`` already
    carries q_{k,alpha} and the randomized conditional pmf.
    """
    code = code_moments(cond, lengths)
    delta = age_from_moments(code.mean_len, code.second_moment, cond.a)
    return AgeReport(delta=delta, code_moments=code, q=cond.q, a=cond.a)


def average_age_via_cycles(cycle: CycleMoments, code: CodeMoments) -> float:
    """Renewal-reward route: E[Y^2] / (2 E[Y]) + E[L]."""
    if cycle.mean_cycle <= 0.0:
        raise ValueError("mean cycle length must be positive")
    return cycle.second_moment_cycle / (2.0 * cycle.mean_cycle) + code.mean_len
