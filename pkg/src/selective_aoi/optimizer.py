"""Age-optimal real codeword lengths.

The ratio objective is handled by the parametric program

    p(theta) = min_l  E[L^2]/2 + E[L]^2 + (2a - theta) E[L] + a^2 - theta a
               s.t.   sum_i 2^-l_i <= 1,

whose root in theta is the optimal age. For fixed theta the inner program is
strictly convex and its minimizer meets Kraft with equality; stationarity then
gives each length in closed form through the Lambert W function, leaving a
single unknown multiplier beta fixed by sum_i 2^-l_i = 1.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.optimize import brentq

from selective_aoi.age import age_from_moments, average_age
from selective_aoi.lambertw import lambert_w0_exp
from selective_aoi.model import ConditionalPmf

LN2 = math.log(2.0)
LN2_SQ = LN2 * LN2

DEFAULT_TOL = 1e-9
MAX_OUTER = 10_000
MAX_INNER = 200
# log(beta) scan limits for the inner bracket, then a wider fallback.
LOG_BETA_SCAN = (-40.0 * LN2, 40.0 * LN2)
LOG_BETA_FALLBACK = (-700.0, 700.0)


class ConvergenceError(RuntimeError):
    """Raised when the solver misses its tolerances; ``state`` holds the last iterate."""

    def __init__(self, message: str, state: "SolverState"):
        super().__init__(message)
        self.state = state


@dataclass(frozen=True)
class SolverState:
    theta: float
    beta: float
    lengths: np.ndarray
    kraft_sum: float
    p_value: float


@dataclass(frozen=True)
class CodeDesign:
    """Real codeword lengths for the encodable support of ``cond``."""

    lengths: np.ndarray
    optimal_age: float
    beta_star: float
    cond: ConditionalPmf
    kraft_sum: float
    p_value: float
    rounded_lengths: np.ndarray | None = None
    rounded_age: float | None = None
    iterations: int = field(default=0, compare=False)

    @property
    def mean_len(self) -> float:
        return float(self.cond.probs @ self.lengths)


def _log_lengths(theta: float, log_beta: float, probs: np.ndarray, a: float) -> np.ndarray:
    beta = math.exp(log_beta)
    c = (-theta + 2.0 * beta * LN2 + 2.0 * a) / 3.0
    # W argument is (beta ln2^2 / P) 2^c; keep it in log form.
    log_coef = log_beta + math.log(LN2_SQ) - np.log(probs)
    w = lambert_w0_exp(log_coef + c * LN2)
    # l = -log2(P W / (beta ln2^2)) = (log_coef - log W) / ln2
    return (log_coef - np.log(w)) / LN2


def lengths_for(theta: float, beta: float, cond: ConditionalPmf) -> np.ndarray:
    """Stationary lengths for the multiplier ``beta`` at age target ``theta``.

    Each returned length solves -l + (beta ln2 / P) 2^-l = (-theta + 2 beta ln2 + 2a) / 3;
    the right-hand side equals 2E[L] + 2a - theta once Kraft holds with equality.
    """
    if not beta > 0.0:
        raise ValueError(f"beta must be positive, got {beta!r}")
    if np.any(cond.probs <= 0.0):
        raise ValueError("zero-probability symbol in the encodable support")
    return _log_lengths(theta, math.log(beta), cond.probs, cond.a)


def kraft_sum(lengths) -> float:
    return float(np.sum(np.exp2(-np.asarray(lengths, dtype=np.float64))))


def p_theta(theta: float, lengths, cond: ConditionalPmf) -> float:
    """Inner objective of the parametric program evaluated at ``lengths``."""
    ell = np.asarray(lengths, dtype=np.float64)
    el = float(cond.probs @ ell)
    el2 = float(cond.probs @ (ell * ell))
    a = cond.a
    return 0.5 * el2 + el * el + (2.0 * a - theta) * el + a * a - theta * a


def slack_kraft_branch(a: float) -> tuple[float, float]:
    """Root theta and common length of the stationary point with beta = 0.

    With no Kraft pressure every length equals (theta - 2a)/3 and the inner
    value becomes -theta^2/6 - theta a/3 + a^2/3. Its positive root forces a
    negative length, so the Kraft constraint is always tight at the optimum.
    """
    if not a > 0.0:
        raise ValueError("a must be positive")
    # -theta^2/6 - a theta/3 + a^2/3 = 0  <=>  theta^2 + 2 a theta - 2 a^2 = 0
    theta = -a + math.sqrt(a * a + 2.0 * a * a)
    return theta, (theta - 2.0 * a) / 3.0


class _InnerSolver:
    """Kraft-equality multiplier at fixed theta, warm-started across calls."""

    def __init__(self, cond: ConditionalPmf):
        self.probs = cond.probs
        self.a = cond.a
        self.log_beta = 0.0

    def g(self, theta: float, log_beta: float) -> float:
        return kraft_sum(_log_lengths(theta, log_beta, self.probs, self.a)) - 1.0

    def _bracket(self, theta: float) -> tuple[float, float]:
        # g -> k 2^((2a - theta)/3) - 1 > 0 as beta -> 0 and -> -1/3 as beta -> inf.
        lo_lim, hi_lim = LOG_BETA_SCAN
        x = min(max(self.log_beta, lo_lim), hi_lim)
        gx = self.g(theta, x)
        step = LN2
        if gx > 0.0:
            while gx > 0.0:
                nxt = x + step
                if nxt > LOG_BETA_FALLBACK[1]:
                    break
                gn = self.g(theta, nxt)
                if gn <= 0.0:
                    return x, nxt
                x, gx = nxt, gn
                if x > hi_lim:
                    step *= 2.0
        else:
            while gx <= 0.0:
                nxt = x - step
                if nxt < LOG_BETA_FALLBACK[0]:
                    break
                gn = self.g(theta, nxt)
                if gn > 0.0:
                    return nxt, x
                x, gx = nxt, gn
                if x < lo_lim:
                    step *= 2.0
        return self._fine_scan(theta)

    def _fine_scan(self, theta: float) -> tuple[float, float]:
        grid = np.linspace(*LOG_BETA_FALLBACK, 2801)
        vals = np.array([self.g(theta, x) for x in grid])
        idx = np.flatnonzero((vals[:-1] > 0.0) & (vals[1:] <= 0.0))
        if idx.size == 0:
            raise ValueError(f"no Kraft-equality multiplier exists at theta={theta!r}")
        return float(grid[idx[0]]), float(grid[idx[0] + 1])

    def solve(self, theta: float) -> tuple[float, np.ndarray]:
        lo, hi = self._bracket(theta)
        self.log_beta = brentq(
            lambda x: self.g(theta, x), lo, hi, xtol=1e-15, rtol=4 * np.finfo(float).eps, maxiter=MAX_INNER
        )
        return math.exp(self.log_beta), _log_lengths(theta, self.log_beta, self.probs, self.a)


def _state(inner: _InnerSolver, theta: float, cond: ConditionalPmf) -> SolverState:
    beta, ell = inner.solve(theta)
    return SolverState(
        theta=theta,
        beta=beta,
        lengths=ell,
        kraft_sum=kraft_sum(ell),
        p_value=p_theta(theta, ell, cond),
    )


def solve(cond: ConditionalPmf, tol: float = DEFAULT_TOL, max_iter: int = MAX_OUTER) -> CodeDesign:
    """Minimize the average age over real lengths satisfying Kraft.

    The root of p(theta) is bracketed by [a, age of the uniform-length code]:
    the age always exceeds a, and the uniform code is feasible so p is
    non-positive there.
    """
    if not tol > 0.0:
        raise ValueError("tol must be positive")
    k = cond.size
    if k == 1:
        ell = np.zeros(1)
        return CodeDesign(
            lengths=ell, optimal_age=cond.a, beta_star=0.0, cond=cond, kraft_sum=1.0, p_value=0.0
        )

    m = math.log2(k)
    theta_lo = cond.a
    theta_hi = age_from_moments(m, m * m, cond.a)
    inner = _InnerSolver(cond)
    cache: dict[float, float] = {}

    def p_of(theta: float) -> float:
        # Memoized so bracket endpoints keep a consistent sign near p = 0.
        if theta not in cache:
            cache[theta] = _state(inner, theta, cond).p_value
        return cache[theta]

    if p_of(theta_hi) >= 0.0:
        # Uniform lengths are already optimal (symmetric pmf).
        theta_star = theta_hi
    else:
        try:
            theta_star = brentq(p_of, theta_lo, theta_hi, xtol=1e-15, rtol=4 * np.finfo(float).eps, maxiter=max_iter)
        except RuntimeError as exc:
            raise ConvergenceError(str(exc), _state(inner, theta_hi, cond)) from exc

    state = _state(inner, theta_star, cond)
    age = average_age(cond, state.lengths).delta
    if (
        abs(state.kraft_sum - 1.0) > tol
        or abs(state.p_value) > tol
        or abs(age - theta_star) > 10.0 * tol
        or np.any(state.lengths < 0.0)
    ):
        raise ConvergenceError(
            f"solver missed tolerance: kraft={state.kraft_sum!r} p={state.p_value!r} "
            f"age={age!r} theta={theta_star!r}",
            state,
        )
    return CodeDesign(
        lengths=state.lengths,
        optimal_age=theta_star,
        beta_star=state.beta,
        cond=cond,
        kraft_sum=state.kraft_sum,
        p_value=state.p_value,
        iterations=len(cache),
    )


def inner_minimum(theta: float, cond: ConditionalPmf) -> float:
    """Value of p(theta): the inner program solved at ``theta``."""
    if cond.size == 1:
        return p_theta(theta, np.zeros(1), cond)
    return _state(_InnerSolver(cond), theta, cond).p_value


def round_lengths(design: CodeDesign) -> CodeDesign:
    """Ceil every real length; the result still satisfies Kraft."""
    rounded = np.ceil(design.lengths - 1e-9).astype(np.int64)
    rounded = np.maximum(rounded, 0)
    age = average_age(design.cond, rounded.astype(np.float64)).delta
    return replace(design, rounded_lengths=rounded, rounded_age=age)
