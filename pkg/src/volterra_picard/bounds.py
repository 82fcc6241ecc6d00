"""Contraction constants, a-priori tail bounds, depth selection and the
a-posteriori estimate of the gap between exact and projected iterations.

Sup norms of functions we can only evaluate are estimated on uniform grids.
Such estimates can undershoot the true norm; they are reported as
estimates, not certificates.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from volterra_picard.errors import DomainError
from volterra_picard.interp import eval2, eval4
from volterra_picard.quadrature import G_TERM_RULE, ORACLE_RULE, QuadratureRule
from volterra_picard.volterra import InitialGuess, Iterate, Problem, apply_F_oracle, compose, error_table

TAIL_RELATIVE_CUTOFF = 1e-16
DEFAULT_DENSITY = 21


@dataclass(frozen=True)
class ContractionParams:
    N: float
    M: float
    T: float
    beta: float

    def __post_init__(self):
        values = (self.N, self.M, self.T, self.beta)
        if not all(math.isfinite(v) for v in values):
            raise DomainError("contraction parameters must be finite")
        if self.T <= 0 or self.beta <= 0:
            raise DomainError("T and beta must be positive")
        if self.N < 0 or self.M < 0:
            raise DomainError("N and M must be nonnegative")

    @classmethod
    def of(cls, p: Problem) -> "ContractionParams":
        return cls(N=float(p.N), M=float(p.M), T=float(p.T), beta=float(p.beta))

    @property
    def ratio_numerator(self) -> float:
        # mu_{i+1} / mu_i <= T (N + T beta M) / (i + 1)
        return self.T * (self.N + self.T * self.beta * self.M)


def mu(n: int, p: ContractionParams) -> float:
    """``mu_0 = 1``; ``mu_n = T^n / n! * (N + T beta M / n)^n``."""
    if n < 0:
        raise DomainError(f"mu is defined for n >= 0, got {n}")
    if n == 0:
        return 1.0
    base = p.T * (p.N + p.T * p.beta * p.M / n)
    value = 1.0
    # running product avoids overflow of T^n and n! separately
    for k in range(1, n + 1):
        value *= base / k
    return value


def tail_sum(m: int, p: ContractionParams) -> float:
    """Upper bound on ``sum_{i >= m} mu_i``.

    Terms are summed until they fall below ``1e-16`` of the partial sum and
    the ratio bound is below one; the rest is bounded geometrically.
    """
    if m < 1:
        raise DomainError(f"tail_sum needs m >= 1, got {m}")
    total = 0.0
    i = m
    while True:
        term = mu(i, p)
        total += term
        rho = p.ratio_numerator / (i + 1)
        if rho < 1.0 and term <= TAIL_RELATIVE_CUTOFF * total:
            return total + term * rho / (1.0 - rho)
        i += 1


def choose_m(eps: float, residual_norm: float, p: ContractionParams) -> int:
    """Smallest ``m >= 1`` with ``tail_sum(m) < eps / (2 * residual_norm)``."""
    if eps <= 0:
        raise DomainError(f"eps must be positive, got {eps}")
    if residual_norm < 0:
        raise DomainError(f"residual norm must be nonnegative, got {residual_norm}")
    if residual_norm == 0:
        return 1
    target = eps / (2.0 * residual_norm)
    m = 1
    while tail_sum(m, p) >= target:
        m += 1
    return m


def stage_targets(eps: float, m: int, p: ContractionParams) -> list[float]:
    """Per-stage tolerances ``eps / (2 m mu_{m-p})`` for ``p = 1..m``.

    If every stage's residual ``||F(v_{p-1}) - G_p(v_{p-1})||`` stays below
    its target, the composed error relative to ``F^m`` is below ``eps/2``.
    """
    out = []
    for stage in range(1, m + 1):
        weight = mu(m - stage, p)
        out.append(math.inf if weight == 0 else eps / (2.0 * m * weight))
    return out


def composition_bound(defects: Sequence[float], weight: Callable[[int], float]) -> float:
    """``sum_p weight(m - p) * defects[p-1]`` for ``p = 1..m``.

    Bounds ``||F^m x - G_m o ... o G_1 x||`` when ``weight(k)`` is a
    contraction constant of ``F^k`` and ``defects[p-1]`` is
    ``||F(x_{p-1}) - G_p(x_{p-1})||``. Works for any operator pair, which the
    tests exploit with a scalar toy.
    """
    m = len(defects)
    return float(sum(weight(m - stage) * d for stage, d in enumerate(defects, start=1)))


def uniform_grid(p: Problem, density: int):
    if density < 2:
        raise DomainError(f"grid density must be >= 2, got {density}")
    lo, hi = p.x_range
    return np.linspace(lo, hi, density), np.linspace(0.0, p.T, density)


def estimate_residual_norm(
    p: Problem,
    guess: Callable,
    rule: QuadratureRule = ORACLE_RULE,
    density: int = DEFAULT_DENSITY,
) -> float:
    """Sampled ``max |F(guess) - guess|`` over a ``density x density`` grid.

    A lower estimate of the true sup norm.
    """
    xs, ts = uniform_grid(p, density)
    worst = 0.0
    for x in xs:
        for t in ts:
            diff = abs(apply_F_oracle(p, guess, x, t, rule) - float(np.asarray(guess(x, t))))
            worst = max(worst, diff)
    return worst


@dataclass(frozen=True)
class StageTerm:
    """Sampled projection errors of one stage and its weight ``mu_{m-p}``."""

    n: int
    q_error: float
    r_error: float
    weight: float
    contribution: float


@dataclass(frozen=True)
class Lemma3Estimate:
    total: float
    stages: tuple[StageTerm, ...]

    def __float__(self):
        return self.total


def _projection_errors(stage: Iterate, density: int) -> tuple[float, float]:
    p = stage.problem
    v = stage.source
    xs, ts = uniform_grid(p, density)
    X, T = np.meshgrid(xs, ts, indexing="ij")
    V = np.broadcast_to(np.asarray(v(X, T), dtype=float), X.shape)
    q_err = float(np.max(np.abs(p.a_at(X, T) * V - eval2(stage.q_grid, X, T))))

    X4, T4, Y4, S4 = np.meshgrid(xs, ts, xs, ts, indexing="ij")
    U4 = np.broadcast_to(V[None, None, :, :], X4.shape)
    L = p.K_at(X4, T4, Y4, S4, U4)
    r_err = float(np.max(np.abs(L - eval4(stage.r_grid, X4, T4, Y4, S4))))
    return q_err, r_err


def lemma3_terms(p: Problem, stages: Sequence[Iterate], fine_density: int = DEFAULT_DENSITY) -> Lemma3Estimate:
    """Sampled bound on ``||F^m(u~) - G_m o ... o G_1(u~)||``.

    ``sum_p mu_{m-p} (||a v_{p-1} - Q(a v_{p-1})|| T
    + ||K(., v_{p-1}) - R(K(., v_{p-1}))|| beta T^2)`` with each norm taken
    as a maximum over a uniform grid.
    """
    if not stages:
        raise DomainError("need at least one stage")
    params = ContractionParams.of(p)
    m = len(stages)
    terms, defects = [], []
    for index, stage in enumerate(stages, start=1):
        q_err, r_err = _projection_errors(stage, fine_density)
        weight = mu(m - index, params)
        defects.append(q_err * p.T + r_err * p.beta * p.T**2)
        terms.append(StageTerm(stage.n, q_err, r_err, weight, weight * defects[-1]))
    total = composition_bound(defects, lambda k: mu(k, params))
    return Lemma3Estimate(total, tuple(terms))


def lemma3_bound(p: Problem, stages: Sequence[Iterate], fine_density: int = DEFAULT_DENSITY) -> float:
    return lemma3_terms(p, stages, fine_density).total


@dataclass(frozen=True, eq=False)
class ErrorReport:
    """Errors and bounds of one composed run.

    ``values[d]`` holds the depth-``d+1`` iterate at each point and
    ``errors[d]`` its absolute error (``None`` without an exact solution).
    ``apriori_bound`` bounds ``||F^m u~ - u||`` (tail sum times residual);
    ``aposteriori_bound`` is the sampled estimate of ``||F^m u~ - G...u~||``.
    """

    points: np.ndarray
    values: np.ndarray
    errors: Optional[np.ndarray]
    m: int
    n_list: tuple[int, ...]
    residual_norm: float
    tail: float
    apriori_bound: float
    aposteriori_bound: float
    stage_terms: tuple[StageTerm, ...] = field(default=())

    @property
    def total_bound(self) -> float:
        return self.apriori_bound + self.aposteriori_bound


def build_report(
    p: Problem,
    m: int,
    n_list: Sequence[int],
    points,
    exact: Optional[Callable] = None,
    guess: Optional[Callable] = None,
    g_rule: QuadratureRule = G_TERM_RULE,
    oracle_rule: QuadratureRule = ORACLE_RULE,
    density: int = DEFAULT_DENSITY,
) -> ErrorReport:
    """Run ``m`` projected steps and collect errors at ``points`` plus bounds."""
    guess = guess if guess is not None else InitialGuess.from_u0(p)
    final = compose(p, guess, m, list(n_list), g_rule=g_rule)
    stages = final.stages()
    pts = np.asarray(points, dtype=float).reshape(-1, 2)
    values = np.array([np.asarray(s(pts[:, 0], pts[:, 1]), dtype=float) for s in stages])
    errors = None
    if exact is not None:
        errors = np.array([error_table(s, exact, pts) for s in stages])

    params = ContractionParams.of(p)
    residual = estimate_residual_norm(p, guess, oracle_rule, density)
    tail = tail_sum(m, params)
    post = lemma3_terms(p, stages, density)
    return ErrorReport(
        points=pts,
        values=values,
        errors=errors,
        m=m,
        n_list=tuple(int(n) for n in n_list),
        residual_norm=residual,
        tail=tail,
        apriori_bound=tail * residual,
        aposteriori_bound=post.total,
        stage_terms=post.stages,
    )
