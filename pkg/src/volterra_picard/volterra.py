"""Problem model, the exact Picard operator (by quadrature) and the projected
operators whose composition approximates the solution.

The problem is::

    du/dt = a(x,t) u + g(x,t) + int_0^t int_alpha^x K(x,t,y,s,u(y,s)) dy ds
    u(x, 0) = u0(x)

on ``[alpha, alpha+beta] x [0, T]``. Its solution is the fixed point of

    (F v)(x,t) = u0(x) + int_0^t a v + int_0^t g
                 + int_0^t int_0^r int_alpha^x K(x,r,y,s,v(y,s)) dy ds dr.

A projected step replaces ``a v`` by its bilinear interpolant on an
``n x n`` node grid and ``K(., v)`` by its multilinear interpolant on the
``n^4`` grid; both resulting integrals are then exact sums over Schauder
coefficients and 1D hat primitives.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from volterra_picard.basis import HatBasis, dyadic_nodes
from volterra_picard.errors import DomainError
from volterra_picard.interp import GridFunction2, GridFunction4, schauder_coeffs2, schauder_coeffs4
from volterra_picard.quadrature import G_TERM_RULE, ORACLE_RULE, QuadratureRule, integrate, volterra_triple

# sampling density used to validate and default the bound N >= max |a|
N_CHECK_DENSITY = 51
N_DEFAULT_INFLATION = 1.05


def _shaped(value, *args) -> np.ndarray:
    shape = np.broadcast_shapes(*(np.shape(a) for a in args))
    return np.broadcast_to(np.asarray(value, dtype=float), shape)


@dataclass(frozen=True, eq=False)
class Problem:
    """A nonlinear partial Volterra integro-differential problem.

    ``a``, ``g`` take ``(x, t)``; ``K`` takes ``(x, t, y, s, u)``; ``u0``
    takes ``x``. All must evaluate elementwise on numpy arrays. ``M`` is a
    Lipschitz constant of ``K`` in ``u`` and ``N`` bounds ``|a|`` on the
    domain; when ``N`` is omitted it is estimated from a 51x51 sample,
    inflated by 5%.
    """

    alpha: float
    beta: float
    T: float
    a: Callable
    g: Callable
    K: Callable
    u0: Callable
    M: float
    N: Optional[float] = None

    def __post_init__(self):
        if not self.beta > 0 or not self.T > 0:
            raise DomainError(f"beta and T must be positive, got beta={self.beta}, T={self.T}")
        if not self.M >= 0:
            raise DomainError(f"M must be nonnegative, got {self.M}")
        xs = np.linspace(self.alpha, self.alpha + self.beta, N_CHECK_DENSITY)
        ts = np.linspace(0.0, self.T, N_CHECK_DENSITY)
        X, T = np.meshgrid(xs, ts, indexing="ij")
        sampled = float(np.max(np.abs(self.a_at(X, T))))
        if self.N is None:
            object.__setattr__(self, "N", N_DEFAULT_INFLATION * sampled)
        elif sampled > self.N * (1 + 1e-12) + 1e-300:
            raise DomainError(f"N={self.N} is below the sampled max |a| = {sampled}")

    @property
    def x_range(self) -> tuple[float, float]:
        return (self.alpha, self.alpha + self.beta)

    def a_at(self, x, t):
        return _shaped(self.a(x, t), x, t)

    def g_at(self, x, t):
        return _shaped(self.g(x, t), x, t)

    def K_at(self, x, t, y, s, u):
        return _shaped(self.K(x, t, y, s, u), x, t, y, s, u)

    def u0_at(self, x):
        return _shaped(self.u0(x), x)

    def check_point(self, x, t):
        x = np.asarray(x, dtype=float)
        t = np.asarray(t, dtype=float)
        lo, hi = self.x_range
        slack = 1e-12 * max(1.0, abs(hi), abs(lo), self.T)
        if np.any(x < lo - slack) or np.any(x > hi + slack) or np.any(t < -slack) or np.any(t > self.T + slack):
            raise DomainError(f"point outside [{lo}, {hi}] x [0, {self.T}]")
        return np.clip(x, lo, hi), np.clip(t, 0.0, self.T)


class InitialGuess:
    """Wraps a function of ``(x, t)`` as the starting point of the iteration."""

    def __init__(self, fn: Callable):
        self.fn = fn

    def __call__(self, x, t):
        return _shaped(self.fn(x, t), x, t)

    @classmethod
    def from_u0(cls, problem: Problem) -> "InitialGuess":
        return cls(lambda x, t: problem.u0_at(x) + 0.0 * np.asarray(t, dtype=float))


def L0_eval(p: Problem, v: Callable, x, t, y, s):
    """``K(x, t, y, s, v(y, s))``."""
    return p.K_at(x, t, y, s, v(y, s))


def apply_F_oracle(p: Problem, v: Callable, x: float, t: float, rule: QuadratureRule = ORACLE_RULE) -> float:
    """``(F v)(x, t)`` with every integral done by composite Gauss rules."""
    (x, t) = (float(c) for c in p.check_point(x, t))
    u0 = float(p.u0_at(x))
    if t == 0.0:
        return u0
    av = integrate(lambda r: p.a_at(x, r) * v(np.full_like(r, x), r), 0.0, t, rule)
    gi = integrate(lambda r: p.g_at(x, r), 0.0, t, rule)
    ki = volterra_triple(lambda r, y, s: p.K_at(x, r, y, s, v(y, s)), t, x, p.alpha, rule)
    return u0 + av + gi + ki


def apply_F_oracle_many(p: Problem, v: Callable, points, rule: QuadratureRule = ORACLE_RULE) -> np.ndarray:
    return np.array([apply_F_oracle(p, v, x, t, rule) for x, t in points])


def default_bases(p: Problem, n: int) -> tuple[HatBasis, HatBasis]:
    """Dyadic hat bases on both axes with ``n`` nodes each."""
    lo, hi = p.x_range
    return HatBasis(dyadic_nodes(lo, hi, n)), HatBasis(dyadic_nodes(0.0, p.T, n))


@dataclass(frozen=True, eq=False)
class Iterate:
    """``G_p(v)`` in closed form.

    Holds the tau-ordered Schauder coefficients of the 2D projection of
    ``a v`` and the phi4-ordered coefficients of the 4D projection of
    ``K(., v)``. ``source`` is the function the step was applied to (the
    previous iterate, or the initial guess).
    """

    problem: Problem
    xbasis: HatBasis
    tbasis: HatBasis
    q_grid: GridFunction2
    r_grid: GridFunction4
    g_rule: QuadratureRule
    source: Callable
    depth: int
    _q_coeffs: np.ndarray = field(init=False, repr=False)
    _r_coeffs: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        q = self.q_grid.coeff_grid()
        r = self.r_grid.coeff_grid()
        q.setflags(write=False)
        r.setflags(write=False)
        object.__setattr__(self, "_q_coeffs", q)
        object.__setattr__(self, "_r_coeffs", r)

    @property
    def n(self) -> int:
        return self.q_grid.n

    @property
    def parent(self) -> Optional["Iterate"]:
        return self.source if isinstance(self.source, Iterate) else None

    @property
    def q_coeffs(self) -> np.ndarray:
        return schauder_coeffs2(self.q_grid)

    @property
    def r_coeffs(self) -> np.ndarray:
        return schauder_coeffs4(self.r_grid)

    def stages(self) -> list["Iterate"]:
        """All iterates of the composition, first stage first."""
        chain = []
        node: Optional[Iterate] = self
        while node is not None:
            chain.append(node)
            node = node.parent
        return chain[::-1]

    def initial_guess(self) -> Callable:
        return self.stages()[0].source

    def __call__(self, x, t):
        return eval_iterate(self, x, t)


def eval_iterate(it: Iterate, x, t):
    """Evaluate ``G_p(v)`` at points ``(x, t)`` (broadcast arrays allowed)."""
    p = it.problem
    x, t = p.check_point(x, t)
    x, t = np.broadcast_arrays(x, t)
    shape = x.shape
    x = x.ravel()
    t = t.ravel()
    n = it.n

    phi_x = it.xbasis.eval_all(x, n)
    prim_x = it.xbasis.primitive_all(x, n)
    prim_t = it.tbasis.primitive_all(t, n)
    pair_t = it.tbasis.pair_primitive_all(t, n)

    q_term = np.einsum("pi,ij,pj->p", phi_x, it._q_coeffs, prim_t)
    partial = np.einsum("pi,pk,ijkl->pjl", phi_x, prim_x, it._r_coeffs)
    r_term = np.einsum("pjl,pjl->p", partial, pair_t)

    r, w = it.g_rule.nodes_weights(np.zeros_like(t), t)
    g_term = np.sum(w * p.g_at(x[:, None], r), axis=-1)

    out = (p.u0_at(x) + q_term + g_term + r_term).reshape(shape)
    return out if out.ndim else float(out)


def build_G(
    p: Problem,
    v: Callable,
    n: int,
    xbasis: Optional[HatBasis] = None,
    tbasis: Optional[HatBasis] = None,
    g_rule: QuadratureRule = G_TERM_RULE,
) -> Iterate:
    """One projected Picard step ``G(v)`` on ``n`` nodes per axis.

    Only the values of ``v`` on the ``n x n`` node grid are used.
    """
    if n < 2:
        raise DomainError(f"need at least 2 nodes per axis, got {n}")
    if xbasis is None or tbasis is None:
        dx, dt = default_bases(p, n)
        xbasis = xbasis or dx
        tbasis = tbasis or dt
    xs = xbasis.seq.first(n)
    ts = tbasis.seq.first(n)
    X, T = np.meshgrid(xs, ts, indexing="ij")
    V = np.broadcast_to(np.asarray(v(X, T), dtype=float), X.shape)
    q_grid = GridFunction2(xbasis, tbasis, p.a_at(X, T) * V)
    X4, T4, Y4, S4 = np.meshgrid(xs, ts, xs, ts, indexing="ij")
    U4 = np.broadcast_to(V[None, None, :, :], X4.shape)
    r_grid = GridFunction4(xbasis, tbasis, p.K_at(X4, T4, Y4, S4, U4))
    depth = v.depth + 1 if isinstance(v, Iterate) else 1
    return Iterate(p, xbasis, tbasis, q_grid, r_grid, g_rule, v, depth)


def compose(
    p: Problem,
    guess: Callable,
    m: int,
    n_list: Sequence[int],
    xbasis: Optional[HatBasis] = None,
    tbasis: Optional[HatBasis] = None,
    g_rule: QuadratureRule = G_TERM_RULE,
) -> Iterate:
    """``G_m o ... o G_1 (guess)`` with ``n_list[p-1]`` nodes per axis at step p."""
    if m < 1:
        raise DomainError(f"need at least one step, got m={m}")
    if len(n_list) != m:
        raise DomainError(f"n_list has {len(n_list)} entries for m={m}")
    need = max(n_list)
    if xbasis is None or tbasis is None:
        dx, dt = default_bases(p, need)
        xbasis = xbasis or dx
        tbasis = tbasis or dt
    v = guess
    for n in n_list:
        v = build_G(p, v, n, xbasis, tbasis, g_rule)
    return v


def error_table(it: Callable, exact: Callable, points) -> np.ndarray:
    """Absolute errors ``|it - exact|`` at each ``(x, t)`` in ``points``."""
    pts = np.asarray(points, dtype=float).reshape(-1, 2)
    x, t = pts[:, 0], pts[:, 1]
    return np.abs(np.asarray(it(x, t)) - np.asarray(exact(x, t)))
