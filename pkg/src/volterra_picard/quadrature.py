"""Composite Gauss-Legendre rules and the nested Volterra-type integral."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from volterra_picard.errors import DomainError


@dataclass(frozen=True)
class QuadratureRule:
    """``order`` Gauss points on each of ``panels`` equal panels.

    Exact for piecewise polynomials of degree ``2*order - 1`` whose breaks
    fall on panel edges.
    """

    order: int = 5
    panels: int = 8
    _unit: tuple = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if self.order < 1 or self.panels < 1:
            raise DomainError(f"order and panels must be >= 1, got {self.order}, {self.panels}")
        xi, wi = np.polynomial.legendre.leggauss(self.order)
        edges = np.linspace(0.0, 1.0, self.panels + 1)
        h = np.diff(edges)
        nodes = (edges[:-1, None] + 0.5 * h[:, None] * (xi + 1.0)).ravel()
        weights = (0.5 * h[:, None] * wi).ravel()
        object.__setattr__(self, "_unit", (nodes, weights))

    def nodes_weights(self, a, b):
        """Nodes and weights on ``[a, b]``; ``a`` and ``b`` may be arrays,
        in which case the quadrature axis is appended last."""
        nodes, weights = self._unit
        a = np.asarray(a, dtype=float)[..., None]
        b = np.asarray(b, dtype=float)[..., None]
        return a + (b - a) * nodes, (b - a) * weights


G_TERM_RULE = QuadratureRule(5, 8)
ORACLE_RULE = QuadratureRule(4, 4)


def integrate(f, a: float, b: float, rule: QuadratureRule = G_TERM_RULE) -> float:
    """Composite Gauss-Legendre approximation of ``int_a^b f``.

    ``f`` must accept a numpy array of abscissae.
    """
    if a > b:
        raise DomainError(f"lower limit {a} exceeds upper limit {b}")
    if a == b:
        return 0.0
    x, w = rule.nodes_weights(a, b)
    values = np.broadcast_to(np.asarray(f(x), dtype=float), x.shape)
    return float(np.dot(w, values))


def volterra_triple(f, t: float, x: float, alpha: float, rule: QuadratureRule = ORACLE_RULE) -> float:
    """``int_0^t int_0^r int_alpha^x f(r, y, s) dy ds dr`` by nested rules."""
    if t < 0 or x < alpha:
        raise DomainError(f"need t >= 0 and x >= alpha, got t={t}, x={x}, alpha={alpha}")
    if t == 0 or x == alpha:
        return 0.0
    r, wr = rule.nodes_weights(0.0, t)  # (Q,)
    s, ws = rule.nodes_weights(0.0, r)  # (Q, Q)
    y, wy = rule.nodes_weights(alpha, x)  # (Q,)
    R = r[:, None, None]
    S = s[:, :, None]
    Y = y[None, None, :]
    values = np.broadcast_to(np.asarray(f(R, Y, S), dtype=float), (r.size, r.size, y.size))
    inner = values @ wy
    return float(wr @ np.sum(ws * inner, axis=1))
