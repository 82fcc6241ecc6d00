"""Piecewise-linear Schauder (hat) bases on an interval and the index maps
that order their tensor products.

A basis is defined by a dense sequence of distinct nodes whose first two
entries are the interval endpoints. Element 1 is the constant one; element
``k >= 2`` is the hat that equals 1 at node ``k`` and vanishes at every
earlier node, linear between consecutive nodes among the first ``k``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from volterra_picard.errors import DomainError

# relative slack allowed when checking that a point lies inside [lo, hi]
_EDGE_TOL = 1e-12


def tau(n: int) -> tuple[int, int]:
    """Map a positive integer onto a pair, enumerating {1..m}^2 first.

    The first ``m**2`` values of ``tau`` are exactly the pairs in
    ``{1, ..., m}**2``, which is what makes truncated tensor-product
    expansions coincide with full grids.
    """
    if n < 1:
        raise DomainError(f"tau is defined for n >= 1, got {n}")
    r = math.isqrt(n)
    d = n - r * r
    if d == 0:
        return (r, r)
    if d <= r:
        return (d, r + 1)
    return (r + 1, d - r)


def tau_inverse(i: int, j: int) -> int:
    if i < 1 or j < 1:
        raise DomainError(f"tau_inverse needs positive indices, got ({i}, {j})")
    k = max(i, j)
    if i == j:
        return k * k
    if i < j:
        return (k - 1) ** 2 + i
    return (k - 1) ** 2 + (k - 1) + j


def phi4(n: int) -> tuple[int, int, int, int]:
    """Four-index analogue of :func:`tau`, built by nesting it."""
    if n < 1:
        raise DomainError(f"phi4 is defined for n >= 1, got {n}")
    first, second = tau(n)
    return tau(first) + tau(second)


def phi4_inverse(i: int, j: int, k: int, l: int) -> int:
    return tau_inverse(tau_inverse(i, j), tau_inverse(k, l))


def tau_order(n: int) -> np.ndarray:
    """Zero-based ``(i, j)`` index pairs of ``tau(1), ..., tau(n**2)``."""
    return np.array([tau(m) for m in range(1, n * n + 1)], dtype=np.intp) - 1


def phi4_order(n: int) -> np.ndarray:
    """Zero-based index 4-tuples of ``phi4(1), ..., phi4(n**4)``."""
    return np.array([phi4(m) for m in range(1, n**4 + 1)], dtype=np.intp) - 1


@dataclass(frozen=True)
class NodeSequence:
    """Ordered distinct nodes in ``[lo, hi]`` with ``nodes[0] == lo`` and
    ``nodes[1] == hi``."""

    lo: float
    hi: float
    nodes: tuple[float, ...]

    def __post_init__(self):
        if not self.lo < self.hi:
            raise DomainError(f"need lo < hi, got [{self.lo}, {self.hi}]")
        nodes = tuple(float(v) for v in self.nodes)
        object.__setattr__(self, "nodes", nodes)
        if len(nodes) < 2 or nodes[0] != self.lo or nodes[1] != self.hi:
            raise DomainError("the first two nodes must be lo and hi")
        if len(set(nodes)) != len(nodes):
            raise DomainError("nodes must be distinct")
        if min(nodes) < self.lo or max(nodes) > self.hi:
            raise DomainError("nodes must lie in [lo, hi]")

    def __len__(self):
        return len(self.nodes)

    def first(self, n: int) -> np.ndarray:
        if n > len(self.nodes):
            raise DomainError(f"only {len(self.nodes)} nodes available, asked for {n}")
        return np.asarray(self.nodes[:n])


def dyadic_nodes(lo: float, hi: float, count: int) -> NodeSequence:
    """Endpoints followed by breadth-first dyadic midpoints.

    >>> dyadic_nodes(0.0, 1.0, 5).nodes
    (0.0, 1.0, 0.5, 0.25, 0.75)
    """
    if count < 2:
        raise DomainError(f"a node sequence needs at least 2 nodes, got {count}")
    if not lo < hi:
        raise DomainError(f"need lo < hi, got [{lo}, {hi}]")
    nodes = [float(lo), float(hi)]
    cells = [(float(lo), float(hi))]
    while len(nodes) < count:
        refined = []
        for a, b in cells:
            mid = 0.5 * (a + b)
            nodes.append(mid)
            refined += [(a, mid), (mid, b)]
            if len(nodes) == count:
                break
        cells = refined
    return NodeSequence(float(lo), float(hi), tuple(nodes))


@dataclass(frozen=True)
class HatBasis:
    """Usual Schauder basis of C([lo, hi]) for a node sequence.

    Element ``k`` (1-based) for ``k >= 2`` rises linearly from its left
    neighbour to node ``k`` and falls to its right neighbour, neighbours
    being the closest earlier nodes. Element 2 has no right neighbour: it is
    the ramp from ``lo`` to ``hi``.
    """

    seq: NodeSequence
    _support: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        nodes = self.seq.nodes
        support = np.empty((len(nodes), 3))
        support[0] = (self.seq.lo, self.seq.lo, self.seq.hi)
        for k in range(1, len(nodes)):
            c = nodes[k]
            earlier = nodes[:k]
            left = max(v for v in earlier if v < c)
            right = min((v for v in earlier if v > c), default=c)
            support[k] = (left, c, right)
        object.__setattr__(self, "_support", support)

    @property
    def lo(self) -> float:
        return self.seq.lo

    @property
    def hi(self) -> float:
        return self.seq.hi

    def __len__(self):
        return len(self.seq)

    def check_domain(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        slack = _EDGE_TOL * (self.hi - self.lo)
        if np.any(x < self.lo - slack) or np.any(x > self.hi + slack) or np.any(np.isnan(x)):
            raise DomainError(f"points outside [{self.lo}, {self.hi}]")
        return np.clip(x, self.lo, self.hi)

    def _check_count(self, n: int):
        if not 1 <= n <= len(self.seq):
            raise DomainError(f"element index must be in 1..{len(self.seq)}, got {n}")

    def eval_all(self, x, n: int) -> np.ndarray:
        """Values of elements ``1..n`` at ``x``; shape ``x.shape + (n,)``."""
        self._check_count(n)
        x = self.check_domain(x)[..., None]
        left, peak, right = (self._support[1:n, c] for c in range(3))
        rise = (x - left) / (peak - left)
        fall = np.where(right > peak, (right - x) / np.where(right > peak, right - peak, 1.0), 0.0)
        hats = np.where((x > left) & (x <= peak), rise, 0.0)
        hats = np.where((x > peak) & (x < right), fall, hats)
        ones = np.ones(x.shape[:-1] + (1,))
        return np.concatenate([ones, hats], axis=-1)

    def primitive_all(self, x, n: int) -> np.ndarray:
        """Exact integrals from ``lo`` to ``x`` of elements ``1..n``."""
        self._check_count(n)
        x = self.check_domain(x)[..., None]
        left, peak, right = (self._support[1:n, c] for c in range(3))
        up = peak - left
        down = right - peak
        xr = np.clip(x, left, peak)
        area = (xr - left) ** 2 / (2.0 * up)
        xf = np.clip(x, peak, right)
        safe_down = np.where(down > 0, down, 1.0)
        area = area + np.where(down > 0, (xf - peak) - (xf - peak) ** 2 / (2.0 * safe_down), 0.0)
        return np.concatenate([x - self.lo, area], axis=-1)

    @cached_property
    def _gauss2(self):
        g = 1.0 / math.sqrt(3.0)
        return np.array([0.5 - 0.5 * g, 0.5 + 0.5 * g])

    def pair_primitive_all(self, t, n: int) -> np.ndarray:
        """``D[j, l](t) = int_lo^t phi_j(r) * Phi_l(r) dr`` for ``j, l <= n``.

        On every cell of the first ``n`` sorted nodes the integrand is a
        cubic polynomial, so two Gauss points per cell integrate it exactly.
        Returns shape ``t.shape + (n, n)``.
        """
        self._check_count(n)
        t = self.check_domain(t)
        cells = np.sort(self.seq.first(max(n, 2)))
        a = cells[:-1]
        b = np.minimum(cells[1:], t[..., None])
        width = np.maximum(b - a, 0.0)
        r = a[:, None] + width[..., None] * self._gauss2
        w = 0.5 * width[..., None] * np.ones(2)
        r = np.clip(r, self.lo, self.hi)
        h = self.eval_all(r, n)
        p = self.primitive_all(r, n)
        flat = r.shape[:-2] + (-1,)
        h = h.reshape(flat + (n,))
        p = p.reshape(flat + (n,))
        w = w.reshape(flat)
        return np.einsum("...q,...qj,...ql->...jl", w, h, p)


def hat_eval(basis: HatBasis, n: int, x):
    """Value of element ``n`` (1-based) at ``x``."""
    out = basis.eval_all(x, n)[..., n - 1]
    return out if out.ndim else float(out)


def hat_primitive(basis: HatBasis, n: int, x):
    """Exact ``int_lo^x`` of element ``n``."""
    out = basis.primitive_all(x, n)[..., n - 1]
    return out if out.ndim else float(out)


def iterated_pair_primitive(basis: HatBasis, j: int, l: int, t):
    """Exact ``int_lo^t phi_j(r) * (int_lo^r phi_l(s) ds) dr``."""
    n = max(j, l)
    out = basis.pair_primitive_all(t, n)[..., j - 1, l - 1]
    return out if out.ndim else float(out)
