"""Tensor-product Schauder projections on 2 and 4 variables.

For hat bases the truncation of the tensor Schauder expansion to its first
``n**2`` (resp. ``n**4``) terms is the multilinear interpolant on the grid
formed by the first ``n`` nodes of each axis. Grid functions therefore
store node values; Schauder coefficients are derived when needed.

Grid arrays are indexed in node-sequence order, not sorted order:
``values[i, j]`` is the value at ``(xnodes[i], tnodes[j])``.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np
from scipy.linalg import solve_triangular

from volterra_picard.basis import HatBasis, phi4_order, tau_order
from volterra_picard.errors import DomainError


def hierarchical_matrix(basis: HatBasis, n: int) -> np.ndarray:
    """Lower unit-triangular ``V[p, k] = phi_k(x_p)`` for the first ``n`` nodes."""
    return basis.eval_all(basis.seq.first(n), n)


def hierarchize(values: np.ndarray, bases) -> np.ndarray:
    """Convert node values into tensor Schauder coefficients, axis by axis.

    Along each axis this is forward substitution with the triangular
    matrix of element values at nodes, i.e. the sequential rule
    ``c_m = f(x_m) - (partial sum at x_m)``.
    """
    coeffs = np.asarray(values, dtype=float)
    for axis, basis in enumerate(bases):
        n = coeffs.shape[axis]
        V = hierarchical_matrix(basis, n)
        moved = np.moveaxis(coeffs, axis, 0)
        solved = solve_triangular(V, moved.reshape(n, -1), lower=True, unit_diagonal=True)
        coeffs = np.moveaxis(solved.reshape(moved.shape), 0, axis)
    return coeffs


def _multilinear(values: np.ndarray, bases, points) -> np.ndarray:
    # values indexed in node order; interpolate on the sorted grid
    n = values.shape[0]
    pts = np.broadcast_arrays(*[b.check_domain(p) for b, p in zip(bases, points)])
    shape = pts[0].shape
    idx_lo, idx_hi, weights = [], [], []
    for basis, p in zip(bases, pts):
        nodes = basis.seq.first(n)
        order = np.argsort(nodes)
        s = nodes[order]
        cell = np.clip(np.searchsorted(s, p.ravel(), side="left") - 1, 0, n - 2)
        w = (p.ravel() - s[cell]) / (s[cell + 1] - s[cell])
        idx_lo.append(order[cell])
        idx_hi.append(order[cell + 1])
        weights.append(w)
    out = np.zeros(pts[0].size)
    for corner in itertools.product((0, 1), repeat=len(bases)):
        index = tuple(idx_hi[d] if c else idx_lo[d] for d, c in enumerate(corner))
        w = np.ones_like(out)
        for d, c in enumerate(corner):
            w = w * (weights[d] if c else 1.0 - weights[d])
        out += w * values[index]
    return out.reshape(shape)


def _grid_points(bases, n: int):
    axes = [b.seq.first(n) for b in bases]
    return np.meshgrid(*axes, indexing="ij")


@dataclass(frozen=True, eq=False)
class GridFunction2:
    """Q_{n^2} projection on C(Omega): values at an n-by-n node grid."""

    xbasis: HatBasis
    tbasis: HatBasis
    values: np.ndarray

    def __post_init__(self):
        values = np.array(self.values, dtype=float)
        if values.ndim != 2 or values.shape[0] != values.shape[1] or values.shape[0] < 2:
            raise DomainError(f"expected an n-by-n grid with n >= 2, got {values.shape}")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    @property
    def n(self) -> int:
        return self.values.shape[0]

    @property
    def bases(self):
        return (self.xbasis, self.tbasis)

    def __call__(self, x, t):
        return eval2(self, x, t)

    def coeff_grid(self) -> np.ndarray:
        """Schauder coefficients as an array indexed by ``(i, j)``."""
        return hierarchize(self.values, self.bases)


@dataclass(frozen=True, eq=False)
class GridFunction4:
    """R_{n^4} projection on C(Omega^2): values on an n^4 node grid over
    axes ``(x, t, y, s)``."""

    xbasis: HatBasis
    tbasis: HatBasis
    values: np.ndarray

    def __post_init__(self):
        values = np.array(self.values, dtype=float)
        if values.ndim != 4 or len(set(values.shape)) != 1 or values.shape[0] < 2:
            raise DomainError(f"expected an n^4 grid with n >= 2, got {values.shape}")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    @property
    def n(self) -> int:
        return self.values.shape[0]

    @property
    def bases(self):
        return (self.xbasis, self.tbasis, self.xbasis, self.tbasis)

    def __call__(self, x, t, y, s):
        return eval4(self, x, t, y, s)

    def coeff_grid(self) -> np.ndarray:
        return hierarchize(self.values, self.bases)


def project2(f, n: int, xbasis: HatBasis, tbasis: HatBasis) -> GridFunction2:
    """Sample ``f(x, t)`` (vectorised) on the first ``n`` nodes per axis."""
    X, T = _grid_points((xbasis, tbasis), n)
    values = np.broadcast_to(np.asarray(f(X, T), dtype=float), X.shape)
    return GridFunction2(xbasis, tbasis, values)


def project4(f, n: int, xbasis: HatBasis, tbasis: HatBasis) -> GridFunction4:
    X, T, Y, S = _grid_points((xbasis, tbasis, xbasis, tbasis), n)
    values = np.broadcast_to(np.asarray(f(X, T, Y, S), dtype=float), X.shape)
    return GridFunction4(xbasis, tbasis, values)


def eval2(g: GridFunction2, x, t):
    out = _multilinear(g.values, g.bases, (x, t))
    return out if out.ndim else float(out)


def eval4(g: GridFunction4, x, t, y, s):
    out = _multilinear(g.values, g.bases, (x, t, y, s))
    return out if out.ndim else float(out)


def schauder_coeffs2(g: GridFunction2) -> np.ndarray:
    """Coefficients ``lambda_1 .. lambda_{n^2}`` in tau order."""
    order = tau_order(g.n)
    return g.coeff_grid()[order[:, 0], order[:, 1]]


def schauder_coeffs4(g: GridFunction4) -> np.ndarray:
    """Coefficients ``lambda_1 .. lambda_{n^4}`` in phi4 order."""
    order = phi4_order(g.n)
    return g.coeff_grid()[tuple(order.T)]


def schauder_sum2(coeffs, xbasis: HatBasis, tbasis: HatBasis, x, t):
    """Evaluate ``sum_k coeffs[k] * A_k(x, t)`` for a tau-ordered coefficient list."""
    coeffs = np.asarray(coeffs, dtype=float)
    n = int(round(np.sqrt(coeffs.size)))
    if n * n != coeffs.size:
        raise DomainError("coefficient count must be a perfect square")
    order = tau_order(n)
    px = xbasis.eval_all(x, n)
    pt = tbasis.eval_all(t, n)
    return np.sum(coeffs * px[..., order[:, 0]] * pt[..., order[:, 1]], axis=-1)


def schauder_sum4(coeffs, xbasis: HatBasis, tbasis: HatBasis, x, t, y, s):
    coeffs = np.asarray(coeffs, dtype=float)
    n = int(round(coeffs.size**0.25))
    if n**4 != coeffs.size:
        raise DomainError("coefficient count must be a fourth power")
    order = phi4_order(n)
    terms = (
        xbasis.eval_all(x, n)[..., order[:, 0]]
        * tbasis.eval_all(t, n)[..., order[:, 1]]
        * xbasis.eval_all(y, n)[..., order[:, 2]]
        * tbasis.eval_all(s, n)[..., order[:, 3]]
    )
    return np.sum(coeffs * terms, axis=-1)
