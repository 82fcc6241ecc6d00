"""Scalar toy for the composition bounds.

``F(x) = x/2 + 1`` on the reals has contraction constants ``2^-n`` and fixed
point 2. A perturbed step is ``G_p(x) = F(x) + delta_p``.
"""

import numpy as np

from volterra_picard.bounds import composition_bound

FIXED_POINT = 2.0


def F(x):
    return x / 2 + 1


def weight(k):
    return 2.0**-k


def tail(m):
    # sum_{i >= m} 2^-i
    return 2.0 ** (1 - m)


def composition_holds(seed: int, m: int) -> bool:
    """``|F^m x - G_m...G_1 x| <= sum_p mu_{m-p} |F(x_{p-1}) - G_p(x_{p-1})|``."""
    rng = np.random.default_rng(seed)
    x0 = rng.uniform(-100, 100)
    deltas = rng.uniform(-0.01, 0.01, m)
    exact = approx = x0
    defects = []
    for d in deltas:
        exact = F(exact)
        step = F(approx) + d
        defects.append(abs(step - F(approx)))
        approx = step
    bound = composition_bound(defects, weight)
    return abs(exact - approx) <= bound * (1 + 1e-12) + 1e-15


def half_eps_split_holds(seed: int, eps: float = 0.05) -> bool:
    """Both half-eps conditions met implies the total error is below eps."""
    rng = np.random.default_rng(seed)
    x0 = rng.uniform(-100, 100)
    residual = abs(F(x0) - x0)
    m = 1
    while tail(m) * residual >= eps / 2:
        m += 1
    deltas = rng.uniform(-1, 1, m) * (eps / 2) / (2 * m)
    if composition_bound(np.abs(deltas), weight) >= eps / 2:
        return False
    approx = x0
    for d in deltas:
        approx = F(approx) + d
    return abs(approx - FIXED_POINT) < eps
