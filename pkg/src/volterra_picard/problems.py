"""The four benchmark problems with known exact solutions, on [0,1]^2.

Each native definition mirrors its expression string operation for
operation, so an expression-defined copy evaluates bit-for-bit the same.
Lipschitz constants ``M`` bound ``|dK/du|`` on the domain and ``N`` bounds
``|a|``; derivations are next to each entry.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from volterra_picard.errors import DomainError
from volterra_picard.volterra import Problem

ALPHA, BETA, T_END = 0.0, 1.0, 1.0


@dataclass(frozen=True, eq=False)
class NamedExample:
    id: int
    problem: Problem
    exact: Callable
    description: str
    sources: dict


def _example1() -> NamedExample:
    # |dK/du| = |y s| <= (alpha+beta) T = 1;  |a| = |t sin x| <= sin(1)
    problem = Problem(
        ALPHA, BETA, T_END,
        a=lambda x, t: t * np.sin(x),
        g=lambda x, t: x - t**3 * x**3 / 9 - t**2 * x * np.sin(x),
        K=lambda x, t, y, s, u: y * s * u,
        u0=lambda x: 0.0 * x,
        M=1.0,
        N=math.sin(1.0),
    )
    sources = {
        "a": "t*sin(x)",
        "g": "x - t^3*x^3/9 - t^2*x*sin(x)",
        "K": "y*s*u",
        "u0": "0",
        "exact": "x*t",
    }
    return NamedExample(1, problem, lambda x, t: x * t, "u = x t", sources)


def _example2() -> NamedExample:
    # |dK/du| = t^2 <= T^2 = 1;  a = 0
    problem = Problem(
        ALPHA, BETA, T_END,
        a=lambda x, t: 0.0 * x,
        g=lambda x, t: x * np.cos(t) - t**2 * x**2 * np.sin(t / 2) ** 2,
        K=lambda x, t, y, s, u: u * t**2,
        u0=lambda x: 0.0 * x,
        M=1.0,
        N=0.0,
    )
    sources = {
        "a": "0",
        "g": "x*cos(t) - t^2*x^2*sin(t/2)^2",
        "K": "u*t^2",
        "u0": "0",
        "exact": "x*sin(t)",
    }
    return NamedExample(2, problem, lambda x, t: x * np.sin(t), "u = x sin(t)", sources)


def _example3() -> NamedExample:
    # |dK/du| = |x t^2| <= 1;  |a| = |x sin t| <= sin(1)
    problem = Problem(
        ALPHA, BETA, T_END,
        a=lambda x, t: x * np.sin(t),
        g=lambda x, t: -t**4 * x / 2 + 1 / 2 * t**4 * x * np.cos(x) + np.sin(x) - t * x * np.sin(t) * np.sin(x),
        K=lambda x, t, y, s, u: x * t**2 * u,
        u0=lambda x: 0.0 * x,
        M=1.0,
        N=math.sin(1.0),
    )
    sources = {
        "a": "x*sin(t)",
        "g": "-t^4*x/2 + 1/2*t^4*x*cos(x) + sin(x) - t*x*sin(t)*sin(x)",
        "K": "x*t^2*u",
        "u0": "0",
        "exact": "t*sin(x)",
    }
    return NamedExample(3, problem, lambda x, t: t * np.sin(x), "u = t sin(x)", sources)


def _example4() -> NamedExample:
    # |dK/du| = |t cos u| <= T = 1;  |a| = x^2 <= 1
    problem = Problem(
        ALPHA, BETA, T_END,
        a=lambda x, t: x**2,
        g=lambda x, t: 2 - x**2 * (2 * t + x) - t * np.sin(t) * (np.cos(t) - np.cos(t + x)),
        K=lambda x, t, y, s, u: t * np.sin(u),
        u0=lambda x: x,
        M=1.0,
        N=1.0,
    )
    sources = {
        "a": "x^2",
        "g": "2 - x^2*(2*t + x) - t*sin(t)*(cos(t) - cos(t + x))",
        "K": "t*sin(u)",
        "u0": "x",
        "exact": "x + 2*t",
    }
    return NamedExample(4, problem, lambda x, t: x + 2 * t, "u = x + 2t", sources)


_BUILDERS = {1: _example1, 2: _example2, 3: _example3, 4: _example4}


def example(id: int) -> NamedExample:
    try:
        return _BUILDERS[int(id)]()
    except (KeyError, ValueError):
        raise DomainError(f"unknown example {id!r}; choose 1..4") from None


def standard_points() -> list[tuple[float, float]]:
    """The diagonal evaluation points used in the published error tables."""
    return [(v, v) for v in (0.0, 0.1, 0.2, 0.4, 0.6, 0.8, 0.9, 1.0)]


def config_text(ex: NamedExample) -> str:
    """A solver config file defining the same problem by expressions."""
    p = ex.problem
    lines = [
        f"alpha = {p.alpha!r}",
        f"beta = {p.beta!r}",
        f"T = {p.T!r}",
        f"M = {p.M!r}",
        f"N = {p.N!r}",
    ]
    lines += [f'{key} = "{ex.sources[key]}"' for key in ("a", "g", "K", "u0", "exact")]
    return "\n".join(lines) + "\n"
