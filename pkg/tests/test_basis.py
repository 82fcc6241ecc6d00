import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate

from volterra_picard.basis import (
    HatBasis,
    NodeSequence,
    dyadic_nodes,
    hat_eval,
    hat_primitive,
    iterated_pair_primitive,
    phi4,
    phi4_inverse,
    tau,
    tau_inverse,
)
from volterra_picard.errors import DomainError


def tau_by_formula(n):
    # the piecewise definition, written out with floats as an independent check
    r = math.floor(math.sqrt(n))
    if r * r == n:
        return (r, r)
    if 0 < n - r * r <= r:
        return (n - r * r, r + 1)
    return (r + 1, n - r * r - r)


@pytest.mark.parametrize("n, expected", [(1, (1, 1)), (5, (1, 3)), (7, (3, 1))])
def test_tau_examples(n, expected):
    assert tau(n) == expected


def test_tau_matches_formula():
    for n in range(1, 2000):
        assert tau(n) == tau_by_formula(n)


@pytest.mark.parametrize("pair, expected", [((1, 1), 1), ((1, 3), 5), ((3, 3), 9)])
def test_tau_inverse_examples(pair, expected):
    assert tau_inverse(*pair) == expected


@pytest.mark.parametrize("n, expected", [(1, (1, 1, 1, 1)), (2, (1, 1, 1, 2)), (4, (1, 2, 1, 2))])
def test_phi4_examples(n, expected):
    assert phi4(n) == expected


def test_index_maps_reject_zero():
    with pytest.raises(DomainError):
        tau(0)
    with pytest.raises(DomainError):
        phi4(0)
    with pytest.raises(DomainError):
        tau_inverse(0, 1)


@given(st.integers(min_value=1, max_value=10**6))
def test_tau_roundtrip(n):
    assert tau_inverse(*tau(n)) == n


@given(st.integers(min_value=1, max_value=10**6))
def test_phi4_roundtrip(n):
    assert phi4_inverse(*phi4(n)) == n


@pytest.mark.parametrize(
    "lo, hi, count, expected",
    [
        (0, 1, 3, [0, 1, 0.5]),
        (0, 1, 5, [0, 1, 0.5, 0.25, 0.75]),
        (2, 4, 3, [2, 4, 3]),
    ],
)
def test_dyadic_nodes(lo, hi, count, expected):
    assert list(dyadic_nodes(lo, hi, count).nodes) == expected


def test_dyadic_nodes_uniform_at_powers_of_two():
    nodes = np.sort(dyadic_nodes(0.0, 1.0, 17).nodes)
    np.testing.assert_allclose(nodes, np.linspace(0, 1, 17), rtol=0, atol=0)


def test_node_sequence_validation():
    with pytest.raises(DomainError):
        dyadic_nodes(0, 1, 1)
    with pytest.raises(DomainError):
        NodeSequence(0.0, 1.0, (1.0, 0.0))
    with pytest.raises(DomainError):
        NodeSequence(0.0, 1.0, (0.0, 1.0, 0.5, 0.5))
    with pytest.raises(DomainError):
        NodeSequence(0.0, 1.0, (0.0, 1.0, 1.5))


@pytest.fixture
def b3():
    return HatBasis(NodeSequence(0.0, 1.0, (0.0, 1.0, 0.5)))


def test_hat_eval_examples(b3):
    assert hat_eval(b3, 1, 0.7) == 1.0
    assert hat_eval(b3, 3, 0.25) == pytest.approx(0.5, abs=1e-15)
    assert hat_eval(b3, 3, 0.5) == 1.0


def test_hat_eval_rejects_outside(b3):
    with pytest.raises(DomainError):
        hat_eval(b3, 2, 1.5)
    with pytest.raises(DomainError):
        hat_primitive(b3, 2, -0.1)


def test_hat_primitive_examples(b3):
    assert hat_primitive(b3, 1, 0.7) == pytest.approx(0.7, abs=1e-15)
    assert hat_primitive(b3, 3, 1.0) == pytest.approx(0.5, abs=1e-15)
    assert hat_primitive(b3, 3, 0.5) == pytest.approx(0.25, abs=1e-15)


def test_iterated_pair_primitive_examples():
    b = HatBasis(dyadic_nodes(0.0, 1.0, 3))
    assert iterated_pair_primitive(b, 1, 1, 1.0) == pytest.approx(0.5, abs=1e-15)
    assert iterated_pair_primitive(b, 1, 1, 0.0) == 0.0
    b2 = HatBasis(NodeSequence(0.0, 1.0, (0.0, 1.0)))
    assert iterated_pair_primitive(b2, 2, 1, 1.0) == pytest.approx(1 / 3, abs=1e-15)


def test_kronecker_property_at_nodes():
    b = HatBasis(dyadic_nodes(-1.0, 2.0, 17))
    nodes = np.asarray(b.seq.nodes)
    values = b.eval_all(nodes, 17)
    np.testing.assert_array_equal(values[:, 0], 1.0)
    for k in range(1, 17):
        for p in range(17):
            if p <= k:
                assert values[p, k] == (1.0 if p == k else 0.0)


def test_hat_is_linear_between_sorted_nodes():
    b = HatBasis(dyadic_nodes(0.0, 1.0, 9))
    x = np.linspace(0, 1, 401)
    values = b.eval_all(x, 9)
    nodes = np.asarray(b.seq.nodes)
    for k in range(9):
        np.testing.assert_allclose(values[:, k], np.interp(x, nodes[np.argsort(nodes)], b.eval_all(np.sort(nodes), 9)[:, k]), atol=1e-14)


def test_hat_primitive_matches_quadrature():
    rng = np.random.default_rng(0)
    b = HatBasis(dyadic_nodes(0.0, 2.0, 9))
    sorted_nodes = np.sort(b.seq.nodes)
    for x in rng.uniform(0.0, 2.0, 50):
        for k in range(1, 10):
            ref, _ = integrate.quad(lambda r: hat_eval(b, k, r), 0.0, x, points=sorted_nodes[sorted_nodes < x], limit=200)
            assert hat_primitive(b, k, x) == pytest.approx(ref, abs=1e-12)


def test_iterated_pair_primitive_matches_nested_quadrature():
    rng = np.random.default_rng(1)
    b = HatBasis(dyadic_nodes(0.0, 1.0, 5))
    brk = np.sort(b.seq.nodes)
    for _ in range(40):
        j, l = rng.integers(1, 6, size=2)
        t = rng.uniform(0, 1)
        inner = lambda r: integrate.quad(lambda s: hat_eval(b, l, s), 0.0, r, points=brk[brk < r], limit=200)[0]
        ref, _ = integrate.quad(lambda r: hat_eval(b, j, r) * inner(r), 0.0, t, points=brk[brk < t], limit=200, epsabs=1e-14)
        assert iterated_pair_primitive(b, int(j), int(l), t) == pytest.approx(ref, abs=1e-10)


@settings(max_examples=50)
@given(st.floats(min_value=0.0, max_value=1.0), st.integers(min_value=1, max_value=9))
def test_primitive_nondecreasing(x, k):
    b = HatBasis(dyadic_nodes(0.0, 1.0, 9))
    assert hat_primitive(b, k, x) <= hat_primitive(b, k, min(1.0, x + 0.01)) + 1e-15
