from __future__ import annotations

import math

import numpy as np
import pytest
from gibbs_cert.errors import DomainError
from gibbs_cert.quadrature import gauss_jacobi
from gibbs_cert.quadrature import half_range_rule
from gibbs_cert.quadrature import sphere_constant
from gibbs_cert.quadrature import sphere_rule
from gibbs_cert.quadrature import transverse_rule


@pytest.mark.parametrize(("q", "expected"), [(2, 1 / math.pi), (3, 0.5), (4, 2 / math.pi)])
def test_sphere_constant(q: int, expected: float) -> None:
    assert sphere_constant(q) == pytest.approx(expected)


@pytest.mark.parametrize("q", [2, 3, 4, 6])
def test_sphere_rule_moments(q: int) -> None:
    u, weights = sphere_rule(q, 24)
    assert weights.sum() == pytest.approx(1.0)
    assert weights @ u == pytest.approx(0.0, abs=1e-14)
    assert weights @ u**2 == pytest.approx(1 / q)


def test_gauss_jacobi_is_read_only() -> None:
    nodes, _ = gauss_jacobi(8, 0.0, 0.0)
    with pytest.raises(ValueError, match="read-only"):
        nodes[0] = 0.0


def test_gauss_jacobi_rejects_bad_exponents() -> None:
    with pytest.raises(DomainError):
        gauss_jacobi(8, -1.0, 0.0)
    with pytest.raises(DomainError):
        gauss_jacobi(0, 0.0, 0.0)


def test_transverse_rule_for_the_circle() -> None:
    w, weights = transverse_rule(2)
    np.testing.assert_array_equal(w, [-1.0, 1.0])
    np.testing.assert_array_equal(weights, [0.5, 0.5])


@pytest.mark.parametrize("q", [3, 4, 5])
def test_transverse_rule_second_moment(q: int) -> None:
    w, weights = transverse_rule(q, 16)
    assert weights @ w**2 == pytest.approx(1 / (q - 1))


@pytest.mark.parametrize("q", [2, 3, 4])
def test_half_range_rule_is_half_the_sphere(q: int) -> None:
    v, weights = half_range_rule(q, 64)
    assert np.all((v >= 0) & (v <= 1))
    # c_q ∫_0^1 (1 - v²)^{(q-3)/2} dv = 1/2
    assert sphere_constant(q) * weights.sum() == pytest.approx(0.5, rel=1e-10)
