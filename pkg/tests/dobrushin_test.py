from __future__ import annotations

import math

import numpy as np
import pytest
from gibbs_cert.dobrushin import concentration_bound
from gibbs_cert.dobrushin import concentration_report
from gibbs_cert.dobrushin import concentration_report_from_matrix
from gibbs_cert.dobrushin import dev
from gibbs_cert.dobrushin import dev_triple_norms
from gibbs_cert.dobrushin import dobrushin_bound
from gibbs_cert.dobrushin import dobrushin_bound_lipschitz
from gibbs_cert.dobrushin import enumeration_cost
from gibbs_cert.dobrushin import exact_dobrushin_matrix
from gibbs_cert.dobrushin import neumann_series
from gibbs_cert.dobrushin import spread
from gibbs_cert.dobrushin import std_dev
from gibbs_cert.dobrushin import weighted_median
from gibbs_cert.errors import BudgetExceededError
from gibbs_cert.errors import CertificateError
from gibbs_cert.errors import DomainError
from gibbs_cert.model import atom_measure
from gibbs_cert.model import circle_rotator_model
from gibbs_cert.model import DiscreteSpace
from gibbs_cert.model import Graph
from gibbs_cert.model import InteractionModel
from gibbs_cert.model import ising_model
from gibbs_cert.model import make_model
from gibbs_cert.model import PairPotential
from gibbs_cert.model import path_graph
from gibbs_cert.model import rotator_model
from gibbs_cert.model import SphereMeasure
from gibbs_cert.model import torus_graph


def _random_tabulated_model(seed: int) -> InteractionModel:
    rng = np.random.default_rng(seed)
    n = int(rng.integers(2, 5))
    m = int(rng.integers(2, 6))
    edges = [(k, k + 1) for k in range(n - 1)]
    if n > 2 and rng.random() < 0.5:  # noqa: PLR2004
        edges.append((0, n - 1))
    graph = Graph.from_edges(n, edges)
    table = rng.normal(size=(m, m))
    table = (table + table.T) / 2
    J = np.zeros((n, n))
    for i, j in graph.edges:
        J[i, j] = J[j, i] = rng.uniform(-1.0, 1.0)
    return make_model(
        graph,
        DiscreteSpace(labels=tuple(str(k) for k in range(m))),
        PairPotential(form="tabulated", couplings=J, table=table),
        atom_measure(rng.dirichlet(np.ones(m))),
    )


@pytest.mark.parametrize("J", [0.1, 0.5, -1.0, 2.0])
def test_single_edge_ising_exact_matrix_is_tanh(J: float) -> None:
    matrix = exact_dobrushin_matrix(ising_model(path_graph(2), J))
    assert matrix[0, 1] == pytest.approx(math.tanh(abs(J)))
    assert matrix[1, 0] == pytest.approx(math.tanh(abs(J)))
    assert matrix[0, 0] == 0


def test_weighted_median_and_spread_match_brute_force() -> None:
    rng = np.random.default_rng(7)
    for _ in range(50):
        values = rng.normal(size=6)
        weights = rng.dirichlet(np.ones(6))
        brute_linear = min(float(weights @ np.abs(values - b)) for b in values)
        assert spread(values, weights, "linear") == pytest.approx(brute_linear, abs=1e-10)
        mean = float(weights @ values)
        brute_quadratic = math.sqrt(float(weights @ (values - mean) ** 2))
        assert spread(values, weights, "quadratic") == pytest.approx(brute_quadratic, abs=1e-10)


def test_weighted_median() -> None:
    assert weighted_median([3.0, 1.0, 2.0], [0.2, 0.3, 0.5]) == 2.0
    assert weighted_median([1.0, 2.0], [0.5, 0.5]) == 1.0


def test_ising_deviations() -> None:
    model = ising_model(path_graph(2), 0.4)
    # Δ = ±2J with weight one half each
    assert dev(model, 0, 1) == pytest.approx(0.8)
    assert std_dev(model, 0, 1) == pytest.approx(0.8)
    assert dev(model, 0, 1, atom_measure([1.0, 0.0])) == pytest.approx(0.0)


def test_uniform_sphere_deviations() -> None:
    model = rotator_model(path_graph(2), 0.5, 3)
    # E|<σ, e>| = 1/2 and E<σ, e>² = 1/3 on S^2
    assert dev(model, 0, 1) == pytest.approx(2 * 0.5 * 0.5)
    assert std_dev(model, 0, 1) == pytest.approx(2 * 0.5 / math.sqrt(3))


def test_deviation_needs_matching_measure() -> None:
    model = rotator_model(path_graph(2), 0.5, 3)
    with pytest.raises(DomainError):
        dev(model, 0, 1, SphereMeasure(q=2))


@pytest.mark.slow
@pytest.mark.parametrize("chunk", range(4))
def test_exact_matrix_is_dominated_by_both_bounds(chunk: int) -> None:
    for seed in range(50 * chunk, 50 * (chunk + 1)):
        model = _random_tabulated_model(seed)
        exact = exact_dobrushin_matrix(model)
        linear = dobrushin_bound(model, "linear").entries
        quadratic = dobrushin_bound(model, "quadratic").entries
        assert np.all(exact <= linear + 1e-10), seed
        assert np.all(exact <= quadratic + 1e-10), seed


def test_exact_matrix_refuses_over_budget() -> None:
    model = circle_rotator_model(torus_graph(3, 3), 0.2, 8)
    assert enumeration_cost(model) == 9 * 4 * 8**6
    with pytest.raises(BudgetExceededError) as info:
        exact_dobrushin_matrix(model, None, 1000)
    assert info.value.required == enumeration_cost(model)


def test_exact_matrix_refuses_the_sphere() -> None:
    with pytest.raises(DomainError):
        exact_dobrushin_matrix(rotator_model(path_graph(2), 0.2, 2))


def test_exact_matrix_with_posterior_apriori() -> None:
    model = ising_model(path_graph(2), 1.0)
    frozen = {0: atom_measure([1.0, 0.0])}
    matrix = exact_dobrushin_matrix(model, frozen)
    assert matrix[0, 1] == pytest.approx(0.0)
    assert matrix[1, 0] == pytest.approx(math.tanh(1.0))


def test_lipschitz_bound_on_the_circle() -> None:
    model = circle_rotator_model(path_graph(2), 0.3, 12)
    bound = dobrushin_bound_lipschitz(model)
    # ∫|σ - a|² dα = 2 under the uniform atoms
    expected = 0.5 * math.exp(0.3) * 0.6 * math.sqrt(2.0)
    assert bound.entries[0, 1] == pytest.approx(expected)
    assert bound.flavor == "lipschitz"


def test_dev_triple_norms() -> None:
    model = ising_model(torus_graph(3, 3), 0.1)
    norms = dev_triple_norms(model)
    assert norms.dev == pytest.approx(4 * 0.2)
    assert norms.triple_norm == pytest.approx(4 * 2 * 0.1)
    assert norms.linear_bound == pytest.approx(math.exp(1.6) * 0.8)


def test_neumann_series_inverts() -> None:
    C = np.array([[0.0, 0.3], [0.4, 0.0]])
    series = neumann_series(C)
    np.testing.assert_allclose(series.d, np.linalg.inv(np.eye(2) - C))
    truncated = sum(np.linalg.matrix_power(C, k) for k in range(60))
    np.testing.assert_allclose(series.d, truncated, atol=1e-12)
    assert series.row_norm == pytest.approx(0.4)
    assert series.residual < 1e-12


@pytest.mark.parametrize("b", [1.0, 1.5])
def test_neumann_series_refuses_at_the_threshold(b: float) -> None:
    with pytest.raises(CertificateError) as info:
        neumann_series([[0.0, b], [b, 0.0]])
    assert info.value.row_norm == pytest.approx(b)
    assert info.value.margin == pytest.approx(1 - b)


def test_neumann_series_rejects_non_square() -> None:
    with pytest.raises(DomainError):
        neumann_series(np.zeros((2, 3)))


@pytest.mark.parametrize(("b", "valid"), [(0.999, True), (1.0, False), (1.2, False)])
def test_concentration_validity_flips_at_one(b: float, valid: bool) -> None:  # noqa: FBT001
    report = concentration_report_from_matrix([[0.0, b], [b, 0.0]], 1.0)
    assert report.valid is valid
    if not valid:
        with pytest.raises(CertificateError) as info:
            concentration_bound(report, [1.0, 1.0], 0.5)
        assert info.value.report == report


def test_concentration_bound_is_gaussian_in_r() -> None:
    report = concentration_report_from_matrix([[0.0, 0.2], [0.3, 0.0]], 1.5)
    assert concentration_bound(report, [1.0, 2.0], 0.0).value == 1.0
    exponents = [
        math.log(concentration_bound(report, [1.0, 2.0], r).value) / r**2 for r in (0.5, 1.0, 3.0)
    ]
    assert exponents[0] == pytest.approx(exponents[1])
    assert exponents[1] == pytest.approx(exponents[2])
    assert exponents[0] == pytest.approx(-report.kappa / (2 * 5.0))


def test_concentration_report_of_a_weak_model() -> None:
    report = concentration_report(ising_model(torus_graph(3, 3), 0.05))
    assert report.s == pytest.approx(math.exp(0.1))
    assert report.valid
    with pytest.raises(DomainError):
        concentration_bound(report, [1.0], -1.0)
