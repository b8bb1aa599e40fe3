from __future__ import annotations

import math
from typing import Any

import numpy as np
import pytest
from gibbs_cert.errors import DomainError
from gibbs_cert.errors import ModelValidationError
from gibbs_cert.model import atom_measure
from gibbs_cert.model import AtomMeasure
from gibbs_cert.model import circle_rotator_model
from gibbs_cert.model import discretized_circle
from gibbs_cert.model import Graph
from gibbs_cert.model import hamiltonian
from gibbs_cert.model import ising_model
from gibbs_cert.model import ising_space
from gibbs_cert.model import InteractionModel
from gibbs_cert.model import local_hamiltonian_variation
from gibbs_cert.model import make_model
from gibbs_cert.model import oscillation
from gibbs_cert.model import oscillation_matrix
from gibbs_cert.model import PairPotential
from gibbs_cert.model import path_graph
from gibbs_cert.model import rotator_model
from gibbs_cert.model import SphereMeasure
from gibbs_cert.model import SphereSpace
from gibbs_cert.model import sup_norm
from gibbs_cert.model import torus_graph
from gibbs_cert.model import triple_norm
from gibbs_cert.model import variational_distance
from gibbs_cert.quadrature import sphere_rule


def test_graph_edges_are_normalized() -> None:
    graph = Graph.from_edges(3, [(1, 0), (2, 1), (0, 1)])
    assert graph.edges == ((0, 1), (1, 2))
    assert graph.labels == ("0", "1", "2")
    assert graph.neighbors(1) == (0, 2)
    assert graph.has_edge(2, 1)
    assert not graph.has_edge(0, 2)


@pytest.mark.parametrize(
    ("n", "edges", "field"),
    [
        (0, [], "graph.vertices"),
        (2, [(1, 1)], "graph.edges"),
        (2, [(0, 2)], "graph.edges"),
    ],
)
def test_graph_rejects_malformed_input(n: int, edges: list[tuple[int, int]], field: str) -> None:
    with pytest.raises(ModelValidationError) as info:
        Graph.from_edges(n, edges)
    assert info.value.field == field


@pytest.mark.parametrize(("width", "height"), [(3, 3), (4, 4), (5, 3)])
def test_torus_is_four_regular(width: int, height: int) -> None:
    graph = torus_graph(width, height)
    assert graph.n == width * height
    assert len(graph.edges) == 2 * width * height
    assert {graph.degree(i) for i in range(graph.n)} == {4}


def test_torus_rejects_short_sides() -> None:
    with pytest.raises(ModelValidationError):
        torus_graph(2, 5)


def test_discretized_circle_atoms_lie_on_the_circle() -> None:
    space = discretized_circle(12)
    assert space.size == 12
    assert space.coords is not None
    np.testing.assert_allclose(np.linalg.norm(space.coords, axis=1), 1.0)


def test_coupling_off_the_edge_set_is_rejected() -> None:
    J = np.zeros((3, 3))
    J[0, 2] = J[2, 0] = 0.5
    with pytest.raises(ModelValidationError) as info:
        ising_model(path_graph(3), J)
    assert info.value.field == "potential.couplings"


@pytest.mark.parametrize(
    "couplings",
    [
        np.array([[0.0, 1.0], [0.5, 0.0]]),
        np.array([[1.0, 1.0], [1.0, 0.0]]),
        np.array([[0.0, np.inf], [np.inf, 0.0]]),
    ],
)
def test_invalid_coupling_matrices(couplings: np.ndarray) -> None:
    with pytest.raises(ModelValidationError):
        ising_model(path_graph(2), couplings)


def test_apriori_must_be_a_probability() -> None:
    with pytest.raises(ModelValidationError):
        atom_measure([0.5, 0.6])
    with pytest.raises(ModelValidationError):
        atom_measure([1.5, -0.5])


def test_sphere_space_needs_rotator_potential() -> None:
    with pytest.raises(ModelValidationError) as info:
        make_model(
            path_graph(2),
            SphereSpace(q=3),
            PairPotential(form="ising", couplings=np.asarray(1.0)),
        )
    assert info.value.field == "potential.form"


def test_tabulated_potential_needs_symmetric_table() -> None:
    space = ising_space()
    with pytest.raises(ModelValidationError):
        make_model(
            path_graph(2),
            space,
            PairPotential(
                form="tabulated", couplings=np.asarray(1.0), table=np.array([[0.0, 1.0], [2.0, 0.0]])
            ),
        )


@pytest.mark.parametrize("J", [-0.7, 0.0, 0.3, 2.0])
def test_ising_oscillation_is_twice_the_coupling(J: float) -> None:
    model = ising_model(path_graph(2), J)
    assert oscillation(model, 0, 1) == pytest.approx(2 * abs(J))
    assert sup_norm(model, 0, 1) == pytest.approx(abs(J))


def test_rotator_oscillation_on_the_sphere() -> None:
    model = rotator_model(torus_graph(3, 3), -0.4, 3)
    matrix = oscillation_matrix(model)
    assert matrix[0, 1] == pytest.approx(0.8)
    assert matrix[0, 4] == 0
    assert triple_norm(model) == pytest.approx(4 * 2 * 0.4)


def test_oscillation_needs_an_edge() -> None:
    model = ising_model(path_graph(3), 1.0)
    with pytest.raises(DomainError):
        oscillation(model, 0, 2)


def test_hamiltonian_counts_each_edge_once() -> None:
    model = ising_model(path_graph(3), 1.0)
    # atoms: 0 is +1, 1 is -1
    assert hamiltonian(model, [0, 0, 0]) == pytest.approx(-2.0)
    assert hamiltonian(model, [0, 1, 0]) == pytest.approx(2.0)


def test_sphere_hamiltonian() -> None:
    model = rotator_model(path_graph(2), 0.5, 2)
    aligned = np.array([[1.0, 0.0], [1.0, 0.0]])
    orthogonal = np.array([[1.0, 0.0], [0.0, 1.0]])
    assert hamiltonian(model, aligned) == pytest.approx(-0.5)
    assert hamiltonian(model, orthogonal) == pytest.approx(0.0)


def test_local_hamiltonian_variation() -> None:
    model = circle_rotator_model(path_graph(2), 1.0, 4)
    # atoms 0 and 2 are antipodal: Δ(σ) = J <σ, ζ̄ - ζ>
    assert local_hamiltonian_variation(model, 0, 1, 0, 0, 2) == pytest.approx(-2.0)
    assert local_hamiltonian_variation(model, 0, 1, 1, 0, 2) == pytest.approx(0.0, abs=1e-12)


@pytest.mark.parametrize(
    "model",
    [
        circle_rotator_model(path_graph(2), 0.7, 5),
        ising_model(path_graph(2), -0.4),
        rotator_model(path_graph(2), 0.3, 3),
    ],
)
def test_local_hamiltonian_variation_is_antisymmetric(model: InteractionModel) -> None:
    rng = np.random.default_rng(3)
    for _ in range(10):
        if isinstance(model.space, SphereSpace):
            points = rng.standard_normal((3, model.space.q))
            spins: list[Any] = list(points / np.linalg.norm(points, axis=1, keepdims=True))
        else:
            spins = [int(v) for v in rng.integers(model.space.size, size=3)]
        sigma, zeta, zeta_bar = spins
        forward = local_hamiltonian_variation(model, 0, 1, sigma, zeta, zeta_bar)
        backward = local_hamiltonian_variation(model, 0, 1, sigma, zeta_bar, zeta)
        assert forward == pytest.approx(-backward, abs=1e-14)
        assert local_hamiltonian_variation(model, 0, 1, sigma, zeta, zeta) == 0.0


def test_variational_distance_of_atoms() -> None:
    first = AtomMeasure(weights=np.array([1.0, 0.0]))
    second = AtomMeasure(weights=np.array([0.0, 1.0]))
    assert variational_distance(first, second) == 2.0
    assert variational_distance(first, first) == 0.0


def test_variational_distance_of_sphere_measures() -> None:
    u, _ = sphere_rule(3, 32)
    tilted = SphereMeasure(q=3, density=1.0 + u**2, pole=np.array([0.0, 0.0, 1.0]))
    # the height is uniform on [-1, 1] for S^2
    assert variational_distance(tilted, SphereMeasure(q=3)) == pytest.approx(1 / 3)
    assert variational_distance(SphereMeasure(q=3), SphereMeasure(q=3)) == 0.0


@pytest.mark.parametrize("seed", range(5))
def test_variational_distance_triangle_inequality(seed: int) -> None:
    rng = np.random.default_rng(seed)
    for size in (2, 5, 12):
        first, second, third = (AtomMeasure(weights=w) for w in rng.dirichlet(np.ones(size), 3))
        direct = variational_distance(first, third)
        detour = variational_distance(first, second) + variational_distance(second, third)
        assert 0 <= direct <= 2
        assert direct <= detour + 1e-12
        assert variational_distance(first, second) == variational_distance(second, first)


@pytest.mark.parametrize("scale", [0.5, 2.0, 10.0])
def test_triple_norm_scales_with_the_couplings(scale: float) -> None:
    graph = torus_graph(3, 3)
    for build in (
        lambda J: ising_model(graph, J),
        lambda J: rotator_model(graph, J, 3),
        lambda J: circle_rotator_model(graph, J, 6),
    ):
        assert triple_norm(build(scale * 0.15)) == pytest.approx(scale * triple_norm(build(0.15)))


def test_variational_distance_rejects_mixed_measures() -> None:
    with pytest.raises(DomainError):
        variational_distance(AtomMeasure(weights=np.array([1.0])), SphereMeasure(q=2))
    u, _ = sphere_rule(2, 16)
    first = SphereMeasure(q=2, density=1.0 + u, pole=np.array([1.0, 0.0]))
    second = SphereMeasure(q=2, density=1.0 + u, pole=np.array([0.0, 1.0]))
    with pytest.raises(DomainError):
        variational_distance(first, second)


def test_circle_weights_sum_to_one() -> None:
    model = circle_rotator_model(path_graph(2), 0.3, 7)
    assert isinstance(model.apriori, AtomMeasure)
    assert math.isclose(float(model.apriori.weights.sum()), 1.0)
