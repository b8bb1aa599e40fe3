"""
Finite-graph spin models and the elementary functionals every bound consumes.

Conventions
-----------
The Hamiltonian is ``H(σ) = Σ_{{i,j} ∈ E} Φ_ij(σ_i, σ_j)`` over unordered edges, with

* Ising:     ``Φ_ij(a, b) = -J_ij x_a x_b`` on scalar atoms,
* Rotator:   ``Φ_ij(a, b) = -J_ij <a, b>`` on the sphere or on embedded atoms,
* Tabulated: ``Φ_ij(a, b) = J_ij T[a, b]`` for a symmetric table ``T`` over the atoms.

All three are ``J_ij`` times a symmetric pair table on discrete spaces, which is how the
enumeration oracles see them.
"""

from __future__ import annotations

import itertools
from typing import Any
from typing import NamedTuple
from typing import Sequence
from typing import Union

import numpy as np
from gibbs_cert.errors import DomainError
from gibbs_cert.errors import ModelValidationError
from gibbs_cert.quadrature import sphere_rule
from numpy.typing import ArrayLike
from numpy.typing import NDArray
from typing_extensions import Literal

PotentialForm = Literal["ising", "rotator", "tabulated"]
POTENTIAL_FORMS: tuple[PotentialForm, ...] = ("ising", "rotator", "tabulated")

MEASURE_TOLERANCE = 1e-12


class Graph(NamedTuple):
    """Finite simple graph on vertices ``0..n-1``; edges are sorted pairs ``i < j``."""

    n: int
    edges: tuple[tuple[int, int], ...]
    labels: tuple[str, ...]

    @classmethod
    def from_edges(
        cls,
        n: int,
        edges: Sequence[tuple[int, int]],
        labels: Sequence[str] | None = None,
    ) -> Graph:
        if n < 1:
            msg = f"a graph needs at least one vertex, got {n}"
            raise ModelValidationError(msg, field="graph.vertices")
        normalized: set[tuple[int, int]] = set()
        for i, j in edges:
            if i == j:
                msg = f"self-loop at vertex {i}"
                raise ModelValidationError(msg, field="graph.edges")
            if not (0 <= i < n and 0 <= j < n):
                msg = f"edge ({i}, {j}) references a vertex outside 0..{n - 1}"
                raise ModelValidationError(msg, field="graph.edges")
            normalized.add((min(i, j), max(i, j)))
        names = tuple(str(k) for k in range(n)) if labels is None else tuple(labels)
        if len(names) != n:
            msg = f"{len(names)} labels for {n} vertices"
            raise ModelValidationError(msg, field="graph.labels")
        return cls(n=n, edges=tuple(sorted(normalized)), labels=names)

    def has_edge(self, i: int, j: int) -> bool:
        return (min(i, j), max(i, j)) in self.edges

    def neighbors(self, i: int) -> tuple[int, ...]:
        return tuple(sorted({b if a == i else a for a, b in self.edges if i in (a, b)}))

    def degree(self, i: int) -> int:
        return len(self.neighbors(i))

    def adjacency(self) -> NDArray[np.bool_]:
        adjacency = np.zeros((self.n, self.n), dtype=bool)
        for i, j in self.edges:
            adjacency[i, j] = adjacency[j, i] = True
        return adjacency


def path_graph(n: int) -> Graph:
    return Graph.from_edges(n, [(k, k + 1) for k in range(n - 1)])


def torus_graph(width: int, height: int) -> Graph:
    """Periodic square lattice; every vertex has degree 4 when both sides are at least 3."""
    if width < 3 or height < 3:  # noqa: PLR2004
        msg = f"torus sides must be at least 3, got {width}x{height}"
        raise ModelValidationError(msg, field="graph.torus")
    edges = []
    for x, y in itertools.product(range(width), range(height)):
        site = y * width + x
        edges.append((site, y * width + (x + 1) % width))
        edges.append((site, ((y + 1) % height) * width + x))
    labels = [f"{x},{y}" for y in range(height) for x in range(width)]
    return Graph.from_edges(width * height, edges, labels)


class DiscreteSpace(NamedTuple):
    """Finite single-spin space; ``coords`` embeds the atoms in Euclidean space when known."""

    labels: tuple[str, ...]
    coords: NDArray[np.float64] | None = None

    @property
    def size(self) -> int:
        return len(self.labels)


class SphereSpace(NamedTuple):
    """The sphere ``S^{q-1}`` in ``R^q``."""

    q: int


SingleSpinSpace = Union[DiscreteSpace, SphereSpace]


def ising_space() -> DiscreteSpace:
    return DiscreteSpace(labels=("+1", "-1"), coords=np.array([[1.0], [-1.0]]))


def discretized_circle(m: int) -> DiscreteSpace:
    """``m`` equally spaced atoms at angles ``2πk/m`` on the unit circle."""
    if m < 1:
        msg = f"a discretized circle needs at least one atom, got {m}"
        raise ModelValidationError(msg, field="space.circle")
    angles = 2.0 * np.pi * np.arange(m) / m
    coords = np.column_stack([np.cos(angles), np.sin(angles)])
    return DiscreteSpace(labels=tuple(f"2pi*{k}/{m}" for k in range(m)), coords=coords)


class AtomMeasure(NamedTuple):
    weights: NDArray[np.float64]


class SphereMeasure(NamedTuple):
    """
    Rotation-invariant measure on ``S^{q-1}`` about ``pole``.

    ``density`` holds the density w.r.t. the equidistribution at the Gauss–Jacobi nodes of
    the height ``u = <σ, pole>``; ``None`` is the equidistribution itself.
    """

    q: int
    density: NDArray[np.float64] | None = None
    pole: NDArray[np.float64] | None = None


Measure = Union[AtomMeasure, SphereMeasure]


def atom_measure(weights: ArrayLike) -> AtomMeasure:
    values = np.asarray(weights, dtype=float)
    if values.ndim != 1 or values.size == 0:
        msg = "atom weights must be a non-empty vector"
        raise ModelValidationError(msg, field="apriori.weights")
    if np.any(values < 0) or not np.all(np.isfinite(values)):
        msg = "atom weights must be finite and non-negative"
        raise ModelValidationError(msg, field="apriori.weights")
    if abs(values.sum() - 1.0) > MEASURE_TOLERANCE:
        msg = f"atom weights sum to {values.sum():.17g}, expected 1"
        raise ModelValidationError(msg, field="apriori.weights")
    return AtomMeasure(weights=values)


def uniform_measure(space: SingleSpinSpace) -> Measure:
    if isinstance(space, SphereSpace):
        return SphereMeasure(q=space.q)
    return AtomMeasure(weights=np.full(space.size, 1.0 / space.size))


def sphere_measure_mass(measure: SphereMeasure) -> float:
    if measure.density is None:
        return 1.0
    _, weights = sphere_rule(measure.q, len(measure.density))
    return float(weights @ measure.density)


class PairPotential(NamedTuple):
    form: PotentialForm
    couplings: NDArray[np.float64]
    table: NDArray[np.float64] | None = None


class InteractionModel(NamedTuple):
    graph: Graph
    space: SingleSpinSpace
    apriori: Measure
    potential: PairPotential

    @property
    def n(self) -> int:
        return self.graph.n

    @property
    def couplings(self) -> NDArray[np.float64]:
        return self.potential.couplings


def _coupling_matrix(graph: Graph, couplings: ArrayLike) -> NDArray[np.float64]:
    J = np.array(couplings, dtype=float)
    if J.ndim == 0:
        uniform = float(J)
        J = np.zeros((graph.n, graph.n))
        for i, j in graph.edges:
            J[i, j] = J[j, i] = uniform
    if J.shape != (graph.n, graph.n):
        msg = f"coupling matrix has shape {J.shape}, expected {(graph.n, graph.n)}"
        raise ModelValidationError(msg, field="potential.couplings")
    if not np.all(np.isfinite(J)):
        msg = "couplings must be finite"
        raise ModelValidationError(msg, field="potential.couplings")
    if np.any(np.diag(J) != 0):
        msg = "J_ii must vanish"
        raise ModelValidationError(msg, field="potential.couplings")
    if not np.array_equal(J, J.T):
        msg = "coupling matrix must be symmetric"
        raise ModelValidationError(msg, field="potential.couplings")
    adjacency = graph.adjacency()
    if np.any((J != 0) & ~adjacency):
        i, j = np.argwhere((J != 0) & ~adjacency)[0]
        msg = f"coupling between {graph.labels[i]} and {graph.labels[j]} which are not adjacent"
        raise ModelValidationError(msg, field="potential.couplings")
    return J


def make_model(
    graph: Graph,
    space: SingleSpinSpace,
    potential: PairPotential,
    apriori: Measure | None = None,
) -> InteractionModel:
    """Validate and assemble an :class:`InteractionModel`; ``apriori`` defaults to uniform."""
    J = _coupling_matrix(graph, potential.couplings)
    table = None if potential.table is None else np.asarray(potential.table, dtype=float)
    if potential.form not in POTENTIAL_FORMS:
        msg = f"unknown potential form {potential.form!r}"
        raise ModelValidationError(msg, field="potential.form")
    if isinstance(space, SphereSpace):
        if space.q < 2:  # noqa: PLR2004
            msg = f"sphere dimension q must be at least 2, got {space.q}"
            raise ModelValidationError(msg, field="space.q")
        if potential.form != "rotator":
            msg = f"{potential.form} potentials need a discrete single-spin space"
            raise ModelValidationError(msg, field="potential.form")
    else:
        if space.size < 1:
            msg = "a discrete space needs at least one atom"
            raise ModelValidationError(msg, field="space.atoms")
        if potential.form == "tabulated":
            if table is None or table.shape != (space.size, space.size):
                msg = f"tabulated potentials need a {space.size}x{space.size} table"
                raise ModelValidationError(msg, field="potential.table")
            if not np.all(np.isfinite(table)) or not np.array_equal(table, table.T):
                msg = "the pair table must be finite and symmetric"
                raise ModelValidationError(msg, field="potential.table")
        elif space.coords is None:
            msg = f"{potential.form} potentials need atom coordinates"
            raise ModelValidationError(msg, field="space.atoms")
        elif potential.form == "ising" and space.coords.shape[1] != 1:
            msg = "ising potentials need scalar atoms"
            raise ModelValidationError(msg, field="space.atoms")
    apriori = uniform_measure(space) if apriori is None else apriori
    _check_apriori(space, apriori)
    return InteractionModel(
        graph=graph,
        space=space,
        apriori=apriori,
        potential=PairPotential(form=potential.form, couplings=J, table=table),
    )


def _check_apriori(space: SingleSpinSpace, apriori: Measure) -> None:
    if isinstance(space, SphereSpace):
        if not isinstance(apriori, SphereMeasure) or apriori.q != space.q:
            msg = f"the a priori measure must live on S^{space.q - 1}"
            raise ModelValidationError(msg, field="apriori")
        return
    if not isinstance(apriori, AtomMeasure) or apriori.weights.shape != (space.size,):
        msg = f"the a priori measure needs one weight per atom ({space.size})"
        raise ModelValidationError(msg, field="apriori.weights")
    atom_measure(apriori.weights)


def ising_model(graph: Graph, couplings: ArrayLike, p: float = 0.5) -> InteractionModel:
    """Ising model with ``α(+1) = p``."""
    return make_model(
        graph,
        ising_space(),
        PairPotential(form="ising", couplings=np.asarray(couplings, dtype=float)),
        atom_measure([p, 1.0 - p]),
    )


def rotator_model(graph: Graph, couplings: ArrayLike, q: int) -> InteractionModel:
    return make_model(
        graph,
        SphereSpace(q=q),
        PairPotential(form="rotator", couplings=np.asarray(couplings, dtype=float)),
    )


def circle_rotator_model(graph: Graph, couplings: ArrayLike, m: int) -> InteractionModel:
    """Rotator on ``m`` equally spaced circle atoms with uniform a priori measure."""
    return make_model(
        graph,
        discretized_circle(m),
        PairPotential(form="rotator", couplings=np.asarray(couplings, dtype=float)),
    )


def pair_table(model: InteractionModel) -> NDArray[np.float64]:
    """Matrix ``T`` with ``Φ_ij(a, b) = J_ij T[a, b]`` over the atoms of a discrete space."""
    space = model.space
    if isinstance(space, SphereSpace):
        msg = "pair tables exist only for discrete single-spin spaces"
        raise DomainError(msg)
    if model.potential.form == "tabulated":
        assert model.potential.table is not None  # noqa: S101
        return model.potential.table
    assert space.coords is not None  # noqa: S101
    return -(space.coords @ space.coords.T)


def _require_edge(model: InteractionModel, i: int, j: int) -> None:
    if not model.graph.has_edge(i, j):
        msg = f"{{{i}, {j}}} is not an edge"
        raise DomainError(msg)


def oscillation(model: InteractionModel, i: int, j: int) -> float:
    """``δ(Φ_ij) = sup Φ_ij - inf Φ_ij``."""
    _require_edge(model, i, j)
    coupling = abs(float(model.couplings[i, j]))
    if isinstance(model.space, SphereSpace):
        return 2.0 * coupling
    table = pair_table(model)
    return coupling * float(table.max() - table.min())


def sup_norm(model: InteractionModel, i: int, j: int) -> float:
    """``‖Φ_ij‖_∞``; zero off the edge set."""
    if not model.graph.has_edge(i, j):
        return 0.0
    coupling = abs(float(model.couplings[i, j]))
    if isinstance(model.space, SphereSpace):
        return coupling
    return coupling * float(np.abs(pair_table(model)).max())


def oscillation_matrix(model: InteractionModel) -> NDArray[np.float64]:
    matrix = np.zeros((model.n, model.n))
    for i, j in model.graph.edges:
        matrix[i, j] = matrix[j, i] = oscillation(model, i, j)
    return matrix


def sup_norm_matrix(model: InteractionModel) -> NDArray[np.float64]:
    matrix = np.zeros((model.n, model.n))
    for i, j in model.graph.edges:
        matrix[i, j] = matrix[j, i] = sup_norm(model, i, j)
    return matrix


def triple_norm(model: InteractionModel) -> float:
    """``sup_i Σ_{A∋i} |A| ‖Φ_A‖_∞``, i.e. ``sup_i Σ_j 2‖Φ_ij‖_∞`` for pair potentials."""
    return float((2.0 * sup_norm_matrix(model)).sum(axis=1).max())


def variational_distance(nu1: Measure, nu2: Measure) -> float:
    """
    ``sup_{|f|≤1} |ν1(f) - ν2(f)| = ∫|h1 - h2| dλ``, in ``[0, 2]``.

    Sphere measures are compared on their common height grid and must share a pole.
    """
    if isinstance(nu1, AtomMeasure) and isinstance(nu2, AtomMeasure):
        if nu1.weights.shape != nu2.weights.shape:
            msg = f"atom measures of sizes {nu1.weights.size} and {nu2.weights.size}"
            raise DomainError(msg)
        return float(np.abs(nu1.weights - nu2.weights).sum())
    if isinstance(nu1, SphereMeasure) and isinstance(nu2, SphereMeasure):
        if nu1.q != nu2.q:
            msg = f"measures on S^{nu1.q - 1} and S^{nu2.q - 1}"
            raise DomainError(msg)
        if nu1.density is None and nu2.density is None:
            return 0.0
        reference = nu1.density if nu1.density is not None else nu2.density
        nodes = len(reference)  # type: ignore[arg-type]
        h1 = np.ones(nodes) if nu1.density is None else nu1.density
        h2 = np.ones(nodes) if nu2.density is None else nu2.density
        if h1.shape != h2.shape:
            msg = "sphere measures live on different quadrature grids"
            raise DomainError(msg)
        if nu1.density is not None and nu2.density is not None and not _same_pole(nu1, nu2):
            msg = "sphere measures are symmetric about different poles"
            raise DomainError(msg)
        _, weights = sphere_rule(nu1.q, nodes)
        return float(weights @ np.abs(h1 - h2))
    msg = "cannot compare a discrete measure with a sphere measure"
    raise DomainError(msg)


def _same_pole(nu1: SphereMeasure, nu2: SphereMeasure) -> bool:
    if nu1.pole is None or nu2.pole is None:
        return nu1.pole is None and nu2.pole is None
    return bool(np.allclose(nu1.pole, nu2.pole, atol=1e-12))


def pair_energy(model: InteractionModel, i: int, j: int, a: Any, b: Any) -> float:  # noqa: ANN401
    """``Φ_ij(a, b)``: atom indices on discrete spaces, unit vectors on the sphere."""
    coupling = float(model.couplings[i, j])
    if isinstance(model.space, SphereSpace):
        return -coupling * float(np.dot(np.asarray(a, dtype=float), np.asarray(b, dtype=float)))
    return coupling * float(pair_table(model)[int(a), int(b)])


def local_hamiltonian_variation(
    model: InteractionModel,
    i: int,
    j: int,
    sigma_i: Any,  # noqa: ANN401
    zeta_j: Any,  # noqa: ANN401
    zeta_bar_j: Any,  # noqa: ANN401
) -> float:
    """
    ``H_i(σ_i, ζ_j, rest) - H_i(σ_i, ζ̄_j, rest)``.

    The frozen configuration outside ``{i, j}`` cancels in the difference because every
    model here is a pair potential, so unlike the general definition it is not an argument.
    Swapping ``ζ_j`` and ``ζ̄_j`` flips the sign.
    """
    _require_edge(model, i, j)
    return pair_energy(model, i, j, sigma_i, zeta_j) - pair_energy(model, i, j, sigma_i, zeta_bar_j)


def hamiltonian(model: InteractionModel, configuration: ArrayLike) -> float:
    """Energy of a full configuration (atom indices, or an ``(n, q)`` array of unit vectors)."""
    spins = np.asarray(configuration)
    if isinstance(model.space, SphereSpace):
        terms = [
            -float(model.couplings[i, j]) * float(spins[i] @ spins[j])
            for i, j in model.graph.edges
        ]
    else:
        table = pair_table(model)
        terms = [
            float(model.couplings[i, j]) * float(table[spins[i], spins[j]])
            for i, j in model.graph.edges
        ]
    return float(sum(terms))
