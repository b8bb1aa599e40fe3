"""
Two-layer machinery: channels, posteriors, the posterior metric and the continuity matrix.

A channel couples a first-layer spin ``σ_i`` to a second-layer spin ``η_i``.  The transformed
measure is Gibbs with conditional probabilities that are continuous in the posterior metric
``d'(η, η̄) = ‖α_η - α_η̄‖`` as soon as the first layer, conditioned on any second-layer
configuration, satisfies a uniform Dobrushin condition ``sup_i Σ_j C̄_ij < 1``.
"""

from __future__ import annotations

import logging
import math
from typing import Mapping
from typing import NamedTuple
from typing import Sequence
from typing import Union

import numpy as np
from gibbs_cert.dobrushin import default_lipschitz
from gibbs_cert.dobrushin import DobrushinBound
from gibbs_cert.dobrushin import neumann_series
from gibbs_cert.dobrushin import second_moment_radius
from gibbs_cert.dobrushin import site_deviation
from gibbs_cert.dobrushin import sup_norm_row_sums
from gibbs_cert.errors import CertificateError
from gibbs_cert.errors import DomainError
from gibbs_cert.errors import ModelValidationError
from gibbs_cert.model import AtomMeasure
from gibbs_cert.model import DiscreteSpace
from gibbs_cert.model import InteractionModel
from gibbs_cert.model import Measure
from gibbs_cert.model import oscillation_matrix
from gibbs_cert.model import SphereMeasure
from gibbs_cert.model import SphereSpace
from gibbs_cert.model import variational_distance
from gibbs_cert.quadrature import DEFAULT_NODES
from gibbs_cert.quadrature import sphere_rule
from gibbs_cert.rotator import heat_kernel_posterior_distance
from gibbs_cert.rotator import height_second_moment
from gibbs_cert.rotator import mean_height
from gibbs_cert.rotator import second_moment_gap
from gibbs_cert.rotator import zonal_kernel
from gibbs_cert.settings import Flavor
from numpy.typing import ArrayLike
from numpy.typing import NDArray
from scipy.spatial.distance import pdist
from typing_extensions import Literal

Provenance = Literal["site", "uniform"]
CHANNEL_TOLERANCE = 1e-12


class HeatKernelChannel(NamedTuple):
    """Brownian motion on ``S^{q-1}`` run for time ``t`` from the first-layer spin."""

    q: int
    t: float


class DiscreteChannel(NamedTuple):
    """Row-stochastic ``K[σ, η] = K(η | σ)`` between finite single-spin spaces."""

    matrix: NDArray[np.float64]
    output_labels: tuple[str, ...]


class FuzzyPartition(NamedTuple):
    """Cells of a deterministic coarse-graining, described by their diameters."""

    diameters: tuple[float, ...]

    @property
    def fineness(self) -> float:
        return max(self.diameters)

    @classmethod
    def from_diameters(cls, diameters: Sequence[float]) -> FuzzyPartition:
        values = tuple(float(d) for d in diameters)
        if not values or any(d < 0 or not math.isfinite(d) for d in values):
            msg = "a partition needs at least one cell with a finite diameter >= 0"
            raise ModelValidationError(msg, field="channel.cells")
        return cls(diameters=values)

    @classmethod
    def from_cells(cls, cells: Sequence[ArrayLike]) -> FuzzyPartition:
        """Diameters of explicit point clouds (one ``(k, d)`` array per nonempty cell)."""
        diameters = []
        for cell in cells:
            points = np.atleast_2d(np.asarray(cell, dtype=float))
            if points.size == 0:
                msg = "partition cells must be nonempty"
                raise ModelValidationError(msg, field="channel.cells")
            diameters.append(float(pdist(points).max()) if len(points) > 1 else 0.0)
        return cls.from_diameters(diameters)

    @classmethod
    def circle_arcs(cls, k: int) -> FuzzyPartition:
        """``k`` equal closed arcs of the unit circle; each has chord ``2 sin(π/k)``."""
        if k < 1:
            msg = f"need at least one arc, got {k}"
            raise ModelValidationError(msg, field="channel.cells")
        diameter = 2.0 if k == 1 else 2.0 * math.sin(math.pi / k)
        return cls(diameters=(diameter,) * k)


class FuzzyChannel(NamedTuple):
    partition: FuzzyPartition


Channel = Union[HeatKernelChannel, DiscreteChannel, FuzzyChannel]
ChannelSpec = Union[Channel, Mapping[int, Channel]]


def heat_kernel_channel(q: int, t: float) -> HeatKernelChannel:
    if q < 2:  # noqa: PLR2004
        msg = f"sphere dimension q must be at least 2, got {q}"
        raise ModelValidationError(msg, field="channel.q")
    if not t >= 0 or not math.isfinite(t):
        msg = f"time must be finite and non-negative, got {t}"
        raise ModelValidationError(msg, field="channel.t")
    return HeatKernelChannel(q=int(q), t=float(t))


def discrete_channel(
    matrix: ArrayLike, output_labels: Sequence[str] | None = None
) -> DiscreteChannel:
    K = np.atleast_2d(np.asarray(matrix, dtype=float))
    if np.any(K < 0) or not np.all(np.isfinite(K)):
        msg = "channel entries must be finite and non-negative"
        raise ModelValidationError(msg, field="channel.matrix")
    if np.any(np.abs(K.sum(axis=1) - 1.0) > CHANNEL_TOLERANCE):
        msg = "channel rows must sum to one"
        raise ModelValidationError(msg, field="channel.matrix")
    labels = (
        tuple(str(k) for k in range(K.shape[1])) if output_labels is None else tuple(output_labels)
    )
    if len(labels) != K.shape[1]:
        msg = f"{len(labels)} output labels for {K.shape[1]} outputs"
        raise ModelValidationError(msg, field="channel.labels")
    return DiscreteChannel(matrix=K, output_labels=labels)


def identity_channel(m: int) -> DiscreteChannel:
    return discrete_channel(np.eye(m))


def trivial_channel(m: int) -> DiscreteChannel:
    """Channel with a single output: observing it reveals nothing."""
    return discrete_channel(np.ones((m, 1)), output_labels=("*",))


def discretized_heat_kernel_channel(space: DiscreteSpace, t: float) -> DiscreteChannel:
    """Row-normalized heat kernel ``∝ k_t(<σ, η>)`` between the atoms of an embedded space."""
    if space.coords is None:
        msg = "the discretized heat kernel needs atom coordinates"
        raise ModelValidationError(msg, field="space.atoms")
    q = space.coords.shape[1]
    if q < 2:  # noqa: PLR2004
        msg = "the discretized heat kernel needs atoms on a sphere of dimension >= 1"
        raise ModelValidationError(msg, field="space.atoms")
    if not t >= 0 or not math.isfinite(t):
        msg = f"time must be finite and non-negative, got {t}"
        raise ModelValidationError(msg, field="channel.t")
    if t == 0:
        return identity_channel(space.size)
    weights = zonal_kernel(q, t, np.clip(space.coords @ space.coords.T, -1.0, 1.0))
    weights = np.clip(weights, 0.0, None)
    return discrete_channel(weights / weights.sum(axis=1, keepdims=True), space.labels)


def channel_for_site(channel: ChannelSpec, i: int) -> Channel:
    if isinstance(channel, (HeatKernelChannel, DiscreteChannel, FuzzyChannel)):
        return channel
    try:
        return channel[i]
    except KeyError:
        msg = f"no channel configured for site {i}"
        raise ModelValidationError(msg, field="channel") from None


def output_size(channel: DiscreteChannel) -> int:
    return channel.matrix.shape[1]


def posterior_measure(
    channel: Channel,
    eta: ArrayLike,
    apriori: Measure,
    *,
    nodes: int = DEFAULT_NODES,
) -> Measure:
    """``α_η(dσ) ∝ k(σ, η) α(dσ)``; ``η`` is an output index or a unit vector."""
    if isinstance(channel, DiscreteChannel):
        if not isinstance(apriori, AtomMeasure) or apriori.weights.size != channel.matrix.shape[0]:
            msg = "the a priori measure does not match the channel inputs"
            raise DomainError(msg)
        joint = apriori.weights * channel.matrix[:, int(np.asarray(eta))]
        total = float(joint.sum())
        if not total > 0:
            msg = f"output {int(np.asarray(eta))} has zero probability under the channel"
            raise DomainError(msg)
        return AtomMeasure(weights=joint / total)
    if isinstance(channel, HeatKernelChannel):
        if not isinstance(apriori, SphereMeasure) or apriori.density is not None:
            msg = "the heat-kernel channel pairs with the equidistribution on the sphere"
            raise DomainError(msg)
        pole = np.asarray(eta, dtype=float)
        if pole.shape != (channel.q,):
            msg = f"second-layer spins must be vectors in R^{channel.q}"
            raise DomainError(msg)
        u, _ = sphere_rule(channel.q, nodes)
        density = zonal_kernel(channel.q, channel.t, u)
        return SphereMeasure(q=channel.q, density=density, pole=pole / np.linalg.norm(pole))
    msg = "posterior measures need a stochastic channel"
    raise DomainError(msg)


def posterior_metric(
    channel: Channel,
    eta: ArrayLike,
    eta_bar: ArrayLike,
    apriori: Measure,
    *,
    nodes: int = DEFAULT_NODES,
) -> float:
    """``d'(η, η̄) = ∫ |α_η - α_η̄|``, in ``[0, 2]``."""
    if isinstance(channel, HeatKernelChannel):
        distance = float(np.linalg.norm(np.asarray(eta, dtype=float) - np.asarray(eta_bar)))
        if channel.t == 0:
            return 0.0 if distance == 0 else 2.0
        posterior_measure(channel, eta, apriori, nodes=nodes)
        return heat_kernel_posterior_distance(channel.q, channel.t, min(distance, 2.0), nodes).value
    return variational_distance(
        posterior_measure(channel, eta, apriori, nodes=nodes),
        posterior_measure(channel, eta_bar, apriori, nodes=nodes),
    )


def posterior_family(channel: DiscreteChannel, apriori: AtomMeasure) -> dict[int, Measure]:
    """Posteriors of every output with positive probability."""
    marginal = apriori.weights @ channel.matrix
    return {
        eta: posterior_measure(channel, eta, apriori)
        for eta in range(output_size(channel))
        if marginal[eta] > 0
    }


class ConditionalDobrushin(NamedTuple):
    """``C̄``: a Dobrushin bound uniform over the second-layer conditioning."""

    entries: NDArray[np.float64]
    flavor: Flavor
    grid_sup: bool = False

    @property
    def row_sums(self) -> NDArray[np.float64]:
        return self.entries.sum(axis=1)

    @property
    def c_bar(self) -> float:
        return float(self.row_sums.max()) if self.entries.size else 0.0


def _lipschitz_matrix(model: InteractionModel, lipschitz: ArrayLike | None) -> NDArray[np.float64]:
    return default_lipschitz(model) if lipschitz is None else np.asarray(lipschitz, dtype=float)


def _heat_kernel_row(
    model: InteractionModel,
    channel: HeatKernelChannel,
    i: int,
    flavor: Flavor,
    lipschitz: NDArray[np.float64] | None,
    nodes: int,
) -> tuple[NDArray[np.float64], bool]:
    if not isinstance(model.space, SphereSpace) or model.space.q != channel.q:
        msg = "the heat-kernel channel needs a rotator model on the same sphere"
        raise DomainError(msg)
    sums = oscillation_matrix(model)[i]
    coupling = np.abs(model.couplings[i])
    q, t = channel.q, channel.t
    if flavor == "lipschitz":
        L = default_lipschitz(model)[i] if lipschitz is None else lipschitz[i]
        return 0.5 * np.exp(0.5 * sums) * L * math.sqrt(second_moment_gap(q, t)), False
    if flavor == "quadratic":
        mean, second = mean_height(q, t), height_second_moment(q, t)
        projection = math.sqrt(max(second - mean**2, (1.0 - second) / (q - 1), 0.0))
        return 0.5 * np.exp(0.5 * sums) * 2.0 * coupling * projection, False
    if t == 0:
        return np.zeros(model.n), False
    pole = np.zeros(q)
    pole[0] = 1.0
    posterior = posterior_measure(channel, pole, model.apriori, nodes=nodes)
    row = np.zeros(model.n)
    for j in model.graph.neighbors(i):
        row[j], _ = site_deviation(model, i, j, posterior, "linear")
    return np.exp(sums) * row, True


def _discrete_row(
    model: InteractionModel,
    channel: DiscreteChannel,
    i: int,
    flavor: Flavor,
    lipschitz: NDArray[np.float64] | None,
) -> NDArray[np.float64]:
    if not isinstance(model.apriori, AtomMeasure):
        msg = "discrete channels need a discrete first layer"
        raise DomainError(msg)
    sums = oscillation_matrix(model)[i]
    row = np.zeros(model.n)
    for posterior in posterior_family(channel, model.apriori).values():
        if flavor == "lipschitz":
            assert isinstance(model.space, DiscreteSpace)  # noqa: S101
            L = _lipschitz_matrix(model, lipschitz)[i]
            radius = second_moment_radius(posterior, model.space.coords)
            candidate = 0.5 * np.exp(0.5 * sums) * L * radius
        else:
            deviations = np.zeros(model.n)
            for j in model.graph.neighbors(i):
                deviations[j], _ = site_deviation(model, i, j, posterior, flavor)
            if flavor == "linear":
                candidate = np.exp(sums) * deviations
            else:
                candidate = 0.5 * np.exp(0.5 * sums) * deviations
        row = np.maximum(row, candidate)
    return row


def resolve_flavor(channel: ChannelSpec, n: int, flavor: Flavor | None = None) -> Flavor:
    """
    Flavor used for ``channel`` when none is requested.

    Heat kernels everywhere resolve to the closed-form ``lipschitz`` bound, anything else to
    ``linear``.  An explicit ``flavor`` is returned unchanged.
    """
    if flavor is not None:
        return flavor
    sites = [channel_for_site(channel, i) for i in range(n)]
    if sites and all(isinstance(c, HeatKernelChannel) for c in sites):
        return "lipschitz"
    return "linear"


def conditional_dobrushin_matrix(
    model: InteractionModel,
    channel: ChannelSpec,
    flavor: Flavor | None = None,
    *,
    lipschitz: ArrayLike | None = None,
    nodes: int = DEFAULT_NODES,
) -> ConditionalDobrushin:
    """
    ``C̄_ij``, a bound on the Dobrushin matrix of the first layer given any ``η``.

    Discrete channels take the exact supremum over the output alphabet. The heat kernel
    uses rotation invariance: the posterior laws differ only by a rotation, so the
    ``lipschitz`` and ``quadratic`` flavors are closed forms and ``linear`` scans the
    direction between the pole and the boundary variation (``grid_sup`` is then set).
    Without a ``flavor`` heat kernels take ``lipschitz`` and discrete channels ``linear``.
    Fuzzy channels always use the Lipschitz route with the cell diameter as radius.
    """
    flavor = resolve_flavor(channel, model.n, flavor)
    L = None if lipschitz is None else np.asarray(lipschitz, dtype=float)
    entries = np.zeros((model.n, model.n))
    grid_sup = False
    used = flavor
    for i in range(model.n):
        site_channel = channel_for_site(channel, i)
        if isinstance(site_channel, HeatKernelChannel):
            entries[i], flagged = _heat_kernel_row(model, site_channel, i, flavor, L, nodes)
            grid_sup = grid_sup or flagged
        elif isinstance(site_channel, DiscreteChannel):
            entries[i] = _discrete_row(model, site_channel, i, flavor, L)
        else:
            entries[i] = fuzzy_c_bar(model, site_channel.partition, L)[i]
            used = "lipschitz"
    np.fill_diagonal(entries, 0.0)
    logging.info("conditional Dobrushin bound (%s): c̄ = %.6g", used, entries.sum(axis=1).max())
    return ConditionalDobrushin(entries=entries, flavor=used, grid_sup=grid_sup)


def rcflm_dobrushin_bound(
    model: InteractionModel,
    channel: ChannelSpec,
    excluded_site: int,
    flavor: Flavor | None = None,
) -> ConditionalDobrushin:
    """
    Bound on the first layer restricted to ``G \\ {i_o}`` with posterior a priori measures.

    The excluded row and column are zero; the other entries coincide with ``C̄``.
    """
    if not 0 <= excluded_site < model.n:
        msg = f"site {excluded_site} is not a vertex"
        raise DomainError(msg)
    bound = conditional_dobrushin_matrix(model, channel, flavor)
    entries = bound.entries.copy()
    entries[excluded_site, :] = 0.0
    entries[:, excluded_site] = 0.0
    return bound._replace(entries=entries)


class QMatrix(NamedTuple):
    """
    Continuity matrix: ``‖γ'_i(·|η) - γ'_i(·|η̄)‖ <= Σ_j Q_ij d'(η_j, η̄_j)``.

    ``provenance`` is ``site`` for the site-resolved exponentials and ``uniform`` for the
    coarser constant ``4 exp(4 sup_i Σ_j ‖Φ_ij‖_∞)``.
    """

    entries: NDArray[np.float64]
    provenance: Provenance
    d_bar: NDArray[np.float64]

    def bound(self, d_prime: ArrayLike) -> NDArray[np.float64]:
        """Right-hand side per site for a vector of posterior distances ``d'(η_j, η̄_j)``."""
        return self.entries @ np.asarray(d_prime, dtype=float)


CBarLike = Union[ConditionalDobrushin, DobrushinBound, ArrayLike]


def q_matrix(
    model: InteractionModel, c_bar: CBarLike, provenance: Provenance = "site"
) -> QMatrix:
    """
    ``Q_ij = 4 exp(2 Σ_l ‖Φ_il‖) (M D̄)_ij exp(Σ_l δ(Φ_jl))`` with ``M_ik = δ(Φ_ik)``.

    ``uniform`` replaces both exponentials by ``exp(4 sup_i Σ_l ‖Φ_il‖)``.

    Raises
    ------
        CertificateError: ``sup_i Σ_j C̄_ij >= 1``.

    """
    matrix = c_bar.entries if isinstance(c_bar, (ConditionalDobrushin, DobrushinBound)) else c_bar
    d_bar = neumann_series(np.asarray(matrix, dtype=float)).d
    M = oscillation_matrix(model)
    norms = sup_norm_row_sums(model)
    if provenance == "site":
        entries = 4.0 * np.exp(2.0 * norms)[:, None] * (M @ d_bar) * np.exp(M.sum(axis=1))[None, :]
    elif provenance == "uniform":
        entries = 4.0 * math.exp(4.0 * float(norms.max())) * (M @ d_bar)
    else:
        msg = f"unknown provenance {provenance!r}"
        raise DomainError(msg)
    np.fill_diagonal(entries, 0.0)
    return QMatrix(entries=entries, provenance=provenance, d_bar=d_bar)


class ContinuityCertificate(NamedTuple):
    certified: bool
    c_bar: float
    conditional: ConditionalDobrushin
    q: QMatrix | None
    statement: str

    @property
    def flavor(self) -> Flavor:
        return self.conditional.flavor


def continuity_certificate(
    model: InteractionModel,
    channel: ChannelSpec,
    flavor: Flavor | None = None,
    provenance: Provenance = "site",
    *,
    lipschitz: ArrayLike | None = None,
    nodes: int = DEFAULT_NODES,
) -> ContinuityCertificate:
    """Certify continuity of the transformed conditional probabilities, or report ``c̄``."""
    conditional = conditional_dobrushin_matrix(
        model, channel, flavor, lipschitz=lipschitz, nodes=nodes
    )
    if conditional.c_bar >= 1.0:
        return ContinuityCertificate(
            certified=False,
            c_bar=conditional.c_bar,
            conditional=conditional,
            q=None,
            statement=f"not certified: sup_i Σ_j C̄_ij = {conditional.c_bar:.6g} >= 1",
        )
    try:
        q = q_matrix(model, conditional, provenance)
    except CertificateError as e:
        return ContinuityCertificate(
            certified=False,
            c_bar=conditional.c_bar,
            conditional=conditional,
            q=None,
            statement=f"not certified: {e}",
        )
    return ContinuityCertificate(
        certified=True,
        c_bar=conditional.c_bar,
        conditional=conditional,
        q=q,
        statement="‖γ'_i(·|η) - γ'_i(·|η̄)‖ <= Σ_j Q_ij d'(η_j, η̄_j)",
    )


def fuzzy_c_bar(
    model: InteractionModel, partition: FuzzyPartition, lipschitz: ArrayLike | None = None
) -> NDArray[np.float64]:
    """``C̄_ij = (ρ/2) exp(½ Σ_{A⊃{i,j}} δ(Φ_A)) L_ij`` with fineness ``ρ``."""
    L = _lipschitz_matrix(model, lipschitz)
    entries = 0.5 * partition.fineness * np.exp(0.5 * oscillation_matrix(model)) * L
    np.fill_diagonal(entries, 0.0)
    return entries


class FuzzyReport(NamedTuple):
    lhs: float
    certified: bool
    fineness: float
    c_bar: NDArray[np.float64]


def fuzzy_check(
    model: InteractionModel, partition: FuzzyPartition, lipschitz: ArrayLike | None = None
) -> FuzzyReport:
    """Coarse-graining criterion ``(ρ/2) sup_i Σ_j exp(½ Σδ(Φ_A)) L_ij < 1``."""
    entries = fuzzy_c_bar(model, partition, lipschitz)
    lhs = float(entries.sum(axis=1).max()) if entries.size else 0.0
    return FuzzyReport(lhs=lhs, certified=lhs < 1.0, fineness=partition.fineness, c_bar=entries)


class DecimationReport(NamedTuple):
    """
    Decimation onto ``sublattice`` seen as site-wise channels.

    Kept sites observe their spin exactly, the others are traced out, so ``d'`` is twice
    the discrete metric and ``image_bound`` bounds the Dobrushin matrix of the image system.
    """

    sublattice: tuple[int, ...]
    certificate: ContinuityCertificate
    image_bound: NDArray[np.float64] | None
    d_prime_values: tuple[float, ...]


def decimation_channel(
    model: InteractionModel,
    sublattice: Sequence[int],
    flavor: Flavor | None = None,
) -> DecimationReport:
    if not isinstance(model.space, DiscreteSpace) or not isinstance(model.apriori, AtomMeasure):
        msg = "decimation is defined here for discrete single-spin spaces"
        raise DomainError(msg)
    kept = tuple(sorted(set(sublattice)))
    if not kept or kept[0] < 0 or kept[-1] >= model.n:
        msg = f"sublattice {list(sublattice)} is not a nonempty set of vertices"
        raise DomainError(msg)
    m = model.space.size
    channels: dict[int, Channel] = {
        i: identity_channel(m) if i in kept else trivial_channel(m) for i in range(model.n)
    }
    certificate = continuity_certificate(model, channels, flavor)
    family = posterior_family(identity_channel(m), model.apriori)
    d_prime = sorted(
        {round(variational_distance(a, b), 12) for a in family.values() for b in family.values()}
    )
    image = None
    if certificate.q is not None:
        image = certificate.q.entries[np.ix_(kept, kept)]
    return DecimationReport(
        sublattice=kept,
        certificate=certificate,
        image_bound=image,
        d_prime_values=tuple(d_prime),
    )
