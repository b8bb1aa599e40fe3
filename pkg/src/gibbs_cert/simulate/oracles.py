"""Exact enumeration and quadrature oracles for the claims of the certification layer."""

from __future__ import annotations

import logging
import math
from typing import NamedTuple
from typing import Sequence

import numpy as np
from gibbs_cert.cache import oracle_cache
from gibbs_cert.dobrushin import exact_dobrushin_matrix
from gibbs_cert.errors import BudgetExceededError
from gibbs_cert.errors import CertificateError
from gibbs_cert.errors import DomainError
from gibbs_cert.errors import SeriesError
from gibbs_cert.model import AtomMeasure
from gibbs_cert.model import InteractionModel
from gibbs_cert.model import Measure
from gibbs_cert.model import pair_table
from gibbs_cert.model import SphereSpace
from gibbs_cert.model import variational_distance
from gibbs_cert.quadrature import DEFAULT_NODES
from gibbs_cert.rotator import heat_kernel_posterior_distance
from gibbs_cert.rotator import PosteriorDistance
from gibbs_cert.settings import DEFAULT_SETTINGS
from gibbs_cert.settings import Flavor
from gibbs_cert.simulate.rng import RngSpec
from gibbs_cert.two_layer import channel_for_site
from gibbs_cert.two_layer import ChannelSpec
from gibbs_cert.two_layer import continuity_certificate
from gibbs_cert.two_layer import DiscreteChannel
from gibbs_cert.two_layer import HeatKernelChannel
from gibbs_cert.two_layer import output_size
from gibbs_cert.two_layer import posterior_measure
from gibbs_cert.two_layer import posterior_metric
from gibbs_cert.two_layer import QMatrix
from numpy.typing import ArrayLike
from numpy.typing import NDArray
from scipy.special import logsumexp

UNIT_TOLERANCE = 1e-9
VIOLATION_SLACK = 1e-12


def _discrete_parts(model: InteractionModel) -> tuple[NDArray[np.float64], AtomMeasure]:
    if isinstance(model.space, SphereSpace) or not isinstance(model.apriori, AtomMeasure):
        msg = "enumeration oracles need a discrete single-spin space"
        raise DomainError(msg)
    return pair_table(model), model.apriori


def _discrete_channel(channel: ChannelSpec, k: int) -> DiscreteChannel:
    kernel = channel_for_site(channel, k)
    if not isinstance(kernel, DiscreteChannel):
        msg = "the transformed-kernel oracle needs discrete channels"
        raise DomainError(msg)
    return kernel


def _axis_shape(n: int, *axes: int, size: int) -> list[int]:
    shape = [1] * n
    for axis in axes:
        shape[axis] = size
    return shape


def log_boltzmann_weights(
    model: InteractionModel, budget: int = DEFAULT_SETTINGS.enumeration_budget
) -> NDArray[np.float64]:
    """Unnormalized ``log Π α(σ_k) - H(σ)`` on all ``m^n`` configurations, one axis per site."""
    table, apriori = _discrete_parts(model)
    m, n = table.shape[0], model.n
    if m**n > budget:
        msg = "full enumeration refused"
        raise BudgetExceededError(msg, required=m**n, budget=budget)
    with np.errstate(divide="ignore"):
        log_alpha = np.log(apriori.weights)
    log_weight = np.zeros((m,) * n)
    for k in range(n):
        log_weight = log_weight + log_alpha.reshape(_axis_shape(n, k, size=m))
    for i, j in model.graph.edges:
        block = table if i < j else table.T
        log_weight = log_weight - float(model.couplings[i, j]) * block.reshape(
            _axis_shape(n, i, j, size=m)
        )
    return log_weight


def exact_marginals(
    model: InteractionModel, budget: int = DEFAULT_SETTINGS.enumeration_budget
) -> NDArray[np.float64]:
    """Single-site marginals of the finite-volume Gibbs measure, shape ``(n, m)``."""
    log_weight = log_boltzmann_weights(model, budget)
    n = model.n
    marginals = []
    for i in range(n):
        others = tuple(k for k in range(n) if k != i)
        row = logsumexp(log_weight, axis=others) if others else log_weight
        marginals.append(np.exp(row - logsumexp(row)))
    return np.array(marginals)


@oracle_cache()
def exact_transformed_kernel(
    model: InteractionModel,
    channel: ChannelSpec,
    i: int,
    eta: Sequence[int],
    budget: int = DEFAULT_SETTINGS.enumeration_budget,
) -> NDArray[np.float64]:
    """
    ``γ'_i(·|η_{V\\i})`` of the transformed finite-volume measure by summing over ``σ``.

    The numerator weighs each first-layer configuration by ``Π_{k≠i} K(σ_k, η_k)``; the
    law of ``η_i`` is then ``Σ_σi μ(σ_i | η_{V\\i}) K(σ_i, ·)``. ``eta[i]`` is ignored.
    """
    table, _ = _discrete_parts(model)
    m, n = table.shape[0], model.n
    if len(eta) != n or not 0 <= i < n:
        msg = f"need a site in [0, {n}) and one second-layer spin per site"
        raise DomainError(msg)
    site_channel = _discrete_channel(channel, i)
    cost = m**n * output_size(site_channel)
    if cost > budget:
        msg = "transformed-kernel enumeration refused"
        raise BudgetExceededError(msg, required=cost, budget=budget)
    log_weight = log_boltzmann_weights(model, budget)
    for k in range(n):
        if k == i:
            continue
        kernel = _discrete_channel(channel, k)
        with np.errstate(divide="ignore"):
            column = np.log(kernel.matrix[:, int(eta[k])])
        log_weight = log_weight + column.reshape(_axis_shape(n, k, size=m))
    others = tuple(k for k in range(n) if k != i)
    log_site = logsumexp(log_weight, axis=others) if others else log_weight
    if not np.isfinite(log_site.max()):
        msg = f"the conditioning {list(eta)} has probability zero"
        raise DomainError(msg)
    law = np.exp(log_site - log_site.max()) @ site_channel.matrix
    return law / law.sum()


def rcflm_exact_matrix(
    model: InteractionModel,
    channel: ChannelSpec,
    eta: Sequence[int],
    excluded_site: int,
    budget: int = DEFAULT_SETTINGS.enumeration_budget,
) -> NDArray[np.float64]:
    """
    Exact Dobrushin matrix of the first layer on ``G \\ {i_o}`` given ``η``.

    Every site keeps its posterior ``α_{η_k}`` as a priori measure.
    """
    _discrete_parts(model)
    posteriors: dict[int, Measure] = {
        k: posterior_measure(channel_for_site(channel, k), int(eta[k]), model.apriori)
        for k in range(model.n)
        if k != excluded_site
    }
    matrix = np.array(exact_dobrushin_matrix(model, posteriors, budget), dtype=float)
    matrix[excluded_site, :] = 0.0
    matrix[:, excluded_site] = 0.0
    return matrix


def _unit_vector(value: ArrayLike, q: int) -> NDArray[np.float64]:
    vector = np.asarray(value, dtype=float)
    if vector.shape != (q,) or abs(float(np.linalg.norm(vector)) - 1.0) > UNIT_TOLERANCE:
        msg = f"second-layer spins must be unit vectors in R^{q}"
        raise DomainError(msg)
    return vector


def empirical_posterior_metric(
    channel: HeatKernelChannel,
    eta: ArrayLike,
    eta_bar: ArrayLike,
    *,
    nodes: int = DEFAULT_NODES,
    t_min: float = DEFAULT_SETTINGS.t_min,
) -> PosteriorDistance:
    """
    ``d'(η, η̄)`` for the heat-kernel channel with the quadrature error estimate.

    The pair is rotated so that the bisecting hyperplane is the equator; only the chordal
    distance matters.
    """
    if channel.t < t_min:
        msg = f"t={channel.t} is below the heat-kernel floor {t_min}"
        raise SeriesError(msg)
    first = _unit_vector(eta, channel.q)
    second = _unit_vector(eta_bar, channel.q)
    distance = min(float(np.linalg.norm(first - second)), 2.0)
    return heat_kernel_posterior_distance(channel.q, channel.t, distance, nodes)


class SoundnessReport(NamedTuple):
    """
    Continuity estimate checked against exact transformed kernels.

    ``worst_ratio`` is the largest ``lhs / rhs`` over checks with a positive right side.
    """

    n_pairs: int
    checks: int
    violations: int
    worst_ratio: float
    worst_gap: float
    q: QMatrix


def soundness_check(
    model: InteractionModel,
    channel: ChannelSpec,
    rng: RngSpec,
    *,
    n_pairs: int = 200,
    flavor: Flavor | None = None,
    sites: Sequence[int] | None = None,
    budget: int = DEFAULT_SETTINGS.enumeration_budget,
) -> SoundnessReport:
    """
    Compare ``Σ|γ'_i(·|η) - γ'_i(·|η̄)|`` with ``Σ_j Q_ij d'(η_j, η̄_j)`` on random pairs.

    Both sides use the full variational distance ``∫|h1 - h2|`` in ``[0, 2]``, the norm
    ``posterior_metric`` measures ``d'`` in.

    Raises
    ------
        CertificateError: The continuity estimate is not certified for this model.

    """
    certificate = continuity_certificate(model, channel, flavor)
    if certificate.q is None:
        raise CertificateError(certificate.statement, margin=1.0 - certificate.c_bar)
    q = certificate.q
    generator = rng.generator()
    chosen = tuple(range(model.n)) if sites is None else tuple(sites)
    sizes = [output_size(_discrete_channel(channel, k)) for k in range(model.n)]
    checks = violations = 0
    worst_ratio = worst_gap = 0.0
    for _ in range(n_pairs):
        eta = [int(generator.integers(size)) for size in sizes]
        eta_bar = [int(generator.integers(size)) for size in sizes]
        d_prime = np.array(
            [
                posterior_metric(channel_for_site(channel, k), eta[k], eta_bar[k], model.apriori)
                for k in range(model.n)
            ]
        )
        bound = q.bound(d_prime)
        for i in chosen:
            first = exact_transformed_kernel(model, channel, i, tuple(eta), budget)
            second = exact_transformed_kernel(model, channel, i, tuple(eta_bar), budget)
            lhs = variational_distance(AtomMeasure(weights=first), AtomMeasure(weights=second))
            checks += 1
            worst_gap = max(worst_gap, lhs - float(bound[i]))
            if lhs > bound[i] + VIOLATION_SLACK:
                violations += 1
            if bound[i] > 0:
                worst_ratio = max(worst_ratio, lhs / float(bound[i]))
            elif lhs > VIOLATION_SLACK:
                worst_ratio = math.inf
    if violations:
        logging.warning("%d of %d continuity checks violated the bound", violations, checks)
    return SoundnessReport(
        n_pairs=n_pairs,
        checks=checks,
        violations=violations,
        worst_ratio=worst_ratio,
        worst_gap=worst_gap,
        q=q,
    )
