"""
Single-layer Dobrushin bounds, their enumeration oracle, Neumann series and concentration.

Dobrushin matrices use ``‖ν1 - ν2‖ = ½ ∫|h1 - h2|``, i.e. half of
:func:`gibbs_cert.model.variational_distance`; the single-edge Ising value is ``tanh|J|``.
"""

from __future__ import annotations

import logging
import math
from typing import Mapping
from typing import NamedTuple
from typing import Union

import numpy as np
import scipy.linalg
from gibbs_cert.cache import oracle_cache
from gibbs_cert.errors import BudgetExceededError
from gibbs_cert.errors import CertificateError
from gibbs_cert.errors import DomainError
from gibbs_cert.model import AtomMeasure
from gibbs_cert.model import InteractionModel
from gibbs_cert.model import Measure
from gibbs_cert.model import oscillation_matrix
from gibbs_cert.model import pair_table
from gibbs_cert.model import sphere_measure_mass
from gibbs_cert.model import SphereMeasure
from gibbs_cert.model import SphereSpace
from gibbs_cert.model import sup_norm_matrix
from gibbs_cert.model import triple_norm
from gibbs_cert.quadrature import sphere_constant
from gibbs_cert.quadrature import sphere_rule
from gibbs_cert.quadrature import transverse_rule
from gibbs_cert.settings import DEFAULT_SETTINGS
from gibbs_cert.settings import Flavor
from numpy.typing import ArrayLike
from numpy.typing import NDArray
from scipy.special import logsumexp
from typing_extensions import Literal

Spread = Literal["linear", "quadratic"]
SiteMeasures = Mapping[int, Measure]

NEUMANN_RESIDUAL_TOLERANCE = 1e-9
DIRECTION_GRID = 65


class DeviationMatrix(NamedTuple):
    """``B_ij = dev_{α;i,j}(H_i)`` (linear) or ``std_{α;i,j}(H_i)`` (quadratic)."""

    entries: NDArray[np.float64]
    flavor: Spread
    grid_sup: bool = False


class DobrushinBound(NamedTuple):
    entries: NDArray[np.float64]
    flavor: Flavor
    grid_sup: bool = False

    @property
    def row_sums(self) -> NDArray[np.float64]:
        return self.entries.sum(axis=1)

    @property
    def c_bound(self) -> float:
        return float(self.row_sums.max()) if self.entries.size else 0.0


class NeumannSeries(NamedTuple):
    """``D = Σ_{n>=0} C^n`` solved from ``(I - C) D = I``."""

    d: NDArray[np.float64]
    row_norm: float
    residual: float


class ConcentrationReport(NamedTuple):
    s: float
    norm_1: float
    norm_inf: float
    kappa: float
    valid: bool


class ConcentrationBound(NamedTuple):
    value: float
    report: ConcentrationReport


class DevTripleNorms(NamedTuple):
    """``|||Φ|||_dev``, ``|||Φ|||_std`` and the Dobrushin bounds they imply."""

    dev: float
    std: float
    triple_norm: float
    linear_bound: float
    quadratic_bound: float


def weighted_median(values: ArrayLike, weights: ArrayLike) -> float:
    """Smallest value whose cumulative weight reaches one half."""
    v = np.asarray(values, dtype=float).ravel()
    w = np.asarray(weights, dtype=float).ravel()
    order = np.argsort(v, kind="stable")
    cumulative = np.cumsum(w[order])
    index = int(np.searchsorted(cumulative, 0.5 * cumulative[-1], side="left"))
    return float(v[order][min(index, v.size - 1)])


def spread(values: ArrayLike, weights: ArrayLike, flavor: Spread) -> float:
    """``inf_B ∫|Δ - B| dα`` (median) or ``inf_B (∫(Δ - B)² dα)^{1/2}`` (mean)."""
    v = np.asarray(values, dtype=float).ravel()
    w = np.asarray(weights, dtype=float).ravel()
    if flavor == "linear":
        return float(w @ np.abs(v - weighted_median(v, w)))
    mean = float(w @ v)
    return math.sqrt(max(0.0, float(w @ (v - mean) ** 2)))


def _site_measure(model: InteractionModel, i: int, apriori: SiteMeasures | None) -> Measure:
    if apriori is not None and i in apriori:
        return apriori[i]
    return model.apriori


def _discrete_variations(model: InteractionModel, i: int, j: int) -> NDArray[np.float64]:
    """Rows ``Δ(·) = Φ_ij(·, ζ) - Φ_ij(·, ζ̄)`` over every boundary pair ``(ζ, ζ̄)``."""
    table = float(model.couplings[i, j]) * pair_table(model)
    m = table.shape[0]
    return (table[:, :, None] - table[:, None, :]).transpose(1, 2, 0).reshape(m * m, m)


def _height_moments(measure: SphereMeasure) -> tuple[float, float]:
    if measure.density is None:
        return 0.0, 1.0 / measure.q
    nodes, weights = sphere_rule(measure.q, len(measure.density))
    mass = weights * measure.density
    return float(mass @ nodes), float(mass @ nodes**2)


def _sphere_projection_spread(measure: SphereMeasure, flavor: Spread) -> tuple[float, bool]:
    """``sup_e`` of the spread of ``<σ, e>``; the flag marks a direction-grid supremum."""
    q = measure.q
    if measure.density is None:
        if flavor == "linear":
            return 2.0 * sphere_constant(q) / (q - 1), False
        return 1.0 / math.sqrt(q), False
    mean, second = _height_moments(measure)
    if flavor == "quadratic":
        return math.sqrt(max(second - mean**2, (1.0 - second) / (q - 1), 0.0)), False
    u, u_weights = sphere_rule(q, len(measure.density))
    w, w_weights = transverse_rule(q, len(measure.density))
    mass = np.outer(u_weights * measure.density, w_weights)
    radial = np.sqrt(np.clip(1.0 - u**2, 0.0, None))
    best = 0.0
    for psi in np.linspace(0.0, math.pi, DIRECTION_GRID):
        projection = u[:, None] * math.cos(psi) + radial[:, None] * w[None, :] * math.sin(psi)
        best = max(best, spread(projection, mass, "linear"))
    return best, True


def site_deviation(
    model: InteractionModel, i: int, j: int, measure: Measure, flavor: Spread
) -> tuple[float, bool]:
    if not model.graph.has_edge(i, j):
        return 0.0, False
    if isinstance(model.space, SphereSpace):
        if not isinstance(measure, SphereMeasure) or measure.q != model.space.q:
            msg = "sphere deviations need a measure on the same sphere"
            raise DomainError(msg)
        projection, grid_sup = _sphere_projection_spread(measure, flavor)
        return 2.0 * abs(float(model.couplings[i, j])) * projection, grid_sup
    if not isinstance(measure, AtomMeasure):
        msg = "discrete deviations need an atom measure"
        raise DomainError(msg)
    variations = _discrete_variations(model, i, j)
    return max(spread(row, measure.weights, flavor) for row in variations), False


def dev(model: InteractionModel, i: int, j: int, under: Measure | None = None) -> float:
    """
    Worst-case linear deviation ``sup_{ζ,ζ̄} inf_B ∫ α(dσ_i) |Δ(σ_i) - B|``.

    The inner infimum sits at a weighted median. On the sphere the rotator variation is
    ``J <σ_i, ζ̄ - ζ>`` and the supremum is taken at antipodal ``ζ, ζ̄``.
    """
    return site_deviation(model, i, j, model.apriori if under is None else under, "linear")[0]


def std_dev(model: InteractionModel, i: int, j: int, under: Measure | None = None) -> float:
    """Worst-case quadratic deviation; the optimal centering is the mean."""
    return site_deviation(model, i, j, model.apriori if under is None else under, "quadratic")[0]


def deviation_matrix(
    model: InteractionModel,
    flavor: Spread = "linear",
    *,
    apriori: SiteMeasures | None = None,
) -> DeviationMatrix:
    """Deviation matrix, optionally with a per-site a priori measure."""
    entries = np.zeros((model.n, model.n))
    grid_sup = False
    for i in range(model.n):
        measure = _site_measure(model, i, apriori)
        for j in model.graph.neighbors(i):
            entries[i, j], flagged = site_deviation(model, i, j, measure, flavor)
            grid_sup = grid_sup or flagged
    return DeviationMatrix(entries=entries, flavor=flavor, grid_sup=grid_sup)


def _oscillation_sums(model: InteractionModel, override: ArrayLike | None) -> NDArray[np.float64]:
    """``Σ_{A⊃{i,j}} δ(Φ_A)``; the override admits potentials beyond pairs."""
    if override is None:
        return oscillation_matrix(model)
    sums = np.asarray(override, dtype=float)
    if sums.shape != (model.n, model.n):
        msg = f"oscillation override must have shape {(model.n, model.n)}"
        raise DomainError(msg)
    return sums


def dobrushin_bound_linear(
    model: InteractionModel,
    *,
    apriori: SiteMeasures | None = None,
    oscillation_sums: ArrayLike | None = None,
) -> DobrushinBound:
    """``C_ij <= exp(Σ_{A⊃{i,j}} δ(Φ_A)) dev_{α;i,j}(H_i)``."""
    deviation = deviation_matrix(model, "linear", apriori=apriori)
    entries = np.exp(_oscillation_sums(model, oscillation_sums)) * deviation.entries
    return DobrushinBound(entries=entries, flavor="linear", grid_sup=deviation.grid_sup)


def dobrushin_bound_quadratic(
    model: InteractionModel,
    *,
    apriori: SiteMeasures | None = None,
    oscillation_sums: ArrayLike | None = None,
) -> DobrushinBound:
    """``C_ij <= ½ exp(½ Σ_{A⊃{i,j}} δ(Φ_A)) std_{α;i,j}(H_i)``."""
    deviation = deviation_matrix(model, "quadratic", apriori=apriori)
    entries = 0.5 * np.exp(0.5 * _oscillation_sums(model, oscillation_sums)) * deviation.entries
    return DobrushinBound(entries=entries, flavor="quadratic", grid_sup=deviation.grid_sup)


def default_lipschitz(model: InteractionModel) -> NDArray[np.float64]:
    """``L_ij = 2|J_ij|`` for Ising and rotator couplings."""
    if model.potential.form == "tabulated":
        msg = "tabulated potentials need an explicit Lipschitz matrix"
        raise DomainError(msg)
    return 2.0 * np.abs(model.couplings)


def second_moment_radius(measure: Measure, coords: NDArray[np.float64] | None = None) -> float:
    """``inf_a (∫ |σ - a|² dα)^{1/2}`` over atoms, or over the poles of a sphere measure."""
    if isinstance(measure, SphereMeasure):
        if measure.density is None:
            return math.sqrt(2.0)
        mean, _ = _height_moments(measure)
        mean /= sphere_measure_mass(measure)
        return math.sqrt(max(0.0, 2.0 * (1.0 - abs(mean))))
    if coords is None:
        msg = "the single-spin space has no metric (atoms carry no coordinates)"
        raise DomainError(msg)
    squared = ((coords[:, None, :] - coords[None, :, :]) ** 2).sum(axis=2)
    return math.sqrt(max(0.0, float((measure.weights @ squared).min())))


def dobrushin_bound_lipschitz(
    model: InteractionModel,
    lipschitz: ArrayLike | None = None,
    *,
    apriori: SiteMeasures | None = None,
    oscillation_sums: ArrayLike | None = None,
) -> DobrushinBound:
    """``C_ij <= ½ exp(½ Σδ(Φ_A)) L_ij inf_a (∫ d²(σ_i, a) α(dσ_i))^{1/2}``."""
    L = default_lipschitz(model) if lipschitz is None else np.asarray(lipschitz, dtype=float)
    coords = None if isinstance(model.space, SphereSpace) else model.space.coords
    radii = np.array(
        [second_moment_radius(_site_measure(model, i, apriori), coords) for i in range(model.n)]
    )
    entries = 0.5 * np.exp(0.5 * _oscillation_sums(model, oscillation_sums)) * L * radii[:, None]
    np.fill_diagonal(entries, 0.0)
    return DobrushinBound(entries=entries, flavor="lipschitz")


def dobrushin_bound(
    model: InteractionModel,
    flavor: Flavor = "linear",
    *,
    apriori: SiteMeasures | None = None,
) -> DobrushinBound:
    if flavor == "linear":
        return dobrushin_bound_linear(model, apriori=apriori)
    if flavor == "quadratic":
        return dobrushin_bound_quadratic(model, apriori=apriori)
    return dobrushin_bound_lipschitz(model, apriori=apriori)


def dev_triple_norms(model: InteractionModel) -> DevTripleNorms:
    dev_norm = float(deviation_matrix(model, "linear").entries.sum(axis=1).max())
    std_norm = float(deviation_matrix(model, "quadratic").entries.sum(axis=1).max())
    norm = triple_norm(model)
    return DevTripleNorms(
        dev=dev_norm,
        std=std_norm,
        triple_norm=norm,
        linear_bound=math.exp(2.0 * norm) * dev_norm,
        quadratic_bound=0.5 * math.exp(norm) * std_norm,
    )


def enumeration_cost(model: InteractionModel) -> int:
    m = len(pair_table(model))
    return sum(
        model.graph.degree(i) * m ** (model.graph.degree(i) + 2) for i in range(model.n)
    )


@oracle_cache()
def exact_dobrushin_matrix(
    model: InteractionModel,
    apriori: SiteMeasures | None = None,
    budget: int = DEFAULT_SETTINGS.enumeration_budget,
) -> NDArray[np.float64]:
    """
    Exact ``C_ij = sup ‖γ_i(·|ζ) - γ_i(·|ζ̄)‖`` over boundaries differing only at ``j``.

    Enumerates the neighbors of each site, so the cost is ``Σ_i deg(i) m^{deg(i)+2}``.
    """
    if isinstance(model.space, SphereSpace):
        msg = "the exact Dobrushin matrix needs a discrete single-spin space"
        raise DomainError(msg)
    cost = enumeration_cost(model)
    if cost > budget:
        msg = "exact Dobrushin enumeration refused"
        raise BudgetExceededError(msg, required=cost, budget=budget)
    table = pair_table(model)
    m = table.shape[0]
    matrix = np.zeros((model.n, model.n))
    for i in range(model.n):
        neighbors = model.graph.neighbors(i)
        measure = _site_measure(model, i, apriori)
        if not isinstance(measure, AtomMeasure):
            msg = "the exact Dobrushin matrix needs atom measures"
            raise DomainError(msg)
        with np.errstate(divide="ignore"):
            log_weights = np.log(measure.weights)
        energy = np.zeros((m,) * (len(neighbors) + 1))
        for r, k in enumerate(neighbors):
            shape = [1] * energy.ndim
            shape[0], shape[r + 1] = m, m
            energy = energy + float(model.couplings[i, k]) * table.reshape(shape)
        log_kernel = log_weights.reshape((m,) + (1,) * len(neighbors)) - energy
        kernel = np.exp(log_kernel - logsumexp(log_kernel, axis=0, keepdims=True))
        for r, j in enumerate(neighbors):
            moved = np.moveaxis(kernel, r + 1, 1)
            gap = np.abs(moved[:, :, None] - moved[:, None, :]).sum(axis=0)
            matrix[i, j] = 0.5 * float(gap.max())
    logging.info("exact Dobrushin matrix enumerated %d kernel evaluations", cost)
    return matrix


def neumann_series(C: ArrayLike) -> NeumannSeries:
    """
    ``D = Σ_{n>=0} C^n`` by a direct solve; refuses unless ``sup_i Σ_j |C_ij| < 1``.

    Raises
    ------
        CertificateError: The row norm is at least one, so nothing is certified.

    """
    matrix = np.atleast_2d(np.asarray(C, dtype=float))
    if matrix.shape[0] != matrix.shape[1]:
        msg = f"Neumann series of a non-square matrix {matrix.shape}"
        raise DomainError(msg)
    n = matrix.shape[0]
    row_norm = float(np.abs(matrix).sum(axis=1).max()) if n else 0.0
    if not row_norm < 1.0:
        msg = f"sup_i Σ_j C_ij = {row_norm:.17g} >= 1: Gibbsianness is not certified"
        raise CertificateError(msg, row_norm=row_norm, margin=1.0 - row_norm)
    identity = np.eye(n)
    d = scipy.linalg.solve(identity - matrix, identity) if n else identity
    residual = float(np.abs((identity - matrix) @ d - identity).max()) if n else 0.0
    if residual >= NEUMANN_RESIDUAL_TOLERANCE:
        msg = f"Neumann series residual {residual:.3g} exceeds {NEUMANN_RESIDUAL_TOLERANCE}"
        raise CertificateError(msg, row_norm=row_norm, margin=1.0 - row_norm)
    return NeumannSeries(d=d, row_norm=row_norm, residual=residual)


def concentration_report_from_matrix(deviation: ArrayLike, s: float) -> ConcentrationReport:
    """Validity of the concentration exponent for an explicit ``B`` and ``s``."""
    B = np.atleast_2d(np.asarray(deviation, dtype=float))
    norm_1 = float(np.abs(B).sum(axis=0).max()) if B.size else 0.0
    norm_inf = float(np.abs(B).sum(axis=1).max()) if B.size else 0.0
    valid = s * norm_1 < 1.0 and s * norm_inf < 1.0
    kappa = (1.0 - s * norm_inf) * (1.0 - s * norm_1)
    return ConcentrationReport(s=s, norm_1=norm_1, norm_inf=norm_inf, kappa=kappa, valid=valid)


def concentration_report(model: InteractionModel, *, s: float | None = None) -> ConcentrationReport:
    """``s = exp(sup_{i≠j} Σ_{A⊃{i,j}} δ(Φ_A))`` with the linear deviation matrix ``B``."""
    if s is None:
        sums = oscillation_matrix(model)
        s = math.exp(float(sums.max()) if sums.size else 0.0)
    return concentration_report_from_matrix(deviation_matrix(model, "linear").entries, s)


ConcentrationSource = Union[InteractionModel, ConcentrationReport]


def concentration_bound(
    source: ConcentrationSource, delta_f: ArrayLike, r: float
) -> ConcentrationBound:
    """
    ``P(F - E F >= r) <= exp(-(1 - s‖B‖_∞)(1 - s‖B‖_1) r² / (2 Σ_i δ_i(F)²))``.

    Raises
    ------
        CertificateError: ``s‖B‖_1 >= 1`` or ``s‖B‖_∞ >= 1``; the report is attached.

    """
    report = source if isinstance(source, ConcentrationReport) else concentration_report(source)
    if r < 0:
        msg = f"r must be non-negative, got {r}"
        raise DomainError(msg)
    if not report.valid:
        msg = (
            f"concentration exponent invalid: s‖B‖_1 = {report.s * report.norm_1:.6g}, "
            f"s‖B‖_∞ = {report.s * report.norm_inf:.6g}"
        )
        raise CertificateError(msg, report=report)
    squared = float(np.sum(np.asarray(delta_f, dtype=float) ** 2))
    if r == 0:
        return ConcentrationBound(value=1.0, report=report)
    if squared == 0:
        return ConcentrationBound(value=0.0, report=report)
    value = math.exp(-report.kappa * r * r / (2.0 * squared))
    return ConcentrationBound(value=value, report=report)


def sup_norm_row_sums(model: InteractionModel) -> NDArray[np.float64]:
    """``Σ_{A∋i} ‖Φ_A‖_∞`` per site."""
    return sup_norm_matrix(model).sum(axis=1)
