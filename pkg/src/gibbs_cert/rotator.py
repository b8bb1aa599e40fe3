"""
Analytics of rotators on ``S^{q-1}`` under the heat-kernel (Brownian) time evolution.

The height of a sphere diffusion has the Legendre-series transition density::

    k_t(s, u) = c_q Σ_n exp(-n(n+q-2)t) N(q, n) P_n(q, s) P_n(q, u),
    c_q = Γ(q/2) / (√π Γ((q-1)/2)),

with respect to ``(1 - u²)^{(q-3)/2} du``.  Everything in this module is built from that
series, from its first moments, and from the coupling bound ``F_{q,t}`` on the posterior
metric.
"""

from __future__ import annotations

import logging
import math
from typing import Iterator
from typing import NamedTuple

import numpy as np
from gibbs_cert.dobrushin import neumann_series
from gibbs_cert.errors import CertificateError
from gibbs_cert.errors import DomainError
from gibbs_cert.errors import SeriesError
from gibbs_cert.quadrature import DEFAULT_NODES
from gibbs_cert.quadrature import half_range_rule
from gibbs_cert.quadrature import sphere_constant
from gibbs_cert.quadrature import transverse_rule
from gibbs_cert.settings import DEFAULT_SETTINGS
from gibbs_cert.wrappers import frozen_lru_cache
from numpy.typing import ArrayLike
from numpy.typing import NDArray
from scipy.stats import norm

MAX_DEGREE = 100_000
_UNIT_SLACK = 1e-12


class SphereParams(NamedTuple):
    q: int
    t: float


def sphere_params(q: int, t: float) -> SphereParams:
    if q < 2:  # noqa: PLR2004
        msg = f"sphere dimension q must be at least 2, got {q}"
        raise DomainError(msg)
    if not t >= 0:
        msg = f"time must be non-negative, got {t}"
        raise DomainError(msg)
    return SphereParams(q=int(q), t=float(t))


def _check_unit_interval(s: NDArray[np.float64]) -> NDArray[np.float64]:
    if np.any(np.abs(s) > 1.0 + _UNIT_SLACK):
        msg = "Legendre arguments must lie in [-1, 1]"
        raise DomainError(msg)
    return np.clip(s, -1.0, 1.0)


def _legendre_iter(q: int, s: NDArray[np.float64]) -> Iterator[NDArray[np.float64]]:
    """Yield ``P_0, P_1, ...`` by ``(n+q-2) P_{n+1} = (2n+q-2) s P_n - n P_{n-1}``."""
    previous = np.ones_like(s)
    yield previous
    current = s.copy()
    n = 1
    while True:
        yield current
        previous, current = current, ((2 * n + q - 2) * s * current - n * previous) / (n + q - 2)
        n += 1


def legendre(q: int, n: int, s: ArrayLike) -> NDArray[np.float64]:
    """
    Legendre polynomial ``P_n(q, s)`` in dimension ``q``, normalized by ``P_n(q, 1) = 1``.

    ``q = 2`` gives Chebyshev polynomials, ``q = 3`` the classical Legendre polynomials.
    """
    if q < 2 or n < 0:  # noqa: PLR2004
        msg = f"need q >= 2 and n >= 0, got q={q}, n={n}"
        raise DomainError(msg)
    values = _check_unit_interval(np.asarray(s, dtype=float))
    for degree, polynomial in enumerate(_legendre_iter(q, values)):
        if degree == n:
            return polynomial
    raise AssertionError  # no cov


def legendre_table(q: int, n_max: int, s: ArrayLike) -> NDArray[np.float64]:
    """Stack ``P_0 .. P_{n_max}`` along a new leading axis."""
    values = _check_unit_interval(np.asarray(s, dtype=float))
    table = np.empty((n_max + 1, *values.shape))
    for degree, polynomial in zip(range(n_max + 1), _legendre_iter(q, values)):
        table[degree] = polynomial
    return table


def legendre_derivatives(
    q: int, n: int, s: ArrayLike
) -> tuple[NDArray[np.float64], NDArray[np.float64], NDArray[np.float64]]:
    """``(P_n, P_n', P_n'')`` from the differentiated three-term recurrence."""
    x = _check_unit_interval(np.asarray(s, dtype=float))
    p = [np.ones_like(x), x.copy()]
    dp = [np.zeros_like(x), np.ones_like(x)]
    ddp = [np.zeros_like(x), np.zeros_like(x)]
    for k in range(1, n):
        a, b = 2 * k + q - 2, k + q - 2
        p.append((a * x * p[k] - k * p[k - 1]) / b)
        dp.append((a * (p[k] + x * dp[k]) - k * dp[k - 1]) / b)
        ddp.append((a * (2 * dp[k] + x * ddp[k]) - k * ddp[k - 1]) / b)
    return p[n], dp[n], ddp[n]


def harmonic_dim(q: int, n: int) -> int:
    """Dimension ``N(q, n)`` of the spherical harmonics of degree ``n`` on ``S^{q-1}``."""
    if q < 2 or n < 0:  # noqa: PLR2004
        msg = f"need q >= 2 and n >= 0, got q={q}, n={n}"
        raise DomainError(msg)
    if n == 0:
        return 1
    return (2 * n + q - 2) * math.factorial(n + q - 3) // (
        math.factorial(n) * math.factorial(q - 2)
    )


class HeatKernelSeries(NamedTuple):
    """
    Truncated coefficients ``c_q exp(-n(n+q-2)t) N(q, n)`` for ``n = 0..degree``.

    ``tail_bound`` bounds the dropped terms using ``|P_n| <= 1``.
    """

    q: int
    t: float
    degree: int
    coefficients: NDArray[np.float64]
    tail_bound: float
    below_t_min: bool


@frozen_lru_cache(maxsize=128)
def heat_kernel_series(
    q: int,
    t: float,
    tol: float = DEFAULT_SETTINGS.series_tol,
    min_degree: int = DEFAULT_SETTINGS.min_degree,
    t_min: float = DEFAULT_SETTINGS.t_min,
) -> HeatKernelSeries:
    sphere_params(q, t)
    if t == 0:
        msg = "the heat kernel series diverges at t = 0"
        raise SeriesError(msg)
    below_t_min = t < t_min
    if below_t_min:
        logging.warning("heat kernel evaluated at t=%g below t_min=%g", t, t_min)
    log_c = math.log(sphere_constant(q))

    def term(n: int) -> float:
        return math.exp(log_c - n * (n + q - 2) * t + math.log(harmonic_dim(q, n)))

    coefficients: list[float] = []
    n = 0
    while True:
        value = term(n)
        if n >= min_degree and value < tol:
            break
        coefficients.append(value)
        n += 1
        if n > MAX_DEGREE:
            msg = f"heat kernel series at t={t} needs more than {MAX_DEGREE} terms"
            raise SeriesError(msg)
    tail = 0.0
    while value > 0.0 and value > tail * 1e-17:
        tail += value
        n += 1
        value = term(n)
    return HeatKernelSeries(
        q=q,
        t=t,
        degree=len(coefficients) - 1,
        coefficients=np.asarray(coefficients),
        tail_bound=tail,
        below_t_min=below_t_min,
    )


def legendre_series(q: int, coefficients: ArrayLike, s: ArrayLike) -> NDArray[np.float64]:
    """``Σ_n a_n P_n(q, s)`` without materializing the polynomial table."""
    weights = np.asarray(coefficients, dtype=float)
    values = _check_unit_interval(np.asarray(s, dtype=float))
    total = np.zeros_like(values)
    for a, polynomial in zip(weights, _legendre_iter(q, values)):
        if a != 0.0:
            total += a * polynomial
    return total


class HeatKernelEval(NamedTuple):
    value: NDArray[np.float64]
    tail_bound: float
    degree: int
    below_t_min: bool


def heat_kernel(q: int, t: float, s: ArrayLike, u: ArrayLike) -> HeatKernelEval:
    """Height transition density ``k_t(s, u)`` w.r.t. ``(1 - u²)^{(q-3)/2} du``."""
    series = heat_kernel_series(q, t)
    s_values = _check_unit_interval(np.asarray(s, dtype=float))
    u_values = _check_unit_interval(np.asarray(u, dtype=float))
    s_values, u_values = np.broadcast_arrays(s_values, u_values)
    total = np.zeros(s_values.shape)
    for a, ps, pu in zip(
        series.coefficients, _legendre_iter(q, s_values.copy()), _legendre_iter(q, u_values.copy())
    ):
        total += a * ps * pu
    return HeatKernelEval(
        value=total,
        tail_bound=series.tail_bound,
        degree=series.degree,
        below_t_min=series.below_t_min,
    )


def zonal_kernel(q: int, t: float, x: ArrayLike) -> NDArray[np.float64]:
    """Density of the posterior ``α_η`` w.r.t. the equidistribution at ``x = <σ, η>``."""
    series = heat_kernel_series(q, t)
    return legendre_series(q, series.coefficients / sphere_constant(q), x)


def mean_height(q: int, t: float) -> float:
    """``E Z_t = exp(-(q-1)t)`` for the height started at the pole."""
    sphere_params(q, t)
    return math.exp(-(q - 1) * t)


def second_moment_gap(q: int, t: float) -> float:
    """``∫ |σ - η|² α_η(dσ) = 2 (1 - exp(-(q-1)t))``."""
    return 2.0 * -math.expm1(-(q - 1) * sphere_params(q, t).t)


def height_second_moment(q: int, t: float) -> float:
    """``E Z_t² = ((q-1) exp(-2qt) + 1) / q`` from the degree-two Legendre mode."""
    sphere_params(q, t)
    return ((q - 1) * math.exp(-2 * q * t) + 1) / q


def _check_distance(x: NDArray[np.float64]) -> NDArray[np.float64]:
    if np.any(x < 0) or np.any(x > 2.0 + _UNIT_SLACK):
        msg = "chordal distances on the unit sphere lie in [0, 2]"
        raise DomainError(msg)
    return np.clip(x, 0.0, 2.0)


def _check_time(t: float) -> None:
    if not t > 0:
        msg = f"time must be positive, got {t}"
        raise DomainError(msg)


def half_normal_mass(u: ArrayLike) -> NDArray[np.float64]:
    """``P(0 <= G <= u)`` for a standard normal ``G``."""
    return np.asarray(norm.cdf(u) - 0.5, dtype=float)


class FUpperBranches(NamedTuple):
    reflection: NDArray[np.float64]
    linear: NDArray[np.float64]
    value: NDArray[np.float64]


def f_upper_branches(q: int, t: float, x: ArrayLike) -> FUpperBranches:
    """Both elementary bounds on ``F_{q,t}`` and their minimum capped at 2."""
    sphere_params(q, t)
    _check_time(t)
    distance = _check_distance(np.asarray(x, dtype=float))
    reflection = 4.0 * half_normal_mass(np.arcsin(distance / 2.0) / math.sqrt(2.0 * t))
    linear = math.sqrt(math.pi) * distance / (2.0 * math.sqrt(t))
    return FUpperBranches(
        reflection=reflection,
        linear=linear,
        value=np.minimum(np.minimum(reflection, linear), 2.0),
    )


def f_upper(q: int, t: float, x: ArrayLike) -> NDArray[np.float64]:
    """``min{4 P(0 <= G <= arcsin(x/2)/√(2t)), √π x / (2√t), 2}``."""
    return f_upper_branches(q, t, x).value


def odd_legendre_integral(q: int, m: int) -> float:
    """``∫_{-1}^0 P_{2m+1}(q, s) (1 - s²)^{(q-3)/2} ds = (-1)^m Π_{i=0}^m (2i-1)/(q+2i-1)``."""
    if q < 2 or m < 0:  # noqa: PLR2004
        msg = f"need q >= 2 and m >= 0, got q={q}, m={m}"
        raise DomainError(msg)
    product = 1.0
    for i in range(m + 1):
        product *= (2 * i - 1) / (q + 2 * i - 1)
    return (-1) ** m * product


class FSeriesCoefficients(NamedTuple):
    """
    Odd-degree coefficients of ``F_{q,t}(x) = Σ_m a_m P_{2m+1}(q, x/2)``.

    ``as_printed`` carries the coefficients with the opposite overall sign, as the closed
    form is sometimes quoted; ``sign_slip`` records that the two disagree.
    """

    degrees: NDArray[np.int64]
    coefficients: NDArray[np.float64]
    as_printed: NDArray[np.float64]
    sign_slip: bool


def f_series_coefficients(q: int, t: float) -> FSeriesCoefficients:
    series = heat_kernel_series(q, t)
    degrees = np.arange(1, series.degree + 1, 2)
    integrals = np.array([odd_legendre_integral(q, (n - 1) // 2) for n in degrees])
    coefficients = -4.0 * series.coefficients[degrees] * integrals
    as_printed = -coefficients
    nonzero = coefficients != 0
    return FSeriesCoefficients(
        degrees=degrees,
        coefficients=coefficients,
        as_printed=as_printed,
        sign_slip=bool(np.any(np.sign(coefficients[nonzero]) != np.sign(as_printed[nonzero]))),
    )


def f_series(q: int, t: float, x: ArrayLike) -> NDArray[np.float64]:
    """
    ``F_{q,t}(x) = 2 (1 - 2 P^{x/2}(Z_t <= 0))`` by its odd Legendre expansion, clamped to [0, 2].

    ``x`` is the chordal distance of two second-layer spins; the diffusion height starts at
    ``x/2``.
    """
    _check_time(t)
    distance = _check_distance(np.asarray(x, dtype=float))
    expansion = f_series_coefficients(q, t)
    full = np.zeros(expansion.degrees[-1] + 1 if expansion.degrees.size else 1)
    full[expansion.degrees] = expansion.coefficients
    return np.clip(legendre_series(q, full, distance / 2.0), 0.0, 2.0)


class PosteriorDistance(NamedTuple):
    value: float
    error: float


def heat_kernel_posterior_distance(
    q: int, t: float, x: float, nodes: int = DEFAULT_NODES
) -> PosteriorDistance:
    """
    ``d'(η, η̄) = ∫ |k(σ, η) - k(σ, η̄)| α_0(dσ)`` for spins at chordal distance ``x``.

    With ``e`` the normal of the mirror exchanging ``η`` and ``η̄`` and ``v = <σ, e>``,
    ``<σ, η> = v x/2 + c √(1-v²) w`` and ``<σ, η̄> = -v x/2 + c √(1-v²) w`` where
    ``c = √(1 - x²/4)`` and ``w`` is a transverse coordinate.  The mirror symmetry halves
    the domain to ``v > 0`` where the integrand is smooth.  ``error`` is the change under
    doubling the number of nodes.
    """
    _check_time(t)
    distance = float(_check_distance(np.asarray(x, dtype=float)))
    if distance == 0.0:
        return PosteriorDistance(value=0.0, error=0.0)

    def integrate(n: int) -> float:
        v, v_weights = half_range_rule(q, n)
        w, w_weights = transverse_rule(q, n)
        transverse = math.sqrt(max(0.0, 1.0 - distance**2 / 4.0)) * np.sqrt(1.0 - v**2)
        along = v * distance / 2.0
        near = np.clip(along[:, None] + transverse[:, None] * w[None, :], -1.0, 1.0)
        far = np.clip(-along[:, None] + transverse[:, None] * w[None, :], -1.0, 1.0)
        gap = np.abs(zonal_kernel(q, t, near) - zonal_kernel(q, t, far))
        return float(2.0 * sphere_constant(q) * v_weights @ (gap @ w_weights))

    coarse = integrate(nodes)
    fine = integrate(2 * nodes)
    return PosteriorDistance(value=min(fine, 2.0), error=abs(fine - coarse))


def first_passage_bound(phi0: ArrayLike, t: float) -> NDArray[np.float64]:
    """``2 P(0 <= G <= φ0/√(2t))``, the reflection bound on ``P(T_0 >= t)``."""
    _check_time(t)
    return 2.0 * half_normal_mass(np.asarray(phi0, dtype=float) / math.sqrt(2.0 * t))


def strip_survival(phi0: float, t: float, width: float = math.pi) -> float:
    """
    Probability that ``φ0 + √2 B_s`` stays in ``(0, width)`` for all ``s <= t``.

    On the circle the angle from the equator is exactly this process, so with
    ``width = π`` this is the first-passage survival of the height for ``q = 2``.
    """
    if not 0 < phi0 < width:
        return 0.0
    if t == 0:
        return 1.0
    _check_time(t)
    rate = (math.pi / width) ** 2 * t
    n_max = max(64, int(math.sqrt(45.0 / rate)) + 2)
    n = np.arange(1, n_max + 1, 2)
    terms = 4.0 / (n * math.pi) * np.sin(n * math.pi * phi0 / width) * np.exp(-(n**2) * rate)
    return float(np.clip(terms.sum(), 0.0, 1.0))


class ThresholdReport(NamedTuple):
    """
    Short-time Gibbsianness threshold ``√2 a (1 - exp(-(q-1)t))^{1/2} < 1``.

    Attributes
    ----------
        a (float): ``sup_i Σ_j exp(|J_ij|) |J_ij|``.
        q (int): Ambient dimension.
        t_star (float): Largest certified time, ``inf`` when ``2a² <= 1``.
        t (float | None): Queried time.
        margin (float | None): ``1 - √2 a (1 - exp(-(q-1)t))^{1/2}`` at the queried time.

    """

    a: float
    q: int
    t_star: float
    t: float | None = None
    margin: float | None = None

    @property
    def certified(self) -> bool | None:
        return None if self.margin is None else self.margin > 0


def coupling_strength_matrix(couplings: ArrayLike) -> NDArray[np.float64]:
    """``A_ij = exp(|J_ij|) |J_ij|``."""
    magnitude = np.abs(np.asarray(couplings, dtype=float))
    return np.exp(magnitude) * magnitude


def time_factor(q: int, t: float) -> float:
    """``λ(t) = (1 - exp(-(q-1)t))^{1/2}``."""
    return math.sqrt(-math.expm1(-(q - 1) * t))


def threshold_margin(a: float, q: int, t: float) -> float:
    return 1.0 - math.sqrt(2.0) * a * time_factor(q, sphere_params(q, t).t)


def gibbs_time_threshold(couplings: ArrayLike, q: int, t: float | None = None) -> ThresholdReport:
    strength = coupling_strength_matrix(couplings)
    a = float(strength.sum(axis=1).max()) if strength.size else 0.0
    if 2.0 * a * a <= 1.0:
        t_star = math.inf
    else:
        t_star = -math.log1p(-1.0 / (2.0 * a * a)) / (q - 1)
    margin = None if t is None else threshold_margin(a, q, t)
    return ThresholdReport(a=a, q=q, t_star=t_star, t=t, margin=margin)


class BarQMatrix(NamedTuple):
    """
    Euclidean continuity matrix ``Q̄(t) = ½ min{√(π/t) Q(t), exp(4 Σ_l |J_jl|) - 1}``.

    ``q_matrix`` is ``Q(t) = 8 exp(4 sup_i Σ_j |J_ij|) Σ_k |J_ik| D̄_kj(t)`` and
    ``ceiling_active`` marks the entries where the time-independent branch wins.
    """

    t: float
    q: int
    entries: NDArray[np.float64]
    q_matrix: NDArray[np.float64]
    d_bar: NDArray[np.float64]
    sqrt_branch: NDArray[np.float64]
    ceiling_branch: NDArray[np.float64]
    ceiling_active: NDArray[np.bool_]
    margin: float


def bar_q_matrix(couplings: ArrayLike, q: int, t: float) -> BarQMatrix:
    """
    Assemble ``Q̄(t)`` in the certified region.

    ``D̄(t)`` is the Neumann series of the conditional Dobrushin bound ``C̄ = √2 λ(t) A``,
    not ``(I - λ(t) A)^{-1}``.  The series converges exactly on the certified region
    ``√2 λ(t) a < 1`` and dominates the inverse without the ``√2`` entrywise.
    """
    _check_time(t)
    J = np.abs(np.asarray(couplings, dtype=float))
    strength = coupling_strength_matrix(J)
    report = gibbs_time_threshold(J, q, t)
    assert report.margin is not None  # noqa: S101
    if report.margin <= 0:
        msg = f"t={t} is not certified (t* = {report.t_star:.6g}, margin {report.margin:.6g})"
        raise CertificateError(msg, margin=report.margin, report=report)
    d_bar = neumann_series(math.sqrt(2.0) * time_factor(q, t) * strength).d
    row_sup = float(J.sum(axis=1).max()) if J.size else 0.0
    q_matrix = 8.0 * math.exp(4.0 * row_sup) * (J @ d_bar)
    np.fill_diagonal(q_matrix, 0.0)
    sqrt_branch = math.sqrt(math.pi / t) * q_matrix
    ceiling = np.broadcast_to(np.expm1(4.0 * J.sum(axis=1))[None, :], J.shape).copy()
    entries = 0.5 * np.minimum(sqrt_branch, ceiling)
    np.fill_diagonal(entries, 0.0)
    return BarQMatrix(
        t=t,
        q=q,
        entries=entries,
        q_matrix=q_matrix,
        d_bar=d_bar,
        sqrt_branch=sqrt_branch,
        ceiling_branch=ceiling,
        ceiling_active=ceiling < sqrt_branch,
        margin=report.margin,
    )


def initial_kernel_continuity(couplings: ArrayLike) -> NDArray[np.float64]:
    """
    Coefficients of the ``t = 0`` estimate ``Σ_j exp(2 Σ_l |J_il|) |J_ij| d(η_j, η̄_j)``.

    Row ``i`` multiplies the Euclidean distances of the conditioning spins.
    """
    J = np.abs(np.asarray(couplings, dtype=float))
    return np.exp(2.0 * J.sum(axis=1))[:, None] * J


def rotator_continuity_bound(
    couplings: ArrayLike,
    q: int,
    t: float,
    eta: ArrayLike,
    eta_bar: ArrayLike,
) -> NDArray[np.float64]:
    """Per-site bound ``Σ_j Q̄_ij(t) |η_j - η̄_j|`` for explicit conditionings ``(n, q)``."""
    first = np.asarray(eta, dtype=float)
    second = np.asarray(eta_bar, dtype=float)
    J = np.asarray(couplings, dtype=float)
    if first.shape != (J.shape[0], q) or second.shape != first.shape:
        msg = f"conditionings must have shape {(J.shape[0], q)}"
        raise DomainError(msg)
    distances = np.linalg.norm(first - second, axis=1)
    return bar_q_matrix(J, q, t).entries @ distances
