from __future__ import annotations

import numpy as np
from gibbs_cert.errors import DomainError
from gibbs_cert.wrappers import frozen_lru_cache
from numpy.typing import NDArray
from scipy.special import gammaln
from scipy.special import roots_jacobi

DEFAULT_NODES = 128


def sphere_constant(q: int) -> float:
    """``c_q = Γ(q/2) / (√π Γ((q-1)/2))``, the normalizer of the height law on ``[-1, 1]``."""
    return float(np.exp(gammaln(q / 2) - gammaln((q - 1) / 2)) / np.sqrt(np.pi))


@frozen_lru_cache(maxsize=256)
def gauss_jacobi(
    n: int, alpha: float, beta: float
) -> tuple[NDArray[np.float64], NDArray[np.float64]]:
    """
    Gauss–Jacobi rule for the weight ``(1 - s)^alpha (1 + s)^beta`` on ``[-1, 1]``.

    Exact for polynomials of degree ``2n - 1``. The returned arrays are shared and read-only.
    """
    if n < 1:
        msg = f"a quadrature rule needs at least one node, got {n}"
        raise DomainError(msg)
    if alpha <= -1 or beta <= -1:
        msg = f"Jacobi exponents must exceed -1, got alpha={alpha}, beta={beta}"
        raise DomainError(msg)
    nodes, weights = roots_jacobi(n, alpha, beta)
    return np.asarray(nodes, dtype=float), np.asarray(weights, dtype=float)


@frozen_lru_cache(maxsize=64)
def sphere_rule(q: int, n: int = DEFAULT_NODES) -> tuple[NDArray[np.float64], NDArray[np.float64]]:
    """
    Rule for the height ``u = <σ, pole>`` of a uniform point on ``S^{q-1}``.

    The weights are normalized to one, i.e. they integrate against the law
    ``c_q (1 - u²)^{(q-3)/2} du`` of the height under the equidistribution.
    """
    if q < 2:  # noqa: PLR2004
        msg = f"sphere dimension q must be at least 2, got {q}"
        raise DomainError(msg)
    exponent = (q - 3) / 2
    nodes, weights = gauss_jacobi(n, exponent, exponent)
    return nodes.copy(), weights / weights.sum()


@frozen_lru_cache(maxsize=64)
def transverse_rule(
    q: int, n: int = DEFAULT_NODES
) -> tuple[NDArray[np.float64], NDArray[np.float64]]:
    """
    Rule for one coordinate ``w`` of a uniform point on ``S^{q-2}`` (normalized weights).

    The law is ``∝ (1 - w²)^{(q-4)/2}`` for ``q >= 3``; for ``q = 2`` it is ``±1`` with
    probability one half each.
    """
    if q < 2:  # noqa: PLR2004
        msg = f"sphere dimension q must be at least 2, got {q}"
        raise DomainError(msg)
    if q == 2:  # noqa: PLR2004
        return np.array([-1.0, 1.0]), np.array([0.5, 0.5])
    exponent = (q - 4) / 2
    nodes, weights = gauss_jacobi(n, exponent, exponent)
    return nodes.copy(), weights / weights.sum()


def half_range_rule(
    q: int, n: int = DEFAULT_NODES
) -> tuple[NDArray[np.float64], NDArray[np.float64]]:
    """
    Nodes on ``[0, 1]`` with weights for ``∫_0^1 f(v) (1 - v²)^{(q-3)/2} dv``.

    Built from the Jacobi weight ``(1 - s)^{(q-3)/2}`` on ``[-1, 1]`` with ``v = (1 + s)/2``; the
    remaining factor ``(1 + v)^{(q-3)/2}`` is smooth on ``[0, 1]`` and folded into the weights.
    """
    exponent = (q - 3) / 2
    nodes, weights = gauss_jacobi(n, exponent, 0.0)
    v = (1.0 + nodes) / 2.0
    scaled = weights * 2.0 ** (-exponent - 1.0) * (1.0 + v) ** exponent
    return v, scaled
