"""
Euler–Maruyama simulation of the height ``Z_t = <σ_t, pole>`` of Brownian motion on ``S^{q-1}``.

The height solves ``dZ = -(q-1) Z dt + √(2(1 - Z²)) dB``. Paths are clamped to ``[-1, 1]``
after every step. First passages are detected at step resolution only, which biases the
survival probability upward.
"""

from __future__ import annotations

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from typing import Callable
from typing import NamedTuple

import numpy as np
from gibbs_cert.errors import ConfigError
from gibbs_cert.errors import DomainError
from gibbs_cert.rotator import strip_survival
from gibbs_cert.settings import DEFAULT_SETTINGS
from gibbs_cert.simulate.rng import chunk_sizes
from gibbs_cert.simulate.rng import RngSpec
from numpy.typing import ArrayLike
from numpy.typing import NDArray
from typing_extensions import Literal

BARRIER_SHIFT = 0.5826


class EmpiricalEstimate(NamedTuple):
    """Sample mean with standard error ``std / √n`` and the stream it came from."""

    mean: float
    stderr: float
    n_samples: int
    seed: int | None = None
    stream: int | None = None

    @classmethod
    def from_samples(cls, samples: ArrayLike, rng: RngSpec | None = None) -> EmpiricalEstimate:
        values = np.asarray(samples, dtype=float).ravel()
        if values.size < 2:  # noqa: PLR2004
            msg = f"an estimate needs at least two samples, got {values.size}"
            raise DomainError(msg)
        return cls(
            mean=float(values.mean()),
            stderr=float(values.std(ddof=1) / math.sqrt(values.size)),
            n_samples=int(values.size),
            seed=None if rng is None else rng.seed,
            stream=None if rng is None else rng.stream,
        )

    def band(self, k: float = 3.0) -> tuple[float, float]:
        return self.mean - k * self.stderr, self.mean + k * self.stderr


class SdeConfig(NamedTuple):
    dt: float = DEFAULT_SETTINGS.dt
    scheme: Literal["euler-maruyama"] = "euler-maruyama"

    def steps(self, t: float) -> tuple[int, float]:
        """Number of steps and the effective step for the horizon ``t`` (``0 < dt < t``)."""
        if not self.dt > 0:
            msg = f"dt must be positive, got {self.dt}"
            raise ConfigError(msg)
        if self.dt >= t:
            msg = f"dt={self.dt} must be smaller than the horizon t={t}"
            raise ConfigError(msg)
        n_steps = math.ceil(t / self.dt - 1e-9)
        return n_steps, t / n_steps


def _check_dimension(q: int) -> None:
    if q < 2:  # noqa: PLR2004
        msg = f"sphere dimension q must be at least 2, got {q}"
        raise DomainError(msg)


def _step(z: NDArray[np.float64], q: int, h: float, noise: NDArray[np.float64]) -> None:
    z += -(q - 1) * z * h + np.sqrt(2.0 * np.clip(1.0 - z * z, 0.0, None) * h) * noise
    np.clip(z, -1.0, 1.0, out=z)


def _run_chunks(
    kernel: Callable[[np.random.Generator, int], NDArray[np.float64]],
    rng: RngSpec,
    n_paths: int,
    workers: int | None,
) -> NDArray[np.float64]:
    sizes = chunk_sizes(n_paths)
    with ThreadPoolExecutor(max_workers=workers) as pool:
        parts = pool.map(lambda job: kernel(rng.generator(job[0]), job[1]), enumerate(sizes))
        return np.concatenate(list(parts))


def simulate_height(
    q: int,
    z0: float,
    t: float,
    rng: RngSpec,
    *,
    config: SdeConfig = SdeConfig(),  # noqa: B008
    n_paths: int = DEFAULT_SETTINGS.n_paths,
    workers: int | None = None,
) -> EmpiricalEstimate:
    """Estimate ``E Z_t`` started from ``z0``; ``t = 0`` returns ``z0`` exactly."""
    _check_dimension(q)
    if not -1.0 <= z0 <= 1.0:
        msg = f"the starting height must lie in [-1, 1], got {z0}"
        raise DomainError(msg)
    if t == 0:
        return EmpiricalEstimate(float(z0), 0.0, n_paths, rng.seed, rng.stream)
    n_steps, h = config.steps(t)

    def kernel(generator: np.random.Generator, size: int) -> NDArray[np.float64]:
        z = np.full(size, float(z0))
        for _ in range(n_steps):
            _step(z, q, h, generator.standard_normal(size))
        return z

    logging.info("simulating %d height paths (q=%d, t=%g, dt=%g)", n_paths, q, t, h)
    return EmpiricalEstimate.from_samples(_run_chunks(kernel, rng, n_paths, workers), rng)


def first_passage_prob(
    q: int,
    phi0: float,
    t: float,
    rng: RngSpec,
    *,
    config: SdeConfig = SdeConfig(),  # noqa: B008
    n_paths: int = DEFAULT_SETTINGS.n_paths,
    workers: int | None = None,
) -> EmpiricalEstimate:
    """Estimate ``P(T_0 >= t)`` for the height started at ``sin φ0``."""
    _check_dimension(q)
    if not 0 < phi0 < math.pi / 2:
        msg = f"φ0 must lie in (0, π/2), got {phi0}"
        raise DomainError(msg)
    n_steps, h = config.steps(t)

    def kernel(generator: np.random.Generator, size: int) -> NDArray[np.float64]:
        z = np.full(size, math.sin(phi0))
        alive = np.ones(size, dtype=bool)
        for _ in range(n_steps):
            _step(z, q, h, generator.standard_normal(size))
            alive &= z > 0
        return alive.astype(float)

    logging.info("simulating %d first-passage paths (q=%d, φ0=%g, t=%g)", n_paths, q, phi0, t)
    return EmpiricalEstimate.from_samples(_run_chunks(kernel, rng, n_paths, workers), rng)


def monitoring_allowance(phi0: float, t: float, dt: float) -> float:
    """
    Excess survival caused by monitoring the barrier only at the steps.

    Discrete monitoring behaves like continuous monitoring with both barriers pushed out by
    ``0.5826 √(2 dt)``; the allowance is twice the resulting change of the exact survival
    of ``φ0 + √2 B`` in the strip ``(0, π)``.
    """
    shift = BARRIER_SHIFT * math.sqrt(2.0 * dt)
    widened = strip_survival(phi0 + shift, t, math.pi + 2.0 * shift)
    return 2.0 * max(0.0, widened - strip_survival(phi0, t))


class RichardsonBand(NamedTuple):
    """Discretization allowance ``C dt`` calibrated from estimates at ``dt`` and ``dt/2``."""

    constant: float
    band: float
    difference: float
    stderr: float


def richardson_band(
    coarse: EmpiricalEstimate, fine: EmpiricalEstimate, dt: float
) -> RichardsonBand:
    """
    First-order weak error: ``bias(dt) ≈ 2 (E_dt - E_{dt/2})``.

    ``stderr`` is the standard error of the difference, so a caller can tell a resolved bias
    from Monte Carlo noise.
    """
    if not dt > 0:
        msg = f"dt must be positive, got {dt}"
        raise DomainError(msg)
    difference = coarse.mean - fine.mean
    band = 2.0 * abs(difference)
    return RichardsonBand(
        constant=band / dt,
        band=band,
        difference=difference,
        stderr=math.hypot(coarse.stderr, fine.stderr),
    )
