from __future__ import annotations

import logging
from typing import NamedTuple

import numpy as np
from gibbs_cert.errors import DomainError
from gibbs_cert.model import AtomMeasure
from gibbs_cert.model import InteractionModel
from gibbs_cert.model import pair_table
from gibbs_cert.model import SphereMeasure
from gibbs_cert.model import SphereSpace
from gibbs_cert.simulate.rng import RngSpec
from gibbs_cert.simulate.sde import EmpiricalEstimate
from numpy.typing import ArrayLike
from numpy.typing import NDArray

ACCEPTANCE_WARNING = 1e-3
PROPOSAL_BATCH = 64
MAX_PROPOSALS = 10**7


class HeatBathSamples(NamedTuple):
    """
    Configurations recorded after every sweep past burn-in.

    ``samples`` has shape ``(sweeps, n)`` (atom indices) or ``(sweeps, n, q)`` (unit vectors).
    ``acceptance`` is the per-site rejection-sampling acceptance rate (one for discrete spins).
    """

    samples: NDArray[np.float64]
    acceptance: NDArray[np.float64]
    rng: RngSpec

    def estimate(self, values: ArrayLike, batches: int = 50) -> EmpiricalEstimate:
        """Batch-means estimate of the mean of a per-sweep observable."""
        series = np.asarray(values, dtype=float).ravel()
        size = series.size // batches
        if size < 1:
            msg = f"{series.size} samples cannot fill {batches} batches"
            raise DomainError(msg)
        means = series[: size * batches].reshape(batches, size).mean(axis=1)
        estimate = EmpiricalEstimate.from_samples(means, self.rng)
        return estimate._replace(n_samples=int(size * batches))


def _uniform_sphere(generator: np.random.Generator, size: int, q: int) -> NDArray[np.float64]:
    points = generator.standard_normal((size, q))
    return points / np.linalg.norm(points, axis=1, keepdims=True)


def _tilted_sphere_draw(
    generator: np.random.Generator, field: NDArray[np.float64]
) -> tuple[NDArray[np.float64], int]:
    """Draw from ``∝ exp(<σ, h>)`` by rejection from the uniform law with envelope ``e^{|h|}``."""
    strength = float(np.linalg.norm(field))
    proposals = 0
    while proposals < MAX_PROPOSALS:
        batch = _uniform_sphere(generator, PROPOSAL_BATCH, field.size)
        accept = np.log(generator.random(PROPOSAL_BATCH)) < batch @ field - strength
        hits = np.flatnonzero(accept)
        if hits.size:
            proposals += int(hits[0]) + 1
            return batch[hits[0]], proposals
        proposals += PROPOSAL_BATCH
    msg = f"no proposal accepted for a local field of strength {strength:.6g}"
    raise DomainError(msg)


def heat_bath_sampler(
    model: InteractionModel,
    sweeps: int,
    burn_in: int,
    rng: RngSpec,
) -> HeatBathSamples:
    """
    Single-site heat-bath dynamics with sites updated in vertex order.

    On the sphere the conditional law of ``σ_i`` is ``∝ exp(<σ_i, h_i>)`` with local field
    ``h_i = Σ_j J_ij σ_j``; on a discrete space it is the normalized Boltzmann row of the
    pair tables.
    """
    if sweeps < 2 or burn_in < 0:  # noqa: PLR2004
        msg = f"need sweeps >= 2 and burn_in >= 0, got {sweeps} and {burn_in}"
        raise DomainError(msg)
    generator = rng.generator()
    J = model.couplings
    n = model.n
    if isinstance(model.space, SphereSpace):
        if not isinstance(model.apriori, SphereMeasure) or model.apriori.density is not None:
            msg = "the sphere heat bath samples the equidistributed a priori measure"
            raise DomainError(msg)
        spins = _uniform_sphere(generator, n, model.space.q)
        recorded = np.empty((sweeps, n, model.space.q))
        proposals = np.zeros(n)
        updates = 0
        for sweep in range(burn_in + sweeps):
            for i in range(n):
                spins[i], used = _tilted_sphere_draw(generator, J[i] @ spins)
                proposals[i] += used
            updates += 1
            if sweep >= burn_in:
                recorded[sweep - burn_in] = spins
        acceptance = updates / proposals
        if float(acceptance.min()) < ACCEPTANCE_WARNING:
            logging.warning(
                "heat-bath acceptance rate %.3g is below %g (strong local fields)",
                float(acceptance.min()),
                ACCEPTANCE_WARNING,
            )
        return HeatBathSamples(samples=recorded, acceptance=acceptance, rng=rng)
    if not isinstance(model.apriori, AtomMeasure):
        msg = "discrete heat bath needs an atom a priori measure"
        raise DomainError(msg)
    table = pair_table(model)
    m = table.shape[0]
    with np.errstate(divide="ignore"):
        log_weights = np.log(model.apriori.weights)
    state = generator.choice(m, size=n, p=model.apriori.weights)
    recorded_atoms = np.empty((sweeps, n))
    for sweep in range(burn_in + sweeps):
        for i in range(n):
            log_p = log_weights - table[:, state] @ J[i]
            p = np.exp(log_p - log_p.max())
            state[i] = generator.choice(m, p=p / p.sum())
        if sweep >= burn_in:
            recorded_atoms[sweep - burn_in] = state
    return HeatBathSamples(samples=recorded_atoms, acceptance=np.ones(n), rng=rng)


def mean_pair_alignment(samples: HeatBathSamples, i: int, j: int) -> NDArray[np.float64]:
    """Per-sweep ``<σ_i, σ_j>`` of sphere samples."""
    if samples.samples.ndim != 3:  # noqa: PLR2004
        msg = "pair alignment needs sphere samples"
        raise DomainError(msg)
    return np.einsum("sk,sk->s", samples.samples[:, i], samples.samples[:, j])


def empirical_marginal(samples: HeatBathSamples, i: int, m: int) -> NDArray[np.float64]:
    """Frequency of each atom at site ``i``."""
    counts = np.bincount(samples.samples[:, i].astype(int), minlength=m)
    return counts / counts.sum()
