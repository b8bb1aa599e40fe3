from __future__ import annotations

from gibbs_cert.simulate.heat_bath import heat_bath_sampler
from gibbs_cert.simulate.heat_bath import HeatBathSamples
from gibbs_cert.simulate.oracles import empirical_posterior_metric
from gibbs_cert.simulate.oracles import exact_marginals
from gibbs_cert.simulate.oracles import exact_transformed_kernel
from gibbs_cert.simulate.oracles import rcflm_exact_matrix
from gibbs_cert.simulate.oracles import soundness_check
from gibbs_cert.simulate.oracles import SoundnessReport
from gibbs_cert.simulate.rng import rng_spec
from gibbs_cert.simulate.rng import RngSpec
from gibbs_cert.simulate.sde import EmpiricalEstimate
from gibbs_cert.simulate.sde import first_passage_prob
from gibbs_cert.simulate.sde import monitoring_allowance
from gibbs_cert.simulate.sde import richardson_band
from gibbs_cert.simulate.sde import SdeConfig
from gibbs_cert.simulate.sde import simulate_height

__all__ = [
    "EmpiricalEstimate",
    "HeatBathSamples",
    "RngSpec",
    "SdeConfig",
    "SoundnessReport",
    "empirical_posterior_metric",
    "exact_marginals",
    "exact_transformed_kernel",
    "first_passage_prob",
    "heat_bath_sampler",
    "monitoring_allowance",
    "rcflm_exact_matrix",
    "richardson_band",
    "rng_spec",
    "simulate_height",
    "soundness_check",
]
