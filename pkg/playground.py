# region: Usage
from __future__ import annotations

from gibbs_cert.dobrushin import dobrushin_bound
from gibbs_cert.dobrushin import neumann_series
from gibbs_cert.model import ising_model
from gibbs_cert.model import torus_graph

model = ising_model(torus_graph(4, 4), 0.1)

# sup_i Σ_j C_ij < 1 is the Dobrushin uniqueness condition
bound = dobrushin_bound(model, "linear")
bound.c_bound

# D = Σ_k C^k, refused with a CertificateError when the row norm reaches 1
series = neumann_series(bound.entries)
series.row_norm

# endregion: Usage


# region: Transformed measures

from gibbs_cert.model import rotator_model  # noqa: E402
from gibbs_cert.two_layer import continuity_certificate  # noqa: E402
from gibbs_cert.two_layer import heat_kernel_channel  # noqa: E402

# Plane rotators observed through Brownian motion run for time t = 0.1
rotators = rotator_model(torus_graph(4, 4), 0.05, 2)
certificate = continuity_certificate(rotators, heat_kernel_channel(2, 0.1), "lipschitz")
certificate.certified
certificate.q.entries if certificate.q is not None else certificate.statement

# endregion: Transformed measures


# region: Rotator time threshold

from gibbs_cert.rotator import bar_q_matrix  # noqa: E402
from gibbs_cert.rotator import gibbs_time_threshold  # noqa: E402

report = gibbs_time_threshold(rotators.couplings, 2)
report.t_star
# Euclidean continuity matrix inside the certified region
bar_q_matrix(rotators.couplings, 2, report.t_star / 2).entries

# endregion: Rotator time threshold


# region: Oracles

from gibbs_cert.cache import configure_cache  # noqa: E402
from gibbs_cert.dobrushin import exact_dobrushin_matrix  # noqa: E402
from gibbs_cert.model import path_graph  # noqa: E402
from gibbs_cert.simulate import first_passage_prob  # noqa: E402
from gibbs_cert.simulate import rng_spec  # noqa: E402
from gibbs_cert.simulate import SdeConfig  # noqa: E402

# Exhaustive enumeration results persist across runs once a cache directory is set
configure_cache(".gibbs-cert-cache")
exact_dobrushin_matrix(ising_model(path_graph(4), 0.3))
exact_dobrushin_matrix.cache_clear()

# Every Monte Carlo estimate carries its standard error and is reproducible from the seed
estimate = first_passage_prob(
    2, 0.3, 0.5, rng_spec(1234), config=SdeConfig(dt=1e-3), n_paths=20_000
)
estimate.mean, estimate.stderr

# endregion: Oracles
