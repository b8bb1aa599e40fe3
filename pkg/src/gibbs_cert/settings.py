from __future__ import annotations

import os
from typing import Callable
from typing import Mapping
from typing import NamedTuple
from typing import TYPE_CHECKING

from gibbs_cert.errors import ConfigError
from typing_extensions import Literal
from typing_extensions import TypedDict
from typing_extensions import Unpack

Flavor = Literal["linear", "quadratic", "lipschitz"]
FLAVORS: tuple[Flavor, ...] = ("linear", "quadratic", "lipschitz")


class Settings(NamedTuple):
    """
    Numerical knobs shared by the certification and simulation pipelines.

    Attributes
    ----------
        seed (int | None): Root seed for every random stream; mandatory for stochastic tasks.
        n_paths (int): Monte Carlo sample size.
        dt (float): Euler–Maruyama step size.
        quad_nodes (int): Gauss–Jacobi nodes used for sphere integrals.
        flavor (Flavor | None): Dobrushin bound flavor, chosen per channel when unset.
        series_tol (float): Heat-kernel series truncation tolerance on term magnitude.
        min_degree (int): Minimum heat-kernel truncation degree.
        t_min (float): Times below this evaluate the heat kernel with a warning.
        enumeration_budget (int): Largest exhaustive enumeration the oracles accept.
        cache_dir (str | None): Directory of the persistent oracle cache, disabled when unset.

    """

    seed: int | None = None
    n_paths: int = 100_000
    dt: float = 1e-3
    quad_nodes: int = 128
    flavor: Flavor | None = None
    series_tol: float = 1e-12
    min_degree: int = 8
    t_min: float = 1e-4
    enumeration_budget: int = 10**7
    cache_dir: str | None = None


if TYPE_CHECKING:

    class _SettingsOverrides(TypedDict, total=False):
        seed: int | None
        n_paths: int | None
        dt: float | None
        quad_nodes: int | None
        flavor: Flavor | None
        series_tol: float | None
        min_degree: int | None
        t_min: float | None
        enumeration_budget: int | None
        cache_dir: str | None


ENVIRONMENT_VARIABLES: Mapping[str, tuple[str, Callable[[str], object]]] = {
    "seed": ("GIBBS_CERT_SEED", int),
    "n_paths": ("GIBBS_CERT_PATHS", int),
    "dt": ("GIBBS_CERT_DT", float),
    "quad_nodes": ("GIBBS_CERT_QUAD_NODES", int),
    "flavor": ("GIBBS_CERT_FLAVOR", str),
    "cache_dir": ("GIBBS_CERT_CACHE_DIR", str),
}

DEFAULT_SETTINGS = Settings()


def resolve_settings(
    environ: Mapping[str, str] | None = None,
    **overrides: Unpack[_SettingsOverrides],
) -> Settings:
    """
    Resolve settings with precedence explicit override > environment variable > default.

    Args:
    ----
        environ: Environment to read, defaults to ``os.environ``.
        overrides: Explicit values, typically parsed command-line flags. ``None`` means unset.

    Returns:
    -------
        The validated settings.

    """
    environ = os.environ if environ is None else environ
    values: dict[str, object] = DEFAULT_SETTINGS._asdict()
    for field, (variable, parse) in ENVIRONMENT_VARIABLES.items():
        raw = environ.get(variable)
        if raw is None or raw == "":
            continue
        try:
            values[field] = parse(raw)
        except ValueError:
            kind = getattr(parse, "__name__", "value")
            msg = f"{variable}={raw!r} is not a valid {kind}"
            raise ConfigError(msg) from None
    values.update({key: value for key, value in overrides.items() if value is not None})
    settings = Settings(**values)  # type: ignore[arg-type]
    _validate(settings)
    return settings


def _validate(settings: Settings) -> None:
    if settings.flavor is not None and settings.flavor not in FLAVORS:
        msg = f"unknown flavor {settings.flavor!r}, expected one of {', '.join(FLAVORS)}"
        raise ConfigError(msg)
    if not settings.dt > 0:
        msg = f"dt must be positive, got {settings.dt}"
        raise ConfigError(msg)
    if settings.n_paths < 2:  # noqa: PLR2004
        msg = f"n_paths must be at least 2, got {settings.n_paths}"
        raise ConfigError(msg)
    if settings.quad_nodes < 2:  # noqa: PLR2004
        msg = f"quad_nodes must be at least 2, got {settings.quad_nodes}"
        raise ConfigError(msg)
    if settings.seed is not None and not 0 <= settings.seed < 2**64:
        msg = f"seed must be a 64-bit unsigned integer, got {settings.seed}"
        raise ConfigError(msg)
