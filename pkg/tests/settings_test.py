from __future__ import annotations

import pytest
from gibbs_cert.errors import ConfigError
from gibbs_cert.settings import DEFAULT_SETTINGS
from gibbs_cert.settings import resolve_settings


def test_defaults() -> None:
    settings = resolve_settings({})
    assert settings == DEFAULT_SETTINGS
    assert settings.seed is None
    assert settings.flavor is None


def test_environment_overrides_defaults() -> None:
    settings = resolve_settings(
        {
            "GIBBS_CERT_SEED": "42",
            "GIBBS_CERT_PATHS": "500",
            "GIBBS_CERT_DT": "0.01",
            "GIBBS_CERT_QUAD_NODES": "32",
            "GIBBS_CERT_FLAVOR": "quadratic",
            "GIBBS_CERT_CACHE_DIR": "/tmp/oracles",
        }
    )
    assert settings.seed == 42
    assert settings.n_paths == 500
    assert settings.dt == 0.01
    assert settings.quad_nodes == 32
    assert settings.flavor == "quadratic"
    assert settings.cache_dir == "/tmp/oracles"


def test_explicit_values_override_the_environment() -> None:
    environ = {"GIBBS_CERT_SEED": "42", "GIBBS_CERT_FLAVOR": "quadratic"}
    settings = resolve_settings(environ, seed=7, flavor=None)
    assert settings.seed == 7
    assert settings.flavor == "quadratic"


def test_empty_variables_are_ignored() -> None:
    assert resolve_settings({"GIBBS_CERT_DT": ""}).dt == DEFAULT_SETTINGS.dt


@pytest.mark.parametrize(
    ("variable", "value"),
    [
        ("GIBBS_CERT_SEED", "forty-two"),
        ("GIBBS_CERT_PATHS", "1.5"),
        ("GIBBS_CERT_DT", "fast"),
    ],
)
def test_unparseable_environment_values(variable: str, value: str) -> None:
    with pytest.raises(ConfigError, match=variable):
        resolve_settings({variable: value})


@pytest.mark.parametrize(
    "overrides",
    [
        {"flavor": "cubic"},
        {"dt": 0.0},
        {"dt": -1e-3},
        {"n_paths": 1},
        {"quad_nodes": 1},
        {"seed": -1},
        {"seed": 2**64},
    ],
)
def test_invalid_settings(overrides: dict) -> None:  # type: ignore[type-arg]
    with pytest.raises(ConfigError):
        resolve_settings({}, **overrides)
