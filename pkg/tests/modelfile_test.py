from __future__ import annotations

import os
import tempfile

import numpy as np
import pytest
from gibbs_cert.errors import ModelParseError
from gibbs_cert.errors import ModelValidationError
from gibbs_cert.model import DiscreteSpace
from gibbs_cert.model import SphereSpace
from gibbs_cert.modelfile import parse_model_document
from gibbs_cert.modelfile import parse_model_file
from gibbs_cert.two_layer import DiscreteChannel
from gibbs_cert.two_layer import FuzzyChannel

FIXTURES = os.path.join(os.path.dirname(__file__), "fixtures")


def _fixture(name: str) -> str:
    return os.path.join(FIXTURES, name)


def test_parse_torus_model() -> None:
    loaded = parse_model_file(_fixture("ising_torus.toml"))
    assert loaded.model.n == 9
    assert loaded.model.potential.form == "ising"
    assert loaded.channel is None
    assert loaded.run == {}
    with open(_fixture("ising_torus.toml"), "rb") as f:
        assert loaded.raw == f.read()


def test_parse_labelled_vertices_and_fuzzy_channel() -> None:
    loaded = parse_model_file(_fixture("fuzzy_circle.toml"))
    assert loaded.model.graph.labels == ("a", "b", "c")
    assert isinstance(loaded.model.space, SphereSpace)
    assert loaded.model.couplings[1, 2] == -0.3
    assert isinstance(loaded.channel, FuzzyChannel)
    assert len(loaded.channel.partition.diameters) == 12


def test_parse_tabulated_model_with_discrete_channel() -> None:
    loaded = parse_model_file(_fixture("tabulated.toml"))
    assert isinstance(loaded.model.space, DiscreteSpace)
    assert loaded.model.space.labels == ("x", "y", "z")
    assert isinstance(loaded.channel, DiscreteChannel)
    assert loaded.channel.output_labels == ("low", "high")
    np.testing.assert_allclose(loaded.model.apriori.weights, [0.5, 0.25, 0.25])  # type: ignore[union-attr]
    assert loaded.run["kind"] == "exact-dobrushin"


def test_malformed_toml_reports_the_line() -> None:
    with pytest.raises(ModelParseError) as info:
        parse_model_file(_fixture("malformed.toml"))
    assert info.value.line == 4
    assert info.value.path.endswith("malformed.toml")


def test_missing_file() -> None:
    with pytest.raises(ModelParseError):
        parse_model_file(_fixture("does_not_exist.toml"))


def test_coupling_on_a_non_edge_names_the_field() -> None:
    with pytest.raises(ModelValidationError) as info:
        parse_model_file(_fixture("non_edge_coupling.toml"))
    assert info.value.field == "potential.couplings[1]"


def test_not_utf8() -> None:
    with tempfile.NamedTemporaryFile(suffix=".toml") as f:
        f.write(b"\xff\xfe[graph]\n")
        f.flush()
        with pytest.raises(ModelParseError, match="UTF-8"):
            parse_model_file(f.name)


@pytest.mark.parametrize(
    ("document", "field"),
    [
        ({"space": {"kind": "ising"}}, "graph"),
        ({"graph": {"path": 2}, "space": {"kind": "ising"}}, "potential"),
        ({"graph": {"path": 2}, "space": {"kind": "cube"}, "potential": {}}, "space.kind"),
        ({"graph": {"path": "two"}, "space": {"kind": "ising"}}, "graph.path"),
        (
            {"graph": {"vertices": 2, "edges": [[0, 5]]}, "space": {"kind": "ising"}},
            "graph.edges[0]",
        ),
        (
            {
                "graph": {"path": 2},
                "space": {"kind": "ising"},
                "potential": {"form": "ising", "coupling": "strong"},
            },
            "potential.coupling",
        ),
        (
            {
                "graph": {"path": 2},
                "space": {"kind": "ising"},
                "potential": {"form": "ising", "coupling": 0.1},
                "channel": {"kind": "heat-kernel", "t": 0.1},
            },
            "channel.kind",
        ),
        (
            {
                "graph": {"path": 2},
                "space": {"kind": "sphere", "q": 3},
                "potential": {"form": "rotator", "coupling": 0.1},
                "channel": {"kind": "identity"},
            },
            "channel.kind",
        ),
        (
            {
                "graph": {"path": 2},
                "space": {"kind": "ising"},
                "potential": {"form": "ising", "coupling": 0.1},
                "channel": {"kind": "discrete", "matrix": [[1.0, 0.0], [0.5, 0.5], [0.0, 1.0]]},
            },
            "channel.matrix",
        ),
        (
            {
                "graph": {"path": 2},
                "space": {"kind": "ising"},
                "potential": {"form": "ising", "coupling": 0.1},
                "apriori": {"weights": [0.7, 0.7]},
            },
            "apriori.weights",
        ),
    ],
)
def test_validation_errors_name_the_field(document: dict, field: str) -> None:  # type: ignore[type-arg]
    with pytest.raises(ModelValidationError) as info:
        parse_model_document(document)
    assert info.value.field == field


def test_heat_kernel_channel_document() -> None:
    loaded = parse_model_document(
        {
            "graph": {"path": 2},
            "space": {"kind": "sphere", "q": 3},
            "potential": {"form": "rotator", "coupling": 0.1},
            "channel": {"kind": "heat-kernel", "t": 0.25},
            "run": {"t": 0.25},
        }
    )
    assert loaded.channel == (3, 0.25)
    assert loaded.run == {"t": 0.25}
