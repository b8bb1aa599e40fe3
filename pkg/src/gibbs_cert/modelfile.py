"""
TOML model files.

.. code-block:: toml

    [graph]
    vertices = 3                 # a count, or a list of labels
    edges = [[0, 1], [1, 2]]     # or: torus = { width = 4, height = 4 } / path = 3

    [space]
    kind = "circle"              # ising | sphere (q) | circle (atoms) | atoms (labels, coords)
    atoms = 12

    [potential]
    form = "rotator"             # ising | rotator | tabulated (table)
    coupling = 0.3               # uniform J, or couplings = [[i, j, J_ij], ...]

    [apriori]
    weights = [...]              # optional, uniform by default

    [channel]
    kind = "discretized-heat-kernel"
    t = 0.05

    [run]                        # optional task parameters
    t = 0.05
"""

from __future__ import annotations

import logging
import re
import sys
from typing import Any
from typing import Mapping
from typing import NamedTuple
from typing import Sequence

import numpy as np
from gibbs_cert.errors import ModelParseError
from gibbs_cert.errors import ModelValidationError
from gibbs_cert.model import atom_measure
from gibbs_cert.model import discretized_circle
from gibbs_cert.model import DiscreteSpace
from gibbs_cert.model import Graph
from gibbs_cert.model import InteractionModel
from gibbs_cert.model import ising_space
from gibbs_cert.model import make_model
from gibbs_cert.model import Measure
from gibbs_cert.model import PairPotential
from gibbs_cert.model import path_graph
from gibbs_cert.model import SingleSpinSpace
from gibbs_cert.model import SphereSpace
from gibbs_cert.model import torus_graph
from gibbs_cert.two_layer import Channel
from gibbs_cert.two_layer import discrete_channel
from gibbs_cert.two_layer import discretized_heat_kernel_channel
from gibbs_cert.two_layer import FuzzyChannel
from gibbs_cert.two_layer import FuzzyPartition
from gibbs_cert.two_layer import heat_kernel_channel
from gibbs_cert.two_layer import identity_channel

if sys.version_info >= (3, 11):
    import tomllib
else:  # no cov
    import tomli as tomllib

_LOCATION = re.compile(r"at line (\d+), column (\d+)")


class ModelFile(NamedTuple):
    model: InteractionModel
    channel: Channel | None
    run: Mapping[str, Any]
    raw: bytes


def _section(document: Mapping[str, Any], name: str, *, required: bool = True) -> dict[str, Any]:
    value = document.get(name)
    if value is None:
        if required:
            msg = "missing section"
            raise ModelValidationError(msg, field=name)
        return {}
    if not isinstance(value, dict):
        msg = "expected a table"
        raise ModelValidationError(msg, field=name)
    return value


def _number(section: Mapping[str, Any], key: str, field: str) -> float:
    value = section.get(key)
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        msg = f"expected a number, got {value!r}"
        raise ModelValidationError(msg, field=f"{field}.{key}")
    return float(value)


def _integer(section: Mapping[str, Any], key: str, field: str) -> int:
    value = section.get(key)
    if isinstance(value, bool) or not isinstance(value, int):
        msg = f"expected an integer, got {value!r}"
        raise ModelValidationError(msg, field=f"{field}.{key}")
    return value


def _vertex(token: Any, lookup: Mapping[str, int], n: int, field: str) -> int:  # noqa: ANN401
    if isinstance(token, str):
        if token not in lookup:
            msg = f"unknown vertex {token!r}"
            raise ModelValidationError(msg, field=field)
        return lookup[token]
    if isinstance(token, bool) or not isinstance(token, int) or not 0 <= token < n:
        msg = f"vertex {token!r} is not in 0..{n - 1}"
        raise ModelValidationError(msg, field=field)
    return token


def parse_graph(section: Mapping[str, Any]) -> Graph:
    if "torus" in section:
        torus = section["torus"]
        if not isinstance(torus, dict):
            msg = "expected { width = ..., height = ... }"
            raise ModelValidationError(msg, field="graph.torus")
        return torus_graph(
            _integer(torus, "width", "graph.torus"), _integer(torus, "height", "graph.torus")
        )
    if "path" in section:
        return path_graph(_integer(section, "path", "graph"))
    vertices = section.get("vertices")
    if isinstance(vertices, list):
        labels: Sequence[str] | None = [str(v) for v in vertices]
        n = len(vertices)
    else:
        n = _integer(section, "vertices", "graph")
        labels = None
    lookup = {} if labels is None else {label: k for k, label in enumerate(labels)}
    edges = []
    for k, edge in enumerate(section.get("edges", [])):
        field = f"graph.edges[{k}]"
        if not isinstance(edge, list) or len(edge) != 2:  # noqa: PLR2004
            msg = "an edge is a pair of vertices"
            raise ModelValidationError(msg, field=field)
        edges.append((_vertex(edge[0], lookup, n, field), _vertex(edge[1], lookup, n, field)))
    return Graph.from_edges(n, edges, labels)


def parse_space(section: Mapping[str, Any]) -> SingleSpinSpace:
    kind = section.get("kind")
    if kind == "ising":
        return ising_space()
    if kind == "sphere":
        return SphereSpace(q=_integer(section, "q", "space"))
    if kind == "circle":
        return discretized_circle(_integer(section, "atoms", "space"))
    if kind == "atoms":
        labels = section.get("labels")
        if not isinstance(labels, list) or not labels:
            msg = "expected a non-empty list of atom labels"
            raise ModelValidationError(msg, field="space.labels")
        coords = section.get("coords")
        if coords is None:
            return DiscreteSpace(labels=tuple(str(label) for label in labels))
        array = np.atleast_2d(np.asarray(coords, dtype=float))
        if array.shape[0] != len(labels):
            msg = f"{array.shape[0]} coordinate rows for {len(labels)} atoms"
            raise ModelValidationError(msg, field="space.coords")
        return DiscreteSpace(labels=tuple(str(label) for label in labels), coords=array)
    msg = f"unknown space kind {kind!r}"
    raise ModelValidationError(msg, field="space.kind")


def _couplings(section: Mapping[str, Any], graph: Graph) -> Any:  # noqa: ANN401
    if "coupling" in section:
        return _number(section, "coupling", "potential")
    entries = section.get("couplings")
    if not isinstance(entries, list):
        msg = "expected coupling = J or couplings = [[i, j, J_ij], ...]"
        raise ModelValidationError(msg, field="potential")
    lookup = {label: k for k, label in enumerate(graph.labels)}
    J = np.zeros((graph.n, graph.n))
    for k, entry in enumerate(entries):
        field = f"potential.couplings[{k}]"
        if not isinstance(entry, list) or len(entry) != 3:  # noqa: PLR2004
            msg = "expected [i, j, J_ij]"
            raise ModelValidationError(msg, field=field)
        i = _vertex(entry[0], lookup, graph.n, field)
        j = _vertex(entry[1], lookup, graph.n, field)
        if not graph.has_edge(i, j):
            msg = f"coupling on the non-edge {{{graph.labels[i]}, {graph.labels[j]}}}"
            raise ModelValidationError(msg, field=field)
        J[i, j] = J[j, i] = _number({"J": entry[2]}, "J", field)
    return J


def parse_potential(section: Mapping[str, Any], graph: Graph) -> PairPotential:
    form = section.get("form")
    table = section.get("table")
    return PairPotential(
        form=form,  # type: ignore[arg-type]
        couplings=np.asarray(_couplings(section, graph), dtype=float),
        table=None if table is None else np.asarray(table, dtype=float),
    )


def parse_apriori(section: Mapping[str, Any]) -> Measure | None:
    if "weights" not in section:
        return None
    return atom_measure(section["weights"])


def parse_channel(section: Mapping[str, Any], space: SingleSpinSpace) -> Channel | None:
    kind = section.get("kind")
    if kind is None:
        return None
    if kind == "heat-kernel":
        if not isinstance(space, SphereSpace):
            msg = "the heat-kernel channel needs a sphere single-spin space"
            raise ModelValidationError(msg, field="channel.kind")
        return heat_kernel_channel(space.q, _number(section, "t", "channel"))
    if kind == "fuzzy":
        if "arcs" in section:
            return FuzzyChannel(FuzzyPartition.circle_arcs(_integer(section, "arcs", "channel")))
        if "cells" in section:
            return FuzzyChannel(FuzzyPartition.from_cells(section["cells"]))
        return FuzzyChannel(FuzzyPartition.from_diameters(section.get("diameters", [])))
    if not isinstance(space, DiscreteSpace):
        msg = f"the {kind} channel needs a discrete single-spin space"
        raise ModelValidationError(msg, field="channel.kind")
    if kind == "discretized-heat-kernel":
        return discretized_heat_kernel_channel(space, _number(section, "t", "channel"))
    if kind == "identity":
        return identity_channel(space.size)
    if kind == "discrete":
        channel = discrete_channel(section.get("matrix", []), section.get("labels"))
        if channel.matrix.shape[0] != space.size:
            msg = f"{channel.matrix.shape[0]} channel rows for {space.size} single-spin values"
            raise ModelValidationError(msg, field="channel.matrix")
        return channel
    msg = f"unknown channel kind {kind!r}"
    raise ModelValidationError(msg, field="channel.kind")


def parse_model_document(document: Mapping[str, Any], raw: bytes = b"") -> ModelFile:
    graph = parse_graph(_section(document, "graph"))
    space = parse_space(_section(document, "space"))
    potential = parse_potential(_section(document, "potential"), graph)
    apriori = parse_apriori(_section(document, "apriori", required=False))
    model = make_model(graph, space, potential, apriori)
    channel = parse_channel(_section(document, "channel", required=False), space)
    run = _section(document, "run", required=False)
    return ModelFile(model=model, channel=channel, run=run, raw=raw)


def parse_model_file(path: str) -> ModelFile:
    """
    Read and validate a model file.

    Raises
    ------
        ModelParseError: The file is not valid TOML; carries the line and column.
        ModelValidationError: The file parses but the model is inconsistent; carries the field.

    """
    try:
        with open(path, "rb") as f:
            raw = f.read()
    except OSError as e:
        raise ModelParseError(e.strerror or str(e), path=path) from None
    try:
        document = tomllib.loads(raw.decode("utf-8"))
    except UnicodeDecodeError as e:
        raise ModelParseError(f"not UTF-8: {e.reason}", path=path) from None
    except tomllib.TOMLDecodeError as e:
        line, column = getattr(e, "lineno", None), getattr(e, "colno", None)
        match = _LOCATION.search(str(e))
        if line is None and match:
            line, column = int(match.group(1)), int(match.group(2))
        message = _LOCATION.sub("", getattr(e, "msg", str(e))).strip(" ()")
        raise ModelParseError(message, path=path, line=line, column=column) from None
    logging.info("parsed model file %s", path)
    return parse_model_document(document, raw)
