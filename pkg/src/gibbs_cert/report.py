from __future__ import annotations

import csv
import hashlib
import io
import json
import math
from typing import Any
from typing import Mapping
from typing import NamedTuple
from typing import Sequence

import numpy as np
from gibbs_cert import __version__
from gibbs_cert.errors import ModelParseError
from numpy.typing import ArrayLike
from numpy.typing import NDArray


class Report(NamedTuple):
    """
    Machine-readable outcome of one run.

    Attributes
    ----------
        task (str): The task that ran.
        input_digest (str): SHA-256 of the raw model file bytes (``""`` when there was none).
        version (str): Package version that produced the report.
        wall_time (float): Seconds spent in the task.
        seed (int | None): Root seed of every random stream used.
        results (Mapping[str, Any]): Task payload.

    """

    task: str
    input_digest: str
    version: str
    wall_time: float
    seed: int | None
    results: Mapping[str, Any]


def input_digest(raw: bytes) -> str:
    return hashlib.sha256(raw).hexdigest() if raw else ""


def make_report(
    task: str,
    results: Mapping[str, Any],
    *,
    raw: bytes = b"",
    wall_time: float = 0.0,
    seed: int | None = None,
) -> Report:
    return Report(
        task=task,
        input_digest=input_digest(raw),
        version=__version__,
        wall_time=wall_time,
        seed=seed,
        results=results,
    )


def _jsonable(value: Any) -> Any:  # noqa: ANN401, PLR0911
    if isinstance(value, np.ndarray):
        return [_jsonable(v) for v in value.tolist()]
    if isinstance(value, (np.bool_, bool)):
        return bool(value)
    if isinstance(value, (np.integer, int)):
        return int(value)
    if isinstance(value, (np.floating, float)):
        number = float(value)
        return number if math.isfinite(number) else str(number)
    if isinstance(value, Mapping):
        return {str(k): _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    return value


def write_report(path: str, report: Report) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        json.dump(_jsonable(report._asdict()), f, indent=2, ensure_ascii=False)
        f.write("\n")


def read_report(path: str) -> Report:
    with open(path, encoding="utf-8") as f:
        try:
            payload = json.load(f)
        except json.JSONDecodeError as e:
            raise ModelParseError(e.msg, path=path, line=e.lineno, column=e.colno) from None
    return Report(**{field: payload[field] for field in Report._fields})


def format_matrix_csv(matrix: ArrayLike, labels: Sequence[str]) -> str:
    """Header of vertex labels, then one row per vertex with ``%.17g`` entries and LF endings."""
    values = np.atleast_2d(np.asarray(matrix, dtype=float))
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(labels)
    for row in values:
        writer.writerow([f"{v:.17g}" for v in row])
    return buffer.getvalue()


def write_matrix_csv(path: str, matrix: ArrayLike, labels: Sequence[str]) -> None:
    with open(path, "w", encoding="utf-8", newline="") as f:
        f.write(format_matrix_csv(matrix, labels))


def read_matrix_csv(path: str) -> tuple[tuple[str, ...], NDArray[np.float64]]:
    with open(path, encoding="utf-8", newline="") as f:
        rows = list(csv.reader(f))
    if not rows:
        msg = "empty matrix file"
        raise ModelParseError(msg, path=path)
    labels = tuple(rows[0])
    for line, row in enumerate(rows[1:], start=2):
        if len(row) != len(labels):
            msg = f"{len(row)} entries for {len(labels)} columns"
            raise ModelParseError(msg, path=path, line=line)
    try:
        values = np.array([[float(v) for v in row] for row in rows[1:]], dtype=float)
    except ValueError as e:
        raise ModelParseError(str(e), path=path) from None
    return labels, values.reshape(len(rows) - 1, len(labels))
