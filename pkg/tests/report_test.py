from __future__ import annotations

import hashlib
import json
import os
import tempfile
from pathlib import Path

import numpy as np
import pytest
from gibbs_cert import __version__
from gibbs_cert.errors import ModelParseError
from gibbs_cert.report import format_matrix_csv
from gibbs_cert.report import input_digest
from gibbs_cert.report import make_report
from gibbs_cert.report import read_matrix_csv
from gibbs_cert.report import read_report
from gibbs_cert.report import write_matrix_csv
from gibbs_cert.report import write_report


def test_input_digest() -> None:
    assert input_digest(b"") == ""
    assert input_digest(b"[graph]\npath = 2\n") == hashlib.sha256(b"[graph]\npath = 2\n").hexdigest()


def test_make_report_stamps_version_and_digest() -> None:
    report = make_report("certify", {"c": 0.4}, raw=b"x", wall_time=0.5, seed=3)
    assert report.version == __version__
    assert report.input_digest == hashlib.sha256(b"x").hexdigest()
    assert report.seed == 3


def test_report_json_keeps_non_finite_values_readable() -> None:
    results = {
        "certified": np.bool_(True),
        "margin": float("-inf"),
        "ratio": np.float64("nan"),
        "count": np.int64(7),
        "matrix": np.eye(2),
    }
    with tempfile.TemporaryDirectory() as tmp:
        path = os.path.join(tmp, "report.json")
        write_report(path, make_report("oracle", results, seed=11))
        with open(path, encoding="utf-8") as f:
            text = f.read()
        assert "NaN" not in text
        assert text.endswith("}\n")
        report = read_report(path)
    assert report.task == "oracle"
    assert report.seed == 11
    assert report.results["certified"] is True
    assert report.results["margin"] == "-inf"
    assert report.results["ratio"] == "nan"
    assert report.results["count"] == 7
    assert report.results["matrix"] == [[1.0, 0.0], [0.0, 1.0]]


def test_read_report_rejects_broken_json() -> None:
    with tempfile.TemporaryDirectory() as tmp:
        path = os.path.join(tmp, "report.json")
        with open(path, "w", encoding="utf-8") as f:
            f.write('{\n  "task": \n')
        with pytest.raises(ModelParseError) as info:
            read_report(path)
    assert info.value.line is not None


def test_matrix_csv_format() -> None:
    text = format_matrix_csv([[0.0, 0.1], [1 / 3, 2.0]], ["a", "b"])
    assert "\r" not in text
    lines = text.split("\n")
    assert lines[0] == "a,b"
    assert lines[1] == "0,0.10000000000000001"
    assert lines[2] == "0.33333333333333331,2"
    assert lines[3] == ""


def test_matrix_csv_preserves_every_digit(tmp_path: Path) -> None:
    matrix = np.random.default_rng(0).random((3, 3))
    path = os.path.join(tmp_path, "c_matrix.csv")
    write_matrix_csv(path, matrix, ["0", "1", "2"])
    labels, values = read_matrix_csv(path)
    assert labels == ("0", "1", "2")
    assert np.array_equal(values, matrix)
    with open(path, "rb") as f:
        assert b"\r\n" not in f.read()


def test_read_matrix_csv_rejects_ragged_rows(tmp_path: Path) -> None:
    path = os.path.join(tmp_path, "bad.csv")
    with open(path, "w", encoding="utf-8") as f:
        f.write("a,b\n0,1\n0.5\n")
    with pytest.raises(ModelParseError) as info:
        read_matrix_csv(path)
    assert info.value.line == 3


def test_read_matrix_csv_rejects_empty_files(tmp_path: Path) -> None:
    path = os.path.join(tmp_path, "empty.csv")
    with open(path, "w", encoding="utf-8"):
        pass
    with pytest.raises(ModelParseError, match="empty"):
        read_matrix_csv(path)


def test_report_fields_are_stable() -> None:
    report = make_report("simulate", {})
    payload = json.loads(json.dumps(report._asdict()))
    assert sorted(payload) == ["input_digest", "results", "seed", "task", "version", "wall_time"]
