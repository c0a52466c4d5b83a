import json

import numpy as np
import pandas as pd
import pytest

from pointspec.extensions import build_two_point, delta, delta_prime, from_coupling
from pointspec.models import CheckResult, ReportDocument
from pointspec.reports import ReportWriter, load_report, summarize_extension, summarize_states
from pointspec.solver import find_bound_states


def test_summarize_two_point(split_extension):
    summary = summarize_extension(split_extension)
    assert summary.kind == "two-point"
    assert summary.alpha == 2.0 and summary.beta == 1.0
    assert summary.local is False
    dumped = summary.model_dump(by_alias=True)
    assert dumped["B"][0][1] == dumped["B"][1][0]


def test_summarize_direct_coupling():
    summary = summarize_extension(from_coupling(0.5, -1.0, 0.2, -3.0))
    assert summary.alpha is None
    assert summary.parity_symmetric is False
    assert summary.coupling == [[-1.0, 0.2], [0.2, -3.0]]


def test_summarize_one_point():
    assert summarize_extension(delta(-2.0)).c == -2.0
    summary = summarize_extension(delta_prime(1.0, 2.0))
    assert summary.kind == "delta-prime"
    assert summary.classification == "one-point-delta-prime"


def test_summarize_states(split_extension, entangled_extension):
    rows = summarize_states(find_bound_states(split_extension))
    assert [row.parity for row in rows] == ["even", "odd"]
    assert rows[0].model_dump(by_alias=True)["lambda"] == pytest.approx(-4.0, abs=1e-8)
    degenerate = summarize_states(find_bound_states(entangled_extension))
    assert degenerate[0].parity is None
    assert degenerate[0].multiplicity == 2


def _document():
    return ReportDocument(mode="verify", checks=[CheckResult(name="root_count", value=2.0, tolerance=0.0, passed=True)],
                          notes=["note"])


def test_render_uses_report_field_names():
    text = ReportWriter().render(_document())
    data = json.loads(text)
    assert data["version"] == 1
    assert data["checks"][0]["pass"] is True
    assert "passed" not in data["checks"][0]
    assert text.endswith("}\n")


def test_render_is_deterministic():
    assert ReportWriter().render(_document()) == ReportWriter().render(_document())


def test_floats_survive_the_report(tmp_path):
    value = 0.1 + 0.2
    document = ReportDocument(mode="spectrum", checks=[CheckResult(name="x", value=value, tolerance=1e-9, passed=True)])
    path = tmp_path / "report.json"
    ReportWriter(out=str(path)).emit(document)
    assert load_report(str(path)).checks[0].value == value


def test_write_frame(tmp_path):
    writer = ReportWriter(csv_dir=str(tmp_path / "csv"))
    frame = pd.DataFrame({"x": np.linspace(0.0, 1.0, 3), "value": [1.0 / 3.0, 0.5, 2.0 / 3.0]})
    path = writer.write_frame(frame, "table")
    assert writer.artifacts == [path]
    loaded = pd.read_csv(path, float_precision="round_trip")
    assert loaded["value"].iloc[0] == 1.0 / 3.0
    document = json.loads(writer.render(_document()))
    assert document["artifacts"] == [path]


def test_write_frame_without_directory():
    writer = ReportWriter()
    assert writer.write_frame(pd.DataFrame({"x": [1.0]}), "table") is None
    assert writer.artifacts == []


def test_emit_to_stdout(capsys):
    ReportWriter().emit(_document())
    assert json.loads(capsys.readouterr().out)["mode"] == "verify"


def test_emit_creates_directories(tmp_path):
    path = tmp_path / "nested" / "report.json"
    ReportWriter(out=str(path)).emit(_document())
    assert load_report(str(path)).notes == ["note"]


def test_report_for_built_extension_is_json_safe():
    ext = build_two_point(1.0, 1.0, 0.5)
    document = ReportDocument(mode="extension", extension=summarize_extension(ext))
    data = json.loads(ReportWriter().render(document))
    assert data["extension"]["classification"] == "delta-prime-entangled"
