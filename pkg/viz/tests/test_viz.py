"""Renderers: schema validation, all plot kinds, determinism, CLI."""

import json

import numpy as np
import pytest

from oddviz import PlotSpec, SchemaError, render
from oddviz.cli import main

DIAG_COLUMNS = ["t", "grad_sup", "grad_loc_1", "grad_loc_2", "hessian_sup",
                "key_value", "key_error", "b1", "b2", "log_sum", "omega_at_X",
                "energy", "enstrophy", "sup_omega", "area_above_half",
                "axis_residual"]


@pytest.fixture
def diagnostics_csv(tmp_path):
    t = np.linspace(0.0, 1.0, 30)
    rows = np.column_stack([t, np.exp(1.5 * t)]
                           + [np.full_like(t, 0.1)] * (len(DIAG_COLUMNS) - 2))
    p = tmp_path / "diagnostics.csv"
    p.write_text(",".join(DIAG_COLUMNS) + "\n"
                 + "\n".join(",".join(repr(float(v)) for v in r)
                             for r in rows) + "\n")
    return p


@pytest.fixture
def trajectory_csv(tmp_path):
    t = np.linspace(0.0, 2.0, 50)
    x1 = 0.05 * np.exp(-t)
    x2 = 0.01 * np.exp(t)
    p = tmp_path / "trajectory.csv"
    p.write_text("t,X1,X2\n"
                 + "\n".join(f"{float(a)!r},{float(b)!r},{float(c)!r}"
                             for a, b, c in zip(t, x1, x2)) + "\n")
    return p


@pytest.fixture
def summary_json(tmp_path):
    p = tmp_path / "summary.json"
    p.write_text(json.dumps({
        "config": {"A": 1.0, "T": 2.0, "box_side": None},
        "exit_time": 1.0,
        "growth": {"grad_sup": {"rate": 1.5, "r_squared": 0.999}},
    }))
    return p


@pytest.fixture
def snapshot_npz(tmp_path):
    n = 32
    x = np.linspace(0, 1, n + 1)
    vals = np.sin(np.pi * x)[:, None] * np.sin(2 * np.pi * x)[None, :]
    p = tmp_path / "snapshot.npz"
    np.savez(p, values=vals, coeffs=np.zeros((2, 2)),
             parity=np.array(["odd", "odd"]), n=n, time=0.5)
    return p


class TestSpecValidation:
    def test_unknown_kind(self, diagnostics_csv):
        with pytest.raises(SchemaError, match="unknown plot kind"):
            PlotSpec(kind="pie", inputs=[str(diagnostics_csv)])

    def test_missing_input(self):
        with pytest.raises(SchemaError, match="not found"):
            PlotSpec(kind="growth", inputs=["/nonexistent.csv"])

    def test_exactly_one_input(self, diagnostics_csv):
        with pytest.raises(SchemaError, match="exactly one"):
            PlotSpec(kind="growth",
                     inputs=[str(diagnostics_csv), str(diagnostics_csv)])


class TestGrowth:
    def test_slope_annotation(self, diagnostics_csv, tmp_path):
        out = tmp_path / "g.png"
        meta = render(PlotSpec(kind="growth", inputs=[str(diagnostics_csv)],
                               output=str(out)))
        assert out.stat().st_size > 0
        assert meta["slope"] == pytest.approx(1.5, abs=1e-6)

    def test_summary_rate_annotation(self, diagnostics_csv, summary_json,
                                     tmp_path):
        meta = render(PlotSpec(kind="growth", inputs=[str(diagnostics_csv)],
                               summary=str(summary_json),
                               output=str(tmp_path / "g.png")))
        assert meta["summary_rate"] == pytest.approx(1.5)

    def test_empty_series_axes_only(self, tmp_path):
        p = tmp_path / "empty.csv"
        p.write_text("t,grad_sup\n")
        out = tmp_path / "g.png"
        meta = render(PlotSpec(kind="growth", inputs=[str(p)],
                               output=str(out)))
        assert meta.get("empty") and out.stat().st_size > 0

    def test_missing_column_rejected(self, tmp_path):
        p = tmp_path / "bad.csv"
        p.write_text("a,b\n1,2\n")
        with pytest.raises(SchemaError, match="missing columns"):
            render(PlotSpec(kind="growth", inputs=[str(p)],
                            output=str(tmp_path / "g.png")))

    def test_non_numeric_rejected(self, tmp_path):
        p = tmp_path / "bad.csv"
        p.write_text("t,grad_sup\n0.0,hello\n")
        with pytest.raises(SchemaError, match="non-numeric"):
            render(PlotSpec(kind="growth", inputs=[str(p)],
                            output=str(tmp_path / "g.png")))


class TestTrajectory:
    def test_with_box_and_exit_marker(self, trajectory_csv, summary_json,
                                      tmp_path):
        out = tmp_path / "tr.png"
        meta = render(PlotSpec(kind="trajectory", inputs=[str(trajectory_csv)],
                               summary=str(summary_json), output=str(out)))
        assert out.stat().st_size > 0
        assert meta["exit_time"] == pytest.approx(1.0)

    def test_without_summary(self, trajectory_csv, tmp_path):
        out = tmp_path / "tr.png"
        render(PlotSpec(kind="trajectory", inputs=[str(trajectory_csv)],
                        output=str(out)))
        assert out.stat().st_size > 0

    def test_summary_schema_guard(self, trajectory_csv, tmp_path):
        bad = tmp_path / "s.json"
        bad.write_text("[1, 2]")
        with pytest.raises(SchemaError, match="config"):
            render(PlotSpec(kind="trajectory", inputs=[str(trajectory_csv)],
                            summary=str(bad), output=str(tmp_path / "x.png")))


class TestDiagnosticsPanel:
    def test_four_panels(self, diagnostics_csv, tmp_path):
        out = tmp_path / "d.png"
        meta = render(PlotSpec(kind="diagnostics",
                               inputs=[str(diagnostics_csv)],
                               output=str(out)))
        assert meta["panels"] == 4 and out.stat().st_size > 0


class TestHeatmap:
    def test_renders(self, snapshot_npz, tmp_path):
        out = tmp_path / "h.png"
        meta = render(PlotSpec(kind="heatmap", inputs=[str(snapshot_npz)],
                               output=str(out)))
        assert meta["n"] == 32 and meta["time"] == 0.5
        assert out.stat().st_size > 0

    def test_missing_key_rejected(self, tmp_path):
        p = tmp_path / "bad.npz"
        np.savez(p, other=np.zeros(3))
        with pytest.raises(SchemaError, match="missing key"):
            render(PlotSpec(kind="heatmap", inputs=[str(p)],
                            output=str(tmp_path / "h.png")))


class TestDeterminism:
    def test_identical_bytes(self, diagnostics_csv, tmp_path):
        a, b = tmp_path / "a.png", tmp_path / "b.png"
        for out in (a, b):
            render(PlotSpec(kind="growth", inputs=[str(diagnostics_csv)],
                            output=str(out)))
        assert a.read_bytes() == b.read_bytes()

    def test_svg_no_timestamp(self, diagnostics_csv, tmp_path):
        a, b = tmp_path / "a.svg", tmp_path / "b.svg"
        for out in (a, b):
            render(PlotSpec(kind="growth", inputs=[str(diagnostics_csv)],
                            output=str(out)))
        assert a.read_bytes() == b.read_bytes()


class TestCli:
    def test_growth_verb(self, diagnostics_csv, tmp_path, capsys):
        out = tmp_path / "g.png"
        assert main(["growth", str(diagnostics_csv), "-o", str(out)]) == 0
        assert out.exists()
        assert "wrote" in capsys.readouterr().out

    def test_schema_error_exit_code(self, tmp_path, capsys):
        p = tmp_path / "bad.csv"
        p.write_text("a,b\n1,2\n")
        assert main(["growth", str(p), "-o", str(tmp_path / "g.png")]) == 2
        assert "schema error" in capsys.readouterr().err

    def test_missing_file_exit_code(self, tmp_path, capsys):
        assert main(["heatmap", "/nonexistent.npz",
                     "-o", str(tmp_path / "h.png")]) == 2
