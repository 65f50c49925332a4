"""Renderer unit tests on synthetic CSVs matching the public schemas."""

import numpy as np
import pytest

from etalab_plot import EmptyDataError, PlotError, PlotSpec, SchemaError, render
from etalab_plot.cli import main as cli_main


def _write_corr_matrix(path, M=4, times=(0.0, 2.0)):
    rows = ["t,i,j,re,im,abs"]
    rng = np.random.default_rng(1)
    for t in times:
        for i in range(M):
            for j in range(M):
                v = 0.1 if i != j else 0.25
                v += 0.01 * rng.standard_normal()
                rows.append(f"{t},{i},{j},{v},0.0,{abs(v)}")
    path.write_text("\n".join(rows) + "\n")


def _write_timeseries(path, M=4, n_t=20):
    rows = ["t,j,re,im,abs,stderr"]
    for k in range(n_t):
        t = 0.5 * k
        for j in range(M):
            v = 0.05 + 0.2 * np.exp(-t / 3.0) * (j == 0)
            rows.append(f"{t},{j},{v},0.0,{v},0.001")
    path.write_text("\n".join(rows) + "\n")


def _write_structure_factor(path, M=4, n_t=5):
    rows = ["t,n,qa,value"]
    for k in range(n_t):
        t = 2.0 * k
        for n in range(M):
            qa = 2 * np.pi * n / M
            rows.append(f"{t},{n},{qa},{0.2 + 0.1 * np.cos(qa) + 0.02 * k}")
    path.write_text("\n".join(rows) + "\n")


def test_heatmap_renders_nonempty(tmp_path):
    csv = tmp_path / "corr_matrix.csv"
    _write_corr_matrix(csv)
    out = render(
        PlotSpec(kind="heatmap", input=str(csv), output=str(tmp_path / "h.png"))
    )
    assert out.exists() and out.stat().st_size > 1000


def test_heatmap_time_selection(tmp_path):
    csv = tmp_path / "corr_matrix.csv"
    _write_corr_matrix(csv, times=(0.0, 5.0, 10.0))
    out = render(
        PlotSpec(
            kind="heatmap", input=str(csv), output=str(tmp_path / "h5.png"), time=5.0
        )
    )
    assert out.exists()


def test_timeseries_with_overlay(tmp_path):
    ts = tmp_path / "corr_timeseries.csv"
    gce = tmp_path / "gce_corr_matrix.csv"
    _write_timeseries(ts)
    _write_corr_matrix(gce, times=(0.0,))
    out = render(
        PlotSpec(
            kind="timeseries",
            input=str(ts),
            output=str(tmp_path / "t.png"),
            gce_overlay=str(gce),
        )
    )
    assert out.exists() and out.stat().st_size > 1000


def test_waterfall_renders(tmp_path):
    sf = tmp_path / "structure_factor.csv"
    _write_structure_factor(sf)
    out = render(
        PlotSpec(kind="waterfall", input=str(sf), output=str(tmp_path / "w.png"))
    )
    assert out.exists() and out.stat().st_size > 1000


def test_schema_mismatch_names_missing_column(tmp_path):
    bad = tmp_path / "bad.csv"
    bad.write_text("t,i,j,re,im\n0.0,0,0,1.0,0.0\n")  # 'abs' missing
    target = tmp_path / "x.png"
    with pytest.raises(SchemaError, match="abs"):
        render(PlotSpec(kind="heatmap", input=str(bad), output=str(target)))
    assert not target.exists()


def test_empty_data_is_an_error_and_writes_nothing(tmp_path):
    empty = tmp_path / "empty.csv"
    empty.write_text("t,i,j,re,im,abs\n")
    target = tmp_path / "y.png"
    with pytest.raises(EmptyDataError):
        render(PlotSpec(kind="heatmap", input=str(empty), output=str(target)))
    assert not target.exists()


def test_missing_file_and_bad_kind(tmp_path):
    with pytest.raises(PlotError):
        render(
            PlotSpec(kind="heatmap", input=str(tmp_path / "nope.csv"), output="o.png")
        )
    with pytest.raises(PlotError):
        PlotSpec.from_dict({"kind": "pie", "input": "a", "output": "b"})
    with pytest.raises(PlotError):
        PlotSpec.from_dict({"kind": "heatmap", "input": "a"})


def test_cli_roundtrip_and_exit_codes(tmp_path):
    csv = tmp_path / "corr_matrix.csv"
    _write_corr_matrix(csv)
    spec = tmp_path / "spec.json"
    spec.write_text(
        f'{{"kind": "heatmap", "input": "{csv}", "output": "{tmp_path}/cli.png"}}'
    )
    assert cli_main([str(spec)]) == 0
    assert (tmp_path / "cli.png").exists()

    bad = tmp_path / "badspec.json"
    bad.write_text('{"kind": "heatmap", "input": "missing.csv", "output": "z.png"}')
    assert cli_main([str(bad)]) == 2
    assert cli_main([str(tmp_path / "nofile.json")]) == 2
