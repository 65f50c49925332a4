"""Secondary acceptance: render the real harness outputs end to end.

Drives the primary package exclusively through its CLI (`etalab run`) and
file outputs, then renders every figure kind from those CSVs. Runs a
shortened quench for the structure-factor waterfall and the full-length
criterion-3 and criterion-5 style runs for the heatmap and overlay
timeseries.
"""

import json
import shutil
import subprocess

import pytest

from etalab_plot import PlotSpec, SchemaError, render

pytestmark = pytest.mark.skipif(
    shutil.which("etalab") is None, reason="primary etalab CLI is not installed"
)


def _run_primary(tmp_path, name, config):
    cfg = tmp_path / f"{name}.json"
    cfg.write_text(json.dumps(config))
    out = tmp_path / name
    proc = subprocess.run(
        ["etalab", "run", str(cfg), "--out", str(out)],
        capture_output=True,
        text=True,
    )
    assert proc.returncode == 0, proc.stderr
    return out


@pytest.fixture(scope="module")
def quench_out(tmp_path_factory):
    tmp = tmp_path_factory.mktemp("quench")
    return _run_primary(
        tmp,
        "quench",
        {
            "experiment": "quench-dephasing",
            "M": 4,
            "n_up": 2,
            "n_down": 2,
            "U": 1.0,
            "initial_state": {"kind": "ground", "U": 4.0},
            "gamma_spin": 2.0,
            "t_final": 200.0,
            "dt": 0.01,
            "output_times": {"start": 0.0, "stop": 200.0, "num": 21},
            "method": "master",
        },
    )


@pytest.fixture(scope="module")
def floquet_out(tmp_path_factory):
    tmp = tmp_path_factory.mktemp("floquet")
    return _run_primary(
        tmp,
        "floquet",
        {
            "experiment": "floquet-vs-dephasing",
            "M": 4,
            "n_up": 2,
            "n_down": 2,
            "U": 6.0,
            "initial_state": {"kind": "ground", "U": 1.0},
            "drive": {"V": 12.0, "Omega": 1.0, "profile": "linear"},
            "t_final": 100.0,
            "dt": 0.00025,
            "output_times": {"start": 0.0, "stop": 100.0, "num": 51},
            "method": "master",
        },
    )


def test_criterion_10_heatmap_from_steady_state(quench_out, tmp_path):
    out = render(
        PlotSpec(
            kind="heatmap",
            input=str(quench_out / "corr_matrix.csv"),
            output=str(tmp_path / "heatmap.png"),
        )
    )
    ok = out.exists() and out.stat().st_size > 1000
    print(f"ACCEPTANCE 10a: {'PASS' if ok else 'FAIL'} - steady-state heatmap rendered")
    assert ok


def test_criterion_10_timeseries_with_gce_overlay(floquet_out, tmp_path):
    out = render(
        PlotSpec(
            kind="timeseries",
            input=str(floquet_out / "corr_timeseries.csv"),
            output=str(tmp_path / "timeseries.png"),
            gce_overlay=str(floquet_out / "gce_corr_matrix.csv"),
        )
    )
    ok = out.exists() and out.stat().st_size > 1000
    print(f"ACCEPTANCE 10b: {'PASS' if ok else 'FAIL'} - driven timeseries with GCE overlay")
    assert ok


def test_criterion_10_waterfall_from_structure_factor(quench_out, tmp_path):
    out = render(
        PlotSpec(
            kind="waterfall",
            input=str(quench_out / "structure_factor.csv"),
            output=str(tmp_path / "waterfall.png"),
        )
    )
    ok = out.exists() and out.stat().st_size > 1000
    print(f"ACCEPTANCE 10c: {'PASS' if ok else 'FAIL'} - structure-factor waterfall")
    assert ok


def test_criterion_10_schema_mismatch_documented_error(quench_out, tmp_path):
    # conserved.csv is a valid harness output but not a heatmap schema
    target = tmp_path / "never.png"
    with pytest.raises(SchemaError):
        render(
            PlotSpec(
                kind="heatmap",
                input=str(quench_out / "conserved.csv"),
                output=str(target),
            )
        )
    ok = not target.exists()
    print(f"ACCEPTANCE 10d: {'PASS' if ok else 'FAIL'} - schema mismatch raises, no file written")
    assert ok
