import csv
import hashlib
import json
import subprocess
import sys

import numpy as np
import pytest

from floqstab.cli import main


def write(tmp_path, name, text):
    p = tmp_path / name
    p.write_text(text)
    return p


def quasi_config(omega=0.3, extra=""):
    return f"""\
version: 1
experiment: quasienergy
units: ratio
quasienergy:
  model:
    drive: {{kind: circular, B0: 1.0, omega: {omega}}}
{extra}"""


def rows(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def test_quasienergy_table(tmp_path):
    cfg = write(tmp_path, "q.yaml", quasi_config())
    out = tmp_path / "out"
    assert main(["quasienergy", "--config", str(cfg), "--out", str(out)]) == 0
    eps = {r["branch"]: float(r["eps"]) for r in rows(out / "quasienergies.csv")}
    assert abs(eps["plus"] - 0.0720153) < 1e-6
    assert abs(eps["minus"] + 0.0720153) < 1e-6
    states = rows(out / "periodic_states.csv")
    assert len(states) == 256
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["config_hash"] == hashlib.sha256(cfg.read_bytes()).hexdigest()
    assert manifest["experiment"] == "quasienergy" and manifest["exit_code"] == 0
    for f in manifest["files"]:
        assert (out / f).exists()
    assert "spectrum" in manifest["timings_s"]


def test_matrix_element_table_decreasing(tmp_path):
    extra = "    cavities: [{delta: 1.414, g: 0.05, kappa: 0.05}]\n  m_range: [0, 3]\n"
    cfg = write(tmp_path, "q.yaml", quasi_config(1.0, extra))
    assert main(["quasienergy", "--config", str(cfg), "--out", str(tmp_path / "o")]) == 0
    mags = [float(r["abs"]) for r in rows(tmp_path / "o" / "matrix_elements.csv")]
    assert len(mags) == 4
    assert all(a > b for a, b in zip(mags, mags[1:]))
    res = rows(tmp_path / "o" / "resonances.csv")
    assert (res[0]["m"], res[0]["n_ph"]) == ("1", "1")


def test_missing_field_exit_code(tmp_path, capsys):
    cfg = write(tmp_path, "q.yaml", quasi_config().replace(", omega: 0.3", ""))
    assert main(["quasienergy", "--config", str(cfg), "--out", str(tmp_path / "o")]) == 2
    assert "omega" in capsys.readouterr().err
    assert not (tmp_path / "o").exists()


def test_wrong_experiment_exit_code(tmp_path, capsys):
    cfg = write(tmp_path, "q.yaml", quasi_config())
    assert main(["scan", "--config", str(cfg)]) == 2
    assert "not 'scan'" in capsys.readouterr().err


def test_numerical_failure_exit_code(tmp_path, capsys):
    text = quasi_config().replace("B0: 1.0", "B0: 400.0") + "  integrator: {steps_per_period: 100}\n"
    cfg = write(tmp_path, "q.yaml", text)
    assert main(["quasienergy", "--config", str(cfg), "--out", str(tmp_path / "o")]) == 3
    assert "steps_per_period" in capsys.readouterr().err
    manifest = json.loads((tmp_path / "o" / "manifest.json").read_text())
    assert manifest["exit_code"] == 3 and "diverged" in manifest["error"]


def test_outputs_are_byte_identical(tmp_path):
    extra = "    cavities: [{delta: 1.414, g: 0.05, kappa: 0.05, n_max: 2}]\n    gamma: 0.0025\n"
    text = quasi_config(1.0, extra).replace("quasienergy", "steady-state").replace(
        "steady-state:\n", "steady-state:\n  integrator: {steps_per_period: 200}\n  n_t: 64\n")
    cfg = write(tmp_path, "s.yaml", text)
    for d in ("a", "b"):
        assert main(["steady-state", "--config", str(cfg), "--out", str(tmp_path / d)]) == 0
    names = sorted(p.name for p in (tmp_path / "a").iterdir() if p.name != "manifest.json")
    assert names == ["steady_state_t.csv", "summary.json", "superoperator_spectrum.csv"]
    for n in names:
        assert (tmp_path / "a" / n).read_bytes() == (tmp_path / "b" / n).read_bytes()
    summary = json.loads((tmp_path / "a" / "summary.json").read_text())
    assert summary["trace_defect"] < 1e-8
    assert summary["choi_min_eigenvalue"] > -1e-6


SCAN = """\
version: 1
experiment: scan
units: ratio
scan:
  x: {name: B0, min: 0.0, max: 1.0, count: 2}
  y: {name: delta, min: 1.2, max: 1.4, count: 2}
  fixed: {omega: 1.0, g: 0.05, kappa: 0.05, gamma: 0.0025}
  n_max: 2
  truncation_points: 0
"""


def test_partial_scan_exit_codes(tmp_path):
    cfg = write(tmp_path, "scan.yaml", SCAN)
    out = tmp_path / "o"
    assert main(["scan", "--config", str(cfg), "--out", str(out), "--threads", "1"]) == 4
    summary = json.loads((out / "summary.json").read_text())
    assert len(summary["failures"]) == 2
    assert (out / "fidelity.svg").exists() and (out / "scan.csv").exists()
    assert json.loads((out / "manifest.json").read_text())["exit_code"] == 4
    # the resumed run reads the checkpoint and accepts the failures
    assert main(["scan", "--config", str(cfg), "--out", str(out), "--threads", "1", "--keep-going"]) == 0


def test_scan_overlays_and_truncation_override(tmp_path):
    text = SCAN.replace("{name: B0, min: 0.0, max: 1.0, count: 2}", "{name: omega, min: 0.9, max: 1.1, count: 2}") \
               .replace("fixed: {omega: 1.0,", "fixed: {B0: 1.0,")
    cfg = write(tmp_path, "scan.yaml", text)
    out = tmp_path / "o"
    assert main(["scan", "--config", str(cfg), "--out", str(out), "--threads", "1",
                 "--truncation-override", "3", "--steps-per-period", "300"]) == 0
    svg = (out / "fidelity.svg").read_text()
    assert 'stroke-dasharray="6 4"' in svg and 'stroke-dasharray="2 3"' in svg
    table = rows(out / "scan.csv")
    assert {r["steps"] for r in table} == {"300"}
    summary = json.loads((out / "summary.json").read_text())
    assert "m1_nph1" in summary["resonance_lines"]


def test_fit_command(tmp_path):
    t = np.linspace(0, 15, 60)
    with open(tmp_path / "d.csv", "w") as fh:
        fh.write("t,y\n")
        for a, b in zip(t, 0.5 * np.exp(-t / 3) + 0.5):
            fh.write(f"{a},{b}\n")
    cfg = write(tmp_path, "fit.yaml", "version: 1\nexperiment: fit\nunits: ratio\nfit: {input: d.csv}\n")
    assert main(["fit", "--config", str(cfg), "--out", str(tmp_path / "o")]) == 0
    fit = json.loads((tmp_path / "o" / "fit.json").read_text())
    assert abs(fit["params"]["T"] - 3) < 1e-6
    bad = write(tmp_path, "bad.yaml", "version: 1\nexperiment: fit\nunits: ratio\nfit: {input: d.csv, y_column: z}\n")
    assert main(["fit", "--config", str(bad), "--out", str(tmp_path / "o2")]) == 2


def test_console_entry_point(tmp_path):
    out = subprocess.run([sys.executable, "-m", "floqstab.cli", "--help"], capture_output=True, text=True)
    assert out.returncode == 0
    for cmd in ("quasienergy", "scan", "linecut", "adiabatic", "elliptical", "boost", "fit", "steady-state"):
        assert cmd in out.stdout
    with pytest.raises(SystemExit):
        main(["boost"])
