import csv
import json
import math
import xml.etree.ElementTree as ET

import pytest

from cubicsqueeze import cli
from cubicsqueeze.cli import COLUMNS, EXIT_CONFIG, EXIT_NUMERIC, EXIT_OK, EXIT_VERIFY, main
from cubicsqueeze.errors import NumericalInstabilityError

SMALL = ["--z-grid", "0.5:1.5:3", "--strength-grid", "0.5:1:3"]


def read_csv(path):
    with open(path, newline="") as fh:
        return list(csv.reader(fh))


def manifest(out, command):
    return json.loads((out / f"{command}.manifest.json").read_text())


def test_heatmap_csv_schema_and_manifest(tmp_path):
    assert main(["heatmap", "--out", str(tmp_path), *SMALL]) == EXIT_OK
    rows = read_csv(tmp_path / "heatmap.csv")
    assert tuple(rows[0]) == COLUMNS["heatmap"]
    assert len(rows) == 1 + 9
    assert all(r[-1] == "ok" for r in rows[1:])
    # sqrt(eta) = 1 is lossless: xi far below 1
    assert all(float(r[2]) < 0.01 for r in rows[1:] if float(r[1]) == 1.0)
    m = manifest(tmp_path, "heatmap")
    assert m["schema_version"] == cli.SCHEMA_VERSION
    assert m["columns"]["heatmap"] == list(COLUMNS["heatmap"])
    assert m["config"]["z_grid"] == "0.5:1.5:3"
    assert m["files"] == ["heatmap.csv"]


def test_outputs_are_byte_identical_across_runs_and_jobs(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    assert main(["heatmap", "--out", str(a), *SMALL]) == EXIT_OK
    assert main(["heatmap", "--out", str(b), "--jobs", "2", *SMALL]) == EXIT_OK
    assert (a / "heatmap.csv").read_bytes() == (b / "heatmap.csv").read_bytes()


def test_json_and_svg_formats(tmp_path):
    assert main(["heatmap", "--out", str(tmp_path), "--format", "json", *SMALL]) == EXIT_OK
    payload = json.loads((tmp_path / "heatmap.json").read_text())
    assert payload["columns"] == list(COLUMNS["heatmap"]) and len(payload["rows"]) == 9
    assert main(["heatmap", "--out", str(tmp_path), "--format", "svg", *SMALL]) == EXIT_OK
    root = ET.parse(tmp_path / "heatmap.svg").getroot()
    assert root.tag.endswith("svg")
    assert len(root.findall("{http://www.w3.org/2000/svg}rect")) > 9


@pytest.mark.parametrize("argv", [
    ["heatmap", "--z-grid", "0:1:5"],
    ["heatmap", "--z-grid", "1:0.5:5"],
    ["heatmap", "--z-grid", "0.5:1:1"],
    ["heatmap", "--strength-grid", "0.5:1.2:3"],
    ["heatmap", "--family", "cat"],
    ["heatmap", "--jobs", "0"],
    ["regions", "--D-list", "-1"],
    ["wigner", "--eta", "1.5"],
    ["heatmap", "--bogus"],
])
def test_config_errors_exit_2(tmp_path, argv, capsys):
    assert main([*argv, "--out", str(tmp_path)]) == EXIT_CONFIG
    assert capsys.readouterr().err


def test_zero_z_message(tmp_path, capsys):
    main(["heatmap", "--z-grid", "0:1:5", "--out", str(tmp_path)])
    assert "undefined at z = 0" in capsys.readouterr().err


def test_numerical_failure_exit_3(tmp_path, monkeypatch):
    import cubicsqueeze.optimize as opt

    def boom(*a, **k):
        raise NumericalInstabilityError("forced")

    monkeypatch.setattr(opt, "optimized_xi", boom)
    assert main(["heatmap", "--out", str(tmp_path), *SMALL]) == EXIT_NUMERIC
    rows = read_csv(tmp_path / "heatmap.csv")
    assert {r[-1] for r in rows[1:]} == {"NumericalInstabilityError"}
    assert manifest(tmp_path, "heatmap")["diagnostics"]["failed_points"] == 9


def test_config_file_and_flag_precedence(tmp_path, monkeypatch):
    conf = tmp_path / "c.json"
    conf.write_text(json.dumps({"z-grid": "0.5:1:2", "strength-grid": "0.5:1:2", "format": "json"}))
    out = tmp_path / "o"
    assert main(["heatmap", "--config", str(conf), "--out", str(out), "--format", "csv"]) == EXIT_OK
    assert len(read_csv(out / "heatmap.csv")) == 5
    bad = tmp_path / "bad.json"
    bad.write_text("[1, 2]")
    assert main(["heatmap", "--config", str(bad), "--out", str(out)]) == EXIT_CONFIG
    env = tmp_path / "env"
    monkeypatch.setenv(cli.ENV_OUT, str(env))
    assert main(["heatmap", "--config", str(conf)]) == EXIT_OK
    assert (env / "heatmap.json").exists()


def test_optmaps_closed_form_values(tmp_path):
    argv = ["optmaps", "--out", str(tmp_path), "--z-grid", "1:2:2", "--strength-grid", "0.5:1:2"]
    assert main(argv) == EXIT_OK
    rows = {(float(r[0]), float(r[1])): (float(r[2]), float(r[3])) for r in read_csv(tmp_path / "optmaps.csv")[1:]}
    chi, g = rows[(1.0, 0.5)]
    assert chi == pytest.approx(0.5) and g == pytest.approx(1.5**0.25)


def test_regions_loss_files(tmp_path):
    argv = ["regions", "--out", str(tmp_path), "--family", "ideal,mixed", "--D-list", "0,0.5",
            "--z-grid", "0.5:1.5:3", "--strength-grid", "0.01:1:7", "--format", "svg"]
    assert main(argv) == EXIT_OK
    files = manifest(tmp_path, "regions")["files"]
    for name in ["regions_ideal.csv", "regions_mixed_D0.csv", "regions_mixed_D0.5.csv", "regions_inset.csv",
                 "regions_inset.svg", "regions.svg"]:
        assert name in files
    ideal = read_csv(tmp_path / "regions_ideal.csv")
    assert tuple(ideal[0]) == COLUMNS["regions"]
    inset = read_csv(tmp_path / "regions_inset.csv")
    assert tuple(inset[0]) == COLUMNS["inset"] and len(inset) > 2


def test_verify_passes_and_catches_faults(tmp_path):
    assert main(["verify", "--out", str(tmp_path / "ok"), "--cases", "2"]) == EXIT_OK
    rows = read_csv(tmp_path / "ok" / "verify.csv")
    assert tuple(rows[0]) == COLUMNS["verify"] and all(r[1] == "true" for r in rows[1:])
    assert main(["verify", "--out", str(tmp_path / "f"), "--cases", "2", "--inject-fault", "loss-closed-form"]) == EXIT_VERIFY
    assert main(["verify", "--out", str(tmp_path / "d"), "--cases", "2", "--dim", "20"]) == EXIT_VERIFY
    rows = read_csv(tmp_path / "d" / "verify.csv")
    assert any("under-truncated" in r[4] for r in rows[1:] if r[1] == "false")


def test_wigner_negativity_and_channel(tmp_path):
    assert main(["wigner", "--out", str(tmp_path / "a"), "--x-grid=-3:3:31", "--p-grid=-3:3:31"]) == EXIT_OK
    d = manifest(tmp_path / "a", "wigner")["diagnostics"]
    assert d["W_min"] < -0.01
    assert d["normalization_on_window"] == pytest.approx(1.0, abs=0.02)
    argv = ["wigner", "--out", str(tmp_path / "b"), "--family", "sup", "--u", "0", "--x-grid=-1:1:3",
            "--p-grid=-1:1:3"]
    assert main(argv) == EXIT_OK
    rows = read_csv(tmp_path / "b" / "wigner.csv")
    origin = [float(r[2]) for r in rows[1:] if float(r[0]) == 0 and float(r[1]) == 0][0]
    assert origin == pytest.approx(-1 / math.pi, abs=1e-12)


def test_version_and_help(capsys):
    assert main(["--version"]) == 0
    assert "cubicsqueeze" in capsys.readouterr().out
