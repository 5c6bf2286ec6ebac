import json
import subprocess
import sys

import pytest

from anisoflow.cli import main
from anisoflow.curve import circle

SQUARE = {"kind": "crystalline", "wulff_vertices": [[1, -1], [1, 1], [-1, 1], [-1, -1]]}
SQ_CURVE = {"type": "crystal", "anchor": [1, -1],
            "facets": [{"normal_index": k, "length": 2.0} for k in range(4)]}


@pytest.fixture
def files(tmp_path):
    def put(name, obj):
        p = tmp_path / name
        p.write_text(json.dumps(obj))
        return str(p)

    return {
        "euc": put("euc.json", {"kind": "euclidean"}),
        "cos4": put("cos4.json", {"kind": "smooth", "sigma_coeffs": [1, 0, 0, 0, 0.05]}),
        "square": put("square.json", SQUARE),
        "circle": put("circle.json", circle(64).to_dict()),
        "sq_curve": put("sq_curve.json", SQ_CURVE),
        "region": put("region.json", {"type": "region", "polygons": [
            {"shell": [[-2, -2], [2, -2], [2, 2], [-2, 2]], "holes": []}]}),
        "disk": put("disk.json", {"kind": "disk", "radius": 1.0, "n": 512}),
        "bad": put("bad.json", {"kind": "banana"}),
        "broken": str(tmp_path / "broken.json"),
        "dir": tmp_path,
        "put": put,
    }


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, out, err


def test_simulate_smooth(capsys, files):
    out = files["dir"] / "trace"
    code, so, _ = run(capsys, "simulate-smooth", "--anisotropy", files["euc"], "--curve",
                      files["circle"], "--t-max", 0.05, "--reparam-every", 0, "--out", out)
    assert code == 0
    summary = json.loads(so)
    assert summary["event"] == "t_max"
    header = (out / "diag.csv").read_text().splitlines()[0]
    assert header.split(",")[:7] == ["t", "L", "area", "max_kappa", "max_kappa_phi", "min_ux", "max_ux"]
    assert (out / "frames.json").exists() and (out / "frame_0000.svg").exists()


def test_simulate_crystal(capsys, files):
    out = files["dir"] / "ctrace"
    code, so, _ = run(capsys, "simulate-crystal", "--anisotropy", files["square"], "--curve",
                      files["sq_curve"], "--t-max", 0.6, "--out", out)
    assert code == 0
    s = json.loads(so)
    assert s["stop"] == "extinction"
    assert s["extinction_time"] == pytest.approx(0.5, abs=1e-6)
    assert json.loads((out / "events.json").read_text())["events"]


def test_strict_turns_early_stop_into_exit_3(capsys, files):
    code, _, err = run(capsys, "simulate-crystal", "--anisotropy", files["square"], "--curve",
                       files["sq_curve"], "--t-max", 0.6, "--strict", "--quiet")
    assert code == 3
    assert json.loads(err)["error"] == "numerical-event"


def test_approximate_and_regularize(capsys, files):
    rep = files["dir"] / "report.json"
    code, so, _ = run(capsys, "approximate-curve", "--anisotropy", files["square"], "--curve",
                      files["sq_curve"], "--epsilon", 0.2, "--out", rep)
    assert code == 0
    d = json.loads(rep.read_text())
    assert {"curve_out", "c_prime", "hausdorff_in_out"} <= set(d)
    assert d["rw_passed"] is True
    code, so, _ = run(capsys, "regularize-anisotropy", "--anisotropy", files["square"],
                      "--epsilon", 0.1)
    assert code == 0
    assert json.loads(so)["anisotropy"]["kind"] == "regularized"


def test_morph(capsys, files):
    out = files["dir"] / "opened.json"
    code, so, _ = run(capsys, "morph", "--op", "open", "--region", files["region"], "--body",
                      files["disk"], "--out", out)
    assert code == 0
    assert json.loads(so)["area"] == pytest.approx(16 - 4 + 3.14159, abs=1e-3)
    assert json.loads(out.read_text())["type"] == "region"


def test_refinement_table_small(capsys, files):
    code, so, _ = run(capsys, "refinement-table", "--t-max", 0.05, "--levels", 32, 64, 128,
                      "--dt-levels", 0.4, 0.2, 0.1, "--n", 64, "--out", files["dir"] / "ref")
    assert code == 0
    assert json.loads(so)["spatial_order"] > 1.8


def test_convergence_study_small(capsys, files):
    code, so, _ = run(capsys, "convergence-study", "--anisotropy", files["square"], "--curve",
                      files["sq_curve"], "--epsilons", 0.2, "--checkpoints", 0.05, "--n", 256,
                      "--dt", 1e-3, "--workers", 1, "--out", files["dir"] / "study", "--quiet")
    assert code == 0 and so == ""
    assert (files["dir"] / "study" / "table.csv").exists()


def test_config_file_overrides_flags(capsys, files):
    cfg = files["put"]("cfg.json", {"anisotropy": {"kind": "euclidean"}, "t_max": 0.01,
                                    "reparam_every": 0})
    code, so, _ = run(capsys, "simulate-smooth", "--config", cfg, "--curve", files["circle"],
                      "--t-max", 5.0)
    assert code == 0
    assert json.loads(so)["t"] == pytest.approx(0.01)


@pytest.mark.parametrize("argv", [
    ["simulate-smooth", "--anisotropy", "{bad}", "--curve", "{circle}"],
    ["simulate-smooth", "--curve", "{circle}"],
    ["simulate-crystal", "--anisotropy", "{euc}", "--curve", "{circle}"],
    ["morph", "--op", "melt", "--region", "{region}", "--body", "{disk}"],
    ["simulate-smooth", "--config", "{unknown_cfg}", "--curve", "{circle}"],
    ["no-such-command"],
])
def test_config_errors_exit_2(capsys, files, argv):
    files["unknown_cfg"] = files["put"]("unk.json", {"banana": 1})
    argv = [a.format(**files) for a in argv]
    code, _, err = run(capsys, *argv)
    assert code == 2
    msg = json.loads(err)
    assert msg["exit_code"] == 2 and msg["error"] == "config"


def test_io_errors_exit_4(capsys, files):
    code, _, err = run(capsys, "simulate-smooth", "--anisotropy", files["broken"], "--curve",
                       files["circle"])
    assert code == 4
    assert json.loads(err)["error"] == "io"
    blocker = files["dir"] / "file"
    blocker.write_text("x")
    code, _, err = run(capsys, "simulate-smooth", "--anisotropy", files["euc"], "--curve",
                       files["circle"], "--t-max", 0.001, "--out", blocker / "sub")
    assert code == 4


def test_console_entry_point_runs():
    r = subprocess.run([sys.executable, "-m", "anisoflow.cli", "--help"], capture_output=True,
                       text=True)
    assert r.returncode == 0
    for cmd in ("simulate-smooth", "simulate-crystal", "approximate-curve", "regularize-anisotropy",
                "convergence-study", "refinement-table", "morph"):
        assert cmd in r.stdout
