import json
import subprocess
import sys

import numpy as np
import pytest

from kplane.cli import EXIT_FAIL, EXIT_OK, EXIT_USAGE, RunConfig, run
from kplane.lorentz import FactorList
from kplane.records import fmt, read_csv


def _files(path):
    return {p.name: p.read_bytes() for p in sorted(path.iterdir())}


def test_chart_map_command_writes_records(tmp_path, capsys):
    assert run(["verify-lemma1", "--seed", "7", "--out", str(tmp_path)]) == EXIT_OK
    err = capsys.readouterr().err
    assert "PASS" in err
    text = (tmp_path / "lemma1_d2_k1.csv").read_text().splitlines()
    assert text[0] == "# convention_id: kplane-haar-v1"
    cfg = json.loads(text[2].removeprefix("# config: "))
    assert cfg["seed"] == 7 and cfg["d"] == 2 and cfg["command"] == "verify-lemma1"
    rows = read_csv(tmp_path / "lemma1_d2_k1.csv")
    assert all(r["pass"] == "true" for r in rows)


def test_outputs_are_byte_identical(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    for out in (a, b):
        assert run(["verify-transfer", "--seed", "3", "--out", str(out)]) == EXIT_OK
        assert run(["ratio-curve", "--lambda", "1,2", "--order", "12", "--out", str(out)]) == EXIT_OK
    fa, fb = _files(a), _files(b)
    # the output directory is part of the recorded config; compare everything else
    strip = lambda blob, d: blob.replace(str(d).encode(), b"OUT")
    assert fa.keys() == fb.keys() and len(fa) == 2
    assert all(strip(fa[n], a) == strip(fb[n], b) for n in fa)


@pytest.mark.parametrize("argv", [
    ["bogus"],
    ["verify-lemma1", "--nonsense"],
    ["verify-lemma1", "--d", "5"],
    ["verify-lemma1", "--d", "2", "--k", "2"],
    ["verify-invariance"],  # Monte Carlo without a seed
    ["verify-drury", "--kind", "tensor_gauss", "--seed", "1"],
    ["ratio-curve", "--lambda", "4,2"],
    ["ratio-curve", "--delta", "1.5"],
    ["stability-scan", "--nu", "x"],
    ["decompose"],
])
def test_usage_errors(argv, tmp_path, capsys):
    assert run(argv + ["--out", str(tmp_path)] if argv[0] != "bogus" else argv) == EXIT_USAGE
    assert "error" in capsys.readouterr().err


def test_failing_check_exits_with_two(tmp_path, capsys):
    # truncating to radius 0.03 destroys the concentrating profile
    code = run(["ratio-curve", "--lambda", "32", "--delta", "0.97", "--order", "12", "--out", str(tmp_path)])
    assert code == EXIT_FAIL
    assert "FAIL" in capsys.readouterr().err


def test_config_file_and_flag_override(tmp_path):
    cfg = tmp_path / "run.toml"
    cfg.write_text('order = 12\nlambda = [1, 2]\nseed = 4\n')
    out = tmp_path / "o"
    assert run(["ratio-curve", "--config", str(cfg), "--order", "14", "--out", str(out)]) == EXIT_OK
    rec = json.loads((out / "ratio_curve_d2_k1.csv").read_text().splitlines()[2].removeprefix("# config: "))
    assert rec["order"] == 14 and rec["lambdas"] == [1.0, 2.0] and rec["seed"] == 4


def test_config_errors_report_location(tmp_path, capsys):
    bad = tmp_path / "bad.toml"
    bad.write_text("order = 12\nseed = = 3\n")
    assert run(["verify-lemma1", "--config", str(bad)]) == EXIT_USAGE
    assert "line 2" in capsys.readouterr().err
    unknown = tmp_path / "unknown.toml"
    unknown.write_text("colour = 1\n")
    assert run(["verify-lemma1", "--config", str(unknown)]) == EXIT_USAGE
    assert "colour" in capsys.readouterr().err


def test_decompose_prints_factor_list(tmp_path, capsys):
    M = tmp_path / "L.json"
    M.write_text(json.dumps([[1, 0, 0], [0, 1.25, -0.75], [0, -0.75, 1.25]]))
    assert run(["decompose", "--input", str(M), "--out", str(tmp_path)]) == EXIT_OK
    fl = FactorList.from_json(json.loads(capsys.readouterr().out))
    assert fl.counts()["boost"] == 1
    assert np.allclose(fl.product(), json.loads(M.read_text()), atol=1e-12)
    saved = json.loads((tmp_path / "factors.json").read_text())
    assert saved["d"] == 2 and saved["reconstruction_error"] <= 1e-10
    assert saved["config"]["input"] == str(M)


def test_decompose_rejects_non_lorentz(tmp_path):
    M = tmp_path / "M.json"
    M.write_text(json.dumps(np.eye(3).tolist()[:2]))
    assert run(["decompose", "--input", str(M), "--out", str(tmp_path)]) == EXIT_USAGE
    M.write_text(json.dumps([[2, 0, 0], [0, 1, 0], [0, 0, 1]]))
    assert run(["decompose", "--input", str(M), "--out", str(tmp_path)]) == EXIT_USAGE


def test_floats_round_trip():
    x = 0.1 + 0.2
    assert float(fmt(x)) == x and len(fmt(x).replace(".", "").lstrip("0")) == 17
    assert fmt(True) == "true" and fmt(3) == "3" and fmt(float("nan")) == "nan"


def test_run_config_defaults():
    cfg = RunConfig("verify-lemma1")
    assert cfg.header()["convention_id"] == "kplane-haar-v1"
    assert cfg.quadrature().order == 16


def test_module_entry_point(tmp_path):
    res = subprocess.run([sys.executable, "-m", "kplane", "--help"], capture_output=True, text=True)
    assert res.returncode == 0 and "verify-lemma1" in res.stdout
