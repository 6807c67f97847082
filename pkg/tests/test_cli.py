import json
import subprocess
import sys

import numpy as np
import pytest

from cpscan.cli import main
from cpscan.dataset import read_dataset

FAST = {"hidden": [4], "batch_size": 64, "train": {"max_epochs": 5, "lr": 0.01}}


def _write(path, obj):
    path.write_text(json.dumps(obj))
    return str(path)


def _generate(tmp_path, **spec):
    spec = {"family": "mean_shift", "N": 1, "gap_range": [100, 100], "sigma": 0.1, **spec}
    out = tmp_path / "gen"
    assert main(["generate", "--spec", _write(tmp_path / "g.json", spec), "--out", str(out)]) == 0
    return out


def _detect(tmp_path, data, *extra, name="det"):
    out = tmp_path / name
    code = main(["detect", str(data), "--spec", _write(tmp_path / "d.json", FAST),
                 "--out", str(out), *extra])
    assert code == 0
    return out


def test_generate_writes_dataset_and_manifest(tmp_path, capsys):
    out = _generate(tmp_path, seed=4)
    man = json.loads((out / "data.json").read_text())
    assert man["tau"] == [100] and man["n_rows"] == 200 and man["seed"] == 4
    run = json.loads((out / "run_manifest.json").read_text())
    assert run["command"] == "generate"
    assert {"data", "manifest"} <= set(run["outputs"])
    ds = read_dataset(out / "data.csv")
    assert ds.X.shape == (200, 1) and ds.Y.shape == (200, 1)


def test_generate_seed_flag_overrides_spec(tmp_path):
    (tmp_path / "a").mkdir()
    (tmp_path / "b").mkdir()
    a = _generate(tmp_path / "a", seed=1)
    b = _generate(tmp_path / "b", seed=1)
    assert (a / "data.csv").read_bytes() == (b / "data.csv").read_bytes()
    spec = _write(tmp_path / "s.json", {"family": "mean_shift", "seed": 1})
    main(["generate", "--spec", spec, "--seed", "2", "--out", str(tmp_path / "c")])
    assert json.loads((tmp_path / "c" / "data.json").read_text())["seed"] == 2


def test_var_raw_output_and_lags(tmp_path):
    out = _generate(tmp_path, family="var", h=3, lags=4, N=1, gap_range=[60, 60], sigma=0.5)
    raw = read_dataset(out / "raw.csv", lags=4)
    assert raw.X.shape[1] == 4 * 3
    flat = read_dataset(out / "data.csv")
    np.testing.assert_allclose(raw.X, flat.X)


def test_detect_evaluate_round_trip(tmp_path, capsys):
    gen = _generate(tmp_path, levels=[0.0, 5.0])
    capsys.readouterr()
    det = _detect(tmp_path, gen / "data.csv", "--t0", "20", "--pi", "50", "--seed", "3")
    printed = json.loads(capsys.readouterr().out)
    obj = json.loads((det / "detection.json").read_text())
    assert obj["change_points"] == printed["change_points"]
    assert (obj["T1"], obj["T2"], obj["T3"]) == (20, 20, 40)
    assert obj["curve_ref"] == "curve.csv" and (det / "curve.csv").exists()
    assert obj["config"]["seed"] == 3

    assert main(["evaluate", "--truth", str(gen / "data.json"),
                 "--estimates", str(det / "detection.json"),
                 "--out", str(tmp_path / "report.json")]) == 0
    report = json.loads(capsys.readouterr().out)
    assert report["margin"] == 40 and report["n_true"] == 1
    assert json.loads((tmp_path / "report.json").read_text()) == report


def test_t0_flag_on_1138_rows(tmp_path):
    gen = _generate(tmp_path, gap_range=[569, 569])
    det = _detect(tmp_path, gen / "data.csv", "--t0", "30", "--stride", "50", "--pi", "1e9")
    obj = json.loads((det / "detection.json").read_text())
    assert (obj["T1"], obj["T2"], obj["T3"]) == (30, 30, 60)


def test_flags_override_spec_file(tmp_path):
    gen = _generate(tmp_path)
    spec = _write(tmp_path / "d2.json", {"detection": {**FAST, "t0": 25, "pi": 3.0}})
    main(["detect", str(gen / "data.csv"), "--spec", spec, "--pi", "7", "--out",
          str(tmp_path / "o")])
    obj = json.loads((tmp_path / "o" / "detection.json").read_text())
    assert obj["T1"] == 25 and obj["pi"] == 7.0


def test_detection_is_byte_identical_across_workers(tmp_path):
    gen = _generate(tmp_path)
    a = _detect(tmp_path, gen / "data.csv", "--t0", "20", "--stride", "2", "--workers", "1",
                name="w1")
    b = _detect(tmp_path, gen / "data.csv", "--t0", "20", "--stride", "2", "--workers", "2",
                name="w2")
    assert (a / "detection.json").read_bytes() == (b / "detection.json").read_bytes()
    assert (a / "curve.csv").read_bytes() == (b / "curve.csv").read_bytes()


def test_evaluate_plain_text_needs_margin(tmp_path, capsys):
    gen = _generate(tmp_path)
    est = tmp_path / "est.txt"
    est.write_text("95\n")
    with pytest.raises(SystemExit) as exc:
        main(["evaluate", "--truth", str(gen / "data.json"), "--estimates", str(est)])
    assert exc.value.code == 2
    capsys.readouterr()
    main(["evaluate", "--truth", str(gen / "data.json"), "--estimates", str(est),
          "--margin", "10"])
    report = json.loads(capsys.readouterr().out)
    assert report["mean_distance"] == 5.0 and report["recall"] == 1.0


def test_experiment_outputs(tmp_path, capsys):
    spec = {"repetitions": 2, "seed": 5,
            "generator": {"family": "mean_shift", "N": 1, "gap_range": [60, 60],
                          "levels": [0.0, 4.0], "sigma": 0.1},
            "detection": {**FAST, "t0": 15, "pi": 20.0},
            "sweep": {"sigma": [0.1, 0.2]}}
    out = tmp_path / "exp"
    assert main(["experiment", "--spec", _write(tmp_path / "x.json", spec),
                 "--out", str(out)]) == 0
    lines = [json.loads(line) for line in capsys.readouterr().out.splitlines()]
    assert [d["group"] for d in lines] == ["sigma=0.1", "sigma=0.2"]
    assert sorted(p.name for p in (out / "runs").iterdir()) == [
        "sigma_0.1_rep000.json", "sigma_0.1_rep001.json",
        "sigma_0.2_rep000.json", "sigma_0.2_rep001.json"]
    rows = (out / "summary.csv").read_text().splitlines()
    assert rows[0].startswith("group,rep,seed") and len(rows) == 1 + 2 * 3


@pytest.mark.parametrize("argv", [
    ["detect"],
    ["detect", "x.csv", "--out", "o", "--t0", "0"],
    ["detect", "x.csv", "--out", "o", "--pi", "bogus"],
    ["evaluate", "--truth", "t.json", "--estimates", "e.txt", "--margin", "-1"],
    ["nosuch"],
])
def test_usage_errors_exit_2(argv, capsys):
    with pytest.raises(SystemExit) as exc:
        main(argv)
    assert exc.value.code == 2
    err = capsys.readouterr().err.strip().splitlines()
    assert len(err) == 1 and "error: UsageError:" in err[0]


def test_runtime_errors_exit_1(tmp_path, capsys):
    gen = _generate(tmp_path)
    with pytest.raises(SystemExit) as exc:
        main(["detect", str(gen / "data.csv"), "--t0", "150", "--out", str(tmp_path / "o")])
    assert exc.value.code == 1
    assert capsys.readouterr().err.startswith("cpscan: error: SeriesTooShortError:")
    with pytest.raises(SystemExit) as exc:
        main(["detect", str(tmp_path / "missing.csv"), "--out", str(tmp_path / "o")])
    assert exc.value.code == 1


def test_unknown_spec_key_is_usage_error(tmp_path, capsys):
    spec = _write(tmp_path / "g.json", {"family": "mean_shift", "wrong": 1})
    with pytest.raises(SystemExit) as exc:
        main(["generate", "--spec", spec, "--out", str(tmp_path / "o")])
    assert exc.value.code in (1, 2)
    assert "wrong" in capsys.readouterr().err


def test_console_entry_point():
    proc = subprocess.run([sys.executable, "-m", "cpscan.cli", "--version"],
                          capture_output=True, text=True)
    assert proc.returncode == 0 and proc.stdout.startswith("cpscan ")
