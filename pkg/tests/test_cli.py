import csv
import json
import time

import numpy as np
import pytest

from trishlab._accel import worker_count
from trishlab.cli import main
from trishlab.integrate import Trajectory


def read_csv(path):
    with open(path) as fh:
        return list(csv.DictReader(fh))


def test_run_f2_trish(tmp_path, capsys):
    out = tmp_path / "run.csv"
    rc = main(["run", "--objective", "f2", "--variant", "trish", "--r", "1.5", "--delta", "3",
               "--beta", "1", "--t0", "1", "--t-end", "1e4", "--x0=3,-2", "--v0=0,0", "--out", str(out)])
    assert rc == 0
    rows = read_csv(out)
    t = np.array([float(r["t"]) for r in rows])
    assert np.all(np.diff(t) > 0) and t[0] == 1.0 and t[-1] == 1e4
    fgap = [float(r["fgap"]) for r in rows]
    assert fgap[-1] < fgap[0]


def test_run_f2_trish_moves_to_min_norm_solution(tmp_path):
    out = tmp_path / "run.csv"
    assert main(["run", "--x0=3,-2", "--t-end", "1e4", "--out", str(out)]) == 0
    d = [float(r["dist_xstar"]) for r in read_csv(out)]
    assert d[-1] < 1e-3 * d[0]
    assert all(r["E_p"] == "" for r in read_csv(out))


def test_run_f1_trishe(tmp_path, capsys):
    out = tmp_path / "f1.csv"
    assert main(["run", "--objective", "f1", "--variant", "trishe", "--x0=0.5,0.5", "--out", str(out)]) == 0
    assert "ReachedTEnd" in capsys.readouterr().out


def test_invalid_inputs_exit_2(tmp_path, capsys):
    assert main(["run", "--variant", "bogus", "--out", str(tmp_path / "a.csv")]) == 2
    assert "usage" in capsys.readouterr().err
    assert main(["run", "--objective", "nope", "--out", str(tmp_path / "a.csv")]) == 2
    assert main(["run", "--objective", "f1", "--x0=-0.95,0", "--out", str(tmp_path / "a.csv")]) == 2
    assert main(["run", "--x0=1,2,3", "--out", str(tmp_path / "a.csv")]) == 2
    with pytest.raises(SystemExit) as exc:
        main(["verify", "nosuchsuite"])
    assert exc.value.code == 2


def test_config_file_and_flag_override(tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"objective": "quadratic",
                               "objective_params": {"A": [[1, 0], [0, 2]], "b": [1, 0]},
                               "variant": "trishe", "schedule": {"kind": "power", "r": 1.0},
                               "t_end": 100.0, "x0": [0.0, 0.0]}))
    out = tmp_path / "q.csv"
    assert main(["run", "--config", str(cfg), "--t-end", "50", "--out", str(out)]) == 0
    rows = read_csv(out)
    assert float(rows[-1]["t"]) == 50.0
    assert abs(float(rows[-1]["x0"]) - 1.0) < 0.05


def test_run_with_monitor_writes_report(tmp_path, capsys):
    out = tmp_path / "m.csv"
    assert main(["run", "--variant", "trishe", "--monitor", "--lyapunov-mode", "strict",
                 "--t-end", "1e4", "--out", str(out)]) == 0
    rep = json.loads((tmp_path / "m.report.json").read_text())
    assert rep["feasibility"]["empty"] is True
    for k in ("differential", "integrated", "gradient_integral"):
        assert set(rep["inequalities"][k]) == {"checked", "violations", "max_violation", "slack"}
    rows = read_csv(out)
    assert all(r["E_p"] != "" and r["G"] != "" for r in rows)


def test_compare(tmp_path, capsys):
    out = tmp_path / "cmp"
    assert main(["compare", "--out", str(out)]) == 0
    summary = json.loads((out / "summary.json").read_text())
    assert summary["trish"]["oscillations"] < summary["trigs"]["oscillations"]
    a, b = summary["trish"]["final_fgap"], summary["trishe"]["final_fgap"]
    assert max(a, b) / min(a, b) <= 10.0
    for q in ("fgap", "dist_xstar", "gradnorm"):
        svg = (out / f"{q}.svg").read_text()
        assert svg.startswith("<svg") and "<polyline" in svg
        for ref in ("href", "<image", "url(", "<script"):
            assert ref not in svg
    header = (out / "compare.csv").read_text().splitlines()[0]
    assert header.startswith("t,fgap_trigs,")


def test_compare_identical_slots_and_reruns(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    args = ["compare", "--variants", "trish,trish", "--t-end", "200"]
    assert main(args + ["--out", str(a)]) == 0
    assert main(args + ["--out", str(b)]) == 0
    for name in ("compare.csv", "fgap.svg", "summary.json"):
        assert (a / name).read_bytes() == (b / name).read_bytes()
    rows = read_csv(a / "compare.csv")
    assert all(r["fgap_trish"] == r["fgap_trish#2"] for r in rows)


def test_verify_suites(capsys):
    t = time.perf_counter()
    assert main(["verify", "oracles"]) == 0
    assert time.perf_counter() - t < 10.0
    assert main(["verify", "theorem6"]) == 0
    out = capsys.readouterr().out
    assert "[PASS] criterion 1" in out and "[PASS] criterion 4" in out


def test_rates_on_csv(tmp_path, capsys):
    out = tmp_path / "r.csv"
    main(["run", "--t-end", "1e5", "--out", str(out)])
    capsys.readouterr()
    js = tmp_path / "rates.json"
    assert main(["rates", str(out), "--r", "1.5", "--objective", "f2", "--json", str(js)]) == 0
    text = capsys.readouterr().out
    assert "fgap" in text and "vel_grad_combo" in text
    rep = json.loads(js.read_text())
    assert rep["bounded"]["fgap"]["bounded"]
    assert main(["rates", str(tmp_path / "missing.csv")]) == 2


def test_threads_env(monkeypatch):
    monkeypatch.setenv("TRISHLAB_THREADS", "2")
    assert worker_count(8) == 2
    monkeypatch.setenv("TRISHLAB_THREADS", "junk")
    assert worker_count(3) == 3
    monkeypatch.delenv("TRISHLAB_THREADS")
    assert worker_count(5) == 5


def test_csv_floats_round_trip(tmp_path):
    out = tmp_path / "p.csv"
    main(["run", "--t-end", "100", "--out", str(out)])
    tr = Trajectory.from_csv(out)
    line = out.read_text().splitlines()[10].split(",")
    assert all(float(v) == float(format(float(v), ".17g")) for v in line if v)
    assert len(tr) > 100
