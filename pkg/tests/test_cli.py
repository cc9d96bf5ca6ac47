import json

import pytest

from hiergc.cli import main


def run_cli(capsys, *argv):
    code = main(list(argv))
    captured = capsys.readouterr()
    return code, captured.out, captured.err


def test_plan_example1(capsys):
    code, out, _ = run_cli(capsys, "plan", "--preset", "example-1")
    assert code == 0
    assert "D/K = 4/9" in out
    assert "D_con/K = 2/3" in out  # 6/9 reduced
    doc = json.loads(out[out.index("{"):])
    assert doc["hgc_min_load"] == "4/9"
    assert doc["allocation"] == {"K": 9, "n_i": [6, 6, 6], "D": 4}
    assert doc["feasible"] is True


def test_plan_with_multilayer_section(tmp_path, capsys):
    cfg = {
        "topology": {"n": 3, "m": [3, 3, 3]},
        "tolerance": {"s_e": 1, "s_w": 1},
        "layers": {"fanouts": [3, 3], "tolerances": [1, 1]},
    }
    path = tmp_path / "c.json"
    path.write_text(json.dumps(cfg))
    code, out, _ = run_cli(capsys, "plan", "--config", str(path))
    assert code == 0
    assert "multilayer bound D/K = 4/9" in out


def test_verify_example1(capsys, tmp_path):
    code, out, _ = run_cli(capsys, "verify", "--preset", "example-1", "--out", str(tmp_path))
    assert code == 0
    assert "81/81 patterns pass" in out
    doc = json.loads((tmp_path / "verification.json").read_text())
    assert doc["patterns"] == 81 and doc["passed"] == 81


def test_build_scheme_then_verify_roundtrip(capsys, tmp_path):
    code, _, _ = run_cli(capsys, "build-scheme", "--preset", "example-1", "--out", str(tmp_path))
    assert code == 0
    scheme_file = tmp_path / "scheme.json"
    assert scheme_file.exists()
    code, out, _ = run_cli(capsys, "verify", "--scheme", str(scheme_file), "--out", str(tmp_path))
    assert code == 0
    assert "81/81" in out


def test_simulate_writes_report_samples_and_figures(capsys, tmp_path):
    code, out, _ = run_cli(
        capsys, "simulate", "--preset", "example-1", "--trials", "40", "--out", str(tmp_path)
    )
    assert code == 0
    report = json.loads((tmp_path / "report.json").read_text())
    assert {r["scheme"] for r in report["schemes"]} == {"Uncoded", "Greedy", "HGC", "HGC-JNCSS"}
    assert (tmp_path / "samples.jsonl").exists()
    assert (tmp_path / "samples.csv").read_text().startswith("scheme,K,trial,T_tol_ms")
    assert (tmp_path / "iteration_times.png").stat().st_size > 0
    assert (tmp_path / "comm_loads.png").stat().st_size > 0
    assert "fastest first" in out


def test_simulate_paper_sec6_has_seven_schemes(capsys, tmp_path):
    code, _, _ = run_cli(
        capsys, "simulate", "--preset", "paper-sec6", "--trials", "10", "--out", str(tmp_path)
    )
    assert code == 0
    report = json.loads((tmp_path / "report.json").read_text())
    assert len({r["scheme"] for r in report["schemes"]}) == 7


def test_simulate_csv_format(capsys, tmp_path):
    code, out, _ = run_cli(
        capsys, "simulate", "--preset", "example-1", "--trials", "20",
        "--out", str(tmp_path), "--format", "csv",
    )
    assert code == 0
    header = [l for l in out.splitlines() if l.startswith("scheme,")]
    assert header and header[0].startswith("scheme,K,mean_ms")


def test_simulate_trace_export(capsys, tmp_path):
    code, _, _ = run_cli(
        capsys, "simulate", "--preset", "example-1", "--trials", "10",
        "--out", str(tmp_path), "--trace", "3",
    )
    assert code == 0
    lines = (tmp_path / "traces.jsonl").read_text().strip().split("\n")
    rows = [json.loads(l) for l in lines]
    assert all("worker_totals_ms" in r and "fastest_edges" in r for r in rows)


def test_optimize_selection_report(capsys, tmp_path):
    code, out, _ = run_cli(
        capsys, "optimize", "--preset", "paper-sec6", "--trials", "4000", "--out", str(tmp_path)
    )
    assert code == 0
    doc = json.loads((tmp_path / "selection.json").read_text())
    assert set(doc) >= {"s_e", "s_w", "D", "objective_ms", "e", "w",
                        "evaluations", "skipped", "expected_gap_bound_ms"}
    assert sum(doc["e"]) == 4 - doc["s_e"]
    assert "selected tolerance" in out


def test_demo_train_outputs(capsys, tmp_path):
    code, out, _ = run_cli(capsys, "demo-train", "--preset", "example-1", "--out", str(tmp_path))
    assert code == 0
    assert (tmp_path / "trajectory.csv").exists()
    assert (tmp_path / "training_curves.png").stat().st_size > 0
    doc = json.loads((tmp_path / "demo.json").read_text())
    assert doc["max_recovery_residual"] <= 1e-9
    assert doc["final_trajectory_gap"] <= 1e-7


def test_bounds_calculator(capsys, tmp_path):
    cfg = {
        "bounds": {
            "order_stat": {"r": 2, "means": [1.0, 2.0, 3.0], "variances": [0.5, 0.5, 0.5]}
        }
    }
    path = tmp_path / "b.json"
    path.write_text(json.dumps(cfg))
    code, out, _ = run_cli(capsys, "bounds", "--config", str(path))
    assert code == 0
    doc = json.loads(out[out.index("{"):])
    assert doc["order_stat"]["bound"] > 0


def test_malformed_config_exits_1_without_outputs(capsys, tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"topology": {"n": 2, "m": [3]}}))
    out_dir = tmp_path / "out"
    code, _, err = run_cli(capsys, "plan", "--config", str(bad), "--out", str(out_dir))
    assert code == 1
    assert "topology" in err
    assert not (out_dir / "plan.json").exists()


def test_missing_config_file(capsys):
    code, _, err = run_cli(capsys, "plan", "--config", "/nonexistent/x.json")
    assert code == 1
    assert "does not exist" in err


def test_seed_override_changes_artifacts(capsys, tmp_path):
    d1, d2, d3 = tmp_path / "a", tmp_path / "b", tmp_path / "c"
    for d, seed in ((d1, "1"), (d2, "1"), (d3, "2")):
        code, _, _ = run_cli(
            capsys, "simulate", "--preset", "example-1", "--trials", "30",
            "--out", str(d), "--seed", seed,
        )
        assert code == 0
    s1 = (d1 / "samples.jsonl").read_bytes()
    assert s1 == (d2 / "samples.jsonl").read_bytes()
    assert s1 != (d3 / "samples.jsonl").read_bytes()


def test_env_var_output_dir(capsys, tmp_path, monkeypatch):
    monkeypatch.setenv("HIERGC_OUT", str(tmp_path / "env-out"))
    code, _, _ = run_cli(capsys, "plan", "--preset", "example-1")
    assert code == 0
    assert (tmp_path / "env-out" / "plan.json").exists()
