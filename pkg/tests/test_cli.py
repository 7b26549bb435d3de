"""End-to-end command line runs against the small bundled scenario."""

import json

import pytest

from wtbs_planner.cli import EXIT_INPUT, EXIT_OK, main


def run(argv, capsys):
    code = main(argv)
    out, err = capsys.readouterr()
    return code, out, err


# ---- simulate -------------------------------------------------------------------


def test_simulate_writes_outputs(mini_bundle, tmp_path, capsys):
    out = tmp_path / "out"
    code, stdout, _ = run(
        ["simulate", "--config", str(mini_bundle), "--out", str(out), "--iterations", "400"],
        capsys,
    )
    assert code == EXIT_OK
    assert "avg_rate_mbps=" in stdout
    csv_text = (out / "ratemap.csv").read_text()
    assert csv_text.startswith("row,col,lat,lon,p_cov,rate_mbps,share4\n")
    assert len(csv_text.strip().split("\n")) == 1 + 12 * 12
    png = (out / "ratemap.png").read_bytes()
    assert png[:8] == b"\x89PNG\r\n\x1a\n"
    metrics = json.loads((out / "metrics.json").read_text())
    assert metrics["avg_rate_mbps"] > 0
    assert metrics["n_cells"] == 144


def test_simulate_seed_override_changes_fingerprint(mini_bundle, tmp_path, capsys):
    outs = []
    for seed in ("1", "2"):
        out = tmp_path / f"out-{seed}"
        code, _, _ = run(
            ["simulate", "--config", str(mini_bundle), "--out", str(out),
             "--iterations", "200", "--seed", seed],
            capsys,
        )
        assert code == EXIT_OK
        outs.append(json.loads((out / "metrics.json").read_text()))
    assert outs[0]["scenario_fingerprint"] != outs[1]["scenario_fingerprint"]
    assert outs[0]["avg_rate_mbps"] != outs[1]["avg_rate_mbps"]


def test_simulate_missing_bundle(tmp_path, capsys):
    code, _, err = run(
        ["simulate", "--config", str(tmp_path / "nope"), "--out", str(tmp_path / "o")],
        capsys,
    )
    assert code == EXIT_INPUT
    assert "error:" in err


def test_simulate_bad_iterations(mini_bundle, tmp_path, capsys):
    code, _, err = run(
        ["simulate", "--config", str(mini_bundle), "--out", str(tmp_path / "o"),
         "--iterations", "0"],
        capsys,
    )
    assert code == EXIT_INPUT


def test_bad_workers_env(mini_bundle, tmp_path, capsys, monkeypatch):
    monkeypatch.setenv("WTBS_WORKERS", "several")
    code, _, err = run(
        ["simulate", "--config", str(mini_bundle), "--out", str(tmp_path / "o")],
        capsys,
    )
    assert code == EXIT_INPUT
    assert "WTBS_WORKERS" in err


def test_usage_error_is_input_error(capsys):
    assert main([]) == EXIT_INPUT
    capsys.readouterr()
    assert main(["simulate"]) == EXIT_INPUT  # --config required
    capsys.readouterr()


# ---- plan -----------------------------------------------------------------------


def test_plan_selects_the_idle_turbine(mini_bundle, tmp_path, capsys):
    out = tmp_path / "plan"
    code, stdout, _ = run(
        ["plan", "--config", str(mini_bundle), "--out", str(out),
         "--k", "1", "--iterations", "400"],
        capsys,
    )
    assert code == EXIT_OK
    assert "selected=wt-1" in stdout
    doc = json.loads((out / "plan.json").read_text())
    assert doc["selected"] == ["wt-1"]
    assert doc["metric_after"] > doc["metric_before"]
    assert doc["k"] == 1
    assert doc["candidate_ids"] == ["wt-1"]
    assert doc["method"] == "greedy"
    assert doc["delta_summary"]["max_gain_mbps"] > 0
    for name in ("before.png", "after.png", "delta.png"):
        assert (out / name).exists()


def test_plan_exhaustive_flag(mini_bundle, tmp_path, capsys):
    out = tmp_path / "plan"
    code, _, _ = run(
        ["plan", "--config", str(mini_bundle), "--out", str(out),
         "--k", "1", "--exhaustive", "--iterations", "300"],
        capsys,
    )
    assert code == EXIT_OK
    doc = json.loads((out / "plan.json").read_text())
    assert doc["method"] == "exhaustive"
    assert doc["selected"] == ["wt-1"]


def test_plan_k_zero(mini_bundle, tmp_path, capsys):
    out = tmp_path / "plan"
    code, stdout, _ = run(
        ["plan", "--config", str(mini_bundle), "--out", str(out),
         "--k", "0", "--iterations", "300"],
        capsys,
    )
    assert code == EXIT_OK
    assert "selected=(none)" in stdout
    doc = json.loads((out / "plan.json").read_text())
    assert doc["selected"] == []
    assert doc["metric_after"] == doc["metric_before"]


def test_plan_k_out_of_range(mini_bundle, tmp_path, capsys):
    code, _, err = run(
        ["plan", "--config", str(mini_bundle), "--out", str(tmp_path / "o"), "--k", "5"],
        capsys,
    )
    assert code == EXIT_INPUT
    assert "--k" in err


def test_plan_with_candidates_file(mini_bundle, tmp_path, capsys):
    cand = tmp_path / "cand.csv"
    cand.write_text(
        "id,lat,lon,structure,tech,height_m,power_w,farm_id\n"
        "cand-x,50.0135,8.0205,WT,NONE,100,11,\n"
    )
    out = tmp_path / "plan"
    code, _, _ = run(
        ["plan", "--config", str(mini_bundle), "--out", str(out),
         "--k", "2", "--candidates", str(cand), "--iterations", "300"],
        capsys,
    )
    assert code == EXIT_OK
    doc = json.loads((out / "plan.json").read_text())
    assert sorted(doc["candidate_ids"]) == ["cand-x", "wt-1"]
    assert sorted(doc["selected"]) == ["cand-x", "wt-1"]


def test_plan_rejects_equipped_candidates(mini_bundle, tmp_path, capsys):
    cand = tmp_path / "cand.csv"
    cand.write_text(
        "id,lat,lon,structure,tech,height_m,power_w,farm_id\n"
        "cand-x,50.0135,8.0205,WT,G4,100,11,\n"
    )
    code, _, err = run(
        ["plan", "--config", str(mini_bundle), "--out", str(tmp_path / "o"),
         "--k", "1", "--candidates", str(cand)],
        capsys,
    )
    assert code == EXIT_INPUT
    assert "unequipped" in err


def test_plan_missing_candidates_file(mini_bundle, tmp_path, capsys):
    code, _, err = run(
        ["plan", "--config", str(mini_bundle), "--out", str(tmp_path / "o"),
         "--k", "1", "--candidates", str(tmp_path / "ghost.csv")],
        capsys,
    )
    assert code == EXIT_INPUT


# ---- sweep-bias -----------------------------------------------------------------


def test_sweep_bias_writes_curve(mini_bundle, tmp_path, capsys):
    out = tmp_path / "sweep"
    code, stdout, _ = run(
        ["sweep-bias", "--config", str(mini_bundle), "--out", str(out),
         "--bias-list", "1,29", "--iterations", "300"],
        capsys,
    )
    assert code == EXIT_OK
    assert "best_bias=" in stdout
    lines = (out / "bias_curve.csv").read_text().strip().split("\n")
    assert lines[0] == "bias,avg_rate_mbps"
    assert len(lines) == 3
    assert [float(l.split(",")[0]) for l in lines[1:]] == [1.0, 29.0]


def test_sweep_bias_bad_list(mini_bundle, tmp_path, capsys):
    for bad in ("1,zebra", ","):
        code, _, err = run(
            ["sweep-bias", "--config", str(mini_bundle), "--out", str(tmp_path / "o"),
             "--bias-list", bad],
            capsys,
        )
        assert code == EXIT_INPUT
