"""Command-line interface: exit codes, outputs, overrides."""

import json

import numpy as np
import pytest

from agesched import StationarySolution, parse_experiment
from agesched.cli import main

TINY = {
    "network": {
        "links": 4,
        "weights": 1.0,
        "interference": {"kofn": 2},
        "channel": {"good": 0.9, "bad": 0.1, "theta": 0.25},
    },
    "policies": [
        {"kind": "stationary"},
        {"kind": "age", "beta": 1.0},
    ],
    "horizon": 500,
    "seeds": [1],
}


def _write(tmp_path, name, doc) -> str:
    path = tmp_path / name
    path.write_text(json.dumps(doc))
    return str(path)


def test_validate_prints_hash(tmp_path, capsys):
    rc = main(["validate", "--config", _write(tmp_path, "exp.json", TINY)])
    assert rc == 0
    out = capsys.readouterr().out
    assert "ok" in out
    assert parse_experiment(TINY).hash in out


def test_validate_sweep_lists_point_hashes(tmp_path, capsys):
    sweep = {"axis": "theta", "values": [0.0, 0.5], "base": TINY}
    rc = main(["validate", "--config", _write(tmp_path, "sweep.json", sweep)])
    assert rc == 0
    out = capsys.readouterr().out
    assert "theta" in out and out.count(":") >= 3


def test_invalid_config_exits_1(tmp_path, capsys):
    doc = {**TINY, "policies": []}
    rc = main(["validate", "--config", _write(tmp_path, "bad.json", doc)])
    assert rc == 1
    assert "policies" in capsys.readouterr().err


def test_missing_file_exits_3(tmp_path, capsys):
    rc = main(["validate", "--config", str(tmp_path / "nope.json")])
    assert rc == 3
    assert "error" in capsys.readouterr().err


def test_solver_failure_exits_2(tmp_path, capsys, monkeypatch):
    import agesched.cli as cli

    def unconverged(spec, tol=1e-9, max_iter=100_000):
        return StationarySolution(
            support=((0,),),
            probs=(1.0,),
            freqs=np.ones(1),
            peak_opt=1.0,
            gap=1.0,
            converged=False,
            iterations=max_iter,
        )

    monkeypatch.setattr(cli, "solve_stationary", unconverged)
    rc = main(["solve", "--config", _write(tmp_path, "exp.json", TINY)])
    assert rc == 2
    assert "error" in capsys.readouterr().err


def test_solve_prints_solution_payload(tmp_path, capsys):
    rc = main(["solve", "--config", _write(tmp_path, "exp.json", TINY)])
    assert rc == 0
    payload = json.loads(capsys.readouterr().out)
    assert payload["config_hash"] == parse_experiment(TINY).hash
    assert payload["kofn"] == 2
    assert len(payload["freqs"]) == 4
    assert payload["peak_opt"] > 0
    assert payload["avg_lower_bound"] == pytest.approx(0.5 * (payload["peak_opt"] + 4.0))
    np.testing.assert_allclose(
        [sum(p for m, p in zip(payload["support"], payload["probs"]) if e in m) for e in range(4)],
        payload["freqs"],
        atol=1e-9,
    )


def test_solve_writes_file_with_out(tmp_path, capsys):
    out = tmp_path / "sol.json"
    rc = main(["solve", "--config", _write(tmp_path, "exp.json", TINY), "--out", str(out)])
    assert rc == 0
    assert json.loads(out.read_text())["kofn"] == 2


def test_simulate_writes_outputs(tmp_path):
    rc = main(
        [
            "simulate",
            "--config", _write(tmp_path, "exp.json", TINY),
            "--out", str(tmp_path / "run" / "exp"),
        ]
    )
    assert rc == 0
    assert (tmp_path / "run" / "exp_results.csv").exists()
    assert (tmp_path / "run" / "exp_bounds.csv").exists()
    assert (tmp_path / "run" / "exp_manifest.json").exists()


def test_simulate_rejects_sweep_config(tmp_path, capsys):
    sweep = {"axis": "theta", "values": [0.0], "base": TINY}
    rc = main(
        [
            "simulate",
            "--config", _write(tmp_path, "sweep.json", sweep),
            "--out", str(tmp_path / "x"),
        ]
    )
    assert rc == 1
    assert "sweep" in capsys.readouterr().err


def test_sweep_requires_sweep_config(tmp_path, capsys):
    rc = main(
        [
            "sweep",
            "--config", _write(tmp_path, "exp.json", TINY),
            "--out", str(tmp_path / "x"),
        ]
    )
    assert rc == 1


def test_overrides_change_the_config_hash(tmp_path, capsys):
    base_hash = parse_experiment(TINY).hash
    rc = main(
        [
            "simulate",
            "--config", _write(tmp_path, "exp.json", TINY),
            "--out", str(tmp_path / "o" / "exp"),
            "--seeds", "7",
            "--horizon", "300",
        ]
    )
    assert rc == 0
    manifest = json.loads((tmp_path / "o" / "exp_manifest.json").read_text())
    (hash_,) = manifest
    assert hash_ != base_hash
    entry = manifest[hash_]
    assert entry["config"]["horizon"] == 300
    assert entry["config"]["seeds"] == [7]


def test_sweep_then_plotdata_end_to_end(tmp_path):
    sweep = {"axis": "theta", "values": [0.0, 0.5], "base": TINY}
    rc = main(
        [
            "sweep",
            "--config", _write(tmp_path, "sweep.json", sweep),
            "--out", str(tmp_path / "run" / "th"),
        ]
    )
    assert rc == 0
    rc = main(
        [
            "plotdata",
            "--inputs", str(tmp_path / "run"),
            "--out", str(tmp_path / "plots"),
        ]
    )
    assert rc == 0
    assert (tmp_path / "plots" / "fig2_peak_vs_theta.csv").exists()
    assert (tmp_path / "plots" / "fig2_peak_vs_theta.png").exists()
    assert (tmp_path / "plots" / "fig3_avg_vs_theta.csv").exists()


def test_plotdata_no_figures_flag(tmp_path):
    sweep = {"axis": "theta", "values": [0.0], "base": TINY}
    main(
        [
            "sweep",
            "--config", _write(tmp_path, "sweep.json", sweep),
            "--out", str(tmp_path / "run" / "th"),
        ]
    )
    rc = main(
        [
            "plotdata",
            "--inputs", str(tmp_path / "run"),
            "--out", str(tmp_path / "plots"),
            "--no-figures",
        ]
    )
    assert rc == 0
    assert (tmp_path / "plots" / "fig2_peak_vs_theta.csv").exists()
    assert not list((tmp_path / "plots").glob("*.png"))


def test_plotdata_missing_inputs_exits_3(tmp_path, capsys):
    rc = main(["plotdata", "--inputs", str(tmp_path / "empty"), "--out", str(tmp_path / "p")])
    assert rc == 3
