import json
import subprocess
import sys

import numpy as np
import pytest

from epscap import cli
from epscap.capacity import SolverError
from epscap.specfile import RunConfig, SpecError, parse_channel_spec, serialize_channel_spec

MIXED = {
    "name": "mixed-bsc",
    "components": [
        {"weight": 0.5, "matrix": [[0.9, 0.1], [0.1, 0.9]], "label": "good"},
        {"weight": 0.5, "matrix": [[0.8, 0.2], [0.2, 0.8]], "label": "bad"},
    ],
    "cost": [0.0, 1.0],
}


def write(tmp_path, doc, name="spec.json"):
    path = tmp_path / name
    path.write_text(doc if isinstance(doc, str) else json.dumps(doc))
    return path


@pytest.fixture
def spec(tmp_path):
    return write(tmp_path, MIXED)


class TestParse:
    def test_two_components(self, spec):
        ch = parse_channel_spec(spec)
        assert ch.n_components == 2 and ch.labels == ("good", "bad")

    def test_weights_off(self, tmp_path):
        doc = json.loads(json.dumps(MIXED))
        doc["components"][1]["weight"] = 0.4
        with pytest.raises(SpecError, match="weights sum 0.9 ≠ 1"):
            parse_channel_spec(write(tmp_path, doc))

    def test_row_slack_accepted(self, tmp_path):
        doc = json.loads(json.dumps(MIXED))
        doc["components"][0]["matrix"][0] = [0.9, 0.1000000001]
        ch = parse_channel_spec(write(tmp_path, doc))
        assert ch.channels[0].matrix[0].sum() == pytest.approx(1.0, abs=1e-15)

    def test_row_error_has_field_path(self, tmp_path):
        doc = json.loads(json.dumps(MIXED))
        doc["components"][1]["matrix"][1] = [0.5, 0.4]
        with pytest.raises(SpecError, match=r"components\[1\]\.matrix\[1\]"):
            parse_channel_spec(write(tmp_path, doc))

    def test_missing_field(self, tmp_path):
        doc = {"components": [{"weight": 1.0}]}
        with pytest.raises(SpecError, match=r"components\[0\]: missing field 'matrix'"):
            parse_channel_spec(write(tmp_path, doc))

    def test_malformed_json_reports_position(self, tmp_path):
        with pytest.raises(SpecError, match=r"spec.json:2:"):
            parse_channel_spec(write(tmp_path, '{"components":\n [1,,]}'))

    def test_round_trip_is_bit_exact(self, tmp_path, rng):
        for _ in range(10):
            k = int(rng.integers(1, 4))
            doc = {"components": [
                {"weight": float(w), "matrix": rng.dirichlet(np.ones(3), size=2).tolist()}
                for w in rng.dirichlet(np.ones(k))
            ], "cost": rng.random(2).tolist()}
            first = parse_channel_spec(write(tmp_path, doc))
            path = tmp_path / "again.json"
            serialize_channel_spec(first, path)
            second = parse_channel_spec(path)
            assert second == first
            assert all(np.array_equal(a.matrix, b.matrix) for a, b in zip(first.channels, second.channels))


class TestConfig:
    def test_layers(self, tmp_path):
        cfg_path = write(tmp_path, {"tol": 1e-6, "threads": 2}, "cfg.json")
        cfg = RunConfig.load(cfg_path, env={"EPSCAP_THREADS": "3"}, seed=7)
        assert (cfg.tol, cfg.threads, cfg.seed) == (1e-6, 3, 7)

    def test_rejects_unknown_and_bad(self, tmp_path):
        with pytest.raises(SpecError, match="unknown"):
            RunConfig.load(write(tmp_path, {"nope": 1}, "cfg.json"), env={})
        with pytest.raises(SpecError):
            RunConfig(atom_cap=0)


class TestCommands:
    def test_capacity(self, spec, capsys):
        assert cli.main(["capacity", str(spec), "--eps", "0.25"]) == 0
        out = capsys.readouterr().out
        assert out.startswith("0.27807 bits, S={1,2}")
        assert "method: subset_solver" in out

    def test_capacity_eps_zero_is_compound(self, spec, capsys):
        assert cli.main(["capacity", str(spec), "--eps", "0"]) == 0
        assert "0.27807 bits" in capsys.readouterr().out

    def test_capacity_with_cost(self, spec, capsys):
        assert cli.main(["capacity", str(spec), "--eps", "0.25", "--cost", "0.3"]) == 0
        assert "0.23611 bits" in capsys.readouterr().out

    def test_curve_csv_and_plot(self, spec, tmp_path, capsys):
        out = tmp_path / "curve.csv"
        assert cli.main(["capacity", str(spec), "--curve", "--out", str(out)]) == 0
        lines = out.read_text().splitlines()
        assert lines[0] == "eps_lo,eps_hi,capacity_bits"
        assert len(lines) == 3
        assert (tmp_path / "curve.plot.py").exists()

    def test_fbl(self, spec, capsys):
        assert cli.main(["fbl", str(spec), "--eps", "0.25", "--n", "1,50,200"]) == 0
        rows = capsys.readouterr().out.splitlines()
        assert rows[0] == "n,feinstein_rate,metaconverse_rate,single_letter_capacity"
        for row in rows[1:]:
            _, ach, conv, _ = map(float, row.split(","))
            assert ach <= conv

    def test_fbl_sandwich_violation_aborts(self, spec, capsys, monkeypatch):
        monkeypatch.setattr(cli, "feinstein_max_rate", lambda *a, **k: 10.0)
        assert cli.main(["fbl", str(spec), "--eps", "0.25", "--n", "10"]) == cli.EXIT_SOLVER
        assert "exceeds converse" in capsys.readouterr().err

    def test_cost_curve(self, spec, capsys):
        assert cli.main(["cost-curve", str(spec), "--eps", "0.25", "--gamma", "0,0.2,0.4,0.6"]) == 0
        captured = capsys.readouterr()
        assert captured.out.splitlines()[0] == "gamma,capacity_bits"
        assert "gamma_star" in captured.err and "concavity: ok" in captured.err

    def test_cost_curve_needs_cost(self, tmp_path, capsys):
        doc = {k: v for k, v in MIXED.items() if k != "cost"}
        assert cli.main(["cost-curve", str(write(tmp_path, doc)), "--eps", "0.2", "--gamma", "0,1"]) == 2

    def test_check(self, spec, capsys):
        assert cli.main(["check", str(spec)]) == 0
        assert "well_ordered: yes" in capsys.readouterr().out

    def test_parse_error_exit(self, tmp_path, capsys):
        assert cli.main(["check", str(tmp_path / "missing.json")]) == 2
        assert "error:" in capsys.readouterr().err

    def test_cap_exit(self, spec, tmp_path, capsys):
        cfg = write(tmp_path, {"component_cap": 1}, "cfg.json")
        assert cli.main(["--config", str(cfg), "capacity", str(spec), "--eps", "0.2"]) == 4

    def test_solver_exit(self, spec, capsys, monkeypatch):
        def boom(*a, **k):
            raise SolverError("stalled")
        monkeypatch.setattr(cli, "epsilon_capacity", boom)
        assert cli.main(["capacity", str(spec), "--eps", "0.2"]) == 3

    def test_deterministic_output(self, spec, tmp_path):
        outs = []
        for i in range(2):
            out = tmp_path / f"run{i}.csv"
            cli.main(["fbl", str(spec), "--eps", "0.25", "--n", "30,60", "--out", str(out)])
            outs.append(out.read_bytes())
        assert outs[0] == outs[1]


def test_console_script(spec):
    res = subprocess.run([sys.executable, "-m", "epscap.cli", "capacity", str(spec), "--eps", "0.6"],
                         capture_output=True, text=True, check=True)
    assert res.stdout.startswith("0.53100 bits, S={1}")
