import csv
import json
import subprocess
import sys

import numpy as np
import pytest

from coolctl import io as cio
from coolctl.cli import main
from coolctl.quantum import SIGMA_X


def write_config(tmp_path, cfg, name="cfg.json"):
    p = tmp_path / name
    p.write_text(json.dumps(cfg))
    return str(p)


def read_csv(path):
    with open(path) as fh:
        rows = list(csv.reader(fh))
    return rows[0], rows[1:]


def last_json(capsys):
    return json.loads(capsys.readouterr().out)


class TestConfig:
    def test_matrix_round_trip(self):
        m = np.array([[1 + 2j, 0], [-0.5j, 3]])
        np.testing.assert_array_equal(cio.matrix_from_json(cio.matrix_to_json(m)), m)

    def test_bad_matrix(self):
        with pytest.raises(cio.ConfigError):
            cio.matrix_from_json([[1, 2], [3, 4]])

    def test_explicit_system(self):
        cfg = {"dimension": 2, "lindblad_terms": [cio.matrix_to_json([[0, 1], [0, 0]])],
               "hamiltonian": cio.matrix_to_json(np.diag([1.0, -1.0]))}
        sys_ = cio.system_from_config(cfg)
        assert sys_.n == 2 and sys_.h0[0, 0] == 1

    @pytest.mark.parametrize("cfg", [
        {"builtin": "vsys", "lindblad_terms": []},
        {},
        {"builtin": "nope"},
        {"lindblad_terms": []},
        {"dimension": 3, "lindblad_terms": [[[[0, 0], [1, 0]], [[0, 0], [0, 0]]]]},
        [1, 2],
    ])
    def test_invalid(self, cfg):
        with pytest.raises(cio.ConfigError):
            cio.system_from_config(cfg)

    def test_builtin_params(self):
        sys_ = cio.system_from_config({"builtin": "vsys", "params": {"gamma1": 2, "gamma2": 3}})
        assert abs(sys_.terms[1][0, 2]) ** 2 == pytest.approx(3)

    def test_fmt(self):
        assert cio.fmt(None) == "" and cio.fmt(float("inf")) == ""
        x = 0.1 + 0.2
        assert float(cio.fmt(x)) == x


class TestCoolable:
    def test_qubit_rank_one(self, tmp_path, capsys):
        cfg = write_config(tmp_path, {"builtin": "qubit_rank_one", "params": {"nu": 0.5}})
        assert main(["coolable", "--config", cfg]) == 0
        assert last_json(capsys)["coolable"] is True

    def test_sigma_x(self, tmp_path, capsys):
        cfg = write_config(tmp_path, {"lindblad_terms": [cio.matrix_to_json(SIGMA_X)]})
        out = tmp_path / "v.json"
        assert main(["coolable", "--config", cfg, "--out", str(out)]) == 2
        assert json.loads(out.read_text())["coolable"] is False

    def test_malformed(self, tmp_path):
        p = tmp_path / "bad.json"
        p.write_text("{not json")
        assert main(["coolable", "--config", str(p)]) == 1

    def test_missing_file(self, tmp_path):
        assert main(["coolable", "--config", str(tmp_path / "nope.json")]) == 1

    @pytest.mark.parametrize("tag", ["lambda", "vsys", "spinspin"])
    def test_builtins(self, tmp_path, tag):
        assert main(["coolable", "--config", write_config(tmp_path, {"builtin": tag})]) == 0


class TestMuCurve:
    def test_rows(self, tmp_path):
        out = tmp_path / "mu.csv"
        assert main(["mu-curve", "--nu", "0.5", "--grid", "10", "--out", str(out)]) == 0
        header, rows = read_csv(out)
        assert header == ["lambda", "mu", "branch"]
        assert len(rows) == 11
        assert float(rows[0][1]) == pytest.approx(1.0)
        assert float(rows[-1][1]) == pytest.approx(0.0, abs=1e-15)
        assert rows[0][2] == "1" and rows[-1][2] == "2"

    def test_stdout(self, capsys):
        assert main(["mu-curve", "--nu", "0.25", "--grid", "4"]) == 0
        assert len(capsys.readouterr().out.strip().splitlines()) == 6

    @pytest.mark.parametrize("nu", ["1.0", "-0.1"])
    def test_bad_nu(self, nu):
        assert main(["mu-curve", "--nu", nu]) == 1

    def test_usage(self):
        assert main(["mu-curve"]) == 1
        assert main([]) == 1


class TestQubitOptimal:
    def test_summary_and_csv(self, tmp_path, capsys):
        out = tmp_path / "opt.csv"
        assert main(["qubit-optimal", "--nu", "0.5", "--t-end", "6", "--dt", "0.01",
                     "--out", str(out)]) == 0
        summary = last_json(capsys)
        assert summary["t0"] == pytest.approx(1.43341, abs=1e-5)
        assert summary["c"] == pytest.approx(1.2719725, abs=1e-7)
        header, rows = read_csv(out)
        assert header[:4] == ["t", "lambda_star", "y_star", "u_y"]
        assert len(rows) == 601
        assert float(rows[0][1]) == 0.0 and float(rows[0][2]) == 0.0
        blanks = [r for r in rows if r[3] == ""]
        assert len(blanks) == 1 and abs(float(blanks[0][0]) - summary["t0"]) <= 0.005
        saved = json.loads(out.with_suffix(".summary.json").read_text())
        assert saved == summary

    def test_limit(self, capsys):
        assert main(["qubit-optimal", "--nu", "0.5", "--t-end", "200", "--dt", "0.5"]) == 0
        assert last_json(capsys)["y_final"] == pytest.approx(0.19591, abs=1e-5)

    def test_nu_zero(self, capsys):
        assert main(["qubit-optimal", "--nu", "0", "--t-end", "1"]) == 0
        assert last_json(capsys)["t0"] is None

    def test_bad_dt(self):
        assert main(["qubit-optimal", "--nu", "0.5", "--dt", "0"]) == 1


class TestSchedule:
    def run(self, tmp_path, capsys, *extra, tag="vsys"):
        cfg = write_config(tmp_path, {"builtin": tag, "params": {"gamma1": 1, "gamma2": 2}})
        out = tmp_path / "sched.json"
        code = main(["schedule", "--config", cfg, "--out", str(out), *extra])
        return code, (json.loads(out.read_text()) if code == 0 else None), out

    def test_unclamped(self, tmp_path, capsys):
        code, data, out = self.run(tmp_path, capsys, "--lam0", "0.5,0.3,0.2", "--eps", "0.1")
        assert code == 0
        assert all(s["duration"] > 0 for s in data["segments"])
        assert data["verification_residual"] <= 1e-8
        header, rows = read_csv(out.with_suffix(".csv"))
        assert header == ["t", "lambda_1", "lambda_2", "lambda_3"]
        assert float(rows[-1][0]) == pytest.approx(data["total_time"])

    def test_clamped(self, tmp_path, capsys):
        code, data, _ = self.run(tmp_path, capsys, "--lam0", "0.5,0.3,0.2", "--eps", "0.4")
        assert code == 0 and data["clamped"]
        assert data["segments"][1]["duration"] == 0.0
        assert data["verification_residual"] <= 1e-8

    def test_eps_out_of_range(self, tmp_path, capsys):
        code, _, _ = self.run(tmp_path, capsys, "--lam0", "0.5,0.3,0.2", "--eps", "0.9")
        assert code == 1

    def test_missing_arguments(self, tmp_path, capsys):
        assert self.run(tmp_path, capsys, "--eps", "0.1")[0] == 1
        assert self.run(tmp_path, capsys, "--lam0", "0.5,0.3,0.2")[0] == 1
        assert self.run(tmp_path, capsys, "--lam0", "0.5,0.6,0.2", "--eps", "0.1")[0] == 1

    def test_spin_spin_budget(self, tmp_path, capsys):
        code, data, _ = self.run(tmp_path, capsys, "--lam0", "0.4,0.3,0.2,0.1", "--budget", "2",
                                 "--cost", "entropy", tag="spinspin")
        assert code == 0
        assert data["total_time"] == pytest.approx(2.0)
        assert data["verification_residual"] <= 1e-8

    def test_unsupported_system(self, tmp_path, capsys):
        code, _, _ = self.run(tmp_path, capsys, "--lam0", "0.5,0.3,0.2", "--eps", "0.1", tag="lambda")
        assert code == 1


class TestVerify:
    def test_defaults(self, tmp_path, capsys):
        cfg = write_config(tmp_path, {"builtin": "spinspin"})
        assert main(["verify", "--config", cfg]) == 0
        data = last_json(capsys)
        assert data["seed"] == 1
        assert data["conjecture"]["max_facet_violation"] <= 1e-9
        assert data["j_bound"]["max_violation"] <= 1e-9

    def test_zero_samples(self, tmp_path, capsys):
        cfg = write_config(tmp_path, {"builtin": "spinspin"})
        assert main(["verify", "--config", cfg, "--samples", "0"]) == 0
        data = last_json(capsys)
        assert data["conjecture"]["max_facet_violation"] is None
        assert data["conjecture"]["worst_case"] is None

    def test_self_test_flags(self, tmp_path, capsys):
        cfg = write_config(tmp_path, {"builtin": "spinspin"})
        assert main(["verify", "--config", cfg, "--samples", "50", "--lam-count", "2",
                     "--self-test"]) == 3
        assert last_json(capsys)["conjecture"]["planted"]["flagged"]

    def test_j_bounds_only(self, tmp_path, capsys):
        cfg = write_config(tmp_path, {"builtin": "vsys"})
        out = tmp_path / "r.json"
        assert main(["verify", "--config", cfg, "--samples", "500", "--out", str(out)]) == 0
        data = json.loads(out.read_text())
        assert "conjecture" not in data and data["j_bound"]["samples"] == 500

    def test_seed_env_and_determinism(self, tmp_path, capsys, monkeypatch):
        cfg = write_config(tmp_path, {"builtin": "spinspin"})
        monkeypatch.setenv("COOLCTL_SEED", "7")
        args = ["verify", "--config", cfg, "--samples", "100", "--lam-count", "3"]
        assert main(args) == 0
        first = capsys.readouterr().out
        assert main(args) == 0
        assert capsys.readouterr().out == first
        assert json.loads(first)["seed"] == 7

    def test_bad_seed_env(self, tmp_path, monkeypatch):
        cfg = write_config(tmp_path, {"builtin": "spinspin"})
        monkeypatch.setenv("COOLCTL_SEED", "abc")
        assert main(["verify", "--config", cfg, "--samples", "0"]) == 1


def test_module_entry_point():
    res = subprocess.run([sys.executable, "-m", "coolctl", "--help"], capture_output=True, text=True)
    assert res.returncode == 0 and "qubit-optimal" in res.stdout
