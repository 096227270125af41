"""Command line: report layout, exit codes, tolerances and determinism."""

import json
import subprocess
import sys

import pytest

from ghqk import cli

FAST = ["verify-gh", "verify-cone", "reduce-qk", "cp4d", "legendre"]


def run_main(capsys, *argv):
    code = cli.main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


class TestSubcommands:
    """Every subcommand runs and passes with its defaults."""

    @pytest.mark.parametrize("name", FAST)
    def test_passes(self, name, capsys):
        code, out, _ = run_main(capsys, name, "--samples", "2")
        report = json.loads(out)
        assert code == 0 and report["pass"]
        assert report["meta"] == {"h": None, "samples": 2, "seed": 0, "subcommand": name}
        for entry in report["checks"].values():
            assert entry["pass"] and entry["max_residual"] <= entry["tolerance"]

    def test_cmap(self, capsys):
        code, out, _ = run_main(capsys, "cmap", "--samples", "1")
        report = json.loads(out)
        assert code == 0
        assert "einstein" in report["checks"] and "signature_violations" in report["checks"]

    def test_config_file(self, tmp_path, capsys):
        cfg = tmp_path / "cfg.json"
        cfg.write_text(json.dumps({"potential": "rho1"}))
        code, out, _ = run_main(capsys, "cp4d", "--config", str(cfg), "--samples", "2")
        assert code == 0 and json.loads(out)["config"] == {"potential": "rho1"}

    def test_out_file(self, tmp_path, capsys):
        target = tmp_path / "r.json"
        code, out, _ = run_main(capsys, "verify-gh", "--samples", "1", "--out", str(target))
        assert code == 0 and out == ""
        assert json.loads(target.read_text())["pass"]


class TestExitCodes:
    """1 for failed checks, 2 for bad input."""

    def test_failing_tolerance(self, capsys):
        code, out, _ = run_main(capsys, "cp4d", "--samples", "2", "--tolerance", "einstein=0")
        report = json.loads(out)
        assert code == 1 and not report["pass"] and not report["checks"]["einstein"]["pass"]

    def test_unknown_tolerance(self, capsys):
        code, _, err = run_main(capsys, "cp4d", "--tolerance", "bogus=1")
        assert code == 2 and "unknown tolerance" in err

    def test_bad_config(self, tmp_path, capsys):
        cfg = tmp_path / "cfg.json"
        cfg.write_text(json.dumps({"data": "nowhere"}))
        code, _, err = run_main(capsys, "verify-gh", "--config", str(cfg))
        assert code == 2 and "unknown GH data" in err

    def test_unreadable_config(self, tmp_path, capsys):
        cfg = tmp_path / "cfg.json"
        cfg.write_text("{not json")
        assert run_main(capsys, "verify-gh", "--config", str(cfg))[0] == 2

    def test_bad_prepotential(self, tmp_path, capsys):
        cfg = tmp_path / "cfg.json"
        cfg.write_text(json.dumps({"prepotential": {"family": "monomial", "powers": [1, 2]}}))
        assert run_main(capsys, "cmap", "--config", str(cfg))[0] == 2

    def test_bad_potential_params(self, tmp_path, capsys):
        cfg = tmp_path / "cfg.json"
        cfg.write_text(json.dumps({"potential": "linear-combo", "params": {"a": 1}}))
        code, _, err = run_main(capsys, "cp4d", "--config", str(cfg), "--samples", "1")
        assert code == 2 and "bad potential" in err

    @pytest.mark.parametrize(
        "sub, cfg",
        [
            ("verify-gh", {"data": [1]}),
            ("verify-cone", {"obstruction_data": {}}),
            ("cmap", {"prepotential": "quadratic"}),
            ("cmap", {"heavy_samples": -1}),
            ("cmap", {"prepotential": {"family": "quadratic", "C": [[0.0, 0.0]]}}),
        ],
    )
    def test_malformed_fields(self, sub, cfg, tmp_path, capsys):
        path = tmp_path / "cfg.json"
        path.write_text(json.dumps(cfg))
        assert run_main(capsys, sub, "--config", str(path), "--samples", "1")[0] == 2

    def test_empty_signature_domain_fails_honestly(self, tmp_path, capsys):
        path = tmp_path / "cfg.json"
        path.write_text(json.dumps({"prepotential": {"family": "quadratic", "C": [[0.0, -0.5]]}}))
        code, out, _ = run_main(capsys, "cmap", "--config", str(path), "--samples", "1")
        sig = json.loads(out)["checks"]["signature_violations"]
        assert code == 1 and not sig["pass"] and "no admissible sample" in sig["error"]

    def test_zero_samples(self, capsys):
        assert run_main(capsys, "verify-gh", "--samples", "0")[0] == 2

    def test_malformed_tolerance(self, capsys):
        with pytest.raises(SystemExit) as exc:
            cli.main(["verify-gh", "--tolerance", "nonsense"])
        assert exc.value.code == 2


class TestDeterminism:
    """Same inputs give byte-identical reports."""

    def test_same_seed(self, capsys):
        a = run_main(capsys, "reduce-qk", "--samples", "2", "--seed", "5")[1]
        b = run_main(capsys, "reduce-qk", "--samples", "2", "--seed", "5")[1]
        c = run_main(capsys, "reduce-qk", "--samples", "2", "--seed", "6")[1]
        assert a == b
        assert a != c

    def test_sorted_keys(self, capsys):
        report = json.loads(run_main(capsys, "verify-gh", "--samples", "1")[1])
        assert list(report) == sorted(report)
        assert list(report["checks"]) == sorted(report["checks"])

    def test_module_entry_point(self):
        proc = subprocess.run(
            [sys.executable, "-m", "ghqk", "verify-gh", "--samples", "1"], capture_output=True, text=True, check=False
        )
        assert proc.returncode == 0 and json.loads(proc.stdout)["pass"]
