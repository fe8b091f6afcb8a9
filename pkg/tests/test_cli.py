"""End-to-end command-line behavior: outputs, exit codes, determinism."""

import json

import pytest

from cgb.cli import CSV_HEADER, RunManifest, main


def run(capsys, *argv):
    code = main(list(argv))
    captured = capsys.readouterr()
    return code, captured.out, captured.err


class TestManifest:
    def test_round_trip(self):
        manifest = RunManifest(
            manifold="torus",
            manifold_params={"big_radius": 2.0, "small_radius": 1.0},
            morse="height",
            lambdas=[0.0, 1.0],
            resolution=[32, 32],
            tolerance=5e-3,
        )
        again = RunManifest.from_dict(manifest.to_dict())
        assert again == manifest
        assert RunManifest.from_dict(again.to_dict()).to_dict() == manifest.to_dict()

    def test_unknown_fields_rejected(self):
        with pytest.raises(ValueError):
            RunManifest.from_dict({"manifld": "s2"})

    def test_validation(self):
        with pytest.raises(ValueError):
            RunManifest(lambdas=[-1.0]).validate()
        with pytest.raises(ValueError):
            RunManifest(resolution=[1, 4]).validate()
        with pytest.raises(KeyError):
            RunManifest(manifold="moebius").validate()


class TestPfaffianCommand:
    def test_sphere_pass(self, capsys, tmp_path):
        out = tmp_path / "run"
        code, stdout, _ = run(
            capsys,
            "pfaffian",
            "--manifold",
            "s2",
            "--resolution",
            "64,128",
            "--tolerance",
            "1e-3",
            "--out",
            str(out),
        )
        assert code == 0
        payload = json.loads((tmp_path / "run.json").read_text())
        assert payload["chi_known"] == 2
        assert payload["abs_error"] < 1e-3
        assert payload["resolution"] == [64, 128]

    def test_product_manifold(self, capsys):
        code, stdout, _ = run(
            capsys, "pfaffian", "--manifold", "s2xs2",
            "--resolution", "16,16,16,16", "--tolerance", "1e-2",
        )
        assert code == 0
        payload = json.loads(stdout)
        assert payload["chi_known"] == 4
        assert payload["abs_error"] < 1e-2

    def test_unknown_manifold_usage_error(self, capsys):
        code, _, err = run(capsys, "pfaffian", "--manifold", "klein")
        assert code == 2
        assert "unknown manifold" in err

    def test_tolerance_failure_exit_code(self, capsys):
        code, stdout, _ = run(
            capsys, "pfaffian", "--manifold", "s2", "--resolution", "4,4",
            "--tolerance", "1e-9",
        )
        assert code == 1


class TestIndexCommand:
    def test_torus_table(self, capsys):
        code, stdout, _ = run(capsys, "index", "--manifold", "torus", "--morse", "height")
        assert code == 0
        assert "hopf index: 0" in stdout
        assert stdout.count("torus") >= 4

    def test_requires_potential(self, capsys):
        code, _, err = run(capsys, "index", "--manifold", "torus")
        assert code == 2


class TestSweepCommand:
    def test_sphere_sweep(self, capsys, tmp_path):
        out = tmp_path / "sweep"
        code, stdout, _ = run(
            capsys,
            "sweep",
            "--manifold",
            "s2",
            "--morse",
            "height",
            "--lambda",
            "0,1,2",
            "--resolution",
            "48,96",
            "--tolerance",
            "1e-2",
            "--out",
            str(out),
        )
        assert code == 0
        csv_text = (tmp_path / "sweep.csv").read_text()
        lines = csv_text.strip().splitlines()
        assert lines[0] == CSV_HEADER
        assert len(lines) == 4
        payload = json.loads((tmp_path / "sweep.json").read_text())
        assert payload["max_deviation"] < 1e-2

    def test_deterministic_output(self, capsys, tmp_path):
        argv = [
            "sweep", "--manifold", "flat_t2", "--morse", "coscos",
            "--lambda", "0,1", "--resolution", "24,24", "--tolerance", "1e-2",
        ]
        code1, out1, _ = run(capsys, *argv)
        code2, out2, _ = run(capsys, *argv)
        assert (code1, out1) == (code2, out2)

    def test_deterministic_across_processes(self, tmp_path):
        import subprocess
        import sys

        argv = [
            sys.executable, "-m", "cgb.cli",
            "sweep", "--manifold", "s2", "--morse", "height",
            "--lambda", "0,1", "--resolution", "24,48", "--tolerance", "1e-2",
        ]
        first = subprocess.run(argv, capture_output=True, text=True)
        second = subprocess.run(argv, capture_output=True, text=True)
        assert first.returncode == second.returncode == 0
        assert first.stdout == second.stdout

    def test_manifest_file_with_overrides(self, capsys, tmp_path):
        manifest_path = tmp_path / "m.json"
        manifest_path.write_text(
            json.dumps(
                {
                    "manifold": "s2",
                    "morse": "height",
                    "lambdas": [0.0],
                    "resolution": [32, 64],
                    "tolerance": 0.05,
                }
            )
        )
        code, stdout, _ = run(
            capsys, "sweep", "--manifest", str(manifest_path), "--lambda", "0,1"
        )
        assert code == 0
        assert stdout.count("\n") >= 3


class TestSelftestCommand:
    def test_passes(self, capsys):
        code, stdout, _ = run(capsys, "selftest")
        assert code == 0
        assert "all checks passed" in stdout

    def test_rational_backend(self, capsys):
        code, stdout, _ = run(capsys, "selftest", "--backend", "rational")
        assert code == 0
        assert "backend=rational" in stdout

    def test_injected_fault_detected(self, capsys):
        code, stdout, _ = run(capsys, "selftest", "--inject-sign-fault")
        assert code == 1
        assert "FAIL" in stdout


class TestEftsCommand:
    def test_delta(self, capsys):
        code, stdout, _ = run(capsys, "efts", "delta", "x1^2", "--delta", "2")
        assert code == 0
        assert stdout.strip() == "-2*D1x1*D2x1 + 2*x1*D21x1"

    def test_cartan_pass(self, capsys):
        code, stdout, _ = run(capsys, "efts", "cartan", "d/dx1", "--delta", "2")
        assert code == 0
        assert stdout.startswith("PASS")

    def test_concordance_witness(self, capsys):
        code, stdout, _ = run(
            capsys, "efts", "concordance", "2*x1*D21x1 - 2*D1x1*D2x1", "0", "--delta", "2"
        )
        assert code == 0
        assert "WITNESS: x1^2" in stdout

    def test_concordance_infeasible(self, capsys):
        code, stdout, _ = run(capsys, "efts", "concordance", "1", "0", "--delta", "1")
        assert code == 1
        assert "INFEASIBLE" in stdout

    def test_parse_error_is_usage_error(self, capsys):
        code, _, err = run(capsys, "efts", "delta", "x1 @@ 2", "--delta", "2")
        assert code == 2
