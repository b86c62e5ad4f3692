"""Config parsing, subcommands, exit codes, output determinism."""

import numpy as np
import pytest

import nehari_opt as no
from nehari_opt import cli
from nehari_opt.config import parse_config
from nehari_opt.fileio import read_field, write_field


def write_cfg(path, text):
    path.write_text(text, encoding="utf-8")
    return str(path)


HENON_SMALL = """
# small interval instance for fast tests
problem.preset = henon
problem.domain = interval
problem.l = 2
problem.p = 3
problem.n_elements = 200
"""

NLS_SQUARE_SMALL = """
problem.preset = nls
problem.domain = square
problem.omega = 4
problem.lambda = 10
problem.nx = 20
"""


class TestConfigParsing:
    def test_full_round_trip(self, tmp_path):
        cfg = write_cfg(
            tmp_path / "full.cfg",
            """
            problem.preset = henon
            problem.domain = disk
            problem.l = 0.5
            problem.p = 3
            problem.n_theta = 16
            problem.n_r = 8
            optimizer.sigma = 0.01
            optimizer.rho_nm = 0
            optimizer.max_iter = 50
            experiment.bisect_tol = 0.02
            experiment.p_grid = 2, 3, 4
            experiment.morse_check = true
            seed.kind = radial
            """,
        )
        rc = parse_config(cfg)
        assert rc.domain == "disk" and rc.henon_l == 0.5
        assert rc.solver.sigma == 0.01 and rc.solver.rho_nm == 0.0
        assert rc.p_grid == [2.0, 3.0, 4.0]
        assert rc.morse_check and rc.seed_kind == "radial"
        mesh = rc.build_mesh()
        assert mesh.mesh_id == "disk:16x8"

    def test_unknown_key_rejected_by_name(self, tmp_path):
        cfg = write_cfg(tmp_path / "bad.cfg", HENON_SMALL + "problem.n_elments = 10\n")
        with pytest.raises(no.ConfigError, match="problem.n_elments"):
            parse_config(cfg)

    def test_duplicate_key_rejected(self, tmp_path):
        cfg = write_cfg(tmp_path / "dup.cfg", HENON_SMALL + "problem.l = 3\n")
        with pytest.raises(no.ConfigError, match="duplicate"):
            parse_config(cfg)

    def test_optimizer_range_violation_names_the_key(self, tmp_path):
        cfg = write_cfg(tmp_path / "beta.cfg", HENON_SMALL + "optimizer.beta = 1.5\n")
        with pytest.raises(no.ConfigError, match="beta"):
            parse_config(cfg)

    def test_missing_required_preset_parameters(self, tmp_path):
        cfg = write_cfg(
            tmp_path / "nls.cfg", "problem.preset = nls\nproblem.domain = square\n"
        )
        with pytest.raises(no.ConfigError, match="omega"):
            parse_config(cfg)

    def test_non_numeric_value_rejected(self, tmp_path):
        cfg = write_cfg(tmp_path / "nan.cfg", HENON_SMALL + "optimizer.sigma = tiny\n")
        with pytest.raises(no.ConfigError, match="optimizer.sigma"):
            parse_config(cfg)

    def test_comments_and_blank_lines_ignored(self, tmp_path):
        cfg = write_cfg(
            tmp_path / "c.cfg",
            "# leading comment\n\nproblem.preset = henon  # trailing\n"
            "problem.domain = interval\nproblem.l = 1\nproblem.p = 3\n",
        )
        rc = parse_config(cfg)
        assert rc.henon_l == 1.0

    def test_henon_l_optional_until_problem_built(self, tmp_path):
        cfg = write_cfg(
            tmp_path / "sweep.cfg",
            "problem.preset = henon\nproblem.domain = interval\nproblem.p = 3\n",
        )
        rc = parse_config(cfg)
        with pytest.raises(no.ConfigError, match="problem.l"):
            rc.build_problem()

    def test_seed_file_requires_path(self, tmp_path):
        cfg = write_cfg(tmp_path / "s.cfg", HENON_SMALL + "seed.kind = file\n")
        with pytest.raises(no.ConfigError, match="seed.path"):
            parse_config(cfg)


class TestSolveCommand:
    def test_converged_run_exit_zero_and_outputs(self, tmp_path, capsys):
        cfg = write_cfg(tmp_path / "run.cfg", HENON_SMALL)
        out = tmp_path / "out"
        code = cli.main(["solve", "--config", cfg, "--out", str(out), "--no-plot"])
        assert code == 0
        assert (out / "convergence.csv").exists()
        assert (out / "solution.txt").exists()
        assert (out / "summary.txt").exists()
        text = capsys.readouterr().out
        assert "status=Converged" in text
        header = (out / "convergence.csv").read_text().splitlines()
        data_start = next(i for i, ln in enumerate(header) if not ln.startswith("#"))
        assert header[data_start] == "n,energy,grad_norm,alpha,backtracks,C_n,nehari_residual"

    def test_quiet_suppresses_stdout(self, tmp_path, capsys):
        cfg = write_cfg(tmp_path / "run.cfg", HENON_SMALL)
        code = cli.main(
            ["solve", "--config", cfg, "--out", str(tmp_path / "o"), "--quiet", "--no-plot"]
        )
        assert code == 0
        assert capsys.readouterr().out == ""

    def test_budget_exhaustion_exit_two(self, tmp_path):
        cfg = write_cfg(tmp_path / "run.cfg", HENON_SMALL + "optimizer.max_iter = 2\n")
        code = cli.main(["solve", "--config", cfg, "--out", str(tmp_path / "o"), "--no-plot"])
        assert code == 2

    def test_malformed_config_exit_one(self, tmp_path, capsys):
        cfg = write_cfg(tmp_path / "run.cfg", HENON_SMALL + "optimizer.beta = 1.5\n")
        code = cli.main(["solve", "--config", cfg, "--out", str(tmp_path / "o"), "--no-plot"])
        assert code == 1
        assert "beta" in capsys.readouterr().err

    def test_missing_config_file_exit_one(self, tmp_path):
        code = cli.main(
            ["solve", "--config", str(tmp_path / "nope.cfg"), "--out", str(tmp_path / "o")]
        )
        assert code == 1

    def test_byte_identical_reruns(self, tmp_path):
        cfg = write_cfg(tmp_path / "run.cfg", HENON_SMALL)
        out_a, out_b = tmp_path / "a", tmp_path / "b"
        assert cli.main(["solve", "--config", cfg, "--out", str(out_a), "--quiet", "--no-plot"]) == 0
        assert cli.main(["solve", "--config", cfg, "--out", str(out_b), "--quiet", "--no-plot"]) == 0
        assert (out_a / "convergence.csv").read_bytes() == (out_b / "convergence.csv").read_bytes()
        assert (out_a / "solution.txt").read_bytes() == (out_b / "solution.txt").read_bytes()

    def test_morse_summary_when_requested(self, tmp_path):
        cfg = write_cfg(tmp_path / "run.cfg", HENON_SMALL + "experiment.morse_check = true\n")
        out = tmp_path / "o"
        assert cli.main(["solve", "--config", cfg, "--out", str(out), "--quiet", "--no-plot"]) == 0
        summary = (out / "summary.txt").read_text()
        assert "morse_index=1" in summary

    def test_seed_from_field_dump(self, tmp_path):
        mesh = no.IntervalMesh(200)
        seed_path = tmp_path / "seed.txt"
        write_field(no.DiscreteField(mesh.initial_direction(), mesh), seed_path)
        cfg = write_cfg(
            tmp_path / "run.cfg",
            HENON_SMALL + f"seed.kind = file\nseed.path = {seed_path}\n",
        )
        assert cli.main(["solve", "--config", cfg, "--out", str(tmp_path / "o"), "--quiet", "--no-plot"]) == 0

    def test_figures_rendered_by_default(self, tmp_path):
        cfg = write_cfg(tmp_path / "run.cfg", HENON_SMALL)
        out = tmp_path / "o"
        assert cli.main(["solve", "--config", cfg, "--out", str(out), "--quiet"]) == 0
        assert (out / "convergence.png").exists()
        assert (out / "solution.png").exists()

    def test_solution_dump_round_trips(self, tmp_path):
        cfg = write_cfg(tmp_path / "run.cfg", HENON_SMALL)
        out = tmp_path / "o"
        assert cli.main(["solve", "--config", cfg, "--out", str(out), "--quiet", "--no-plot"]) == 0
        field = read_field(out / "solution.txt")
        assert field.mesh.mesh_id == "interval:200"
        assert np.all(np.isfinite(field.coeffs))


class TestBisectCommand:
    def test_small_interval_bisection(self, tmp_path, capsys):
        cfg = write_cfg(
            tmp_path / "b.cfg",
            "problem.preset = henon\nproblem.domain = interval\nproblem.p = 3\n"
            "problem.n_elements = 200\nexperiment.bracket_lo = 1\n"
            "experiment.bracket_hi = 2\nexperiment.bisect_tol = 0.1\n",
        )
        out = tmp_path / "o"
        code = cli.main(["bisect", "--config", cfg, "--out", str(out), "--no-plot"])
        assert code == 0
        assert "l_star=" in capsys.readouterr().out
        rows = (out / "bisect.csv").read_text().splitlines()
        assert rows[0] == "p,l_lo,l_hi,l_star,n_evals,total_iters"
        assert (out / "bisect_evaluations.csv").exists()

    def test_invalid_bracket_exit_one(self, tmp_path, capsys):
        cfg = write_cfg(
            tmp_path / "b.cfg",
            "problem.preset = henon\nproblem.domain = interval\nproblem.p = 3\n"
            "problem.n_elements = 200\nexperiment.bracket_lo = 3\n"
            "experiment.bracket_hi = 4\nexperiment.bisect_tol = 0.1\n",
        )
        code = cli.main(["bisect", "--config", cfg, "--out", str(tmp_path / "o"), "--no-plot"])
        assert code == 1
        assert "asymmetric" in capsys.readouterr().err

    def test_square_domain_rejected(self, tmp_path):
        cfg = write_cfg(
            tmp_path / "b.cfg",
            NLS_SQUARE_SMALL + "experiment.bracket_lo = 1\nexperiment.bracket_hi = 2\n",
        )
        assert cli.main(["bisect", "--config", cfg, "--out", str(tmp_path / "o")]) == 1


class TestSweepFitCommand:
    def test_small_sweep_with_threads(self, tmp_path, capsys):
        cfg = write_cfg(
            tmp_path / "s.cfg",
            "problem.preset = henon\nproblem.domain = interval\nproblem.p = 3\n"
            "problem.n_elements = 120\nexperiment.p_grid = 2, 3\n"
            "experiment.bisect_tol = 0.1\n",
        )
        out = tmp_path / "o"
        code = cli.main(
            ["sweep-fit", "--config", cfg, "--out", str(out), "--threads", "2", "--no-plot"]
        )
        assert code == 0
        text = capsys.readouterr().out
        assert "k0=" in text and "k0_minus_quarter_pi_sq=" in text
        rows = (out / "sweep.csv").read_text().splitlines()
        assert rows[0] == "p,l_lo,l_hi,l_star,n_evals,total_iters"
        assert len(rows) == 3
        assert (out / "fit.txt").exists()

    def test_missing_grid_exit_one(self, tmp_path):
        cfg = write_cfg(
            tmp_path / "s.cfg",
            "problem.preset = henon\nproblem.domain = interval\nproblem.p = 3\n",
        )
        assert cli.main(["sweep-fit", "--config", cfg, "--out", str(tmp_path / "o")]) == 1

    def test_threads_env_var_overrides_flag(self, tmp_path, monkeypatch):
        monkeypatch.setenv(cli.THREADS_ENV_VAR, "1")
        cfg = write_cfg(
            tmp_path / "s.cfg",
            "problem.preset = henon\nproblem.domain = interval\nproblem.p = 3\n"
            "problem.n_elements = 120\nexperiment.p_grid = 2, 3\n"
            "experiment.bisect_tol = 0.2\n",
        )
        code = cli.main(
            ["sweep-fit", "--config", cfg, "--out", str(tmp_path / "o"), "--threads", "8",
             "--quiet", "--no-plot"]
        )
        assert code == 0

    def test_invalid_env_var_exit_one(self, tmp_path, monkeypatch):
        monkeypatch.setenv(cli.THREADS_ENV_VAR, "lots")
        cfg = write_cfg(tmp_path / "s.cfg", HENON_SMALL)
        assert cli.main(["solve", "--config", cfg, "--out", str(tmp_path / "o")]) == 1


class TestCheckCommand:
    def test_default_instance_passes(self, tmp_path, capsys):
        cfg = write_cfg(tmp_path / "c.cfg", HENON_SMALL)
        out = tmp_path / "o"
        code = cli.main(["check", "--config", cfg, "--out", str(out)])
        assert code == 0
        text = capsys.readouterr().out
        assert "status=FAIL" not in text
        assert "check=riesz_consistency_e status=PASS" in text
        assert (out / "checks.txt").exists()

    def test_injected_linear_tolerance_fault_fails_riesz(self, tmp_path, capsys):
        cfg = write_cfg(
            tmp_path / "c.cfg", NLS_SQUARE_SMALL + "problem.lin_tol = 1e-2\n"
        )
        code = cli.main(["check", "--config", cfg, "--out", str(tmp_path / "o")])
        assert code == 4
        text = capsys.readouterr().out
        assert "check=riesz_consistency_e status=FAIL" in text

    def test_memoryless_config_checks_monotone_descent(self, tmp_path, capsys):
        cfg = write_cfg(tmp_path / "c.cfg", HENON_SMALL + "optimizer.rho_nm = 0\n")
        code = cli.main(["check", "--config", cfg, "--out", str(tmp_path / "o")])
        assert code == 0
        assert "check=monotone_descent status=PASS" in capsys.readouterr().out


class TestDiskSolveCommand:
    def test_asymmetric_disk_state_reported(self, tmp_path):
        cfg = write_cfg(
            tmp_path / "d.cfg",
            "problem.preset = henon\nproblem.domain = disk\nproblem.l = 2\n"
            "problem.p = 2\nproblem.n_theta = 32\nproblem.n_r = 32\n",
        )
        out = tmp_path / "o"
        code = cli.main(["solve", "--config", cfg, "--out", str(out), "--quiet", "--no-plot"])
        assert code == 0
        summary = dict(
            line.split("=", 1) for line in (out / "summary.txt").read_text().splitlines()
        )
        assert summary["status"] == "Converged"
        assert float(summary["mu"]) > 1e-4
        assert summary["symmetric"] == "false"
