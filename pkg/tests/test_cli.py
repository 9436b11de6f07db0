"""CLI contract: artifacts, exit codes, determinism, config merging."""

import json
import subprocess
import sys

import numpy as np
import pytest

from abcfuzz import PriorConfig, SmcConfig, read_particles_csv
from abcfuzz.cli import main


def _read_report(outdir):
    return json.loads((outdir / "report.json").read_text())


def _without_timestamp(outdir):
    data = _read_report(outdir)
    data.pop("timestamp")
    return data


class TestGenPrior:
    def test_writes_all_artifacts_and_prints_matching_rate(self, tmp_path, capsys):
        out = tmp_path / "run"
        assert main(["gen-prior", "--seed", "0", "--out", str(out)]) == 0
        for name in ("prior.csv", "slice-indices.csv", "plot-prior-histogram.dat",
                     "plot-prior-surface.dat", "report.json"):
            assert (out / name).exists(), name
        report = _read_report(out)
        printed = capsys.readouterr().out.splitlines()[0]
        assert printed == f"prior pass rate: {report['pass_rate']!r} (n=10, oracle=range)"
        assert report["slice_indices"] == [0, 1, 2]
        assert len((out / "prior.csv").read_text().splitlines()) == 11

    def test_seed_determinism_gives_identical_bytes(self, tmp_path):
        a, b = tmp_path / "a", tmp_path / "b"
        assert main(["gen-prior", "--seed", "9", "--out", str(a)]) == 0
        assert main(["gen-prior", "--seed", "9", "--out", str(b)]) == 0
        assert (a / "prior.csv").read_bytes() == (b / "prior.csv").read_bytes()
        assert _without_timestamp(a) == _without_timestamp(b)

    def test_invalid_count_exits_2_naming_the_flag(self, tmp_path, capsys):
        assert main(["gen-prior", "--n", "0", "--out", str(tmp_path)]) == 2
        assert "--n" in capsys.readouterr().err

    def test_prior_config_echo_round_trips(self, tmp_path):
        out = tmp_path / "run"
        main(["gen-prior", "--seed", "3", "--std", "2.5", "--out", str(out)])
        echo = _read_report(out)["config_echo"]["prior"]
        cfg = PriorConfig.from_dict(echo)
        assert cfg.std_dev == 2.5 and cfg.seed == 3

    def test_small_dims_skip_surface_plot(self, tmp_path):
        out = tmp_path / "run"
        assert main(["gen-prior", "--dims", "2", "--out", str(out)]) == 0
        assert not (out / "plot-prior-surface.dat").exists()


class TestRunSmc:
    def test_happy_path_artifacts_and_summary(self, tmp_path, capsys):
        out = tmp_path / "run"
        code = main(["run", "smc", "--steps", "40", "--seed", "5", "--out", str(out)])
        assert code == 0
        report = _read_report(out)
        assert report["sampler"] == "smc"
        assert report["oracle_calls"] == 10 + 40
        assert 0.0 <= report["posterior_pass_rate"] <= 1.0
        assert len((out / "posterior.csv").read_text().splitlines()) == 41
        assert len((out / "diagnostics.csv").read_text().splitlines()) == 41
        assert (out / "plot-smc-weights.dat").exists()
        summary = capsys.readouterr().out.strip()
        assert summary == (f"smc steps=40 prior_pass_rate={report['prior_pass_rate']!r} "
                           f"posterior_pass_rate={report['posterior_pass_rate']!r} "
                           f"oracle_calls=50")

    def test_config_echo_round_trips_to_the_resolved_config(self, tmp_path):
        out = tmp_path / "run"
        main(["run", "smc", "--steps", "25", "--seed", "8", "--alpha", "2.0",
              "--out", str(out)])
        echo = _read_report(out)["config_echo"]
        cfg = SmcConfig.from_dict(echo["smc"])
        assert cfg.n_steps == 25 and cfg.seed == 8
        assert cfg.likelihood.alpha == 2.0
        assert cfg.likelihood.scale == pytest.approx(100.0)  # sqrt(100) * 10
        prior_cfg = PriorConfig.from_dict(echo["prior"])
        assert prior_cfg.seed == 9  # sampler seed + 1 by default

    def test_prior_file_is_honored(self, tmp_path):
        gen_out = tmp_path / "gen"
        main(["gen-prior", "--seed", "4", "--out", str(gen_out)])
        run_out = tmp_path / "run"
        code = main(["run", "smc", "--prior", str(gen_out / "prior.csv"),
                     "--steps", "10", "--seed", "4", "--out", str(run_out)])
        assert code == 0
        echo = _read_report(run_out)["config_echo"]["prior"]
        assert echo["file"] == str(gen_out / "prior.csv")
        assert echo["n_particles"] == 10

    def test_determinism_modulo_timestamp(self, tmp_path):
        a, b = tmp_path / "a", tmp_path / "b"
        args = ["run", "smc", "--steps", "30", "--seed", "6"]
        assert main(args + ["--out", str(a)]) == 0
        assert main(args + ["--out", str(b)]) == 0
        assert _without_timestamp(a) == _without_timestamp(b)
        for name in ("posterior.csv", "diagnostics.csv", "plot-smc-weights.dat"):
            assert (a / name).read_bytes() == (b / name).read_bytes()

    def test_exec_oracle(self, tmp_path):
        out = tmp_path / "run"
        code = main(["run", "smc", "--steps", "5", "--oracle", "exec:true",
                     "--out", str(out)])
        assert code == 0
        report = _read_report(out)
        assert report["posterior_pass_rate"] == 1.0
        assert report["config_echo"]["oracle"] == {
            "kind": "exec", "command": "true", "timeout": 5.0}

    def test_target_file(self, tmp_path):
        target = tmp_path / "target.csv"
        header = ",".join(f"x{i}" for i in range(100))
        target.write_text(header + "\n" + ",".join(["0.0"] * 100) + "\n")
        out = tmp_path / "run"
        assert main(["run", "smc", "--steps", "5", "--target", str(target),
                     "--out", str(out)]) == 0

    def test_mcmc_only_flags_rejected(self, tmp_path, capsys):
        assert main(["run", "smc", "--burn-in", "5", "--out", str(tmp_path)]) == 2
        assert "--burn-in" in capsys.readouterr().err

    def test_degenerate_prior_exits_4_naming_the_step(self, tmp_path, capsys):
        prior = tmp_path / "prior.csv"
        prior.write_text("x0,x1\n1e200,1e200\n1e200,1e200\n")
        code = main(["run", "smc", "--prior", str(prior), "--steps", "5",
                     "--out", str(tmp_path / "run")])
        assert code == 4
        assert "step 0" in capsys.readouterr().err


class TestRunMcmc:
    def test_chain_length_is_steps_minus_burn_in(self, tmp_path):
        out = tmp_path / "run"
        code = main(["run", "mcmc", "--steps", "1000", "--burn-in", "100",
                     "--seed", "2", "--out", str(out)])
        assert code == 0
        report = _read_report(out)
        assert report["diagnostics"]["chain_length"] == 900
        assert len((out / "posterior.csv").read_text().splitlines()) == 901
        assert len((out / "diagnostics.csv").read_text().splitlines()) == 1001
        assert (out / "plot-mcmc-trace.dat").exists()

    def test_diagnostics_csv_columns(self, tmp_path):
        out = tmp_path / "run"
        main(["run", "mcmc", "--steps", "20", "--burn-in", "4", "--out", str(out)])
        lines = (out / "diagnostics.csv").read_text().splitlines()
        assert lines[0] == "step,x0,accepted_flag"
        assert {line.split(",")[2] for line in lines[1:]} <= {"0", "1"}

    def test_trace_all_writes_full_trace(self, tmp_path):
        out = tmp_path / "run"
        main(["run", "mcmc", "--steps", "12", "--burn-in", "2", "--trace-all",
              "--dims", "4", "--out", str(out)])
        full = read_particles_csv(out / "trace-full.csv")
        assert full.n == 12 and full.dim == 4

    def test_initial_index_flag(self, tmp_path):
        out = tmp_path / "run"
        code = main(["run", "mcmc", "--steps", "10", "--burn-in", "0",
                     "--initial-index", "0", "--step-std", "0",
                     "--out", str(out)])
        assert code == 0
        report = _read_report(out)
        assert report["diagnostics"]["acceptance_rate"] == 1.0
        assert report["config_echo"]["mcmc"]["initial_index"] == 0

    def test_burn_in_must_stay_below_steps(self, tmp_path, capsys):
        code = main(["run", "mcmc", "--steps", "10", "--burn-in", "10",
                     "--out", str(tmp_path)])
        assert code == 2
        assert "burn_in" in capsys.readouterr().err

    def test_determinism_modulo_timestamp(self, tmp_path):
        a, b = tmp_path / "a", tmp_path / "b"
        args = ["run", "mcmc", "--steps", "30", "--burn-in", "5", "--seed", "1"]
        assert main(args + ["--out", str(a)]) == 0
        assert main(args + ["--out", str(b)]) == 0
        assert _without_timestamp(a) == _without_timestamp(b)
        for name in ("posterior.csv", "diagnostics.csv", "plot-mcmc-trace.dat"):
            assert (a / name).read_bytes() == (b / name).read_bytes()


class TestCompare:
    def test_table_and_artifacts(self, tmp_path, capsys):
        out = tmp_path / "cmp"
        code = main(["compare", "--budget", "200", "--seed", "3", "--out", str(out)])
        assert code == 0
        lines = capsys.readouterr().out.splitlines()
        assert lines[0].split() == ["method", "oracle_calls", "passing", "pass_rate"]
        assert lines[1].split()[0] == "random"
        assert lines[2].split()[0] == "smc"
        assert int(lines[1].split()[1]) == int(lines[2].split()[1]) == 200
        report = _read_report(out)
        assert report["budget"] == 200
        table = (out / "compare-table.csv").read_text().splitlines()
        assert table[0] == "method,oracle_calls,passing,pass_rate"
        assert len(table) == 3

    def test_identical_seeds_identical_output_bytes(self, tmp_path, capsys):
        a, b = tmp_path / "a", tmp_path / "b"
        assert main(["compare", "--budget", "80", "--seed", "7", "--out", str(a)]) == 0
        first = capsys.readouterr().out
        assert main(["compare", "--budget", "80", "--seed", "7", "--out", str(b)]) == 0
        second = capsys.readouterr().out
        assert first == second
        assert (a / "compare-table.csv").read_bytes() == (b / "compare-table.csv").read_bytes()
        assert _without_timestamp(a) == _without_timestamp(b)

    def test_zero_budget_exits_2(self, tmp_path, capsys):
        assert main(["compare", "--budget", "0", "--out", str(tmp_path)]) == 2
        assert "--budget" in capsys.readouterr().err


class TestConfigFileMerging:
    def _write_config(self, tmp_path, data):
        path = tmp_path / "config.json"
        path.write_text(json.dumps(data))
        return path

    def test_file_values_used_when_flags_absent(self, tmp_path):
        cfg = self._write_config(tmp_path, {"smc": {"n_steps": 17, "seed": 12}})
        out = tmp_path / "run"
        assert main(["run", "smc", "--config", str(cfg), "--out", str(out)]) == 0
        report = _read_report(out)
        assert report["config_echo"]["smc"]["n_steps"] == 17
        assert report["seed"] == 12

    def test_flags_override_file_values(self, tmp_path):
        cfg = self._write_config(tmp_path, {"smc": {"n_steps": 40}})
        out = tmp_path / "run"
        assert main(["run", "smc", "--config", str(cfg), "--steps", "20",
                     "--out", str(out)]) == 0
        assert _read_report(out)["config_echo"]["smc"]["n_steps"] == 20

    def test_oracle_section(self, tmp_path):
        cfg = self._write_config(tmp_path, {"oracle": {"kind": "range", "low": -1.0,
                                                       "high": 1.0}})
        out = tmp_path / "run"
        assert main(["run", "smc", "--config", str(cfg), "--steps", "5",
                     "--out", str(out)]) == 0
        assert _read_report(out)["config_echo"]["oracle"]["low"] == -1.0

    def test_unknown_section_key_exits_2(self, tmp_path, capsys):
        cfg = self._write_config(tmp_path, {"smc": {"steps": 9}})
        assert main(["run", "smc", "--config", str(cfg), "--out", str(tmp_path)]) == 2
        assert "unknown" in capsys.readouterr().err

    def test_invalid_file_value_exits_2(self, tmp_path):
        cfg = self._write_config(tmp_path, {"prior": {"n_particles": 0}})
        assert main(["gen-prior", "--config", str(cfg), "--out", str(tmp_path)]) == 2

    def test_missing_config_file_exits_3(self, tmp_path):
        assert main(["gen-prior", "--config", str(tmp_path / "absent.json"),
                     "--out", str(tmp_path)]) == 3


class TestExitCodes:
    def test_unwritable_output_exits_3(self, tmp_path):
        blocker = tmp_path / "blocker"
        blocker.write_text("file, not a directory")
        assert main(["gen-prior", "--out", str(blocker / "sub")]) == 3

    def test_bad_oracle_spec_exits_2(self, tmp_path, capsys):
        assert main(["run", "smc", "--oracle", "bogus", "--out", str(tmp_path)]) == 2
        assert "--oracle" in capsys.readouterr().err

    def test_steps_zero_exits_2(self, tmp_path, capsys):
        assert main(["run", "smc", "--steps", "0", "--out", str(tmp_path)]) == 2
        assert "--steps" in capsys.readouterr().err

    def test_help_exits_0(self, capsys):
        assert main(["--help"]) == 0
        assert "gen-prior" in capsys.readouterr().out

    def test_missing_subcommand_exits_2(self, capsys):
        assert main([]) == 2


class TestEnvironment:
    def test_out_root_env_var(self, tmp_path, monkeypatch):
        monkeypatch.setenv("ABC_FUZZ_OUT", str(tmp_path / "root"))
        assert main(["gen-prior", "--seed", "5"]) == 0
        assert (tmp_path / "root" / "gen-prior-seed5" / "report.json").exists()

    def test_module_invocation(self):
        proc = subprocess.run([sys.executable, "-m", "abcfuzz.cli", "--version"],
                              capture_output=True, text=True)
        assert proc.returncode == 0
        assert "abc-fuzz" in proc.stdout
