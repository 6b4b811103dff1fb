import math
import subprocess
import sys
import textwrap

import pytest

from leaseopt.cli import EXIT_CONFIG, EXIT_OK, EXIT_VALIDATION, build_parser, main
from leaseopt.cli import cmd_validate
from leaseopt.config import (
    Config,
    ConfigError,
    ExperimentSpec,
    load_config,
    parse_config,
    serialize_config,
)
from leaseopt.experiments import (
    format_value,
    read_csv,
    run_experiment,
    truncated_gaussian,
    write_csv,
)
from leaseopt.market import UNBOUNDED, is_unbounded

import numpy as np

HOMOG_YAML = textwrap.dedent("""\
    market:
      channels: 2
      homogeneous:
        n: 8
        mu: 1.0
        sigma: 0.5
        tau: 100.0
        rho: 0.8
        mer: 100.0
    horizon: 2000
    """)

HETERO_YAML = textwrap.dedent("""\
    market:
      channels: 2
      operators:
        - {mu: 1.0, sigma: 0.5, a: 0.9, rho: 0.8, mer: 175.0, max_lease: 300}
        - {mu: 1.0, sigma: 0.5, a: 0.9, rho: 0.8, mer: 100.0, max_lease: 450}
      estimated:
        - {mu: 1.1, sigma: 0.5, a: 0.9, rho: 0.8, mer: 175.0, max_lease: 300}
        - {mu: 1.0, sigma: 0.5, a: 0.9, rho: 0.8, mer: 100.0, max_lease: 450}
    """)


class TestParsing:
    def test_homogeneous_shorthand(self):
        cfg = parse_config(HOMOG_YAML)
        assert cfg.market.n_operators == 8
        assert cfg.market.complete_information
        assert cfg.horizon == 2000
        p = cfg.market.true_params[0]
        assert p.a == pytest.approx(math.exp(-0.01))
        assert is_unbounded(p.max_lease)

    def test_estimates_parsed(self):
        cfg = parse_config(HETERO_YAML)
        assert not cfg.market.complete_information
        assert cfg.market.est_params[0].mu == 1.1

    @pytest.mark.parametrize("mangle", [
        lambda t: t.replace("channels: 2\n", ""),
        lambda t: t.replace("tau: 100.0", "tau: 100.0\n    a: 0.9"),
        lambda t: t.replace("tau: 100.0\n", ""),
        lambda t: t.replace("mer: 100.0", "mer: -1"),
        lambda t: t + "unknown_section: 1\n",
        lambda t: t.replace("market", "markets"),
    ])
    def test_malformed_rejected(self, mangle):
        with pytest.raises(ConfigError):
            parse_config(mangle(HOMOG_YAML))

    def test_experiment_block_validated(self):
        text = HOMOG_YAML + textwrap.dedent("""\
            experiment:
              kind: trend-sweep
              param: mu
              grid: [0.8, 1.0, 1.2]
              replicates: 1
              seed: 7
            """)
        cfg = parse_config(text)
        assert cfg.experiment.kind == "trend-sweep"
        with pytest.raises(ConfigError):
            parse_config(text.replace("trend-sweep", "unknown-kind"))
        with pytest.raises(ConfigError):
            parse_config(text.replace("[0.8, 1.0, 1.2]", "[1.2, 0.8]"))

    def test_round_trip_identity(self):
        for text in (HOMOG_YAML, HETERO_YAML):
            cfg = parse_config(text)
            again = parse_config(serialize_config(cfg))
            assert again == cfg
            # serialization is canonical: a second pass is byte-identical
            assert serialize_config(again) == serialize_config(cfg)


class TestCsv:
    def test_format_value_sig_digits(self):
        assert format_value(2.6100704601900001) == "2.61007046019"
        assert format_value(307) == "307"
        assert format_value(math.inf) == "inf"

    def test_round_trip_and_metadata(self, tmp_path):
        path = tmp_path / "out.csv"
        text = write_csv(path, {"seed": 7, "kind": "demo"},
                         ("a", "b"), [(1, 2.5), (3, math.inf)])
        assert text.startswith("# tool_version:")
        meta, header, rows = read_csv(path)
        assert meta["generator"] == "numpy-PCG64"
        assert meta["seed"] == "7"
        assert header == ["a", "b"]
        assert rows == [["1", "2.5"], ["3", "inf"]]

    def test_byte_identical_across_runs(self, tmp_path):
        spec = ExperimentSpec(kind="trend-sweep", param="mu",
                              grid=(0.9, 1.0), replicates=1, seed=3)
        texts = []
        for i in range(2):
            cfg = Config(market=parse_config(HOMOG_YAML).market,
                         experiment=spec)
            res = run_experiment(cfg, horizon=2000)
            path = tmp_path / f"run{i}.csv"
            texts.append(write_csv(path, {"seed": 3}, res.header, res.rows))
        assert texts[0] == texts[1]


class TestTruncatedGaussian:
    def test_respects_bounds(self):
        rng = np.random.default_rng(0)
        xs = [truncated_gaussian(rng, 1.0, 0.5, 0.5, 1.5) for _ in range(500)]
        assert all(0.5 <= x <= 1.5 for x in xs)

    def test_degenerate_cases(self):
        rng = np.random.default_rng(0)
        assert truncated_gaussian(rng, 1.0, 0.0, 0.5, 1.5) == 1.0
        with pytest.raises(ValueError):
            truncated_gaussian(rng, 5.0, 0.0, 0.5, 1.5)


class TestExperimentRunners:
    def test_trend_sweep_rows(self):
        spec = ExperimentSpec(kind="trend-sweep", param="n",
                              grid=(4, 8), replicates=1, seed=0)
        cfg = Config(market=parse_config(HOMOG_YAML).market, experiment=spec)
        res = run_experiment(cfg, horizon=2000)
        assert [r[0] for r in res.rows] == [4, 8]
        assert all(r[3] > 0 for r in res.rows)

    def test_subop_comparison_nonnegative_gain(self):
        spec = ExperimentSpec(kind="subop-comparison", param="cv",
                              grid=(0.05,), replicates=2, seed=1,
                              options={"n": 4})
        cfg = Config(market=parse_config(HOMOG_YAML).market, experiment=spec)
        res = run_experiment(cfg, horizon=2000)
        delta_col = res.header.index("delta_u_pct")
        assert all(r[delta_col] >= 0 for r in res.rows)

    def test_incomplete_info_zero_window_is_lossless(self):
        spec = ExperimentSpec(kind="incomplete-info", param="window",
                              grid=(0,), replicates=2, seed=2,
                              options={"n": 3})
        cfg = Config(market=parse_config(HOMOG_YAML).market, experiment=spec)
        res = run_experiment(cfg, horizon=2000)
        delta_col = res.header.index("delta_u_pct")
        assert all(r[delta_col] == 0.0 for r in res.rows)

    def test_missing_experiment_block_rejected(self):
        cfg = parse_config(HOMOG_YAML)
        with pytest.raises(ConfigError):
            run_experiment(cfg)


def run_cli(args):
    return main(args)


class TestCli:
    def test_solve_prints_solution(self, tmp_path, capsys):
        path = tmp_path / "m.yaml"
        path.write_text(HOMOG_YAML)
        assert run_cli(["solve", "--config", str(path)]) == EXIT_OK
        out = capsys.readouterr().out
        assert "t_star: 307" in out
        assert "u_perceived: 2.61" in out

    def test_solve_writes_csv(self, tmp_path, capsys):
        path = tmp_path / "m.yaml"
        path.write_text(HOMOG_YAML)
        out_csv = tmp_path / "solve.csv"
        assert run_cli(["solve", "--config", str(path),
                        "--out", str(out_csv)]) == EXIT_OK
        meta, header, rows = read_csv(out_csv)
        assert header[0] == "t_star" and rows[0][0] == "307"

    def test_experiment_writes_csv(self, tmp_path, capsys):
        path = tmp_path / "e.yaml"
        path.write_text(HOMOG_YAML + textwrap.dedent("""\
            experiment:
              kind: trend-sweep
              param: rho
              grid: [0.6, 0.8]
              replicates: 1
              seed: 5
            """))
        out_csv = tmp_path / "exp.csv"
        assert run_cli(["experiment", "--config", str(path),
                        "--out", str(out_csv)]) == EXIT_OK
        meta, header, rows = read_csv(out_csv)
        assert meta["kind"] == "trend-sweep"
        assert len(rows) == 2

    def test_validate_passes_and_negative_control_fails(self, tmp_path,
                                                        capsys):
        path = tmp_path / "m.yaml"
        path.write_text(HETERO_YAML)
        args = build_parser().parse_args(
            ["validate", "--config", str(path), "--seed", "4",
             "--mc-epochs", "50000"])
        assert cmd_validate(args) == EXIT_OK
        # corrupting the analytic value must trip the cross-check
        assert cmd_validate(args, corrupt_std_factor=1.05) == EXIT_VALIDATION

    def test_beta_table_default(self, capsys):
        assert run_cli(["beta-table"]) == EXIT_OK
        out = capsys.readouterr().out
        assert "beta(1,  8) = 0.284478146" in out

    def test_config_errors_exit_2(self, tmp_path, capsys):
        bad = tmp_path / "bad.yaml"
        bad.write_text("market:\n  channels: 2\n")
        assert run_cli(["solve", "--config", str(bad)]) == EXIT_CONFIG
        assert run_cli(["solve", "--config",
                        str(tmp_path / "missing.yaml")]) == EXIT_CONFIG

    def test_console_script_installed(self):
        proc = subprocess.run([sys.executable, "-m", "leaseopt.cli",
                               "--version"], capture_output=True, text=True)
        assert proc.returncode == 0
        assert proc.stdout.strip() == "0.1.0"
