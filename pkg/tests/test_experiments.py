import csv
import io
import json

import pytest

from poismix import cli, experiments
from poismix.experiments import ExperimentConfig, default_config
from poismix.mixing import Frechet, GammaMix, ScaledBeta, UniformMix


class TestConfig:
    def test_validation(self):
        with pytest.raises(ValueError):
            ExperimentConfig("bogus", (GammaMix(2, 1),))
        with pytest.raises(ValueError):
            ExperimentConfig("table1", (GammaMix(2, 1),), replicates=0)
        with pytest.raises(ValueError):
            ExperimentConfig("table1", (GammaMix(2, 1),), sample_size=10)
        with pytest.raises(ValueError):
            ExperimentConfig("table2", (GammaMix(2, 1),),
                             thresholds=(0.95, 1.5))
        with pytest.raises(ValueError):
            ExperimentConfig("table1", (GammaMix(2, 1),), base_seed=-1)

    def test_json_roundtrip(self):
        cfg = default_config("table2", replicates=3)
        again = ExperimentConfig.from_json(
            json.loads(json.dumps(cfg.to_json())))
        assert again == cfg

    def test_unknown_keys_rejected(self):
        with pytest.raises(ValueError):
            ExperimentConfig.from_json(
                {"experiment": "table1", "bogus_knob": 1})

    @pytest.mark.parametrize("tag", ["table1", "table2", "beta_sweep",
                                     "maxima"])
    def test_defaults_valid(self, tag):
        cfg = default_config(tag)
        assert cfg.experiment == tag
        assert cfg.replicates >= 1


class TestTable1:
    def test_single_replicate_one_hot(self):
        cfg = default_config(
            "table1", specs=(GammaMix(2, 1),), replicates=1,
            sample_size=250, base_seed=3)
        report = experiments.run_experiment(cfg)
        freqs = [r["frequency"] for r in report.results["rows"]]
        assert sum(freqs) == 1
        assert sorted(freqs) == [0, 0, 0, 1]

    def test_frequencies_sum_to_replicates(self):
        cfg = default_config(
            "table1", specs=(UniformMix(10),), replicates=4,
            sample_size=250, base_seed=4)
        report = experiments.run_experiment(cfg)
        cell = report.results["cells"]["uniform(10)"]
        assert sum(cell["selected"].values()) + cell["fit_failures"] == 4


@pytest.fixture(scope="module")
def report():
    cfg = ExperimentConfig(
        "table2", (GammaMix(2, 2),), sample_size=200, replicates=3,
        thresholds=(0.9,), bootstrap=99, base_seed=17)
    return experiments.run_experiment(cfg)


class TestTable2:
    def test_rates_in_unit_interval(self, report):
        row = report.results["rows"][0]
        for key in ("gpd_rejection_rate", "gamma0_nonrejection_rate"):
            assert 0.0 <= row[key] <= 1.0
        assert row["mean_excess_count"] > 0

    def test_replicate_accounting(self, report):
        row = report.results["rows"][0]
        assert row["insufficient_excesses"] + row["degenerate_excesses"] \
            <= row["replicates"]

    def test_deterministic_rerun(self, report):
        cfg = ExperimentConfig(
            "table2", (GammaMix(2, 2),), sample_size=200, replicates=3,
            thresholds=(0.9,), bootstrap=99, base_seed=17)
        again = experiments.run_experiment(cfg)
        assert again.to_json() == report.to_json()
        assert again.to_csv() == report.to_csv()


class TestBetaSweep:
    def test_single_point(self):
        cfg = ExperimentConfig(
            "beta_sweep", (GammaMix(2, 1),), sample_size=200,
            replicates=2, thresholds=(0.9,), bootstrap=99, base_seed=5)
        report = experiments.run_experiment(cfg)
        rows = report.results["rows"]
        assert len(rows) == 1
        assert rows[0]["inv_one_plus_beta"] == pytest.approx(0.5)

    def test_requires_gamma_specs(self):
        cfg = ExperimentConfig(
            "beta_sweep", (UniformMix(5),), sample_size=200,
            replicates=2, thresholds=(0.9,))
        with pytest.raises(ValueError):
            experiments.run_experiment(cfg)


class TestMaxima:
    def test_pmf_tables_normalized(self):
        cfg = ExperimentConfig(
            "maxima", (ScaledBeta(5, 2, 1),), sample_size=100,
            replicates=500, base_seed=9, maxima_sizes=(10, 100))
        report = experiments.run_experiment(cfg)
        for tables in report.results["max_pmf"].values():
            for pmf in tables.values():
                assert sum(pmf) == pytest.approx(1.0)
        kinds = {r["kind"] for r in report.results["rows"]}
        assert kinds == {"mixture", "reference"}

    def test_requires_finite_endpoint(self):
        cfg = ExperimentConfig(
            "maxima", (GammaMix(2, 1),), sample_size=100, replicates=10)
        with pytest.raises(ValueError):
            experiments.run_experiment(cfg)


class TestCli:
    def test_classify_output(self, capsys):
        rc = cli.cli_main(["classify", "--family", "gamma",
                           "--alpha", "2", "--beta", "2"])
        out = capsys.readouterr().out
        assert rc == 0
        assert "D0E(beta=2)" in out
        assert "0.333333333333" in out

    def test_classify_json(self, capsys):
        rc = cli.cli_main(["classify", "--family", "uniform", "--x0", "5",
                           "--format", "json"])
        assert rc == 0
        payload = json.loads(capsys.readouterr().out)
        assert payload["tail_class"] == "DMinus"
        assert payload["tail_ratio_limit_k1"] == 0.0

    def test_sample_csv(self, capsys):
        rc = cli.cli_main(["sample", "--family", "gamma", "--alpha", "2",
                           "--beta", "1", "--size", "25", "--seed", "1"])
        assert rc == 0
        rows = list(csv.DictReader(io.StringIO(capsys.readouterr().out)))
        assert len(rows) == 25
        assert all(int(r["count"]) >= 0 for r in rows)

    def test_pmf_table(self, capsys):
        rc = cli.cli_main(["pmf", "--family", "uniform", "--x0", "5",
                           "--n-max", "6"])
        assert rc == 0
        rows = list(csv.DictReader(io.StringIO(capsys.readouterr().out)))
        assert [r["n"] for r in rows] == [str(i) for i in range(7)]

    def test_missing_parameter_is_usage_error(self, capsys):
        rc = cli.cli_main(["classify", "--family", "gamma", "--alpha", "2"])
        assert rc == 1
        assert "requires --beta" in capsys.readouterr().err

    def test_extraneous_parameter_is_usage_error(self):
        rc = cli.cli_main(["classify", "--family", "uniform", "--x0", "5",
                           "--mu", "1"])
        assert rc == 1

    def test_unknown_flag(self, capsys):
        assert cli.cli_main(["classify", "--bogus"]) == 1

    def test_pot_fit_roundtrip(self, tmp_path, capsys):
        data = tmp_path / "counts.csv"
        rc = cli.cli_main(["sample", "--family", "gamma", "--alpha", "2",
                           "--beta", "1", "--size", "300", "--seed", "3",
                           "--out", str(data)])
        assert rc == 0
        rc = cli.cli_main(["pot-fit", str(data), "--quantile", "0.9",
                           "--bootstrap", "99", "--seed", "1"])
        assert rc == 0
        payload = json.loads(capsys.readouterr().out)
        assert set(payload) >= {"gpd", "exponential", "anderson_darling",
                                "deviance", "threshold"}
        assert 0.0 <= payload["anderson_darling"]["p_value"] <= 1.0

    def test_pot_fit_missing_file(self, capsys):
        assert cli.cli_main(["pot-fit", "/does/not/exist.csv"]) == 1

    def test_experiment_rerun_byte_identical(self, tmp_path):
        config = tmp_path / "cfg.json"
        config.write_text(json.dumps({
            "specs": [{"family": "gamma", "params": {"alpha": 2, "beta": 2}}],
            "sample_size": 200, "replicates": 2, "thresholds": [0.9],
            "bootstrap": 99,
        }))
        outs = []
        for name in ("a.json", "b.json"):
            out = tmp_path / name
            rc = cli.cli_main(["experiment", "table2", "--config",
                               str(config), "--seed", "42", "--format",
                               "json", "--out", str(out)])
            assert rc == 0
            outs.append(out.read_bytes())
        assert outs[0] == outs[1]

    def test_experiment_bad_config(self, tmp_path):
        config = tmp_path / "bad.json"
        config.write_text('{"replicates": 0}')
        assert cli.cli_main(["experiment", "table1", "--config",
                             str(config)]) == 1
