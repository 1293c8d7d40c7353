import json

import pytest
import yaml
from hypothesis import given
from hypothesis import strategies as st

from sqdaa import cli
from sqdaa.experiments import (AggregateStats, ConfigError, ExperimentConfig, aggregate_from_files,
                               build_hamiltonian, nearest_rank, run_experiment)

COMPARE = {
    "mode": "compare",
    "hamiltonian": {"diagonal": 6},
    "state": {"model": {"kind": "exponential", "param": 1.0}},
    "driver": {"shots_per_iteration": 50, "target_fidelity": 0.7, "energy_threshold": None, "collect_top": 6},
    "restarts": 4,
    "seed_base": 10,
    "workers": 1,
}


def write_config(path, data):
    path.write_text(yaml.safe_dump(data))
    return str(path)


def read_tree(root):
    return {p.name: p.read_bytes() for p in sorted(root.iterdir())}


class TestConfigValidation:
    @pytest.mark.parametrize("patch, msg", [
        ({"mode": "train"}, "unknown mode"),
        ({"restarts": 0}, "restarts"),
        ({"workers": 0}, "workers"),
        ({"driver": {"shots": 3}}, "unknown driver keys"),
        ({"hamiltonian": None}, "needs a hamiltonian"),
        ({"state": None}, "needs a state"),
        ({"extra": 1}, "unknown config keys"),
    ])
    def test_rejects(self, patch, msg):
        data = {**COMPARE, **patch}
        with pytest.raises(ConfigError, match=msg):
            ExperimentConfig.from_dict(data)

    def test_model_dist_needs_distribution(self):
        with pytest.raises(ConfigError, match="distribution"):
            ExperimentConfig.from_dict({"mode": "model-dist"})

    def test_hamiltonian_from_terms(self):
        cfg = ExperimentConfig.from_dict({**COMPARE, "hamiltonian": {"terms": [[1.0, "ZZ"], [0.5, "XX"]]}})
        assert build_hamiltonian(cfg).L == 2

    def test_hamiltonian_from_file(self, tmp_path):
        (tmp_path / "h.txt").write_text("1.0 ZZ\n0.5 XX\n")
        cfg = ExperimentConfig.from_dict({**COMPARE, "hamiltonian": "h.txt"}, str(tmp_path))
        assert build_hamiltonian(cfg).n == 2


class TestAggregation:
    def test_nearest_rank(self):
        v = list(range(1, 11))
        assert nearest_rank(v, 16) == 2
        assert nearest_rank(v, 84) == 9
        assert nearest_rank(v, 50) == 5

    @given(st.lists(st.floats(-1e6, 1e6), min_size=1, max_size=60))
    def test_band_brackets_median(self, values):
        agg = AggregateStats.of(values)
        assert min(values) <= agg.p16 <= agg.p84 <= max(values)
        assert agg.p16 in values and agg.p84 in values


class TestRuns:
    def test_compare_writes_outputs(self, tmp_path):
        summary = run_experiment(ExperimentConfig.from_dict(COMPARE), tmp_path)
        files = read_tree(tmp_path)
        assert "compare.csv" in files and "aggregate.json" in files
        assert "sqdaa_restart0003_trace.csv" in files
        assert summary["seeds"] == [10, 11, 12, 13]

    def test_aggregate_round_trip(self, tmp_path):
        summary = run_experiment(ExperimentConfig.from_dict(COMPARE), tmp_path)
        again = aggregate_from_files(tmp_path)
        assert again["ratio_Q"] == summary["ratio_Q"]
        assert again["ratio_N_S"] == summary["ratio_N_S"]

    def test_parallel_matches_serial(self, tmp_path):
        a, b = tmp_path / "a", tmp_path / "b"
        run_experiment(ExperimentConfig.from_dict(COMPARE), a)
        run_experiment(ExperimentConfig.from_dict({**COMPARE, "workers": 3}), b)
        assert read_tree(a) == read_tree(b)

    def test_model_dist(self, tmp_path):
        cfg = ExperimentConfig.from_dict({"mode": "model-dist", "analytics": {
            "distribution": {"kind": "exponential", "param": 1.0}, "m_max": 40, "N_it": 1000}})
        summary = run_experiment(cfg, tmp_path)
        assert summary["crossing_m"] == {"1": 14, "100.0": 23}
        assert (tmp_path / "curve.csv").read_text().startswith("m,")

    def test_asp_prepare(self, tmp_path):
        cfg = ExperimentConfig.from_dict({"mode": "asp-prepare", "hamiltonian": {"terms": [[1.0, "Z"], [0.5, "X"]]},
                                          "asp": {"T": 20.0, "grid": [[1, 50]]}})
        summary = run_experiment(cfg, tmp_path)
        assert summary["asp"]["steps"] == 50
        assert (tmp_path / "asp_state.txt").exists()


class TestCli:
    def test_compare_exit_zero(self, tmp_path):
        cfg = write_config(tmp_path / "c.yaml", COMPARE)
        assert cli.main(["compare", "-c", cfg, "-o", str(tmp_path / "out"), "-q", "--restarts", "2"]) == 0
        assert json.loads((tmp_path / "out" / "aggregate.json").read_text())["ratio_Q"]["count"] == 2

    def test_config_error_exit_code(self, tmp_path):
        cfg = write_config(tmp_path / "c.yaml", {**COMPARE, "restarts": 0})
        assert cli.main(["compare", "-c", cfg, "-q"]) == cli.EXIT_CONFIG

    def test_missing_file_is_io_error(self, tmp_path):
        assert cli.main(["compare", "-c", str(tmp_path / "nope.yaml"), "-q"]) == cli.EXIT_IO

    def test_domain_error_exit_code(self, tmp_path):
        bad = {**COMPARE, "state": {"model": {"kind": "exponential", "param": -1.0}}}
        cfg = write_config(tmp_path / "c.yaml", bad)
        assert cli.main(["compare", "-c", cfg, "-q", "-o", str(tmp_path / "o")]) == cli.EXIT_DOMAIN

    def test_asp_failure_exit_code(self, tmp_path):
        data = {"mode": "asp-prepare", "hamiltonian": {"terms": [[1.0, "XX"]]}, "asp": {"T": 1.0, "grid": [[1, 1]]}}
        cfg = write_config(tmp_path / "c.yaml", data)
        assert cli.main(["asp-prepare", "-c", cfg, "-q", "-o", str(tmp_path / "o")]) == cli.EXIT_ASP

    def test_budget_exit_code(self, tmp_path):
        data = {**COMPARE, "driver": {**COMPARE["driver"], "max_shots": 10}}
        cfg = write_config(tmp_path / "c.yaml", data)
        assert cli.main(["run-sqd", "-c", cfg, "-q", "-o", str(tmp_path / "o")]) == cli.EXIT_BUDGET

    def test_subcommand_overrides_mode(self, tmp_path):
        cfg = write_config(tmp_path / "c.yaml", COMPARE)
        assert cli.main(["run-sqdaa", "-c", cfg, "-q", "-o", str(tmp_path / "o"), "--restarts", "1"]) == 0
        names = {p.name for p in (tmp_path / "o").iterdir()}
        assert "sqdaa_restart0000.json" in names and "compare.csv" not in names
