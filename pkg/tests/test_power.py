import csv
import json
import math

import pytest

from frechet_anova.exceptions import InputError
from frechet_anova.generators import generate
from frechet_anova.power import (
    CSV_COLUMNS,
    PowerRow,
    StudyConfig,
    cell_stream,
    clopper_pearson,
    empirical_size_report,
    run_cell,
    run_power_study,
    run_single_test,
)


def small_config(**overrides):
    base = dict(
        scenario={"kind": "distribution_location", "sizes": [15, 15], "grid_size": 20},
        grid=[0.0, 1.5],
        tests=["tn_asymptotic", "tn_permutation", "energy"],
        runs=12,
        replicates=99,
        seed=3,
    )
    base.update(overrides)
    return StudyConfig.from_dict(base)


class TestConfig:
    def test_defaults(self):
        cfg = StudyConfig.from_dict({"scenario": {"kind": "beta_vector"}, "grid": [1]})
        assert cfg.runs == 200 and cfg.replicates == 500 and cfg.tests == ["tn_bootstrap"]

    def test_infinite_parameter(self):
        cfg = StudyConfig.from_dict({"scenario": {"kind": "truncated_mvt"}, "grid": ["inf", 3]})
        assert cfg.grid[0] == math.inf
        assert cfg.to_dict()["grid"][0] == "inf"

    @pytest.mark.parametrize("bad", [
        {"grid": []},
        {"tests": ["nope"]},
        {"alpha": 0.0},
        {"runs": 0},
        {"replicates": 10},
        {"colour": "red"},
    ])
    def test_validation(self, bad):
        with pytest.raises(InputError):
            small_config(**bad)

    def test_json_round_trip(self, tmp_path):
        cfg = small_config()
        path = tmp_path / "c.json"
        path.write_text(json.dumps(cfg.to_dict()))
        assert StudyConfig.from_json(path).to_dict() == cfg.to_dict()

    def test_bad_json(self, tmp_path):
        path = tmp_path / "c.json"
        path.write_text("{not json")
        with pytest.raises(InputError):
            StudyConfig.from_json(path)


class TestRows:
    def test_rate_and_se(self):
        row = PowerRow("s", 0.0, "t", n_runs=10, rejections=3, errors=2)
        assert row.rate == 3 / 8
        assert row.se == pytest.approx(math.sqrt(0.375 * 0.625 / 8))

    def test_all_errors(self):
        row = PowerRow("s", 0.0, "t", n_runs=2, rejections=0, errors=2)
        assert math.isnan(row.rate)

    def test_clopper_pearson(self):
        lo, hi = clopper_pearson(20, 400)
        assert lo < 0.05 < hi
        assert clopper_pearson(0, 10)[0] == 0.0 and clopper_pearson(10, 10)[1] == 1.0


class TestStudy:
    def test_determinism_and_csv(self, tmp_path):
        cfg = small_config()
        a = run_power_study(cfg, str(tmp_path / "a.csv"))
        b = run_power_study(cfg, str(tmp_path / "b.csv"))
        assert (tmp_path / "a.csv").read_bytes() == (tmp_path / "b.csv").read_bytes()
        with open(tmp_path / "a.csv") as fh:
            rows = list(csv.reader(fh))
        assert tuple(rows[0]) == CSV_COLUMNS
        assert len(rows) == 1 + 2 * 3
        meta = json.loads((tmp_path / "a.csv.meta.json").read_text())
        assert meta["config"]["seed"] == 3 and "PCG64" in meta["algorithm_id"]
        for r in a.rows:
            assert 0.0 <= r.rate <= 1.0
        assert [r.rejections for r in a.rows] == [r.rejections for r in b.rows]

    def test_workers_do_not_change_results(self):
        serial = run_power_study(small_config())
        parallel = run_power_study(small_config(workers=2))
        assert serial.to_csv() == parallel.to_csv()

    def test_adding_a_test_leaves_others_alone(self):
        a = run_power_study(small_config(tests=["tn_permutation"]))
        b = run_power_study(small_config(tests=["energy", "tn_permutation", "mmd"]))
        for param in (0.0, 1.5):
            assert a.row(param, "tn_permutation").rejections == b.row(param, "tn_permutation").rejections

    def test_cell_matches_single_test(self):
        cfg = small_config()
        cell = run_cell(cfg, 1, 4)
        spec = cfg.scenario.with_param(cfg.grid[1])
        data = generate(spec, cell_stream(cfg.seed, 1, 4, "data"))
        for name in cfg.tests:
            rep = run_single_test(name, data, cfg.alpha, cfg.replicates, cell_stream(cfg.seed, 1, 4, name))
            assert cell[name][0] == rep.reject

    def test_power_at_large_shift(self):
        curve = run_power_study(small_config())
        assert curve.rate(1.5, "tn_permutation") > curve.rate(0.0, "tn_permutation")

    def test_errors_are_recorded(self):
        # two-point groups always have zero variance of squared distances
        cfg = small_config(scenario={"kind": "beta_vector", "sizes": [2, 2]}, grid=[1.0],
                           tests=["tn_asymptotic", "energy"], runs=5)
        curve = run_power_study(cfg)
        assert curve.row(1.0, "tn_asymptotic").errors == 5
        assert math.isnan(curve.rate(1.0, "tn_asymptotic"))
        assert curve.row(1.0, "energy").errors == 0

    def test_size_report(self):
        cfg = small_config(scenario={"kind": "beta_vector", "sizes": [10, 10]}, grid=[0.5],
                           tests=["tn_permutation", "tn_bootstrap"], runs=400, replicates=99)
        report = empirical_size_report(cfg)
        assert {r.test for r in report} == {"tn_permutation", "tn_bootstrap"}
        for r in report:
            assert r.param == 1.0
            assert r.covers(0.05), (r.test, r.size, r.lower, r.upper)
