"""
Monte Carlo size and power studies.

A :class:`StudyConfig` names a scenario template, a grid of values for its
parameter and the tests to run. For every grid value and Monte Carlo run a
fresh two-group data set is drawn, each test is applied to it and the
rejection at level ``alpha`` is recorded. Every (grid point, run, test) cell
owns a random stream derived from the root seed, so adding a test or
changing the worker count leaves all other results untouched.

Configuration files are JSON::

    {
      "scenario": {"kind": "distribution_location", "sizes": [100, 100]},
      "grid": [0, 0.25, 0.5, 0.75, 1],
      "tests": ["tn_asymptotic", "tn_bootstrap", "energy"],
      "alpha": 0.05,
      "runs": 200,
      "replicates": 500,
      "seed": 1,
      "output": "power.csv"
    }

Infinite parameters (the normal limit of the t scenario) are written as
``"inf"``.
"""
from __future__ import annotations

import csv
import io
import json
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy import stats

from . import __version__
from .baselines import energy_test, mmd_test
from .distributions import ALGORITHM_ID, derive_stream, stream_key
from .exceptions import FrechetError, InputError
from .generators import ScenarioSpec, generate
from .ksample import asymptotic_test, bootstrap_test, permutation_test

TESTS = ("tn_asymptotic", "tn_permutation", "tn_bootstrap", "energy", "mmd")
CSV_COLUMNS = ("scenario", "param", "test", "n_runs", "rejections", "errors", "rate", "se", "discarded")


def _param(value) -> float:
    if isinstance(value, str) and value.strip().lower() in ("inf", "+inf", "infinity"):
        return math.inf
    if value is None:
        return math.inf
    return float(value)


def _param_text(value: float) -> str:
    return "inf" if math.isinf(value) else repr(float(value))


@dataclass
class StudyConfig:
    scenario: ScenarioSpec
    grid: list
    tests: list = field(default_factory=lambda: ["tn_bootstrap"])
    alpha: float = 0.05
    runs: int = 200
    replicates: int = 500
    seed: int = 0
    output: Optional[str] = None
    workers: int = 1

    def __post_init__(self):
        if isinstance(self.scenario, dict):
            self.scenario = ScenarioSpec(**{"param": 0.0, **self.scenario})
        self.grid = [_param(v) for v in self.grid]
        if not self.grid:
            raise InputError("the parameter grid is empty")
        unknown = [t for t in self.tests if t not in TESTS]
        if unknown or not self.tests:
            raise InputError(f"unknown or missing tests {unknown}; choose from {TESTS}")
        self.tests = list(self.tests)
        if not 0.0 < self.alpha < 1.0:
            raise InputError("alpha must lie in (0, 1)")
        if self.runs < 1:
            raise InputError("runs must be at least 1")
        if self.replicates < 99 and any(t != "tn_asymptotic" for t in self.tests):
            raise InputError("resampling tests need at least 99 replicates")

    @classmethod
    def from_dict(cls, d: dict) -> "StudyConfig":
        known = {"scenario", "grid", "tests", "alpha", "runs", "replicates", "seed", "output", "workers"}
        extra = set(d) - known
        if extra:
            raise InputError(f"unknown config fields: {sorted(extra)}")
        return cls(**d)

    @classmethod
    def from_json(cls, path) -> "StudyConfig":
        with open(path) as fh:
            try:
                d = json.load(fh)
            except json.JSONDecodeError as exc:
                raise InputError(f"{path}: invalid JSON ({exc})") from exc
        return cls.from_dict(d)

    def to_dict(self) -> dict:
        scenario = self.scenario.to_dict()
        scenario.pop("param")
        return {
            "scenario": scenario,
            "grid": [_param_text(v) if math.isinf(v) else v for v in self.grid],
            "tests": list(self.tests),
            "alpha": self.alpha,
            "runs": self.runs,
            "replicates": self.replicates,
            "seed": self.seed,
            "output": self.output,
            "workers": self.workers,
        }


@dataclass
class PowerRow:
    scenario: str
    param: float
    test: str
    n_runs: int
    rejections: int
    errors: int
    discarded: int = 0

    @property
    def valid_runs(self) -> int:
        return self.n_runs - self.errors

    @property
    def rate(self) -> float:
        return self.rejections / self.valid_runs if self.valid_runs else math.nan

    @property
    def se(self) -> float:
        r = self.rate
        return math.sqrt(r * (1.0 - r) / self.valid_runs) if self.valid_runs else math.nan

    def csv_fields(self) -> list:
        return [self.scenario, _param_text(self.param), self.test, self.n_runs, self.rejections,
                self.errors, f"{self.rate:.6f}", f"{self.se:.6f}", self.discarded]


@dataclass
class PowerCurve:
    rows: list

    def row(self, param, test) -> PowerRow:
        param = _param(param)
        for r in self.rows:
            if r.test == test and (r.param == param or (math.isinf(r.param) and math.isinf(param))):
                return r
        raise KeyError((param, test))

    def rate(self, param, test) -> float:
        return self.row(param, test).rate

    def se(self, param, test) -> float:
        return self.row(param, test).se

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(CSV_COLUMNS)
        for r in self.rows:
            writer.writerow(r.csv_fields())
        return buf.getvalue()


def cell_stream(seed: int, grid_index: int, run: int, name: str):
    """Random stream owned by one (grid point, run, test-or-"data") cell."""
    return derive_stream(seed, stream_key(grid_index, run, name))


def run_single_test(name: str, data, alpha: float, replicates: int, stream):
    """Run one named test and return its report."""
    if name == "tn_asymptotic":
        return asymptotic_test(data, alpha)
    if name == "tn_permutation":
        return permutation_test(data, replicates, stream, alpha)
    if name == "tn_bootstrap":
        return bootstrap_test(data, replicates, stream, alpha)
    if name == "energy":
        return energy_test(data, replicates, stream, alpha)
    if name == "mmd":
        return mmd_test(data, replicates, stream, alpha)
    raise InputError(f"unknown test {name!r}")


def run_cell(config: StudyConfig, grid_index: int, run: int) -> dict:
    """
    One Monte Carlo replicate at one grid point.

    Returns a mapping ``test -> (rejected, discarded, error message or None)``.
    """
    spec = config.scenario.with_param(config.grid[grid_index])
    out = {}
    try:
        data = generate(spec, cell_stream(config.seed, grid_index, run, "data"))
    except FrechetError as exc:
        return {name: (False, 0, f"generation: {exc}") for name in config.tests}
    for name in config.tests:
        try:
            rep = run_single_test(name, data, config.alpha, config.replicates,
                                  cell_stream(config.seed, grid_index, run, name))
            out[name] = (bool(rep.reject), int(getattr(rep, "discarded_replicates", 0)), None)
        except FrechetError as exc:
            out[name] = (False, 0, str(exc))
    return out


def _run_chunk(args):
    config_dict, grid_index, runs = args
    config = StudyConfig.from_dict(config_dict)
    return [run_cell(config, grid_index, r) for r in runs]


def _grid_point(config: StudyConfig, gi: int, pool) -> list:
    if pool is None:
        cells = [run_cell(config, gi, r) for r in range(config.runs)]
    else:
        cfg = config.to_dict()
        chunks = np.array_split(np.arange(config.runs), max(1, config.workers * 4))
        jobs = [(cfg, gi, [int(r) for r in c]) for c in chunks if len(c)]
        cells = [cell for part in pool.map(_run_chunk, jobs) for cell in part]
    rows = []
    for name in config.tests:
        rej = sum(c[name][0] for c in cells)
        disc = sum(c[name][1] for c in cells)
        err = sum(c[name][2] is not None for c in cells)
        rows.append(PowerRow(config.scenario.kind.value, config.grid[gi], name, config.runs, rej, err, disc))
    return rows


def write_metadata(config: StudyConfig, path) -> None:
    meta = {
        "config": config.to_dict(),
        "algorithm_id": ALGORITHM_ID,
        "package_version": __version__,
        "csv_columns": list(CSV_COLUMNS),
    }
    with open(path, "w") as fh:
        json.dump(meta, fh, indent=2, sort_keys=True)
        fh.write("\n")


def run_power_study(config: StudyConfig, output: Optional[str] = None) -> PowerCurve:
    """
    Empirical rejection rates over the parameter grid.

    Parameters
    ----------
    config : StudyConfig
    output : str, optional
        CSV path (overrides ``config.output``). Rows for each grid value are
        appended as soon as that grid value finishes, and a
        ``<output>.meta.json`` sidecar records the configuration.

    Returns
    -------
    PowerCurve
    """
    output = output or config.output
    fh = None
    if output:
        write_metadata(config, f"{output}.meta.json")
        fh = open(output, "w", newline="")
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(CSV_COLUMNS)
        fh.flush()
    pool = ProcessPoolExecutor(config.workers) if config.workers > 1 else None
    rows = []
    try:
        for gi in range(len(config.grid)):
            new = _grid_point(config, gi, pool)
            rows.extend(new)
            if fh is not None:
                for r in new:
                    writer.writerow(r.csv_fields())
                fh.flush()
                os.fsync(fh.fileno())
    finally:
        if pool is not None:
            pool.shutdown()
        if fh is not None:
            fh.close()
    return PowerCurve(rows)


@dataclass
class SizeRow:
    test: str
    param: float
    n_runs: int
    rejections: int
    errors: int
    size: float
    lower: float
    upper: float

    def covers(self, level: float) -> bool:
        return self.lower <= level <= self.upper


def clopper_pearson(successes: int, trials: int, confidence: float = 0.95):
    """Exact binomial confidence interval."""
    if trials == 0:
        return math.nan, math.nan
    a = 0.5 * (1.0 - confidence)
    lo = 0.0 if successes == 0 else stats.beta.ppf(a, successes, trials - successes + 1)
    hi = 1.0 if successes == trials else stats.beta.ppf(1 - a, successes + 1, trials - successes)
    return float(lo), float(hi)


def empirical_size_report(config: StudyConfig, confidence: float = 0.95) -> list:
    """
    Empirical size of each configured test at the scenario's null parameter,
    with an exact binomial confidence interval per test.
    """
    null_config = StudyConfig(config.scenario, [config.scenario.null_param], config.tests,
                              config.alpha, config.runs, config.replicates, config.seed,
                              config.output, config.workers)
    curve = run_power_study(null_config)
    out = []
    for r in curve.rows:
        lo, hi = clopper_pearson(r.rejections, r.valid_runs, confidence)
        out.append(SizeRow(r.test, r.param, r.n_runs, r.rejections, r.errors, r.rate, lo, hi))
    return out
