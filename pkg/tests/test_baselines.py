import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from frechet_anova.baselines import (
    PairwiseDistances,
    energy_statistic,
    energy_test,
    median_bandwidth,
    mmd_statistic,
    mmd_test,
)
from frechet_anova.exceptions import DegenerateError, InputError
from frechet_anova.ksample import GroupedSample
from frechet_anova.spaces import ObjectSample


def two_groups(a, b):
    return GroupedSample.from_groups([ObjectSample.vectors(np.asarray(a, float)),
                                      ObjectSample.vectors(np.asarray(b, float))])


class TestPairwiseDistances:
    def test_entry_count(self):
        d = PairwiseDistances.from_grouped(two_groups([0, 1, 2], [5, 6]))
        assert d.condensed.shape == (10,)
        assert d.n == 5 and d.sizes == (3, 2)

    def test_rejects_bad_entries(self):
        with pytest.raises(InputError):
            PairwiseDistances(np.array([1.0, -1.0, 0.5]), (2, 1))
        with pytest.raises(InputError):
            PairwiseDistances(np.array([1.0]), (2, 2))

    def test_three_groups_rejected(self):
        data = GroupedSample.from_groups([ObjectSample.vectors([0.0, 1.0])] * 3)
        with pytest.raises(InputError):
            energy_test(data, 99)

    def test_groups_are_contiguous_in_condensed_form(self):
        s = ObjectSample.vectors([0.0, 10.0, 1.0, 11.0])
        d = PairwiseDistances.from_grouped(GroupedSample(s, ["a", "b", "a", "b"])).square()
        assert d[0, 1] == 1.0 and d[2, 3] == 1.0 and d[0, 2] == 10.0


class TestEnergy:
    def test_hand_example(self):
        assert energy_statistic(PairwiseDistances.from_grouped(two_groups([0, 0], [1, 1]))) == 2.0

    def test_identical_groups(self):
        stat = energy_statistic(PairwiseDistances.from_grouped(two_groups([0, 1, 3], [3, 1, 0])))
        assert abs(stat) <= 1e-12

    @given(seed=st.integers(0, 2**32 - 1))
    @settings(max_examples=100, deadline=None)
    def test_non_negative(self, seed):
        rng = np.random.default_rng(seed)
        d = int(rng.integers(1, 4))
        data = two_groups(rng.normal(size=(int(rng.integers(2, 12)), d)),
                          rng.normal(size=(int(rng.integers(2, 12)), d)) + rng.normal())
        assert energy_statistic(PairwiseDistances.from_grouped(data)) >= -1e-12

    def test_report(self):
        rng = np.random.default_rng(1)
        data = two_groups(rng.normal(size=30), rng.normal(size=30) + 2)
        rep = energy_test(data, 199, seed=2)
        assert rep.p_value == pytest.approx(1 / 200)
        assert rep.reject
        assert rep.to_dict()["method"] == "energy"


class TestMMD:
    def test_hand_example(self):
        dist = PairwiseDistances.from_grouped(two_groups([0, 0], [1, 1]))
        assert median_bandwidth(dist) == 1.0
        expected = 2 * (1 - math.exp(-0.5))
        assert mmd_statistic(dist) == pytest.approx(expected, abs=1e-15)
        assert mmd_statistic(dist, unbiased=True) == pytest.approx(expected, abs=1e-15)

    def test_identical_groups(self):
        dist = PairwiseDistances.from_grouped(two_groups([0, 1, 3], [3, 1, 0]))
        assert abs(mmd_statistic(dist)) <= 1e-12

    def test_unbiased_is_centered_differently(self):
        dist = PairwiseDistances.from_grouped(two_groups([0, 1, 3], [3, 1, 0]))
        assert mmd_statistic(dist, unbiased=True) < 0

    def test_bandwidth_fallback(self):
        dist = PairwiseDistances.from_grouped(two_groups([2, 2], [2, 2]))
        assert median_bandwidth(dist) == 1.0
        with pytest.raises(DegenerateError):
            mmd_test(two_groups([2, 2], [2, 2]), 99)

    def test_report(self):
        rng = np.random.default_rng(3)
        data = two_groups(rng.normal(size=25), rng.normal(size=25))
        rep = mmd_test(data, 99, seed=4)
        assert 1 / 100 <= rep.p_value <= 1.0
        assert rep.bandwidth == pytest.approx(median_bandwidth(PairwiseDistances.from_grouped(data)))


@pytest.mark.parametrize("test", [energy_test, mmd_test])
def test_deterministic(test):
    rng = np.random.default_rng(5)
    data = two_groups(rng.normal(size=20), rng.normal(size=20))
    assert test(data, 99, seed=6).to_dict() == test(data, 99, seed=6).to_dict()
    assert len({test(data, 99, seed=s).p_value for s in range(5)}) > 1


@pytest.mark.parametrize("test", [energy_test, mmd_test])
def test_depends_only_on_distances(test):
    rng = np.random.default_rng(7)
    x, y = rng.normal(size=(15, 2)), rng.normal(size=(15, 2)) + 0.3
    order = rng.permutation(15)
    a = test(two_groups(x, y), 99, seed=1)
    b = test(two_groups(x[order], y[order]), 99, seed=1)
    assert a.statistic == pytest.approx(b.statistic, rel=1e-12)
    # the same condensed distances give the same report
    c = test(PairwiseDistances.from_grouped(two_groups(x, y)), 99, seed=1)
    assert c.to_dict() == a.to_dict()


@pytest.mark.parametrize("test", [energy_test, mmd_test])
def test_null_size(test):
    rejections = 0
    runs = 1000
    for run in range(runs):
        rng = np.random.default_rng([30, run])
        rejections += test(two_groups(rng.normal(size=20), rng.normal(size=20)), 99, seed=run).reject
    assert 0.03 <= rejections / runs <= 0.07
