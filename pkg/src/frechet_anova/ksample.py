"""
k-sample test for equality of distributions of metric-space valued data.

The test combines two statistics computed from groupwise and pooled Fréchet
summaries:

``F_n = V_p - sum_j lambda_j V_j``
    pooled minus average within-group Fréchet variance, the metric
    analogue of the ANOVA between-group sum of squares over ``n``;

``U_n = sum_{j<l} lambda_j lambda_l (V_j - V_l)^2 / (sigma_j^2 sigma_l^2)``
    a Levene-type contrast of the group Fréchet variances,

and ``T_n = n U_n / sum_j (lambda_j / sigma_j^2) + n F_n^2 / sum_j lambda_j^2 sigma_j^2``,
which is asymptotically chi-square with ``k - 1`` degrees of freedom when
all groups share one distribution.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .distributions import ALGORITHM_ID, RandomStream, as_stream, chi_square_quantile, chi_square_sf
from .exceptions import DegenerateError, InputError, ResamplingError
from .frechet import BLOCK_SIZE, FrechetSummary, batch_moments, compress, frechet_summary, noise_floor
from .spaces import ObjectSample, Space

F_TOL = 1e-9
TIE_RTOL = 1e-9
MAX_DISCARD_FRACTION = 0.5


class GroupedSample:
    """
    An :class:`ObjectSample` together with a group label for every object.

    Labels may be any sortable values; groups are ordered by sorted label.
    Every group needs at least two objects.
    """

    def __init__(self, sample: ObjectSample, labels):
        labels = np.asarray(labels)
        if labels.ndim != 1 or len(labels) != len(sample):
            raise InputError(f"expected {len(sample)} labels, got {labels.shape}")
        names, codes = np.unique(labels, return_inverse=True)
        if len(names) < 2:
            raise InputError("at least two groups are required")
        self.sample = sample
        self.names = [n.item() if hasattr(n, "item") else n for n in names]
        self.codes = codes
        self.indices = [np.flatnonzero(codes == j) for j in range(len(names))]
        for j, idx in enumerate(self.indices):
            if len(idx) < 2:
                raise InputError(
                    f"group {j + 1} ({self.names[j]!r}) has {len(idx)} object(s); at least 2 are needed"
                )

    @classmethod
    def from_groups(cls, groups: Sequence[ObjectSample], names=None) -> "GroupedSample":
        """Build from one sample per group; labels default to ``1..k``."""
        groups = list(groups)
        if names is None:
            names = list(range(1, len(groups) + 1))
        if len(names) != len(groups):
            raise InputError("one name per group is required")
        for j, g in enumerate(groups):
            if len(g) < 2:
                raise InputError(f"group {j + 1} ({names[j]!r}) has {len(g)} object(s); at least 2 are needed")
        pooled = groups[0]
        for g in groups[1:]:
            pooled = pooled.concat(g)
        labels = np.concatenate([np.full(len(g), j) for j, g in enumerate(groups)])
        out = cls(pooled, labels)
        out.names = list(names)
        return out

    @property
    def k(self) -> int:
        return len(self.indices)

    @property
    def n(self) -> int:
        return len(self.sample)

    @property
    def sizes(self) -> np.ndarray:
        return np.array([len(i) for i in self.indices])

    @property
    def weights(self) -> np.ndarray:
        return self.sizes / self.n

    def group(self, j: int) -> ObjectSample:
        """Objects of group ``j`` (0-based)."""
        return self.sample.subset(self.indices[j])


@dataclass(frozen=True)
class GroupSummaries:
    groups: list
    weights: np.ndarray
    pooled: FrechetSummary
    n: int

    @classmethod
    def from_values(cls, variances, sigma_sq, weights, pooled_variance, n) -> "GroupSummaries":
        """Summaries assembled from plain numbers, without mean objects."""
        weights = np.asarray(weights, dtype=float)
        groups = [FrechetSummary(None, float(v), float(s), int(round(w * n)))
                  for v, s, w in zip(variances, sigma_sq, weights)]
        pooled = FrechetSummary(None, float(pooled_variance), 0.0, int(n))
        return cls(groups, weights, pooled, int(n))

    @property
    def means(self):
        return [g.mean_object for g in self.groups]

    @property
    def variances(self) -> np.ndarray:
        return np.array([g.variance for g in self.groups])

    @property
    def sigma_sq(self) -> np.ndarray:
        return np.array([g.sigma_sq for g in self.groups])

    @property
    def pooled_variance(self) -> float:
        return self.pooled.variance


def group_summaries(data: GroupedSample, ridge: float = 0.0, *,
                    allow_degenerate: bool = False) -> GroupSummaries:
    """
    Fréchet summaries of every group and of the pooled sample.

    Parameters
    ----------
    data : GroupedSample
    ridge : float
        Optional constant added to each groupwise ``sigma_sq``. The default
        of zero makes degenerate groups an error.
    allow_degenerate : bool
        Return summaries even when a group has zero ``sigma_sq``. Only
        ``F_n`` is defined for such summaries.

    Raises
    ------
    DegenerateError
        When a group has zero variance of squared distances and ``ridge`` is 0.
    """
    if ridge < 0:
        raise InputError("ridge must be non-negative")
    groups = []
    for j in range(data.k):
        s = frechet_summary(data.group(j))
        if s.sigma_degenerate:
            if ridge == 0.0 and not allow_degenerate:
                raise DegenerateError(
                    f"group {j + 1} ({data.names[j]!r}) has zero variance of squared distances",
                    group=j + 1,
                )
        if ridge:
            s = FrechetSummary(s.mean_object, s.variance, s.sigma_sq + ridge, s.n,
                               s.approximate_mean, s.sq_distances, s.noise_floor)
        groups.append(s)
    pooled = frechet_summary(data.sample)
    return GroupSummaries(groups, data.weights, pooled, data.n)


def _clamp_f(f, scale):
    f = np.asarray(f, dtype=float)
    tol = F_TOL * np.maximum(1.0, scale)
    return np.where((f < 0) & (f >= -tol), 0.0, f)


def fn_statistic(s: GroupSummaries) -> float:
    """Pooled Fréchet variance minus the weighted within-group variances."""
    f = s.pooled_variance - float(np.dot(s.weights, s.variances))
    return float(_clamp_f(f, s.pooled_variance))


def un_statistic(s: GroupSummaries) -> float:
    """Weighted sum of squared pairwise differences of group Fréchet variances."""
    lam, v, s2 = s.weights, s.variances, s.sigma_sq
    if np.any(s2 <= 0):
        raise DegenerateError("a group has zero variance of squared distances",
                              group=int(np.argmax(s2 <= 0)) + 1)
    total = 0.0
    k = len(v)
    for j in range(k):
        for l in range(j + 1, k):
            total += lam[j] * lam[l] / (s2[j] * s2[l]) * (v[j] - v[l]) ** 2
    return float(total)


def _tn(n, lam, v, s2, f, u):
    f = np.maximum(f, 0.0)
    return n * u / np.sum(lam / s2, axis=-1) + n * f ** 2 / np.sum(lam ** 2 * s2, axis=-1)


def tn_statistic(s: GroupSummaries) -> float:
    """Combined statistic, asymptotically chi-square with ``k - 1`` df under the null."""
    u = un_statistic(s)
    f = fn_statistic(s)
    return float(_tn(s.n, s.weights, s.variances, s.sigma_sq, f, u))


def _batch_tn(n, lam, v, s2, vp):
    """T_n for arrays of replicate summaries ``v, s2`` of shape (B, k) and ``vp`` of shape (B,)."""
    f = _clamp_f(vp - v @ lam, vp)
    w = lam / s2                                     # (B, k)
    u = np.zeros(len(v))
    k = v.shape[1]
    for j in range(k):
        for l in range(j + 1, k):
            u += w[:, j] * w[:, l] * (v[:, j] - v[:, l]) ** 2
    return _tn(n, lam, v, s2, f, u)


# --------------------------------------------------------------------------
# reports
# --------------------------------------------------------------------------

@dataclass
class KSampleReport:
    summaries: GroupSummaries
    group_names: list
    f_n: float
    u_n: float
    t_n: float
    df: int
    p_asymptotic: float
    method: str
    alpha: float
    p_resampled: Optional[float] = None
    replicates_used: int = 0
    discarded_replicates: int = 0
    seed: Optional[int] = None
    stream_index: Optional[int] = None
    algorithm_id: str = field(default=ALGORITHM_ID)

    @property
    def p_value(self) -> float:
        """The p-value of the configured method."""
        return self.p_asymptotic if self.p_resampled is None else self.p_resampled

    @property
    def critical_value(self) -> float:
        return chi_square_quantile(1.0 - self.alpha, self.df)

    @property
    def reject(self) -> bool:
        if self.p_resampled is None:
            return self.t_n > self.critical_value
        return self.p_resampled <= self.alpha

    def verdict(self) -> str:
        word = "reject" if self.reject else "do not reject"
        return (f"{word} H0 (equal distributions) at alpha={self.alpha:g}: "
                f"T_n={self.t_n:.6g}, df={self.df}, p={self.p_value:.4g} [{self.method}]")

    def to_dict(self) -> dict:
        s = self.summaries
        return {
            "groups": [str(g) for g in self.group_names],
            "n": [int(g.n) for g in s.groups],
            "lambda": [float(x) for x in s.weights],
            "v_hat": [float(x) for x in s.variances],
            "sigma_sq": [float(x) for x in s.sigma_sq],
            "v_pooled": float(s.pooled_variance),
            "f_n": float(self.f_n),
            "u_n": float(self.u_n),
            "t_n": float(self.t_n),
            "df": int(self.df),
            "p_asymptotic": float(self.p_asymptotic),
            "p_resampled": None if self.p_resampled is None else float(self.p_resampled),
            "method": self.method,
            "alpha": float(self.alpha),
            "reject": bool(self.reject),
            "replicates": int(self.replicates_used),
            "discarded_replicates": int(self.discarded_replicates),
            "seed": self.seed,
            "stream_index": self.stream_index,
            "approximate_mean": bool(any(g.approximate_mean for g in s.groups) or s.pooled.approximate_mean),
            "algorithm_id": self.algorithm_id,
        }

    def to_json(self, **kwargs) -> str:
        kwargs.setdefault("indent", 2)
        return json.dumps(self.to_dict(), **kwargs)


def _check_alpha(alpha):
    alpha = float(alpha)
    if not 0.0 < alpha < 1.0:
        raise InputError(f"alpha must lie in (0, 1), got {alpha!r}")
    return alpha


def _base_report(data: GroupedSample, alpha: float, method: str, ridge: float) -> KSampleReport:
    s = group_summaries(data, ridge=ridge)
    f = fn_statistic(s)
    u = un_statistic(s)
    t = float(_tn(s.n, s.weights, s.variances, s.sigma_sq, f, u))
    df = data.k - 1
    return KSampleReport(s, list(data.names), f, u, t, df, chi_square_sf(t, df), method, alpha)


def asymptotic_test(data: GroupedSample, alpha: float = 0.05, ridge: float = 0.0) -> KSampleReport:
    """
    Chi-square calibrated k-sample test.

    Rejects when ``T_n`` exceeds the ``1 - alpha`` quantile of the
    chi-square law with ``k - 1`` degrees of freedom.
    """
    alpha = _check_alpha(alpha)
    return _base_report(data, alpha, "asymptotic", ridge)


def _replicate_statistics(data: GroupedSample, work: ObjectSample, index_rows: np.ndarray,
                          floor: float, pooled_v: Optional[float], ridge: float):
    """T_n for each row of ``index_rows``; group ``j`` takes the positions of its original slot."""
    b = len(index_rows)
    k = data.k
    v = np.empty((b, k))
    s2 = np.empty((b, k))
    degen = np.zeros(b, dtype=bool)
    start = 0
    for j, size in enumerate(data.sizes):
        cols = index_rows[:, start:start + size]
        v[:, j], s2[:, j], dj = batch_moments(work, cols, floor)
        degen |= dj if ridge == 0.0 else np.zeros(b, dtype=bool)
        start += size
    s2 = s2 + ridge
    if pooled_v is None:
        vp, _, _ = batch_moments(work, index_rows, floor)
    else:
        vp = np.full(b, pooled_v)
    t = np.full(b, np.nan)
    ok = ~degen
    if np.any(ok):
        t[ok] = _batch_tn(data.n, data.weights, v[ok], s2[ok], vp[ok])
    return t, degen


def _resampling_test(data: GroupedSample, replicates: int, seed, alpha: float, ridge: float,
                     scheme: str) -> KSampleReport:
    alpha = _check_alpha(alpha)
    replicates = int(replicates)
    if replicates < 99:
        raise InputError(f"need at least 99 replicates, got {replicates}")
    report = _base_report(data, alpha, scheme, ridge)
    stream = as_stream(seed)
    floor = noise_floor(data.sample)
    work = compress(data.sample)
    n = data.n
    # the concatenation of group index lists defines the slots each group occupies
    order = np.concatenate(data.indices)
    width = 1 if work.space is Space.GENERIC else work.data.shape[1]
    step = max(1, min(BLOCK_SIZE, int(4e6 // max(1, n * width))))

    tie = report.t_n - TIE_RTOL * max(1.0, report.t_n)
    exceed = 0
    used = 0
    discarded = 0
    done = 0
    block = 0
    while done < replicates:
        count = min(step, replicates - done)
        sub = stream.spawn(scheme, block)
        if scheme == "permutation":
            rows = order[sub.permutations(n, count)]
            t, degen = _replicate_statistics(data, work, rows, floor, report.summaries.pooled_variance, ridge)
        else:
            rows = sub.integers(0, n, size=(count, n))
            t, degen = _replicate_statistics(data, work, rows, floor, None, ridge)
        exceed += int(np.sum(t[~degen] >= tie))
        used += int(np.sum(~degen))
        discarded += int(np.sum(degen))
        done += count
        block += 1
    if discarded > MAX_DISCARD_FRACTION * replicates or used == 0:
        raise ResamplingError(
            f"{discarded} of {replicates} {scheme} replicates had a degenerate group variance"
        )
    report.p_resampled = (1.0 + exceed) / (used + 1.0)
    report.replicates_used = used
    report.discarded_replicates = discarded
    report.seed = stream.root_seed
    report.stream_index = stream.stream_index
    return report


def permutation_test(data: GroupedSample, replicates: int = 999, seed=0, alpha: float = 0.05,
                     ridge: float = 0.0) -> KSampleReport:
    """
    k-sample test with a label-permutation null distribution of ``T_n``.

    Group sizes are preserved. The p-value is ``(1 + #{T* >= T_n}) / (B + 1)``
    over the non-degenerate replicates; ties count as exceedances.

    Parameters
    ----------
    data : GroupedSample
    replicates : int
        Number of permutations ``B`` (at least 99).
    seed : int or RandomStream
        Equal seeds give identical reports.
    alpha : float
        Level used for the reject flag and the printed verdict.
    ridge : float
        Optional constant added to groupwise ``sigma_sq``.
    """
    return _resampling_test(data, replicates, seed, alpha, ridge, "permutation")


def bootstrap_test(data: GroupedSample, replicates: int = 999, seed=0, alpha: float = 0.05,
                   ridge: float = 0.0) -> KSampleReport:
    """
    k-sample test with a pooled-bootstrap null distribution of ``T_n``.

    Each replicate draws ``n`` objects with replacement from the pooled
    sample and splits them into groups of the original sizes, which imposes
    a common distribution. Otherwise as :func:`permutation_test`.
    """
    return _resampling_test(data, replicates, seed, alpha, ridge, "bootstrap")
