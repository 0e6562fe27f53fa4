"""
Fréchet mean and variance estimation with confidence intervals.

The sample Fréchet variance ``V`` is the mean squared distance to the sample
Fréchet mean, and ``sigma_sq`` estimates the variance of those squared
distances, which is the asymptotic variance of ``sqrt(n) * (V - V_pop)``.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .distributions import as_stream, std_normal_quantile
from .exceptions import DegenerateError, InputError, ResamplingError
from .spaces import ObjectSample, Space, medoid_index, order_free_mean

_EPS = np.finfo(float).eps

# replicates are drawn in fixed-size blocks, each from its own derived stream,
# so results do not depend on how blocks are scheduled
BLOCK_SIZE = 128


class IntervalMethod(str, enum.Enum):
    ASYMPTOTIC_VARIANCE = "asymptotic-variance"
    ASYMPTOTIC_STDDEV = "asymptotic-stddev"
    BOOTSTRAP_VARIANCE = "bootstrap-variance"


@dataclass(frozen=True)
class FrechetSummary:
    """Sample Fréchet mean, variance and the variance of squared distances."""

    mean_object: object
    variance: float
    sigma_sq: float
    n: int
    approximate_mean: bool = False
    sq_distances: Optional[np.ndarray] = None
    noise_floor: float = 0.0

    @property
    def stddev(self) -> float:
        return math.sqrt(self.variance)

    @property
    def variance_degenerate(self) -> bool:
        return self.variance <= self.noise_floor

    @property
    def sigma_degenerate(self) -> bool:
        if self.sq_distances is None:
            return self.sigma_sq <= 0.0
        return _spread_degenerate(self.sq_distances, self.variance, self.noise_floor)


@dataclass(frozen=True)
class IntervalEstimate:
    lower: float
    upper: float
    level: float
    method: IntervalMethod
    replicates: Optional[int] = None
    discarded: int = 0

    def __contains__(self, value) -> bool:
        return self.lower <= value <= self.upper

    @property
    def width(self) -> float:
        return self.upper - self.lower


def _spread_degenerate(d2, v, floor) -> bool:
    d2 = np.asarray(d2)
    spread = np.max(np.abs(d2 - v))
    return bool(spread <= floor + 64 * _EPS * np.max(np.abs(d2)))


def noise_floor(sample: ObjectSample) -> float:
    """Squared-distance magnitude indistinguishable from round-off in ``sample``."""
    if sample.space is Space.GENERIC:
        return float((64 * _EPS * np.max(sample.distances)) ** 2)
    p = sample.data.shape[1]
    scale = float(np.max(np.abs(sample.data))) if sample.data.size else 0.0
    return sample.weight * p * (64 * _EPS * scale) ** 2


def moments(sq_distances) -> tuple[float, float]:
    """Mean of squared distances and their (biased) variance."""
    d2 = np.asarray(sq_distances, dtype=float)
    v = float(order_free_mean(d2))
    return v, float(order_free_mean((d2 - v) ** 2))


def fit_mean(sample: ObjectSample):
    """
    Fréchet mean of ``sample`` and the squared distances to it.

    Returns
    -------
    mean_object, sq_distances, approximate : tuple
        ``approximate`` is True when the medoid stood in for the mean.
    """
    if len(sample) < 1:
        raise InputError("empty sample")
    if sample.space is not Space.GENERIC:
        center = order_free_mean(sample.data)
        return sample.make_object(center), sample.sq_distances_to(center), False
    if sample.mean_solver is not None:
        mean_obj, d2 = sample.mean_solver(np.arange(len(sample)))
        return mean_obj, np.asarray(d2, dtype=float), False
    d2_table = sample.distances ** 2
    i = medoid_index(d2_table)
    return sample[i], d2_table[i].copy(), True


def frechet_summary(sample: ObjectSample) -> FrechetSummary:
    """
    Sample Fréchet mean, Fréchet variance and ``sigma_sq``.

    Examples
    --------
    >>> s = frechet_summary(ObjectSample.vectors([0.0, 1.0, 2.0]))
    >>> round(s.variance, 12), round(s.sigma_sq, 12)
    (0.666666666667, 0.222222222222)
    """
    mean_obj, d2, approx = fit_mean(sample)
    v, s2 = moments(d2)
    d2 = np.array(d2)
    d2.setflags(write=False)
    return FrechetSummary(mean_obj, v, s2, len(sample), approx, d2, noise_floor(sample))


def _check_level(level: float) -> float:
    level = float(level)
    if not 0.0 < level < 1.0:
        raise InputError(f"confidence level must lie in (0, 1), got {level!r}")
    return level


def _require_sigma(summary: FrechetSummary):
    if summary.n < 2:
        raise InputError("intervals need at least 2 observations")
    if summary.sigma_sq <= 0.0 or summary.sigma_degenerate:
        raise DegenerateError("variance of squared distances is zero; the interval is undefined")


def variance_interval(summary: FrechetSummary, level: float = 0.95) -> IntervalEstimate:
    """
    Asymptotic normal interval for the population Fréchet variance.

    ``V -/+ z * sigma / sqrt(n)`` with the lower end clamped at zero.
    """
    level = _check_level(level)
    _require_sigma(summary)
    z = std_normal_quantile(0.5 * (1.0 + level))
    half = z * math.sqrt(summary.sigma_sq / summary.n)
    return IntervalEstimate(max(summary.variance - half, 0.0), summary.variance + half,
                            level, IntervalMethod.ASYMPTOTIC_VARIANCE)


def stddev_interval(summary: FrechetSummary, level: float = 0.95) -> IntervalEstimate:
    """Asymptotic interval for the Fréchet standard deviation ``sqrt(V)`` (delta method)."""
    level = _check_level(level)
    if summary.variance <= 0.0 or summary.variance_degenerate:
        raise DegenerateError("Fréchet variance is zero; the standard deviation interval is undefined")
    _require_sigma(summary)
    z = std_normal_quantile(0.5 * (1.0 + level))
    center = math.sqrt(summary.variance)
    half = z * math.sqrt(summary.sigma_sq) / (2.0 * math.sqrt(summary.n * summary.variance))
    return IntervalEstimate(max(center - half, 0.0), center + half, level,
                            IntervalMethod.ASYMPTOTIC_STDDEV)


# --------------------------------------------------------------------------
# resampled moments
# --------------------------------------------------------------------------

def batch_moments(sample: ObjectSample, index_rows: np.ndarray, floor: float):
    """
    Fréchet variance and ``sigma_sq`` for many index sets at once.

    Parameters
    ----------
    sample : ObjectSample
    index_rows : ndarray of int, shape (B, m)
        Each row lists the objects (with repeats) of one resampled sample.
    floor : float
        Noise floor from :func:`noise_floor`.

    Returns
    -------
    v, sigma_sq, degenerate : ndarray of shape (B,)
    """
    index_rows = np.atleast_2d(np.asarray(index_rows, dtype=int))
    if sample.space is Space.GENERIC:
        out_v = np.empty(len(index_rows))
        out_s = np.empty(len(index_rows))
        degen = np.empty(len(index_rows), dtype=bool)
        for b, idx in enumerate(index_rows):
            _, d2, _ = fit_mean(sample.subset(idx))
            out_v[b], out_s[b] = moments(d2)
            degen[b] = _spread_degenerate(d2, out_v[b], floor)
        return out_v, out_s, degen
    x = sample.data[index_rows]                     # (B, m, p)
    center = x.mean(axis=1, keepdims=True)
    diff = x - center
    d2 = sample.weight * np.einsum("bmp,bmp->bm", diff, diff)
    v = d2.mean(axis=1)
    dev = d2 - v[:, None]
    s2 = np.mean(dev ** 2, axis=1)
    spread = np.max(np.abs(dev), axis=1)
    degen = spread <= floor + 64 * _EPS * np.max(np.abs(d2), axis=1)
    return v, s2, degen


def compress(sample: ObjectSample) -> ObjectSample:
    """
    Isometric low-rank copy of a built-in sample for resampling loops.

    Rows are centered and rotated onto their principal axes, dropping axes
    with numerically zero singular values and folding the metric weight into
    the coordinates. Pairwise distances, and therefore every Fréchet
    statistic, are unchanged up to round-off.
    """
    if sample.space is Space.GENERIC:
        return sample
    x = sample.data - sample.data.mean(axis=0)
    if x.shape[1] <= 8:
        coords = x * math.sqrt(sample.weight)
    else:
        u, s, _ = np.linalg.svd(x, full_matrices=False)
        keep = s > (s[0] if s.size else 0.0) * max(x.shape) * _EPS
        coords = (u[:, keep] * s[keep]) * math.sqrt(sample.weight)
        if coords.shape[1] == 0:
            coords = np.zeros((x.shape[0], 1))
    return ObjectSample(Space.EUCLIDEAN, coords, validate=False)


def _chunk_rows(sample: ObjectSample, m: int) -> int:
    width = 1 if sample.space is Space.GENERIC else sample.data.shape[1]
    return max(1, min(BLOCK_SIZE, int(4e6 // max(1, m * width))))


def bootstrap_variance_interval(sample: ObjectSample, level: float = 0.95, replicates: int = 1000,
                                resample_size: Optional[int] = None, seed=0) -> IntervalEstimate:
    """
    Bootstrap-of-the-root interval for the Fréchet variance.

    Each replicate draws ``m`` objects with replacement and evaluates the
    studentized root ``sqrt(m) * (V* - V) / sigma*``. Replicates with a
    vanishing ``sigma*`` are discarded and counted. With ``q`` the empirical
    quantiles of the roots the interval is
    ``[V - q_hi * sigma / sqrt(n), V - q_lo * sigma / sqrt(n)]``.

    Parameters
    ----------
    sample : ObjectSample
    level : float
        Confidence level.
    replicates : int
        Number of bootstrap samples, at least 100.
    resample_size : int, optional
        Bootstrap sample size ``m``, defaults to ``n``.
    seed : int or RandomStream
        Root seed; equal seeds give identical intervals.
    """
    level = _check_level(level)
    n = len(sample)
    if n < 2:
        raise InputError("the bootstrap interval needs at least 2 observations")
    if replicates < 100:
        raise InputError(f"need at least 100 bootstrap replicates, got {replicates}")
    m = n if resample_size is None else int(resample_size)
    if m < 2:
        raise InputError(f"resample size must be at least 2, got {m}")

    summary = frechet_summary(sample)
    floor = noise_floor(sample)
    work = compress(sample)
    stream = as_stream(seed)
    roots = []
    discarded = 0
    done = 0
    block = 0
    step = _chunk_rows(work, m)
    while done < replicates:
        count = min(step, replicates - done)
        sub = stream.spawn(block)
        idx = sub.integers(0, n, size=(count, m))
        v, s2, degen = batch_moments(work, idx, floor)
        keep = ~degen
        roots.append(math.sqrt(m) * (v[keep] - summary.variance) / np.sqrt(s2[keep]))
        discarded += int(np.sum(degen))
        done += count
        block += 1
    roots = np.concatenate(roots)
    if roots.size == 0:
        raise ResamplingError("every bootstrap replicate had zero variance of squared distances")
    if summary.sigma_degenerate:
        raise DegenerateError("variance of squared distances is zero; the interval is undefined")

    q_lo, q_hi = np.quantile(roots, [0.5 * (1.0 - level), 0.5 * (1.0 + level)])
    scale = math.sqrt(summary.sigma_sq / n)
    lower = max(summary.variance - q_hi * scale, 0.0)
    upper = summary.variance - q_lo * scale
    return IntervalEstimate(lower, upper, level, IntervalMethod.BOOTSTRAP_VARIANCE,
                            replicates=int(roots.size), discarded=discarded)
