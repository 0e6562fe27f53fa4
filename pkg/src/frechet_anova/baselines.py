"""
Distance-based two-sample tests used as power baselines.

Both tests see the data only through the pooled pairwise distance matrix
and are calibrated by permuting group labels.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.spatial.distance import squareform

from .distributions import ALGORITHM_ID, as_stream
from .exceptions import DegenerateError, InputError
from .frechet import BLOCK_SIZE
from .ksample import GroupedSample, TIE_RTOL


@dataclass(frozen=True)
class PairwiseDistances:
    """Condensed upper-triangular distances of a pooled two-group sample."""

    condensed: np.ndarray
    sizes: tuple

    def __post_init__(self):
        c = np.asarray(self.condensed, dtype=float)
        n = sum(self.sizes)
        if c.shape != (n * (n - 1) // 2,):
            raise InputError(f"expected {n * (n - 1) // 2} condensed entries, got {c.shape}")
        if np.any(c < 0) or not np.all(np.isfinite(c)):
            raise InputError("distances must be finite and non-negative")
        object.__setattr__(self, "condensed", c)

    @property
    def n(self) -> int:
        return int(sum(self.sizes))

    @classmethod
    def from_grouped(cls, data: GroupedSample) -> "PairwiseDistances":
        if data.k != 2:
            raise InputError(f"baseline tests compare exactly 2 groups, got {data.k}")
        order = np.concatenate(data.indices)
        full = data.sample.pairwise_distances()[np.ix_(order, order)]
        return cls(squareform(full, checks=False), tuple(int(s) for s in data.sizes))

    def square(self) -> np.ndarray:
        return squareform(self.condensed)


@dataclass
class BaselineReport:
    method: str
    statistic: float
    p_value: float
    alpha: float
    replicates: int
    seed: Optional[int] = None
    stream_index: Optional[int] = None
    bandwidth: Optional[float] = None
    algorithm_id: str = field(default=ALGORITHM_ID)

    @property
    def reject(self) -> bool:
        return self.p_value <= self.alpha

    def to_dict(self) -> dict:
        return {
            "method": self.method,
            "statistic": float(self.statistic),
            "p_value": float(self.p_value),
            "alpha": float(self.alpha),
            "reject": bool(self.reject),
            "replicates": int(self.replicates),
            "seed": self.seed,
            "stream_index": self.stream_index,
            "bandwidth": self.bandwidth,
            "algorithm_id": self.algorithm_id,
        }


def _block_sums(mat: np.ndarray, member: np.ndarray):
    """Within-first, within-second and cross sums of ``mat`` for 0/1 membership rows."""
    am = member @ mat
    s11 = np.einsum("bi,bi->b", am, member)
    s12 = np.einsum("bi,bi->b", am, 1.0 - member)
    s22 = mat.sum() - s11 - 2.0 * s12
    return s11, s22, s12


def _energy_from_sums(s11, s22, s12, n1, n2):
    return 2.0 * s12 / (n1 * n2) - s11 / n1 ** 2 - s22 / n2 ** 2


def _mmd_from_sums(s11, s22, s12, n1, n2, unbiased):
    if unbiased:
        return ((s11 - n1) / (n1 * (n1 - 1)) + (s22 - n2) / (n2 * (n2 - 1))
                - 2.0 * s12 / (n1 * n2))
    return s11 / n1 ** 2 + s22 / n2 ** 2 - 2.0 * s12 / (n1 * n2)


def energy_statistic(dist: PairwiseDistances) -> float:
    """``2 E|X - Y| - E|X - X'| - E|Y - Y'|`` with all averages over full (V-statistic) blocks."""
    n1, n2 = dist.sizes
    member = np.zeros((1, dist.n))
    member[0, :n1] = 1.0
    s11, s22, s12 = _block_sums(dist.square(), member)
    return float(_energy_from_sums(s11, s22, s12, n1, n2)[0])


def median_bandwidth(dist: PairwiseDistances) -> float:
    """Median of the non-zero pooled distances; 1 when there are none."""
    nz = dist.condensed[dist.condensed > 0]
    return float(np.median(nz)) if nz.size else 1.0


def gaussian_kernel(dist: PairwiseDistances, bandwidth: float) -> np.ndarray:
    d = dist.square()
    return np.exp(-(d ** 2) / (2.0 * bandwidth ** 2))


def mmd_statistic(dist: PairwiseDistances, bandwidth: Optional[float] = None,
                  unbiased: bool = False) -> float:
    """
    Squared maximum mean discrepancy with a Gaussian kernel on the distances.

    Parameters
    ----------
    dist : PairwiseDistances
    bandwidth : float, optional
        Kernel width ``h`` in ``exp(-d^2 / (2 h^2))``; the median heuristic
        by default.
    unbiased : bool
        Exclude the kernel diagonal from the within-group averages.
    """
    n1, n2 = dist.sizes
    h = median_bandwidth(dist) if bandwidth is None else float(bandwidth)
    member = np.zeros((1, dist.n))
    member[0, :n1] = 1.0
    s11, s22, s12 = _block_sums(gaussian_kernel(dist, h), member)
    return float(_mmd_from_sums(s11, s22, s12, n1, n2, unbiased)[0])


def _permutation_pvalue(mat, n1, n2, observed, stat_fn, replicates, stream, tag):
    n = n1 + n2
    tie = observed - TIE_RTOL * max(1.0, abs(observed))
    exceed = 0
    done = 0
    block = 0
    while done < replicates:
        count = min(BLOCK_SIZE, replicates - done)
        perms = stream.spawn(tag, block).permutations(n, count)
        member = (perms < n1).astype(float)
        stats = stat_fn(*_block_sums(mat, member))
        exceed += int(np.sum(stats >= tie))
        done += count
        block += 1
    return (1.0 + exceed) / (replicates + 1.0)


def _prepare(data, replicates, alpha):
    if isinstance(data, PairwiseDistances):
        dist = data
    else:
        dist = PairwiseDistances.from_grouped(data)
    if min(dist.sizes) < 2:
        raise InputError("each group needs at least 2 objects")
    if int(replicates) < 1:
        raise InputError("need at least one permutation replicate")
    if not 0.0 < alpha < 1.0:
        raise InputError(f"alpha must lie in (0, 1), got {alpha!r}")
    return dist


def energy_test(data, replicates: int = 999, seed=0, alpha: float = 0.05) -> BaselineReport:
    """
    Permutation two-sample energy test.

    Parameters
    ----------
    data : GroupedSample or PairwiseDistances
        Exactly two groups.
    replicates : int
        Number of label permutations.
    seed : int or RandomStream
    alpha : float
        Level for the reject flag.
    """
    dist = _prepare(data, replicates, alpha)
    n1, n2 = dist.sizes
    stream = as_stream(seed)
    observed = energy_statistic(dist)
    p = _permutation_pvalue(dist.square(), n1, n2, observed,
                            lambda a, b, c: _energy_from_sums(a, b, c, n1, n2),
                            int(replicates), stream, "energy")
    return BaselineReport("energy", observed, p, alpha, int(replicates),
                          stream.root_seed, stream.stream_index)


def mmd_test(data, replicates: int = 999, seed=0, alpha: float = 0.05,
             unbiased: bool = False) -> BaselineReport:
    """
    Permutation two-sample test on the Gaussian-kernel MMD.

    The kernel width is the median of the non-zero pooled distances.

    Raises
    ------
    DegenerateError
        When all pooled distances are zero.
    """
    dist = _prepare(data, replicates, alpha)
    if not np.any(dist.condensed > 0):
        raise DegenerateError("all pairwise distances are zero")
    n1, n2 = dist.sizes
    stream = as_stream(seed)
    h = median_bandwidth(dist)
    kernel = gaussian_kernel(dist, h)
    member = np.zeros((1, dist.n))
    member[0, :n1] = 1.0
    observed = float(_mmd_from_sums(*_block_sums(kernel, member), n1, n2, unbiased)[0])
    p = _permutation_pvalue(kernel, n1, n2, observed,
                            lambda a, b, c: _mmd_from_sums(a, b, c, n1, n2, unbiased),
                            int(replicates), stream, "mmd")
    return BaselineReport("mmd", observed, p, alpha, int(replicates),
                          stream.root_seed, stream.stream_index, bandwidth=h)
