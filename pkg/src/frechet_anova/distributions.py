"""
Distribution functions and reproducible random streams.

The chi-square and normal functions are thin wrappers over the regularized
incomplete gamma function and the complementary error function. Every
stochastic routine in the package draws from a :class:`RandomStream`, which
is fully determined by a root seed and a stream index.
"""
from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass, field

import numpy as np
from scipy import special

from .exceptions import InputError

ALGORITHM_ID = "numpy-PCG64/SeedSequence(root_seed, spawn_key=(stream_index,))"

_SQRT2 = math.sqrt(2.0)


def _check_df(df: int) -> int:
    if int(df) != df or df < 1:
        raise InputError(f"degrees of freedom must be a positive integer, got {df!r}")
    return int(df)


def _check_probability(p: float) -> float:
    p = float(p)
    if not 0.0 < p < 1.0:
        raise InputError(f"probability must lie in (0, 1), got {p!r}")
    return p


def std_normal_cdf(x):
    """Standard normal distribution function, computed through ``erfc``."""
    return 0.5 * special.erfc(-np.asarray(x, dtype=float) / _SQRT2)


def std_normal_quantile(p: float) -> float:
    """
    Quantile function of the standard normal distribution.

    Parameters
    ----------
    p : float
        Probability in the open interval (0, 1).

    Returns
    -------
    float
        The value ``z`` with ``Phi(z) = p``.
    """
    p = _check_probability(p)
    if p > 0.5:
        # 1 - p is exact here, and the lower tail keeps full relative accuracy
        return -std_normal_quantile(1.0 - p)
    z = float(special.ndtri(p))
    # one Newton step on Phi(z) - p
    dens = math.exp(-0.5 * z * z) / math.sqrt(2.0 * math.pi)
    if dens > 0.0:
        z -= (float(std_normal_cdf(z)) - p) / dens
    return z


def chi_square_sf(x: float, df: int) -> float:
    """Survival function ``P(X > x)`` of the chi-square law with ``df`` degrees of freedom."""
    df = _check_df(df)
    x = float(x)
    if not x >= 0.0:
        raise InputError(f"chi-square argument must be non-negative, got {x!r}")
    if x == 0.0:
        return 1.0
    return float(special.gammaincc(0.5 * df, 0.5 * x))


def _chi_square_pdf(x: float, df: int) -> float:
    k = 0.5 * df
    if x <= 0.0:
        return 0.0
    return math.exp((k - 1.0) * math.log(x) - 0.5 * x - k * math.log(2.0) - math.lgamma(k))


def chi_square_quantile(p: float, df: int, *, tol: float = 1e-10) -> float:
    """
    Quantile function of the chi-square distribution.

    Solves ``chi_square_sf(x, df) = 1 - p`` by Newton steps safeguarded with
    a bisection bracket.

    Parameters
    ----------
    p : float
        Lower-tail probability in (0, 1).
    df : int
        Degrees of freedom.
    tol : float
        Absolute tolerance on ``x``.
    """
    p = _check_probability(p)
    df = _check_df(df)
    target = 1.0 - p

    lo, hi = 0.0, max(1.0, float(df))
    while chi_square_sf(hi, df) > target:
        lo, hi = hi, 2.0 * hi

    x = 0.5 * (lo + hi)
    for _ in range(500):
        g = chi_square_sf(x, df) - target
        if g == 0.0:
            break
        if g > 0.0:
            lo = x
        else:
            hi = x
        dens = _chi_square_pdf(x, df)
        x_new = x + g / dens if dens > 0.0 else lo
        if not lo < x_new < hi:
            x_new = 0.5 * (lo + hi)
        step = abs(x_new - x)
        x = x_new
        if step <= min(tol, 1e-13 * x) or hi - lo <= 4 * np.finfo(float).eps * hi:
            break
    return float(x)


def stream_key(*parts) -> int:
    """
    Stable 63-bit integer derived from a tuple of ints and strings.

    Used to turn structured cell coordinates such as
    ``(grid_index, run_index, "tn_bootstrap")`` into a stream index.
    Unlike :func:`hash`, the value does not change between interpreter runs.
    """
    text = "\x1f".join(f"{type(p).__name__}:{p}" for p in parts)
    digest = hashlib.blake2b(text.encode("utf-8"), digest_size=8).digest()
    return int.from_bytes(digest, "little") >> 1


@dataclass
class RandomStream:
    """
    Single-owner random stream fixed by ``(root_seed, stream_index)``.

    Normal variates are produced by inverting uniforms through the normal
    quantile function, so the sequence of draws does not depend on the
    consumption pattern of a rejection sampler.
    """

    root_seed: int
    stream_index: int = 0
    algorithm_id: str = field(default=ALGORITHM_ID, init=False)

    def __post_init__(self):
        if self.root_seed < 0 or self.stream_index < 0:
            raise InputError("root_seed and stream_index must be non-negative")
        seq = np.random.SeedSequence(
            entropy=int(self.root_seed), spawn_key=(int(self.stream_index),)
        )
        self._gen = np.random.Generator(np.random.PCG64(seq))

    def spawn(self, *key) -> "RandomStream":
        """Child stream keyed by this stream's index and ``key``."""
        return RandomStream(self.root_seed, stream_key(self.stream_index, *key))

    @property
    def state(self) -> dict:
        return self._gen.bit_generator.state

    def uniform(self, size=None):
        """Uniform draws on the open interval (0, 1)."""
        k = self._gen.integers(0, 2**53, size=size, dtype=np.int64)
        return (k + 0.5) / 2.0**53

    def normal(self, size=None, loc=0.0, scale=1.0):
        return loc + scale * special.ndtri(self.uniform(size))

    def gamma(self, shape, size=None):
        return self._gen.standard_gamma(shape, size=size)

    def beta(self, a, b, size=None):
        x = self.gamma(a, size)
        y = self.gamma(b, size)
        return x / (x + y)

    def chisquare(self, df, size=None):
        return 2.0 * self.gamma(0.5 * df, size)

    def student_t(self, df, size=None):
        return self.normal(size) / np.sqrt(self.chisquare(df, size) / df)

    def integers(self, low, high=None, size=None):
        """Integers in ``[low, high)`` (or ``[0, low)`` when ``high`` is omitted)."""
        return self._gen.integers(low, high, size=size)

    def permutation(self, n: int):
        return self._gen.permutation(n)

    def permutations(self, n: int, count: int):
        """``count`` independent permutations of ``range(n)`` as a 2-D array."""
        return self._gen.permuted(np.tile(np.arange(n), (count, 1)), axis=1)

    def choice_weighted(self, weights):
        """One index drawn with probability proportional to ``weights``."""
        cum = np.cumsum(weights)
        total = cum[-1]
        if not total > 0.0:
            return int(self._gen.integers(len(cum)))
        u = float(self.uniform()) * total
        return int(min(np.searchsorted(cum, u, side="right"), len(cum) - 1))


def derive_stream(root_seed: int, stream_index: int = 0) -> RandomStream:
    """Return the stream identified by ``(root_seed, stream_index)``."""
    return RandomStream(int(root_seed), int(stream_index))


def as_stream(seed_or_stream, stream_index: int = 0) -> RandomStream:
    if isinstance(seed_or_stream, RandomStream):
        return seed_or_stream
    if seed_or_stream is None:
        seed_or_stream = 0
    return derive_stream(int(seed_or_stream), stream_index)
