"""
Metric object spaces.

Three built-in spaces are supported:

* 1-D distributions under the L2-Wasserstein metric, stored as quantile
  functions evaluated on the midpoint grid ``(i + 0.5) / M``;
* square matrices (graph Laplacians, correlation matrices, symmetric
  matrices) under the Frobenius metric;
* Euclidean vectors.

All three embed isometrically (up to a constant weight) into a Euclidean
space, so an :class:`ObjectSample` stores its objects as rows of one array
and computes squared distances as ``weight * ||x - y||^2``. Fréchet means in
these spaces are plain averages of the rows.

A fourth, generic space wraps a caller-supplied distance table for objects
with no closed-form mean.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np

from .exceptions import DimensionError, InputError

DEFAULT_GRID_SIZE = 100

SYMMETRY_RTOL = 1e-12
LAPLACIAN_ROW_ATOL = 1e-10
CORRELATION_EIG_ATOL = 1e-8
CORRELATION_DIAG_ATOL = 1e-10


class Space(str, enum.Enum):
    WASSERSTEIN = "wasserstein"
    FROBENIUS = "frobenius"
    EUCLIDEAN = "euclidean"
    GENERIC = "generic"


class MatrixKind(str, enum.Enum):
    LAPLACIAN = "laplacian"
    CORRELATION = "correlation"
    SYMMETRIC = "symmetric"


def midpoint_grid(grid_size: int) -> np.ndarray:
    """Probabilities ``(i + 0.5) / M`` for ``i = 0, ..., M - 1``."""
    if grid_size < 2:
        raise InputError(f"grid size must be at least 2, got {grid_size}")
    return (np.arange(grid_size) + 0.5) / grid_size


def _frozen(a) -> np.ndarray:
    arr = np.array(a, dtype=float)
    arr.setflags(write=False)
    return arr


# --------------------------------------------------------------------------
# validity checks (vectorized over a leading sample axis)
# --------------------------------------------------------------------------

def _check_finite(arr: np.ndarray, what: str):
    if not np.all(np.isfinite(arr)):
        bad = np.argwhere(~np.isfinite(arr.reshape(len(arr), -1)))[0][0]
        raise InputError(f"{what} {bad} has non-finite entries")


def _check_quantile_grids(values: np.ndarray):
    if values.shape[-1] < 2:
        raise InputError("quantile grids need at least 2 points")
    _check_finite(values, "quantile grid")
    decreasing = np.any(np.diff(values, axis=-1) < 0, axis=-1)
    if np.any(decreasing):
        raise InputError(f"quantile grid {int(np.argmax(decreasing))} is not non-decreasing")


def _check_matrices(entries: np.ndarray, kind: MatrixKind):
    if entries.ndim != 3 or entries.shape[1] != entries.shape[2]:
        raise DimensionError(f"expected square matrices, got shape {entries.shape[1:]}")
    _check_finite(entries, "matrix")
    trans = np.swapaxes(entries, 1, 2)
    tol = SYMMETRY_RTOL * np.maximum(1.0, np.abs(entries))
    asym = np.any(np.abs(entries - trans) > tol, axis=(1, 2))
    if np.any(asym):
        raise InputError(f"matrix {int(np.argmax(asym))} is not symmetric")
    r = entries.shape[1]
    off = ~np.eye(r, dtype=bool)
    if kind is MatrixKind.LAPLACIAN:
        rows = np.any(np.abs(entries.sum(axis=2)) > LAPLACIAN_ROW_ATOL, axis=1)
        if np.any(rows):
            raise InputError(f"Laplacian {int(np.argmax(rows))} has non-zero row sums")
        pos = np.any(entries[:, off] > 0, axis=1)
        if np.any(pos):
            raise InputError(f"Laplacian {int(np.argmax(pos))} has positive off-diagonal entries")
    elif kind is MatrixKind.CORRELATION:
        diag = np.any(np.abs(np.diagonal(entries, axis1=1, axis2=2) - 1.0) > CORRELATION_DIAG_ATOL, axis=1)
        if np.any(diag):
            raise InputError(f"correlation matrix {int(np.argmax(diag))} lacks a unit diagonal")
        rng = np.any(np.abs(entries[:, off]) > 1.0 + SYMMETRY_RTOL, axis=1)
        if np.any(rng):
            raise InputError(f"correlation matrix {int(np.argmax(rng))} has entries outside [-1, 1]")
        eig = np.linalg.eigvalsh(0.5 * (entries + trans))[:, 0]
        psd = eig < -CORRELATION_EIG_ATOL
        if np.any(psd):
            raise InputError(f"correlation matrix {int(np.argmax(psd))} is not positive semidefinite")


# --------------------------------------------------------------------------
# object types
# --------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class QuantileDistribution:
    """A 1-D distribution given by its quantile function on the midpoint grid."""

    values: np.ndarray

    def __post_init__(self):
        values = _frozen(self.values)
        if values.ndim != 1:
            raise InputError("quantile grid must be one-dimensional")
        _check_quantile_grids(values[None, :])
        object.__setattr__(self, "values", values)

    @property
    def grid_size(self) -> int:
        return self.values.shape[0]

    @classmethod
    def from_quantile_function(cls, qf: Callable, grid_size: int = DEFAULT_GRID_SIZE):
        """Evaluate a vectorized quantile function on the midpoint grid."""
        return cls(qf(midpoint_grid(grid_size)))

    def __eq__(self, other):
        return isinstance(other, QuantileDistribution) and np.array_equal(self.values, other.values)

    __hash__ = None


@dataclass(frozen=True, eq=False)
class SquareMatrixObject:
    """An ``r x r`` symmetric matrix tagged with the constraint set it lives in."""

    entries: np.ndarray
    kind: MatrixKind = MatrixKind.SYMMETRIC

    def __post_init__(self):
        entries = _frozen(self.entries)
        kind = MatrixKind(self.kind)
        if entries.ndim != 2:
            raise DimensionError("matrix entries must be two-dimensional")
        _check_matrices(entries[None], kind)
        object.__setattr__(self, "entries", entries)
        object.__setattr__(self, "kind", kind)

    @property
    def dimension(self) -> int:
        return self.entries.shape[0]

    def __eq__(self, other):
        return (
            isinstance(other, SquareMatrixObject)
            and self.kind == other.kind
            and np.array_equal(self.entries, other.entries)
        )

    __hash__ = None


@dataclass(frozen=True, eq=False)
class EuclideanPoint:
    coords: np.ndarray

    def __post_init__(self):
        coords = _frozen(np.atleast_1d(self.coords))
        if coords.ndim != 1:
            raise DimensionError("coordinates must be one-dimensional")
        _check_finite(coords[None], "point")
        object.__setattr__(self, "coords", coords)

    @property
    def dimension(self) -> int:
        return self.coords.shape[0]

    def __eq__(self, other):
        return isinstance(other, EuclideanPoint) and np.array_equal(self.coords, other.coords)

    __hash__ = None


# --------------------------------------------------------------------------
# metrics
# --------------------------------------------------------------------------

def wasserstein_distance(a: QuantileDistribution, b: QuantileDistribution) -> float:
    """
    L2-Wasserstein distance between two distributions on the same grid.

    The integral of the squared quantile difference over (0, 1) is
    approximated by the midpoint rule.
    """
    if a.grid_size != b.grid_size:
        raise DimensionError(f"grid sizes differ: {a.grid_size} vs {b.grid_size}")
    diff = a.values - b.values
    return float(np.sqrt(np.dot(diff, diff) / a.grid_size))


def frobenius_distance(a: SquareMatrixObject, b: SquareMatrixObject) -> float:
    """Frobenius distance ``sqrt(trace((A - B)^T (A - B)))``."""
    if a.dimension != b.dimension:
        raise DimensionError(f"matrix dimensions differ: {a.dimension} vs {b.dimension}")
    diff = (a.entries - b.entries).ravel()
    return float(np.sqrt(np.dot(diff, diff)))


def euclidean_distance(a: EuclideanPoint, b: EuclideanPoint) -> float:
    if a.dimension != b.dimension:
        raise DimensionError(f"dimensions differ: {a.dimension} vs {b.dimension}")
    diff = a.coords - b.coords
    return float(np.sqrt(np.dot(diff, diff)))


def distance(a, b) -> float:
    """Distance between two built-in objects of the same type."""
    if isinstance(a, QuantileDistribution) and isinstance(b, QuantileDistribution):
        return wasserstein_distance(a, b)
    if isinstance(a, SquareMatrixObject) and isinstance(b, SquareMatrixObject):
        return frobenius_distance(a, b)
    if isinstance(a, EuclideanPoint) and isinstance(b, EuclideanPoint):
        return euclidean_distance(a, b)
    raise InputError(f"cannot measure distance between {type(a).__name__} and {type(b).__name__}")


# --------------------------------------------------------------------------
# constructors from raw data
# --------------------------------------------------------------------------

def empirical_quantile_grid(raw_samples, grid_size: int = DEFAULT_GRID_SIZE) -> QuantileDistribution:
    """
    Quantile grid estimated from raw observations.

    The ``j``-th order statistic (1-based) is placed at probability
    ``(j - 0.5) / n``; quantiles in between are linearly interpolated and
    held constant beyond the extreme order statistics.

    Parameters
    ----------
    raw_samples : array_like
        At least two finite observations.
    grid_size : int
        Number of grid points ``M``.

    Returns
    -------
    QuantileDistribution
    """
    x = np.asarray(raw_samples, dtype=float).ravel()
    if x.size < 2:
        raise InputError(f"need at least 2 observations, got {x.size}")
    if not np.all(np.isfinite(x)):
        raise InputError("raw samples contain non-finite values")
    x = np.sort(x)
    positions = (np.arange(1, x.size + 1) - 0.5) / x.size
    values = np.interp(midpoint_grid(grid_size), positions, x)
    return QuantileDistribution(np.maximum.accumulate(values))


def laplacian_from_adjacency(weights) -> SquareMatrixObject:
    """
    Graph Laplacian ``L = D - W`` of a weighted simple graph.

    Raises
    ------
    InputError
        If ``W`` is asymmetric, has negative weights or a non-zero diagonal.
    """
    w = np.asarray(weights, dtype=float)
    if w.ndim != 2 or w.shape[0] != w.shape[1]:
        raise DimensionError(f"adjacency must be square, got shape {w.shape}")
    if not np.all(np.isfinite(w)):
        raise InputError("adjacency has non-finite entries")
    if np.any(np.abs(w - w.T) > SYMMETRY_RTOL * np.maximum(1.0, np.abs(w))):
        raise InputError("adjacency is not symmetric")
    if np.any(w < 0):
        raise InputError("adjacency has negative weights")
    if np.any(np.diagonal(w) != 0):
        raise InputError("adjacency has self loops (non-zero diagonal)")
    w = 0.5 * (w + w.T)
    lap = np.diag(w.sum(axis=1)) - w
    return SquareMatrixObject(lap, MatrixKind.LAPLACIAN)


# --------------------------------------------------------------------------
# samples
# --------------------------------------------------------------------------

# Maps the caller's subset of indices to (mean object, squared distances from
# that mean to each object in the subset).
MeanSolver = Callable[[np.ndarray], "tuple[object, np.ndarray]"]


class ObjectSample:
    """
    An ordered, homogeneous, immutable collection of metric objects.

    Built-in spaces keep the objects as rows of ``data`` (shape ``(n, p)``)
    together with the metric weight, so that
    ``d^2(Y_i, Y_j) = weight * ||data[i] - data[j]||^2``.
    Generic samples keep an ``n x n`` distance table instead.

    Use the class methods :meth:`from_objects`, :meth:`quantiles`,
    :meth:`matrices`, :meth:`vectors` or :meth:`from_distance_matrix` rather
    than the constructor.
    """

    def __init__(self, space, data=None, *, shape=(), kind=None, distances=None,
                 mean_solver: Optional[MeanSolver] = None, objects=None, validate=True):
        self.space = Space(space)
        self.kind = MatrixKind(kind) if kind is not None else None
        self.mean_solver = mean_solver
        self._objects = objects
        if self.space is Space.GENERIC:
            dist = np.array(distances, dtype=float)
            if dist.ndim != 2 or dist.shape[0] != dist.shape[1] or dist.shape[0] < 1:
                raise InputError("distance table must be a non-empty square matrix")
            if validate:
                if not np.all(np.isfinite(dist)) or np.any(dist < 0):
                    raise InputError("distance table must be finite and non-negative")
                if np.any(np.abs(dist - dist.T) > SYMMETRY_RTOL * np.maximum(1.0, dist)):
                    raise InputError("distance table is not symmetric")
            dist.setflags(write=False)
            self.distances = dist
            self.data = None
            self.shape = ()
            self.weight = 1.0
            return
        arr = np.array(data, dtype=float)
        if arr.ndim < 2 or arr.shape[0] < 1:
            raise InputError("a sample needs at least one object")
        n = arr.shape[0]
        self.shape = tuple(shape) if shape else arr.shape[1:]
        if validate:
            full = arr.reshape((n,) + self.shape)
            if self.space is Space.WASSERSTEIN:
                _check_quantile_grids(full)
            elif self.space is Space.FROBENIUS:
                _check_matrices(full, self.kind or MatrixKind.SYMMETRIC)
            else:
                _check_finite(full, "point")
        arr = arr.reshape(n, -1)
        arr.setflags(write=False)
        self.data = arr
        self.distances = None
        self.weight = 1.0 / arr.shape[1] if self.space is Space.WASSERSTEIN else 1.0

    # -- constructors ------------------------------------------------------

    @classmethod
    def quantiles(cls, values, validate=True) -> "ObjectSample":
        """Sample of distributions from an ``(n, M)`` array of quantile grids."""
        values = np.asarray(values, dtype=float)
        if values.ndim != 2:
            raise DimensionError("quantile grids must form an (n, M) array")
        return cls(Space.WASSERSTEIN, values, validate=validate)

    @classmethod
    def matrices(cls, entries, kind=MatrixKind.SYMMETRIC, validate=True) -> "ObjectSample":
        """Sample of matrices from an ``(n, r, r)`` array."""
        entries = np.asarray(entries, dtype=float)
        if entries.ndim != 3 or entries.shape[1] != entries.shape[2]:
            raise DimensionError("matrices must form an (n, r, r) array")
        return cls(Space.FROBENIUS, entries, shape=entries.shape[1:], kind=kind, validate=validate)

    @classmethod
    def vectors(cls, coords, validate=True) -> "ObjectSample":
        """Sample of Euclidean points from an ``(n, d)`` (or ``(n,)``) array."""
        coords = np.asarray(coords, dtype=float)
        if coords.ndim == 1:
            coords = coords[:, None]
        if coords.ndim != 2:
            raise DimensionError("points must form an (n, d) array")
        return cls(Space.EUCLIDEAN, coords, validate=validate)

    @classmethod
    def from_objects(cls, objects: Sequence) -> "ObjectSample":
        """Sample from a non-empty sequence of built-in objects of one type."""
        objects = list(objects)
        if not objects:
            raise InputError("a sample needs at least one object")
        first = objects[0]
        kinds = {type(o) for o in objects}
        if len(kinds) != 1:
            raise InputError("objects in a sample must share one type")
        if isinstance(first, QuantileDistribution):
            sizes = {o.grid_size for o in objects}
            if len(sizes) != 1:
                raise DimensionError(f"grid sizes differ within the sample: {sorted(sizes)}")
            return cls(Space.WASSERSTEIN, np.stack([o.values for o in objects]), validate=False)
        if isinstance(first, SquareMatrixObject):
            dims = {o.dimension for o in objects}
            if len(dims) != 1:
                raise DimensionError(f"matrix dimensions differ within the sample: {sorted(dims)}")
            tags = {o.kind for o in objects}
            kind = first.kind if len(tags) == 1 else MatrixKind.SYMMETRIC
            return cls(Space.FROBENIUS, np.stack([o.entries for o in objects]), kind=kind, validate=False)
        if isinstance(first, EuclideanPoint):
            dims = {o.dimension for o in objects}
            if len(dims) != 1:
                raise DimensionError(f"dimensions differ within the sample: {sorted(dims)}")
            return cls(Space.EUCLIDEAN, np.stack([o.coords for o in objects]), validate=False)
        raise InputError(f"unsupported object type {type(first).__name__}")

    @classmethod
    def from_distance_matrix(cls, distances, mean_solver: Optional[MeanSolver] = None,
                             objects=None) -> "ObjectSample":
        """
        Sample in a user-defined metric space.

        Parameters
        ----------
        distances : array_like
            ``n x n`` symmetric table of pairwise distances.
        mean_solver : callable, optional
            ``mean_solver(indices) -> (mean_object, sq_dists)`` returning the
            Fréchet mean of the objects at ``indices`` and their squared
            distances to it. Without it the medoid is used and summaries are
            flagged as approximate.
        objects : sequence, optional
            The underlying objects, only stored for reference.
        """
        return cls(Space.GENERIC, distances=distances, mean_solver=mean_solver, objects=objects)

    # -- container protocol ------------------------------------------------

    def __len__(self) -> int:
        return self.distances.shape[0] if self.space is Space.GENERIC else self.data.shape[0]

    @property
    def n(self) -> int:
        return len(self)

    @property
    def is_hilbert(self) -> bool:
        return self.space is not Space.GENERIC

    def make_object(self, row):
        """Wrap one flat row of ``data`` (or an average of rows) as a typed object."""
        row = np.asarray(row, dtype=float)
        if self.space is Space.WASSERSTEIN:
            return QuantileDistribution(row)
        if self.space is Space.FROBENIUS:
            return SquareMatrixObject(row.reshape(self.shape), self.kind or MatrixKind.SYMMETRIC)
        if self.space is Space.EUCLIDEAN:
            return EuclideanPoint(row)
        raise InputError("generic samples have no object representation")

    def __getitem__(self, i):
        if self.space is Space.GENERIC:
            return self._objects[i] if self._objects is not None else int(i)
        return self.make_object(self.data[i])

    def __iter__(self):
        for i in range(len(self)):
            yield self[i]

    def subset(self, indices) -> "ObjectSample":
        """New sample made of the objects at ``indices`` (repeats allowed)."""
        idx = np.asarray(indices, dtype=int)
        if idx.size == 0:
            raise InputError("a sample needs at least one object")
        if self.space is Space.GENERIC:
            sub = ObjectSample.__new__(ObjectSample)
            sub.__dict__.update(self.__dict__)
            d = self.distances[np.ix_(idx, idx)]
            d.setflags(write=False)
            sub.distances = d
            if self.mean_solver is not None:
                parent = self.mean_solver
                sub.mean_solver = lambda local: parent(idx[np.asarray(local, dtype=int)])
            if self._objects is not None:
                sub._objects = [self._objects[i] for i in idx]
            return sub
        return ObjectSample(self.space, self.data[idx], shape=self.shape, kind=self.kind, validate=False)

    def concat(self, other: "ObjectSample") -> "ObjectSample":
        if other.space is not self.space or other.shape != self.shape:
            raise DimensionError("cannot concatenate samples from different spaces or dimensions")
        if self.space is Space.GENERIC:
            raise InputError("generic samples cannot be concatenated; build one distance table")
        kind = self.kind if self.kind == other.kind else MatrixKind.SYMMETRIC
        return ObjectSample(self.space, np.vstack([self.data, other.data]), shape=self.shape,
                            kind=kind, validate=False)

    # -- distances ---------------------------------------------------------

    def sq_distances_to(self, point) -> np.ndarray:
        """Squared distances from ``point`` (a flat row or typed object) to every object."""
        if self.space is Space.GENERIC:
            raise InputError("generic samples only know pairwise distances")
        point = _as_row(point)
        diff = self.data - point
        return self.weight * np.einsum("ij,ij->i", diff, diff)

    def pairwise_distances(self) -> np.ndarray:
        """Full ``n x n`` matrix of pairwise distances."""
        if self.space is Space.GENERIC:
            return np.array(self.distances)
        x = self.data
        sq = np.einsum("ij,ij->i", x, x)
        d2 = sq[:, None] + sq[None, :] - 2.0 * x @ x.T
        # the Gram expansion loses accuracy for close points; fix with direct sums
        close = d2 < 1e-8 * (sq[:, None] + sq[None, :] + 1.0)
        if np.any(close):
            ii, jj = np.nonzero(close)
            diff = x[ii] - x[jj]
            d2[ii, jj] = np.einsum("ij,ij->i", diff, diff)
        d2 = np.maximum(d2, 0.0) * self.weight
        np.fill_diagonal(d2, 0.0)
        d = np.sqrt(d2)
        return 0.5 * (d + d.T)


def order_free_mean(a: np.ndarray, axis: int = 0) -> np.ndarray:
    """
    Mean along ``axis`` that depends only on the multiset of values.

    Sorting first fixes the summation order, so reordering the objects of a
    sample cannot change the last bits of its mean.
    """
    a = np.asarray(a, dtype=float)
    return np.sort(a, axis=axis).sum(axis=axis) / a.shape[axis]


def _as_row(obj) -> np.ndarray:
    if isinstance(obj, QuantileDistribution):
        return obj.values
    if isinstance(obj, SquareMatrixObject):
        return obj.entries.ravel()
    if isinstance(obj, EuclideanPoint):
        return obj.coords
    return np.asarray(obj, dtype=float).ravel()


def closed_form_mean(sample: ObjectSample):
    """
    Fréchet mean of a sample in one of the built-in spaces.

    Distributions average pointwise in quantile space, matrices entrywise and
    vectors coordinatewise. The Laplacian and correlation constraint sets are
    convex, so the average stays in the sample's space.
    """
    if len(sample) == 0:
        raise InputError("empty sample")
    if sample.space is Space.GENERIC:
        raise InputError("generic metric spaces have no closed-form mean")
    return sample.make_object(order_free_mean(sample.data))


def medoid_index(sq_distances: np.ndarray) -> int:
    """Index minimizing the row sums of a squared-distance table (lowest index on ties)."""
    return int(np.argmin(np.sort(np.asarray(sq_distances), axis=1).sum(axis=1)))
