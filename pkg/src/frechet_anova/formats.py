"""
Readers and writers for object files.

Supported formats:

* quantile-grid CSV: one distribution per row, ``M`` columns, optional header;
* raw-sample CSV: one distribution per row given by its raw observations,
  rows may differ in length; converted with :func:`empirical_quantile_grid`;
* matrix files: ``r`` whitespace-separated rows of ``r`` numbers, one matrix
  per file, or a directory of such files (read in sorted name order);
* vector CSV: one point per row.

A CSV may carry the group label in its first column (``label_column=True``).
"""
from __future__ import annotations

import csv
import os
from pathlib import Path

import numpy as np

from .exceptions import InputError
from .spaces import DEFAULT_GRID_SIZE, MatrixKind, ObjectSample, empirical_quantile_grid, laplacian_from_adjacency


def _is_number(text: str) -> bool:
    try:
        float(text)
    except ValueError:
        return False
    return True


def read_csv_rows(path, label_column: bool = False):
    """
    Parse a numeric CSV into a list of float lists.

    A first row containing a non-numeric value (other than the label) is
    treated as a header and skipped.

    Returns
    -------
    rows, labels : list, list or None
    """
    path = Path(path)
    if not path.is_file():
        raise InputError(f"{path}: no such file")
    rows, labels = [], []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        for lineno, raw in enumerate(reader, start=1):
            cells = [c.strip() for c in raw if c.strip() != ""]
            if not cells:
                continue
            label = None
            if label_column:
                label, cells = cells[0], cells[1:]
            if not all(_is_number(c) for c in cells):
                if lineno == 1 and not rows:
                    continue
                raise InputError(f"{path}, row {lineno}: non-numeric entry")
            if not cells:
                raise InputError(f"{path}, row {lineno}: no values")
            rows.append([float(c) for c in cells])
            labels.append(label)
    if not rows:
        raise InputError(f"{path}: no data rows")
    return rows, (labels if label_column else None)


def _rectangular(rows, path) -> np.ndarray:
    widths = {len(r) for r in rows}
    if len(widths) != 1:
        lengths = [len(r) for r in rows]
        bad = next(i for i, w in enumerate(lengths) if w != lengths[0])
        raise InputError(f"{path}, data row {bad + 1}: expected {lengths[0]} values, got {lengths[bad]}")
    arr = np.array(rows, dtype=float)
    if not np.all(np.isfinite(arr)):
        bad = int(np.argmax(~np.all(np.isfinite(arr), axis=1)))
        raise InputError(f"{path}, data row {bad + 1}: non-finite value")
    return arr


def _wrap(path, build):
    try:
        return build()
    except InputError as exc:
        raise InputError(f"{path}: {exc}") from exc


def read_quantile_csv(path, label_column: bool = False):
    """Quantile grids, one per row. Returns ``(sample, labels)``."""
    rows, labels = read_csv_rows(path, label_column)
    arr = _rectangular(rows, path)
    return _wrap(path, lambda: ObjectSample.quantiles(arr)), labels


def read_raw_csv(path, grid_size: int = DEFAULT_GRID_SIZE, label_column: bool = False):
    """Raw observations, one distribution per row, converted to quantile grids."""
    rows, labels = read_csv_rows(path, label_column)
    grids = []
    for i, r in enumerate(rows, start=1):
        try:
            grids.append(empirical_quantile_grid(r, grid_size).values)
        except InputError as exc:
            raise InputError(f"{path}, data row {i}: {exc}") from exc
    return ObjectSample.quantiles(np.stack(grids), validate=False), labels


def read_vector_csv(path, label_column: bool = False):
    rows, labels = read_csv_rows(path, label_column)
    arr = _rectangular(rows, path)
    return _wrap(path, lambda: ObjectSample.vectors(arr)), labels


def read_matrix_file(path) -> np.ndarray:
    """One square matrix from a whitespace-separated text file."""
    path = Path(path)
    try:
        mat = np.loadtxt(path, ndmin=2)
    except (OSError, ValueError) as exc:
        raise InputError(f"{path}: cannot parse matrix ({exc})") from exc
    if mat.shape[0] != mat.shape[1]:
        raise InputError(f"{path}: matrix is {mat.shape[0]}x{mat.shape[1]}, not square")
    return mat


def matrix_paths(path) -> list:
    path = Path(path)
    if path.is_dir():
        files = sorted(p for p in path.iterdir() if p.is_file() and not p.name.startswith("."))
        if not files:
            raise InputError(f"{path}: directory holds no matrix files")
        return files
    if path.is_file():
        return [path]
    raise InputError(f"{path}: no such file or directory")


def read_matrices(path, kind=MatrixKind.SYMMETRIC):
    """
    Matrices from a file or a directory of files.

    Returns
    -------
    sample, names : ObjectSample, list of str
    """
    files = matrix_paths(path)
    mats = [read_matrix_file(f) for f in files]
    dims = {m.shape[0] for m in mats}
    if len(dims) != 1:
        raise InputError(f"{path}: matrices have different dimensions {sorted(dims)}")
    entries = np.stack(mats)
    for f, m in zip(files, mats):
        try:
            ObjectSample.matrices(m[None], kind)
        except InputError as exc:
            raise InputError(f"{f}: {exc}") from exc
    return ObjectSample.matrices(entries, kind, validate=False), [f.name for f in files]


def write_quantile_csv(path, sample: ObjectSample, header: bool = True, labels=None) -> None:
    values = sample.data
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        if header:
            cols = [f"q{i}" for i in range(values.shape[1])]
            writer.writerow((["label"] if labels is not None else []) + cols)
        for i, row in enumerate(values):
            prefix = [labels[i]] if labels is not None else []
            writer.writerow(prefix + [repr(float(v)) for v in row])


def write_matrix_file(path, matrix) -> None:
    np.savetxt(path, np.asarray(matrix, dtype=float), fmt="%.17g")


def convert_adjacency(src, dest_dir) -> list:
    """Write the Laplacian of every adjacency file under ``src`` into ``dest_dir``."""
    os.makedirs(dest_dir, exist_ok=True)
    written = []
    for f in matrix_paths(src):
        try:
            lap = laplacian_from_adjacency(read_matrix_file(f))
        except InputError as exc:
            raise InputError(f"{f}: {exc}") from exc
        out = Path(dest_dir) / f.name
        write_matrix_file(out, lap.entries)
        written.append(out)
    return written
