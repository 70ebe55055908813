"""Grid-discretized Hilbert-space primitives and the sample container.

Curves are real vectors of length ``d`` holding the values of a function on a
uniform grid of [0, 1].  The inner product is either the plain Euclidean one
on R^d or its grid-mean (L^2 Riemann sum) version.
"""
from __future__ import annotations

import csv
import enum
import io
import json
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

__all__ = [
    "GridWeighting",
    "FunctionalSample",
    "CSVFormatError",
    "inner",
    "norm",
    "read_csv",
    "write_csv",
    "format_float",
]

MANIFEST_PREFIX = "# funcpd-manifest: "


class GridWeighting(str, enum.Enum):
    EUCLIDEAN = "euclidean"
    MEAN = "mean"

    def factor(self, d: int) -> float:
        return 1.0 if self is GridWeighting.EUCLIDEAN else 1.0 / d


class CSVFormatError(ValueError):
    """Raised for unreadable, ragged or non-numeric CSV input."""


def _as_curve(u) -> np.ndarray:
    return np.asarray(u, dtype=float).reshape(-1)


def _check_dims(u: np.ndarray, v: np.ndarray) -> None:
    if u.shape[-1] != v.shape[-1]:
        raise ValueError(
            f"dimension mismatch: {u.shape[-1]} vs {v.shape[-1]}"
        )


def inner(u, v, weighting: GridWeighting | str = GridWeighting.EUCLIDEAN) -> float:
    """Inner product of two curves under the given grid weighting."""
    u, v = _as_curve(u), _as_curve(v)
    _check_dims(u, v)
    w = GridWeighting(weighting)
    return float(np.dot(u, v) * w.factor(u.size))


def scaled_norms(arr: np.ndarray, factor: float) -> np.ndarray:
    """Norms along the last axis, dividing by the largest entry first.

    Unlike sqrt(sum(x**2)) this does not underflow to 0 for entries below ~1e-154.
    """
    amax = np.max(np.abs(arr), axis=-1)
    safe = np.where(amax > 0, amax, 1.0)
    s = arr / safe[..., None]
    return amax * np.sqrt(np.einsum("...i,...i->...", s, s) * factor)


def norm(u, weighting: GridWeighting | str = GridWeighting.EUCLIDEAN) -> float:
    u = _as_curve(u)
    w = GridWeighting(weighting)
    return float(scaled_norms(u, w.factor(u.size)))


@dataclass(frozen=True)
class FunctionalSample:
    """The observed series X_1, ..., X_n as an ``(n, d)`` array.

    The array is copied on construction and marked read-only.  ``labels``
    optionally carries one calendar/date label per time point.
    """

    data: np.ndarray
    labels: tuple[str, ...] | None = None

    def __post_init__(self):
        arr = np.array(self.data, dtype=float, copy=True)
        if arr.ndim == 1:
            arr = arr[:, None]
        if arr.ndim != 2:
            raise ValueError(f"sample must be 2-dimensional, got shape {arr.shape}")
        n, d = arr.shape
        if n < 2:
            raise ValueError(f"need at least 2 observations, got n={n}")
        if d < 1:
            raise ValueError("curves need at least one grid point")
        if not np.all(np.isfinite(arr)):
            bad = np.argwhere(~np.isfinite(arr))[0]
            raise ValueError(
                f"non-finite value at row {bad[0] + 1}, column {bad[1] + 1}"
            )
        arr.setflags(write=False)
        object.__setattr__(self, "data", arr)
        if self.labels is not None:
            labels = tuple(str(s) for s in self.labels)
            if len(labels) != n:
                raise ValueError(f"{len(labels)} labels for {n} observations")
            object.__setattr__(self, "labels", labels)

    @property
    def n(self) -> int:
        return self.data.shape[0]

    @property
    def d(self) -> int:
        return self.data.shape[1]

    def __eq__(self, other):
        if not isinstance(other, FunctionalSample):
            return NotImplemented
        return self.labels == other.labels and np.array_equal(self.data, other.data)

    __hash__ = None


def format_float(x: float) -> str:
    # repr gives the shortest string that round-trips a float64
    return repr(float(x))


def _is_number(s: str) -> bool:
    try:
        float(s)
    except ValueError:
        return False
    return True


def _resolve_column(header: Sequence[str] | None, ncols: int, column) -> int:
    if isinstance(column, int) or (isinstance(column, str) and column.isdigit()):
        idx = int(column)
        if not 0 <= idx < ncols:
            raise CSVFormatError(f"date column index {idx} out of range 0..{ncols - 1}")
        return idx
    if header is None:
        raise CSVFormatError(f"date column {column!r} given by name but the file has no header")
    try:
        return list(header).index(column)
    except ValueError:
        raise CSVFormatError(
            f"date column {column!r} not in header {list(header)}"
        ) from None


def parse_csv(text: str, date_column: int | str | None = None, source: str = "<input>"):
    """Parse CSV text into a :class:`FunctionalSample`.

    Lines starting with ``#`` are skipped (manifest comments).  A first row
    containing any non-numeric field (outside the date column) is taken as a
    header.  Missing values are rejected rather than imputed.
    """
    rows: list[tuple[int, list[str]]] = []
    for lineno, row in enumerate(csv.reader(io.StringIO(text)), start=1):
        if not row or (len(row) == 1 and not row[0].strip()):
            continue
        if row[0].lstrip().startswith("#"):
            continue
        rows.append((lineno, [f.strip() for f in row]))
    if not rows:
        raise CSVFormatError(f"{source}: no data rows")

    ncols = len(rows[0][1])
    header = None
    first = rows[0][1]
    date_idx = None
    if date_column is not None:
        # resolve by index first so we can skip the date field in header detection
        if not (isinstance(date_column, int) or str(date_column).isdigit()):
            header = first
            rows = rows[1:]
        date_idx = _resolve_column(header, ncols, date_column)
    if header is None:
        fields = [f for j, f in enumerate(first) if j != date_idx]
        if not all(_is_number(f) for f in fields):
            header = first
            rows = rows[1:]
    if not rows:
        raise CSVFormatError(f"{source}: header but no data rows")

    values: list[list[float]] = []
    labels: list[str] = []
    for lineno, row in rows:
        if len(row) != ncols:
            raise CSVFormatError(
                f"{source}: line {lineno} has {len(row)} fields, expected {ncols}"
            )
        vals = []
        for j, f in enumerate(row):
            if j == date_idx:
                labels.append(f)
                continue
            if f == "":
                raise CSVFormatError(f"{source}: line {lineno}, column {j + 1}: missing value")
            try:
                x = float(f)
            except ValueError:
                raise CSVFormatError(
                    f"{source}: line {lineno}, column {j + 1}: not a number: {f!r}"
                ) from None
            if not np.isfinite(x):
                raise CSVFormatError(
                    f"{source}: line {lineno}, column {j + 1}: non-finite value {f!r}"
                )
            vals.append(x)
        values.append(vals)
    if not values[0]:
        raise CSVFormatError(f"{source}: no numeric columns")
    try:
        return FunctionalSample(np.array(values), labels=labels if date_idx is not None else None)
    except ValueError as exc:
        raise CSVFormatError(f"{source}: {exc}") from None


def read_csv(path: str | Path, date_column: int | str | None = None) -> FunctionalSample:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except (OSError, UnicodeDecodeError) as exc:
        raise CSVFormatError(f"cannot read {path}: {exc}") from None
    return parse_csv(text, date_column=date_column, source=str(path))


def write_csv(
    sample: FunctionalSample | np.ndarray,
    path: str | Path | None = None,
    manifest: dict | None = None,
    header: Iterable[str] | None = None,
) -> str:
    """Write a sample as CSV using shortest round-trip float formatting.

    Returns the CSV text; also writes it to ``path`` when given.
    """
    data = sample.data if isinstance(sample, FunctionalSample) else np.asarray(sample, float)
    buf = io.StringIO()
    if manifest is not None:
        buf.write(MANIFEST_PREFIX + json.dumps(manifest, sort_keys=True) + "\n")
    if header is not None:
        buf.write(",".join(header) + "\n")
    for row in data:
        buf.write(",".join(format_float(x) for x in row) + "\n")
    text = buf.getvalue()
    if path is not None:
        Path(path).write_text(text, encoding="utf-8")
    return text


def read_manifest(path: str | Path) -> dict | None:
    """Return the embedded manifest of a CSV artifact, or None."""
    with open(path, encoding="utf-8") as fh:
        first = fh.readline()
    if first.startswith(MANIFEST_PREFIX):
        return json.loads(first[len(MANIFEST_PREFIX):])
    return None
