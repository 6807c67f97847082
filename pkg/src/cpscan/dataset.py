"""Paired input/output series with optional ground truth, and its file format.

On disk a dataset is a CSV with a header row naming ``x0..x{p-1}`` then
``y0..y{h-1}``, plus a sidecar JSON manifest::

    {"family": ..., "seed": ..., "tau": [...], "sigma": ..., "params": {...},
     "n_rows": ..., "p": ..., "h": ..., "lags": q}

A raw (unlagged) series is stored with ``y`` columns only.
"""

import csv
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ._validation import check_change_points, check_int
from .exceptions import ConfigurationError, ShapeError

__all__ = [
    "SeriesDataset",
    "lag_series",
    "write_dataset",
    "read_dataset",
    "read_series_csv",
    "write_manifest",
    "read_manifest",
]


@dataclass
class SeriesDataset:
    """Rows ``(X[i], Y[i])`` in time order.

    Parameters
    ----------
    X : ndarray of shape (T_sum, p)
    Y : ndarray of shape (T_sum, h)
    true_change_points : list of int, optional
        First row index of every new segment, strictly inside ``(0, T_sum)``.
    noise_sigma : float, optional
        Standard deviation of the additive output noise, when known.
    meta : dict
        Free-form, JSON-serialisable provenance (family, seed, parameters,
        per-boundary signal estimates, ...).
    """

    X: np.ndarray
    Y: np.ndarray
    true_change_points: list = None
    noise_sigma: float = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        X = np.asarray(self.X, dtype=np.float64)
        Y = np.asarray(self.Y, dtype=np.float64)
        if X.ndim == 1:
            X = X[:, None]
        if Y.ndim == 1:
            Y = Y[:, None]
        if X.ndim != 2 or Y.ndim != 2:
            raise ShapeError("X and Y must be 2-D")
        if X.shape[0] != Y.shape[0]:
            raise ShapeError(f"X has {X.shape[0]} rows but Y has {Y.shape[0]}")
        if X.shape[0] < 1:
            raise ShapeError("a dataset needs at least one row")
        if not (np.all(np.isfinite(X)) and np.all(np.isfinite(Y))):
            raise ConfigurationError("dataset contains non-finite values")
        self.X, self.Y = X, Y
        if self.true_change_points is not None:
            self.true_change_points = check_change_points(self.true_change_points, X.shape[0])
        if self.noise_sigma is not None:
            self.noise_sigma = float(self.noise_sigma)

    @property
    def n_rows(self):
        return self.X.shape[0]

    @property
    def p(self):
        return self.X.shape[1]

    @property
    def h(self):
        return self.Y.shape[1]


def lag_series(Y, lags, change_points=None, **kwargs):
    """Turn a raw series into regression pairs on its own past.

    Row ``r`` holds input ``(Y[t-1], ..., Y[t-lags])`` and output ``Y[t]``
    with ``t = r + lags``; change points move back by ``lags`` and those that
    fall off the start are dropped.
    """
    Y = np.asarray(Y, dtype=np.float64)
    if Y.ndim == 1:
        Y = Y[:, None]
    lags = check_int(lags, "lags", minimum=1)
    T = Y.shape[0]
    if lags >= T:
        raise ConfigurationError(f"lags={lags} leaves no rows in a series of length {T}")
    X = np.hstack([Y[lags - k:T - k] for k in range(1, lags + 1)])
    cps = None
    if change_points is not None:
        cps = [c - lags for c in change_points if 0 < c - lags < T - lags]
    return SeriesDataset(X, Y[lags:], cps, **kwargs)


# --------------------------------------------------------------------------
# files


def write_manifest(path, manifest):
    with open(path, "w") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")


def read_manifest(path):
    with open(path) as fh:
        return json.load(fh)


def _write_csv(path, header, data):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in data:
            writer.writerow([repr(float(v)) for v in row])


def write_dataset(dataset, csv_path, manifest_path=None, manifest=None, y_only=False):
    """Write ``dataset`` as CSV plus a JSON manifest next to it.

    ``manifest_path`` defaults to the CSV path with a ``.json`` suffix.
    Extra keys in ``manifest`` are merged over the generated ones.
    """
    csv_path = Path(csv_path)
    manifest_path = Path(manifest_path) if manifest_path else csv_path.with_suffix(".json")
    if y_only:
        header = [f"y{j}" for j in range(dataset.h)]
        data = dataset.Y
    else:
        header = [f"x{j}" for j in range(dataset.p)] + [f"y{j}" for j in range(dataset.h)]
        data = np.hstack([dataset.X, dataset.Y])
    _write_csv(csv_path, header, data)
    info = {
        "family": dataset.meta.get("family"),
        "seed": dataset.meta.get("seed"),
        "tau": list(dataset.true_change_points or []),
        "sigma": dataset.noise_sigma,
        "params": dataset.meta.get("params", {}),
        "n_rows": dataset.n_rows,
        "p": 0 if y_only else dataset.p,
        "h": dataset.h,
    }
    for key in ("signals", "spectral_radii", "lags"):
        if key in dataset.meta:
            info[key] = dataset.meta[key]
    info.update(manifest or {})
    write_manifest(manifest_path, info)
    return csv_path, manifest_path


def read_series_csv(path):
    """Parse a headed numeric CSV into ``(header, matrix)``.

    Raises ``ConfigurationError`` naming the 1-based row and column of the
    first cell that is not a finite number.
    """
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise ConfigurationError(f"{path}: empty file") from None
        rows = []
        for r, row in enumerate(reader, start=2):
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != len(header):
                raise ConfigurationError(
                    f"{path}: row {r} has {len(row)} cells, header has {len(header)}"
                )
            vals = []
            for c, cell in enumerate(row, start=1):
                try:
                    v = float(cell)
                except ValueError:
                    raise ConfigurationError(
                        f"{path}: non-numeric cell at row {r}, column {c}: {cell!r}"
                    ) from None
                if not np.isfinite(v):
                    raise ConfigurationError(
                        f"{path}: non-finite cell at row {r}, column {c}"
                    )
                vals.append(v)
            rows.append(vals)
    if not rows:
        raise ConfigurationError(f"{path}: no data rows")
    return header, np.array(rows, dtype=np.float64)


def read_dataset(csv_path, manifest_path=None, lags=None):
    """Load a dataset CSV (and its manifest, if present).

    Columns named ``x*`` form ``X`` and ``y*`` form ``Y``; a file with no
    recognised prefixes is read as all-output.  With ``lags`` the inputs
    are rebuilt from lagged outputs (any ``x`` columns are ignored).
    """
    csv_path = Path(csv_path)
    header, data = read_series_csv(csv_path)
    x_cols = [i for i, name in enumerate(header) if name.lower().startswith("x")]
    y_cols = [i for i, name in enumerate(header) if name.lower().startswith("y")]
    if not x_cols and not y_cols:
        y_cols = list(range(len(header)))
    if not y_cols:
        raise ConfigurationError(f"{csv_path}: no y columns")

    manifest = {}
    if manifest_path is None and csv_path.with_suffix(".json").exists():
        manifest_path = csv_path.with_suffix(".json")
    if manifest_path is not None:
        manifest = read_manifest(manifest_path)
    tau = manifest.get("tau")
    sigma = manifest.get("sigma")
    meta = {k: manifest[k] for k in ("family", "seed", "params", "signals") if k in manifest}

    Y = data[:, y_cols]
    if lags:
        return lag_series(Y, lags, tau, noise_sigma=sigma, meta={**meta, "lags": int(lags)})
    if not x_cols:
        raise ConfigurationError(
            f"{csv_path}: no x columns; pass a lag order to build inputs from the outputs"
        )
    return SeriesDataset(data[:, x_cols], Y, tau, sigma, meta)
