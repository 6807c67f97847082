"""Sliding-window test-error curve.

For every evaluation time ``t`` a fresh network is trained on rows
``[t - T1, t)`` and scored on rows ``[t, t + T2)``; the score ``E(t)`` is
the summed squared prediction error.  A peak in ``E`` marks a time where
the test window has moved onto a different regime than the training
window saw.
"""

import json
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from ._seeding import derive_seed
from .config import DetectionConfig
from .dataset import SeriesDataset
from .exceptions import (
    ConfigurationError,
    EmptyWindowError,
    ShapeError,
    SeriesTooShortError,
    TrainingDivergenceError,
)
from .neural import forward, train_windows

__all__ = [
    "ErrorCurve",
    "test_error",
    "compute_error_curve",
    "refine_curve",
    "resolve_workers",
]


@dataclass
class ErrorCurve:
    """Values ``E(t)`` at increasing integer times ``t``.

    ``stride`` is the nominal spacing; a refined curve may hold extra
    points between the nominal ones.
    """

    t_values: np.ndarray
    e_values: np.ndarray
    T1: int
    T2: int
    stride: int = 1
    provenance: dict = field(default_factory=dict)

    def __post_init__(self):
        self.t_values = np.asarray(self.t_values, dtype=np.int64)
        self.e_values = np.asarray(self.e_values, dtype=np.float64)
        if self.t_values.shape != self.e_values.shape or self.t_values.ndim != 1:
            raise ShapeError("t_values and e_values must be 1-D of equal length")
        if np.any(np.diff(self.t_values) <= 0):
            raise ConfigurationError("curve times must be strictly increasing")

    def __len__(self):
        return self.t_values.size

    def to_json(self):
        return {
            "t": self.t_values.tolist(),
            "e": self.e_values.tolist(),
            "config": {"T1": self.T1, "T2": self.T2, "stride": self.stride,
                       **self.provenance},
        }

    @classmethod
    def from_json(cls, obj):
        cfg = dict(obj.get("config", {}))
        T1, T2, stride = cfg.pop("T1"), cfg.pop("T2"), cfg.pop("stride", 1)
        return cls(obj["t"], obj["e"], T1, T2, stride, cfg)

    def write_csv(self, path):
        with open(path, "w") as fh:
            fh.write("t,e\n")
            for t, e in zip(self.t_values, self.e_values):
                fh.write(f"{int(t)},{float(e)!r}\n")

    def write_json(self, path):
        with open(path, "w") as fh:
            json.dump(self.to_json(), fh)
            fh.write("\n")

    @classmethod
    def read_csv(cls, path, T1, T2, stride=1):
        data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
        return cls(data[:, 0].astype(np.int64), data[:, 1], T1, T2, stride)


def test_error(model, X, Y):
    """Sum over rows of the squared Euclidean prediction error."""
    X = np.asarray(X, dtype=np.float64)
    Y = np.asarray(Y, dtype=np.float64)
    if X.ndim != 2 or Y.ndim != 2 or X.shape[0] != Y.shape[0]:
        raise ShapeError("X and Y must be 2-D with equal row counts")
    if X.shape[0] == 0:
        raise EmptyWindowError("test window is empty")
    resid = Y - forward(model, X)
    return float(np.einsum("ij,ij->", resid, resid))


# test_error is a library function, not a pytest test
test_error.__test__ = False


def resolve_workers(workers=None):
    """Explicit value, else ``$CPSCAN_WORKERS``, else 1."""
    if workers is None:
        env = os.environ.get("CPSCAN_WORKERS")
        workers = int(env) if env else 1
    if workers < 1:
        raise ConfigurationError(f"workers must be >= 1, got {workers}")
    return int(workers)


def _standardize(data, enabled):
    X, Y = data.X, data.Y
    if not enabled:
        return X, Y, 1.0
    sx = X.std(axis=0)
    sx[sx == 0] = 1.0
    Xs = (X - X.mean(axis=0)) / sx
    Yc = Y - Y.mean(axis=0)
    scale = float(np.sqrt(np.mean(Yc * Yc)))
    if scale == 0:
        scale = 1.0
    return Xs, Yc / scale, scale


def _domain(n_rows, cfg):
    if n_rows < cfg.T1 + cfg.T2:
        raise SeriesTooShortError(n_rows, cfg.T1 + cfg.T2)
    return np.arange(cfg.T1, n_rows - cfg.T2 + 1, cfg.stride, dtype=np.int64)


# worker-process globals, set once per pool
_SHARED = {}


def _init_worker(X, Y, cfg):
    _SHARED.update(X=X, Y=Y, cfg=cfg)


def _eval_chunk(ts):
    X, Y, cfg = _SHARED["X"], _SHARED["Y"], _SHARED["cfg"]
    T1, T2 = cfg.T1, cfg.T2
    spec = cfg.mlp_spec(X.shape[1], Y.shape[1])
    Xw = np.stack([X[t - T1:t] for t in ts])
    Yw = np.stack([Y[t - T1:t] for t in ts])
    seeds = [derive_seed(cfg.seed, t) for t in ts]
    try:
        models = train_windows(Xw, Yw, spec, cfg.train, seeds)
    except TrainingDivergenceError as exc:
        # re-run one window at a time to name the offending t
        for t, s, xw, yw in zip(ts, seeds, Xw, Yw):
            try:
                train_windows(xw[None], yw[None], spec, cfg.train, [s])
            except TrainingDivergenceError as inner:
                raise TrainingDivergenceError(inner.epoch, int(t)) from None
        raise exc
    return [test_error(m, X[t:t + T2], Y[t:t + T2]) for t, m in zip(ts, models)]


def _eval_warm(ts):
    X, Y, cfg = _SHARED["X"], _SHARED["Y"], _SHARED["cfg"]
    T1, T2 = cfg.T1, cfg.T2
    spec = cfg.mlp_spec(X.shape[1], Y.shape[1])
    out, prev = [], None
    for t in ts:
        init = None if prev is None else [prev]
        try:
            (prev,) = train_windows(X[None, t - T1:t], Y[None, t - T1:t], spec,
                                    cfg.train, [derive_seed(cfg.seed, t)], init)
        except TrainingDivergenceError as exc:
            raise TrainingDivergenceError(exc.epoch, int(t)) from None
        out.append(test_error(prev, X[t:t + T2], Y[t:t + T2]))
    return out


def _evaluate(X, Y, cfg, ts, workers):
    ts = [int(t) for t in ts]
    if not ts:
        return np.empty(0)
    if cfg.warm_start:
        _init_worker(X, Y, cfg)
        return np.asarray(_eval_warm(ts))
    chunks = [ts[i:i + cfg.batch_size] for i in range(0, len(ts), cfg.batch_size)]
    if workers == 1 or len(chunks) == 1:
        _init_worker(X, Y, cfg)
        parts = [_eval_chunk(c) for c in chunks]
    else:
        with ProcessPoolExecutor(max_workers=workers, initializer=_init_worker,
                                 initargs=(X, Y, cfg)) as pool:
            parts = list(pool.map(_eval_chunk, chunks))
    return np.concatenate([np.asarray(p) for p in parts])


def _check(data, cfg):
    if not isinstance(data, SeriesDataset):
        raise ConfigurationError("data must be a SeriesDataset")
    if not isinstance(cfg, DetectionConfig):
        raise ConfigurationError("cfg must be a DetectionConfig")
    return cfg.resolved(data.n_rows)


def compute_error_curve(data, cfg, workers=None):
    """Evaluate ``E(t)`` for ``t = T1, T1 + stride, ...`` while ``t + T2 <= T_sum``.

    Each window's network is seeded from ``(cfg.seed, t)`` and windows are
    batched in fixed chunks of ``cfg.batch_size``, so the curve does not
    depend on ``workers``.  With ``cfg.standardize`` the columns of ``X``
    are z-scored and ``Y`` is centred and divided by one pooled scale
    before training; ``E`` is reported back in the original units of ``Y``.
    """
    cfg = _check(data, cfg)
    workers = resolve_workers(workers)
    ts = _domain(data.n_rows, cfg)
    X, Y, scale = _standardize(data, cfg.standardize)
    e = _evaluate(X, Y, cfg, ts, workers) * scale ** 2
    curve = ErrorCurve(ts, e, cfg.T1, cfg.T2, cfg.stride,
                       {"digest": cfg.digest(), "n_rows": data.n_rows})
    if cfg.stride > 1 and cfg.refine_radius:
        from .detector import dataset_m1, detect, resolve_threshold

        pi = resolve_threshold(curve, cfg, h=data.h, sigma=data.noise_sigma,
                               M1=dataset_m1(data))
        centers = detect(curve, cfg.T3, pi).change_points if np.isfinite(pi) else []
        curve = refine_curve(data, cfg, curve, centers, cfg.refine_radius, workers)
    return curve


def refine_curve(data, cfg, coarse_curve, centers, radius, workers=None):
    """Add stride-1 points within ``radius`` of each center to a coarse curve."""
    cfg = _check(data, cfg)
    workers = resolve_workers(workers)
    if radius < 0:
        raise ConfigurationError("radius must be >= 0")
    lo, hi = cfg.T1, data.n_rows - cfg.T2
    have = set(coarse_curve.t_values.tolist())
    new = sorted({
        t
        for c in centers
        for t in range(max(lo, int(c) - radius), min(hi, int(c) + radius) + 1)
        if t not in have
    })
    if not new:
        return coarse_curve
    X, Y, scale = _standardize(data, cfg.standardize)
    e_new = _evaluate(X, Y, cfg, new, workers) * scale ** 2
    t_all = np.concatenate([coarse_curve.t_values, np.asarray(new, dtype=np.int64)])
    e_all = np.concatenate([coarse_curve.e_values, e_new])
    order = np.argsort(t_all, kind="stable")
    prov = dict(coarse_curve.provenance)
    prov["refined"] = {"centers": [int(c) for c in centers], "radius": int(radius)}
    return ErrorCurve(t_all[order], e_all[order], coarse_curve.T1, coarse_curve.T2,
                      coarse_curve.stride, prov)
