"""Change-point detection on an error curve.

:func:`detect` slides a detection window of half-width ``T3`` along the
curve; as soon as the range ``max E - min E`` inside the window reaches the
threshold ``pi`` it records the window's argmax and jumps ``3 * T3`` ahead.
:class:`NeuralChangePointDetector` wraps curve computation and detection as
a scikit-learn style estimator.
"""

import math
import warnings
from dataclasses import dataclass, field, replace

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from ._validation import check_int, check_paired
from .config import REGIMES, DetectionConfig, parse_threshold
from .dataset import SeriesDataset
from .exceptions import ConfigurationError
from .neural import TrainConfig, forward, train_window
from .scan import ErrorCurve, compute_error_curve

__all__ = [
    "ChangePointSet",
    "DetectionResult",
    "DegenerateCurveWarning",
    "detect",
    "detect_single",
    "local_ranges",
    "suggest_windows",
    "suggest_threshold",
    "resolve_threshold",
    "dataset_m1",
    "validate_assumptions",
    "run_detection",
    "NeuralChangePointDetector",
]


class DegenerateCurveWarning(UserWarning):
    """The curve carries no variation, so no threshold can separate peaks."""


@dataclass(frozen=True)
class ChangePointSet:
    change_points: tuple
    T3: int
    pi: float

    def __len__(self):
        return len(self.change_points)

    def __iter__(self):
        return iter(self.change_points)


def _check_curve(curve):
    if not isinstance(curve, ErrorCurve):
        raise ConfigurationError("expected an ErrorCurve")
    if len(curve) == 0:
        raise ConfigurationError("error curve is empty")


def detect(curve, T3, pi):
    """Thresholded peak scan over ``curve``.

    The window around ``t`` holds every curve point with time in
    ``[t - T3, t + T3]``.  Ties in the argmax go to the earliest time.
    """
    _check_curve(curve)
    T3 = check_int(T3, "T3", minimum=1)
    pi = float(pi)
    if math.isnan(pi) or pi < 0:
        raise ConfigurationError(f"threshold must be >= 0, got {pi}")
    t, e = curve.t_values, curve.e_values
    found = []
    i = 0
    while i < t.size:
        lo = np.searchsorted(t, t[i] - T3, side="left")
        hi = np.searchsorted(t, t[i] + T3, side="right")
        w = e[lo:hi]
        if w.max() - w.min() >= pi:
            found.append(int(t[lo + int(np.argmax(w))]))
            i = int(np.searchsorted(t, t[i] + 3 * T3, side="left"))
        else:
            i += 1
    return ChangePointSet(tuple(found), T3, pi)


def detect_single(curve):
    """Time of the largest ``E`` (earliest on ties)."""
    _check_curve(curve)
    return int(curve.t_values[int(np.argmax(curve.e_values))])


def _round_half_up(x):
    return int(math.floor(x + 0.5))


def suggest_windows(T_sum, regime="independent", kappa=8.0):
    """Default ``(T1, T2, T3) = (T0, T0, 2 T0)`` for a series of ``T_sum`` rows.

    ``T0`` is ``sqrt(T_sum)`` for independent inputs and, as a floor, for
    dependent inputs; for sub-Gaussian outputs it shrinks to
    ``max(30, kappa * ln T_sum)``.
    """
    T_sum = check_int(T_sum, "T_sum")
    if T_sum < 16:
        raise ConfigurationError(f"T_sum must be >= 16 to suggest windows, got {T_sum}")
    if regime not in REGIMES:
        raise ConfigurationError(f"regime must be one of {REGIMES}, got {regime!r}")
    if regime == "subgaussian":
        t0 = max(30, _round_half_up(kappa * math.log(T_sum)))
    else:
        t0 = _round_half_up(math.sqrt(T_sum))
    return t0, t0, 2 * t0


def local_ranges(curve, half_width):
    """``max E - min E`` over the window ``[t - w, t + w]`` at every curve time."""
    t, e = curve.t_values, curve.e_values
    lo = np.searchsorted(t, t - half_width, side="left")
    hi = np.searchsorted(t, t + half_width, side="right")
    return np.array([e[a:b].max() - e[a:b].min() for a, b in zip(lo, hi)])


def suggest_threshold(curve, mode="auto", T3=None, M1=None, h=None, sigma=None):
    """Threshold on the range statistic used by :func:`detect`.

    Modes
    -----
    ``"signal"``
        ``M1 * T2 / 3``: a third of the minimum per-row change signal,
        scaled to a curve that sums over ``T2`` rows.
    ``"half"``
        ``(M1 / 2 - 2 h sigma^2) * T2``, floored at 0.
    ``"auto"``
        ``median(c) + 3 IQR(c)`` where ``c`` are the local ranges over
        windows of width ``2 T3`` across the curve.  A flat curve yields
        ``inf`` and a :class:`DegenerateCurveWarning`.
    """
    _check_curve(curve)
    if mode == "signal":
        if M1 is None:
            raise ConfigurationError("signal mode needs M1")
        return float(M1) * curve.T2 / 3.0
    if mode == "half":
        if None in (M1, h, sigma):
            raise ConfigurationError("half mode needs M1, h and sigma")
        return max(0.0, (float(M1) / 2.0 - 2.0 * h * sigma ** 2) * curve.T2)
    if mode != "auto":
        raise ConfigurationError(f"unknown threshold mode {mode!r}")
    if T3 is None:
        raise ConfigurationError("auto mode needs T3")
    c = local_ranges(curve, T3)
    if not np.any(c > 0):
        warnings.warn("error curve is flat; no change point can be detected",
                      DegenerateCurveWarning, stacklevel=2)
        return math.inf
    q1, med, q3 = np.percentile(c, [25, 50, 75])
    return float(med + 3.0 * (q3 - q1))


def resolve_threshold(curve, cfg, h=None, sigma=None, M1=None):
    """Turn ``cfg.pi`` into a number for ``curve``.

    ``M1`` fills in a signal-scale mode configured without its own value.
    """
    pi = cfg.pi
    if isinstance(pi, float):
        return pi
    if pi == "auto":
        return suggest_threshold(curve, "auto", T3=cfg.T3)
    mode, m1 = pi
    if m1 is None:
        if M1 is None:
            raise ConfigurationError(
                f"threshold mode {mode!r} needs M1*: give '{mode}:<M1>' or use a dataset "
                "with recorded signals")
        m1 = M1
    return suggest_threshold(curve, mode, M1=m1, h=h, sigma=sigma)


def dataset_m1(data):
    """Smallest recorded change signal of a synthetic dataset, or ``None``."""
    signals = (data.meta or {}).get("signals")
    return float(min(signals)) if signals else None


@dataclass
class DetectionResult:
    curve: ErrorCurve
    change_points: list
    pi: float
    config: DetectionConfig
    diagnostics: dict = field(default_factory=dict)

    def to_json(self, curve_ref=None):
        return {
            "change_points": [int(c) for c in self.change_points],
            "pi": self.pi if math.isfinite(self.pi) else "inf",
            "T1": self.config.T1,
            "T2": self.config.T2,
            "T3": self.config.T3,
            "curve_ref": curve_ref,
            "config": self.config.to_dict(),
            "diagnostics": self.diagnostics,
        }


def run_detection(data, cfg, workers=None, diagnose=True):
    """Curve, threshold and change points for one dataset."""
    cfg = cfg.resolved(data.n_rows)
    curve = compute_error_curve(data, cfg, workers=workers)
    pi = resolve_threshold(curve, cfg, h=data.h, sigma=data.noise_sigma, M1=dataset_m1(data))
    cps = list(detect(curve, cfg.T3, pi).change_points) if math.isfinite(pi) else []
    diagnostics = {}
    if diagnose:
        diagnostics["assumption_checks"] = validate_assumptions(data, cfg)
    return DetectionResult(curve, cps, pi, cfg, diagnostics)


# --------------------------------------------------------------------------
# assumption diagnostics


def _empirical_signals(data, cfg, half_width):
    # fit one model just before and one just after each boundary; the signal
    # is the mean squared gap between their predictions on the union of rows
    spec = cfg.mlp_spec(data.p, data.h)
    out = []
    for k, tau in enumerate(data.true_change_points):
        lo = max(0, tau - half_width)
        hi = min(data.n_rows, tau + half_width)
        if tau - lo < 2 or hi - tau < 2:
            out.append(None)
            continue
        tc = replace(cfg.train, seed=cfg.seed + k)
        before = train_window(data.X[lo:tau], data.Y[lo:tau], spec, tc)
        after = train_window(data.X[tau:hi], data.Y[tau:hi], spec, tc)
        Xn = data.X[lo:hi]
        gap = forward(after, Xn) - forward(before, Xn)
        out.append(float(np.mean(np.sum(gap * gap, axis=1))))
    return out


def validate_assumptions(data, cfg=None, C0=1.0, signals=None):
    """Check the signal-to-noise and spacing conditions on a labelled dataset.

    The per-boundary signal ``E||f_{j+1}(X) - f_j(X)||^2`` is taken from
    ``signals``, else from ``data.meta["signals"]`` (exact generator
    estimates), else estimated by fitting a network on either side of each
    boundary.  Missing ground truth or noise level yields a partial report
    with ``None`` in the affected fields.
    """
    cfg = (cfg or DetectionConfig()).resolved(data.n_rows)
    report = {
        "n_rows": data.n_rows, "h": data.h, "sigma": data.noise_sigma, "C0": C0,
        "signals": None, "M1_star": None, "noise_floor": None,
        "signal_ok": None, "min_spacing": None, "required_spacing": None,
        "spacing_ok": None, "window": cfg.T1,
    }
    cps = data.true_change_points
    if cps is None:
        return report
    bounds = [0, *cps, data.n_rows]
    report["min_spacing"] = int(min(b - a for a, b in zip(bounds, bounds[1:])))
    if not cps:
        report.update(signals=[], signal_ok=True, spacing_ok=True)
        return report
    if signals is None:
        signals = data.meta.get("signals")
    if signals is None:
        signals = _empirical_signals(data, cfg, max(cfg.T1, 2))
    report["signals"] = [None if s is None else float(s) for s in signals]
    known = [s for s in report["signals"] if s is not None]
    if known:
        m1 = min(known)
        report["M1_star"] = m1
        required = max(C0 * math.sqrt(data.n_rows) / m1, cfg.T1) if m1 > 0 else math.inf
        report["required_spacing"] = required
        report["spacing_ok"] = bool(report["min_spacing"] >= required)
        if data.noise_sigma is not None:
            floor = 4.0 * data.h * data.noise_sigma ** 2
            report["noise_floor"] = floor
            report["signal_ok"] = bool(m1 > floor)
    else:
        report["required_spacing"] = cfg.T1
        report["spacing_ok"] = bool(report["min_spacing"] >= cfg.T1)
    return report


# --------------------------------------------------------------------------
# estimator


class NeuralChangePointDetector(BaseEstimator):
    """Offline multiple change-point detector driven by window test error.

    Parameters
    ----------
    T1, T2, T3 : int or None
        Training, test and detection window sizes.  ``None`` falls back to
        ``t0`` (as ``(t0, t0, 2 t0)``) or to :func:`suggest_windows`.
    t0 : int or None
    pi : float, "auto", "signal:<M1>" or "half:<M1>"
        Detection threshold on the windowed range of ``E``.
    stride : int, default=1
        Spacing of evaluation times.
    refine_radius : int or None
        With ``stride > 1``, re-evaluate at stride 1 within this radius of
        every coarse detection before the final scan.
    regime : {"independent", "subgaussian", "dependent"}
    hidden_layer_sizes : tuple of int, default=(256, 256)
    max_epochs, tol, patience, min_epochs, learning_rate, weight_decay :
        Per-window training settings (see :class:`~cpscan.neural.TrainConfig`).
    standardize : bool, default=True
    batch_size : int, default=32
        Windows trained together in one batched pass.
    n_jobs : int or None
        Worker processes; ``None`` reads ``CPSCAN_WORKERS`` (default 1).
    random_state : int, default=0

    Attributes
    ----------
    curve_ : ErrorCurve
    change_points_ : ndarray of int
    threshold_ : float
    windows_ : tuple of int
        The ``(T1, T2, T3)`` actually used.
    """

    def __init__(self, T1=None, T2=None, T3=None, t0=None, pi="auto", stride=1,
                 refine_radius=None, regime="independent",
                 hidden_layer_sizes=(256, 256), max_epochs=1500, tol=1e-5,
                 patience=10, min_epochs=100, learning_rate=1e-3, weight_decay=0.0,
                 standardize=True, batch_size=32, n_jobs=None, random_state=0):
        self.T1 = T1
        self.T2 = T2
        self.T3 = T3
        self.t0 = t0
        self.pi = pi
        self.stride = stride
        self.refine_radius = refine_radius
        self.regime = regime
        self.hidden_layer_sizes = hidden_layer_sizes
        self.max_epochs = max_epochs
        self.tol = tol
        self.patience = patience
        self.min_epochs = min_epochs
        self.learning_rate = learning_rate
        self.weight_decay = weight_decay
        self.standardize = standardize
        self.batch_size = batch_size
        self.n_jobs = n_jobs
        self.random_state = random_state

    def _config(self):
        return DetectionConfig(
            T1=self.T1, T2=self.T2, T3=self.T3, t0=self.t0, pi=parse_threshold(self.pi),
            stride=self.stride, refine_radius=self.refine_radius, regime=self.regime,
            hidden=tuple(self.hidden_layer_sizes),
            train=TrainConfig(max_epochs=self.max_epochs, tol=self.tol,
                              patience=self.patience, min_epochs=self.min_epochs,
                              lr=self.learning_rate,
                              weight_decay=self.weight_decay),
            seed=int(self.random_state or 0), batch_size=self.batch_size,
            standardize=self.standardize,
        )

    def fit(self, X, y):
        """Compute the error curve of ``(X, y)`` and detect change points."""
        X, Y = check_paired(X, y)
        data = SeriesDataset(X, Y)
        result = run_detection(data, self._config(), workers=self.n_jobs, diagnose=False)
        self.result_ = result
        self.curve_ = result.curve
        self.change_points_ = np.asarray(result.change_points, dtype=np.int64)
        self.threshold_ = result.pi
        self.windows_ = (result.config.T1, result.config.T2, result.config.T3)
        self.n_features_in_ = X.shape[1]
        return self

    def predict(self, X=None, y=None):
        """Change points of the fitted series, or of a new ``(X, y)``."""
        if X is None:
            check_is_fitted(self, "change_points_")
            return self.change_points_
        return self.fit_predict(X, y)

    def fit_predict(self, X, y):
        return self.fit(X, y).change_points_
