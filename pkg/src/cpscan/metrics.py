"""Scores for estimated change points against ground truth."""

import json
import math
from dataclasses import asdict, dataclass

import numpy as np

from .exceptions import ConfigurationError, UndefinedMetricError

__all__ = [
    "EvalReport",
    "mean_cp_distance",
    "hausdorff_sum",
    "hausdorff_prod",
    "precision_recall",
    "evaluate",
    "aggregate",
    "read_estimates",
]


@dataclass(frozen=True)
class EvalReport:
    mean_distance: float
    count_diff: int
    matched: bool
    hausdorff_sum: float
    hausdorff_prod: float
    precision: float
    recall: float
    f1: float
    margin: int
    n_true: int
    n_est: int

    def to_dict(self):
        return asdict(self)


def _as_points(points, name):
    arr = np.asarray(sorted(int(p) for p in points), dtype=np.int64)
    return arr


def _require_truth(truth):
    if len(truth) == 0:
        raise UndefinedMetricError("metric undefined for an empty ground-truth set")


def mean_cp_distance(truth, est):
    """Average over true points of the distance to the closest estimate.

    Returns ``inf`` when there are no estimates.
    """
    truth = _as_points(truth, "truth")
    est = _as_points(est, "est")
    _require_truth(truth)
    if est.size == 0:
        return math.inf
    d = np.abs(truth[:, None] - est[None, :]).min(axis=1)
    return float(d.mean())


def _assigned_distances(truth, est):
    # each estimate goes to its nearest true point; argmin picks the earlier on ties
    d = np.abs(truth[:, None] - est[None, :])
    owner = d.argmin(axis=0)
    return [d[i, owner == i] for i in range(truth.size)]


def hausdorff_sum(truth, est):
    """Largest per-true-point sum of distances of the estimates assigned to it."""
    truth = _as_points(truth, "truth")
    est = _as_points(est, "est")
    _require_truth(truth)
    if est.size == 0:
        return math.inf
    return float(max(a.sum() for a in _assigned_distances(truth, est)))


def hausdorff_prod(truth, est):
    """Like :func:`hausdorff_sum` with products; true points with nothing
    assigned are skipped."""
    truth = _as_points(truth, "truth")
    est = _as_points(est, "est")
    _require_truth(truth)
    if est.size == 0:
        return math.inf
    prods = [float(np.prod(a.astype(np.float64)))
             for a in _assigned_distances(truth, est) if a.size]
    return max(prods)


def precision_recall(truth, est, margin):
    """Precision, recall and F1 under greedy one-to-one matching.

    Candidate pairs within ``margin`` are taken closest first (ties broken
    by true index, then estimate index); each point is used at most once.
    """
    if margin < 0:
        raise ConfigurationError(f"margin must be >= 0, got {margin}")
    truth = _as_points(truth, "truth")
    est = _as_points(est, "est")
    n, n_hat = truth.size, est.size
    if n_hat == 0:
        precision = 1.0 if n == 0 else 0.0
        recall = 1.0 if n == 0 else 0.0
    else:
        pairs = sorted(
            (abs(int(truth[i]) - int(est[j])), i, j)
            for i in range(n) for j in range(n_hat)
            if abs(int(truth[i]) - int(est[j])) <= margin
        )
        used_t, used_e = set(), set()
        for _, i, j in pairs:
            if i not in used_t and j not in used_e:
                used_t.add(i)
                used_e.add(j)
        tp = len(used_t)
        precision = tp / n_hat
        recall = tp / n if n else 1.0
    f1 = 0.0 if precision + recall == 0 else 2 * precision * recall / (precision + recall)
    return precision, recall, f1


def evaluate(truth, est, margin):
    """Compute every metric for one (truth, estimate) pair."""
    truth = _as_points(truth, "truth")
    est = _as_points(est, "est")
    _require_truth(truth)
    p, r, f1 = precision_recall(truth, est, margin)
    return EvalReport(
        mean_distance=mean_cp_distance(truth, est),
        count_diff=abs(truth.size - est.size),
        matched=bool(truth.size == est.size),
        hausdorff_sum=hausdorff_sum(truth, est),
        hausdorff_prod=hausdorff_prod(truth, est),
        precision=p,
        recall=r,
        f1=f1,
        margin=int(margin),
        n_true=int(truth.size),
        n_est=int(est.size),
    )


_AVERAGED = ("mean_distance", "count_diff", "hausdorff_sum", "hausdorff_prod",
             "precision", "recall", "f1")


def aggregate(reports):
    """Average a list of reports.

    Infinite values are left out of the means and counted separately under
    ``<metric>_n_inf``; a metric whose values are all infinite averages to
    ``inf``.  ``prop_matched`` is the fraction of runs with the right count.
    """
    reports = list(reports)
    if not reports:
        raise ConfigurationError("cannot aggregate an empty list of reports")
    out = {"n_runs": len(reports)}
    for key in _AVERAGED:
        vals = np.array([getattr(r, key) for r in reports], dtype=np.float64)
        finite = vals[np.isfinite(vals)]
        out[key] = float(finite.mean()) if finite.size else math.inf
        out[f"{key}_n_inf"] = int(vals.size - finite.size)
    out["prop_matched"] = float(np.mean([r.matched for r in reports]))
    matched = [r.mean_distance for r in reports if r.matched and math.isfinite(r.mean_distance)]
    out["mean_distance_matched"] = float(np.mean(matched)) if matched else math.nan
    return out


def read_estimates(path):
    """Estimated change points from a file.

    Accepts a detection JSON (``{"change_points": [...]}``), a bare JSON
    list, or plain text with one integer per line (blank lines and ``#``
    comments ignored).
    """
    with open(path) as fh:
        text = fh.read()
    stripped = text.strip()
    if stripped.startswith("{") or stripped.startswith("["):
        try:
            obj = json.loads(stripped)
        except json.JSONDecodeError as exc:
            raise ConfigurationError(f"{path}: invalid JSON: {exc}") from None
        points = obj.get("change_points") if isinstance(obj, dict) else obj
        if points is None:
            raise ConfigurationError(f"{path}: no 'change_points' key")
    else:
        points = []
        for lineno, line in enumerate(text.splitlines(), start=1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            try:
                points.append(int(line))
            except ValueError:
                raise ConfigurationError(f"{path}: line {lineno} is not an integer: {line!r}") from None
    try:
        return sorted(int(p) for p in points)
    except (TypeError, ValueError):
        raise ConfigurationError(f"{path}: change points must be integers") from None
