"""Repeated generate / detect / evaluate runs with derived seeds.

An experiment spec is a JSON object::

    {"repetitions": 10, "seed": 0,
     "generator": {...GeneratorSpec fields...},
     "detection": {...DetectionConfig fields...},
     "margin": null,
     "sweep": {"sigma": [0.4, 2, 4]}}

``sweep`` is optional and names one generator or detection field with the
values to try; every value reuses the same repetition seeds so the groups
are paired.  Repetition ``r`` uses seed ``derive_seed(seed, r)`` for both
the generator and the detector.
"""

import csv
import json
import math
import time
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, fields, replace

from ._seeding import derive_seed
from ._validation import check_int
from .config import DetectionConfig
from .datagen import GeneratorSpec, generate
from .detector import run_detection
from .exceptions import ConfigurationError, CpscanError
from .metrics import EvalReport, aggregate, evaluate
from .scan import resolve_workers

__all__ = [
    "ExperimentSpec",
    "RunRecord",
    "ExperimentResult",
    "run_experiment",
    "detection_json_bytes",
    "SUMMARY_FIELDS",
]

SUMMARY_FIELDS = (
    "group", "rep", "seed", "n_true", "n_est", "mean_distance", "count_diff", "matched",
    "hausdorff_sum", "hausdorff_prod", "precision", "recall", "f1", "prop_matched",
    "mean_distance_matched", "n_runs", "n_failed", "error",
)


@dataclass(frozen=True)
class ExperimentSpec:
    repetitions: int = 10
    seed: int = 0
    generator: dict = field(default_factory=dict)
    detection: dict = field(default_factory=dict)
    margin: int = None
    sweep: dict = None

    def __post_init__(self):
        check_int(self.repetitions, "repetitions", minimum=1)
        if self.margin is not None:
            check_int(self.margin, "margin", minimum=0)
        if self.sweep is not None:
            if len(self.sweep) != 1:
                raise ConfigurationError("sweep must name exactly one parameter")
            ((key, values),) = self.sweep.items()
            if key not in _GEN_FIELDS and key not in _DET_FIELDS:
                raise ConfigurationError(f"unknown sweep parameter {key!r}")
            if not isinstance(values, (list, tuple)) or not values:
                raise ConfigurationError("sweep values must be a nonempty list")
        # fail early on bad generator or detection settings
        self.groups()

    @classmethod
    def from_dict(cls, d):
        unknown = set(d) - {f.name for f in fields(cls)}
        if unknown:
            raise ConfigurationError(f"unknown experiment keys: {sorted(unknown)}")
        return cls(**d)

    def to_dict(self):
        return {"repetitions": self.repetitions, "seed": self.seed,
                "generator": dict(self.generator), "detection": dict(self.detection),
                "margin": self.margin, "sweep": self.sweep}

    def groups(self):
        """``[(label, GeneratorSpec template, DetectionConfig template), ...]``."""
        gen = {k: v for k, v in self.generator.items() if k != "seed"}
        det = {k: v for k, v in self.detection.items() if k != "seed"}
        if not self.sweep:
            return [("all", GeneratorSpec.from_dict(gen), DetectionConfig.from_dict(det))]
        ((key, values),) = self.sweep.items()
        out = []
        for v in values:
            g, d = dict(gen), dict(det)
            (g if key in _GEN_FIELDS else d)[key] = v
            out.append((f"{key}={v}", GeneratorSpec.from_dict(g), DetectionConfig.from_dict(d)))
        return out


_GEN_FIELDS = {f.name for f in fields(GeneratorSpec)} - {"seed"}
_DET_FIELDS = {f.name for f in fields(DetectionConfig)} - {"seed"}


@dataclass
class RunRecord:
    group: str
    rep: int
    seed: int
    truth: list = None
    detection: dict = None
    report: dict = None
    error: str = None
    seconds: float = 0.0

    def summary_row(self):
        row = {"group": self.group, "rep": self.rep, "seed": self.seed, "error": self.error or ""}
        if self.report:
            row.update({k: self.report[k] for k in SUMMARY_FIELDS if k in self.report})
        return row


@dataclass
class ExperimentResult:
    spec: ExperimentSpec
    runs: list
    aggregates: dict

    def summary_rows(self):
        rows = []
        for label in self.aggregates:
            rows.extend(r.summary_row() for r in self.runs if r.group == label)
            agg = self.aggregates[label]
            rows.append({"group": label, "rep": "aggregate", "seed": self.spec.seed,
                         **{k: agg[k] for k in SUMMARY_FIELDS if k in agg}})
        return rows

    def write_summary_csv(self, path):
        with open(path, "w", newline="") as fh:
            writer = csv.DictWriter(fh, fieldnames=SUMMARY_FIELDS, lineterminator="\n")
            writer.writeheader()
            for row in self.summary_rows():
                writer.writerow({k: _fmt(row.get(k, "")) for k in SUMMARY_FIELDS})


def _fmt(v):
    if isinstance(v, float):
        if math.isnan(v):
            return ""
        return "inf" if math.isinf(v) else repr(v)
    return v


def _one_run(job):
    label, gen, det, rep, seed, margin = job
    start = time.perf_counter()
    record = RunRecord(label, rep, seed)
    try:
        data = generate(replace(gen, seed=seed))
        record.truth = list(data.true_change_points)
        result = run_detection(data, replace(det, seed=seed), workers=1)
        record.detection = result.to_json()
        m = margin if margin is not None else result.config.T3
        if record.truth:
            record.report = evaluate(record.truth, result.change_points, m).to_dict()
    except CpscanError as exc:
        record.error = f"{type(exc).__name__}: {exc}"
    record.seconds = time.perf_counter() - start
    return record


def run_experiment(spec, workers=None):
    """Run every repetition of every group; repetitions run in parallel.

    Failed runs are kept with their error message and left out of the
    aggregate, with a warning.  Output order and content do not depend on
    ``workers``.
    """
    if isinstance(spec, dict):
        spec = ExperimentSpec.from_dict(spec)
    workers = resolve_workers(workers)
    jobs = [
        (label, gen, det, r, derive_seed(spec.seed, r), spec.margin)
        for label, gen, det in spec.groups()
        for r in range(spec.repetitions)
    ]
    if workers == 1 or len(jobs) == 1:
        runs = [_one_run(j) for j in jobs]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            runs = list(pool.map(_one_run, jobs))
    aggregates = {}
    for label, _, _ in spec.groups():
        group = [r for r in runs if r.group == label]
        done = [r for r in group if r.report is not None]
        failed = sum(r.error is not None for r in group)
        if failed:
            warnings.warn(f"{failed} of {len(group)} runs failed in group {label!r}",
                          RuntimeWarning, stacklevel=2)
        if done:
            agg = aggregate(EvalReport(**r.report) for r in done)
        else:
            agg = {"n_runs": 0}
        agg["n_failed"] = failed
        aggregates[label] = agg
    return ExperimentResult(spec, runs, aggregates)


def detection_json_bytes(record):
    """Canonical serialisation of one run's detection output."""
    return (json.dumps(record.detection, sort_keys=True) + "\n").encode()
