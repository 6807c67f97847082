"""Command-line entry point: ``cpscan {generate,detect,evaluate,experiment}``.

Every command writes its outputs into ``--out`` together with a
``run_manifest.json`` recording the configuration digest, seed, inputs,
and a SHA-256 of each output file.  Errors print one line of the form
``cpscan: error: <Kind>: <message>`` to stderr and exit nonzero.
"""

import argparse
import hashlib
import json
import math
import sys
import time
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path

from . import __version__
from .config import DetectionConfig, parse_threshold
from .datagen import GeneratorSpec, gen_var, generate
from .dataset import read_dataset, read_manifest, write_dataset
from .detector import run_detection
from .exceptions import CpscanError
from .experiment import ExperimentSpec, detection_json_bytes, run_experiment
from .metrics import evaluate, read_estimates

EXIT_USAGE = 2
EXIT_FAILURE = 1


@dataclass
class RunManifest:
    command: str
    config_digest: str = None
    seed: int = None
    inputs: dict = field(default_factory=dict)
    outputs: dict = field(default_factory=dict)
    timings: dict = field(default_factory=dict)

    def record(self, name, path):
        path = Path(path)
        self.outputs[name] = {"path": path.name, "sha256": file_sha256(path)}

    def write(self, out_dir):
        path = Path(out_dir) / "run_manifest.json"
        with open(path, "w") as fh:
            json.dump(asdict(self), fh, indent=2, sort_keys=True)
            fh.write("\n")
        return path


def file_sha256(path):
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for block in iter(lambda: fh.read(1 << 16), b""):
            h.update(block)
    return h.hexdigest()


def _load_json(path):
    try:
        with open(path) as fh:
            return json.load(fh)
    except json.JSONDecodeError as exc:
        raise UsageError(f"{path}: invalid JSON: {exc.msg} at line {exc.lineno}") from None


def _write_json(path, obj):
    with open(path, "w") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True, allow_nan=False, default=_json_default)
        fh.write("\n")


def _json_default(obj):
    import numpy as np

    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, np.generic):
        return obj.item()
    raise TypeError(f"not JSON serialisable: {type(obj).__name__}")


def _finite(obj):
    # JSON has no infinity; spell it as a string
    if isinstance(obj, float) and not math.isfinite(obj):
        return "inf" if obj > 0 else ("-inf" if obj < 0 else "nan")
    if isinstance(obj, dict):
        return {k: _finite(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_finite(v) for v in obj]
    return obj


class UsageError(CpscanError):
    """Bad command-line input."""


def _out_dir(args):
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


# --------------------------------------------------------------------------
# generate


def cmd_generate(args):
    spec_dict = _load_json(args.spec)
    if args.seed is not None:
        spec_dict["seed"] = args.seed
    try:
        spec = GeneratorSpec.from_dict(spec_dict)
    except TypeError as exc:
        raise UsageError(str(exc)) from None
    out = _out_dir(args)
    start = time.perf_counter()
    manifest = RunManifest("generate", seed=spec.seed, inputs={"spec": spec.to_dict()})
    if spec.family == "var":
        raw, data = gen_var(spec)
        meta = dict(data.meta)
        meta.pop("coefficients", None)
        raw_set = replace(data, X=raw[:, :1], Y=raw, true_change_points=meta["raw_tau"], meta=meta)
        paths = write_dataset(raw_set, out / "raw.csv", y_only=True,
                              manifest={"lags": spec.lags})
        manifest.record("raw", paths[0])
        manifest.record("raw_manifest", paths[1])
        data = replace(data, meta=meta)
    else:
        data = generate(spec)
    csv_path, man_path = write_dataset(data, out / "data.csv")
    manifest.timings["generate_s"] = time.perf_counter() - start
    manifest.record("data", csv_path)
    manifest.record("manifest", man_path)
    manifest.write(out)
    print(csv_path)
    return 0


# --------------------------------------------------------------------------
# detect


_DETECT_FLAGS = ("t0", "t1", "t2", "t3", "pi", "stride", "seed")
_FLAG_TO_FIELD = {"t0": "t0", "t1": "T1", "t2": "T2", "t3": "T3", "pi": "pi",
                  "stride": "stride", "seed": "seed"}


def build_detection_config(args, base=None):
    """Flags override the config file, which overrides the defaults."""
    d = dict(base or {})
    for flag in _DETECT_FLAGS:
        value = getattr(args, flag, None)
        if value is not None:
            d[_FLAG_TO_FIELD[flag]] = value
    try:
        return DetectionConfig.from_dict(d)
    except TypeError as exc:
        raise UsageError(str(exc)) from None


def cmd_detect(args):
    base = _load_json(args.spec) if args.spec else {}
    cfg = build_detection_config(args, base.get("detection", base))
    data = read_dataset(args.data, lags=args.lags)
    out = _out_dir(args)
    start = time.perf_counter()
    result = run_detection(data, cfg, workers=args.workers)
    elapsed = time.perf_counter() - start

    curve_path = out / "curve.csv"
    result.curve.write_csv(curve_path)
    det_path = out / "detection.json"
    with open(det_path, "wb") as fh:
        fh.write(_detection_bytes(result.to_json(curve_ref=curve_path.name)))

    manifest = RunManifest("detect", result.config.digest(), result.config.seed,
                           inputs={"data": str(args.data), "data_sha256": file_sha256(args.data),
                                   "lags": args.lags, "config": result.config.to_dict()},
                           timings={"detect_s": elapsed})
    manifest.record("curve", curve_path)
    manifest.record("detection", det_path)
    manifest.write(out)
    print(json.dumps({"change_points": result.change_points}))
    return 0


def _detection_bytes(obj):
    return (json.dumps(_finite(obj), indent=2, sort_keys=True, allow_nan=False,
                       default=_json_default) + "\n").encode()


# --------------------------------------------------------------------------
# evaluate


def cmd_evaluate(args):
    truth_manifest = read_manifest(args.truth)
    truth = truth_manifest.get("tau")
    if truth is None:
        raise UsageError(f"{args.truth}: no 'tau' key")
    est = read_estimates(args.estimates)
    margin = args.margin
    if margin is None:
        margin = _margin_from(args.estimates)
    report = evaluate(truth, est, margin)
    obj = _finite(report.to_dict())
    text = json.dumps(obj, indent=2, sort_keys=True) + "\n"
    if args.out:
        out = Path(args.out)
        out.parent.mkdir(parents=True, exist_ok=True)
        out.write_text(text)
    sys.stdout.write(text)
    return 0


def _margin_from(path):
    # default margin is the T3 stored in a detection JSON
    try:
        with open(path) as fh:
            obj = json.load(fh)
        if isinstance(obj, dict) and obj.get("T3") is not None:
            return int(obj["T3"])
    except (json.JSONDecodeError, UnicodeDecodeError):
        pass
    raise UsageError("--margin is required unless the estimates file is a detection JSON")


# --------------------------------------------------------------------------
# experiment


def cmd_experiment(args):
    raw = _load_json(args.spec)
    if args.seed is not None:
        raw["seed"] = args.seed
    try:
        spec = ExperimentSpec.from_dict(raw)
    except TypeError as exc:
        raise UsageError(str(exc)) from None
    out = _out_dir(args)
    start = time.perf_counter()
    result = run_experiment(spec, workers=args.workers)
    elapsed = time.perf_counter() - start

    manifest = RunManifest("experiment", seed=spec.seed, inputs={"spec": spec.to_dict()},
                           timings={"experiment_s": elapsed,
                                    "runs_s": [round(r.seconds, 3) for r in result.runs]})
    runs_dir = out / "runs"
    runs_dir.mkdir(exist_ok=True)
    for r in result.runs:
        if r.detection is None:
            continue
        name = f"{_slug(r.group)}_rep{r.rep:03d}.json"
        path = runs_dir / name
        with open(path, "wb") as fh:
            fh.write(_detection_bytes({"group": r.group, "rep": r.rep, "seed": r.seed,
                                       "truth": r.truth, **r.detection}))
        manifest.record(f"runs/{name}", path)
    summary = out / "summary.csv"
    result.write_summary_csv(summary)
    manifest.record("summary", summary)
    manifest.write(out)
    for label, agg in result.aggregates.items():
        print(json.dumps({"group": label, **_finite(agg)}, sort_keys=True))
    return 0


def _slug(text):
    return "".join(c if c.isalnum() or c in "-." else "_" for c in text)


# --------------------------------------------------------------------------
# parser


def _threshold(text):
    try:
        return parse_threshold(text)
    except CpscanError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def _positive_int(text):
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer, got {text!r}") from None
    if value < 1:
        raise argparse.ArgumentTypeError(f"expected an integer >= 1, got {value}")
    return value


def _nonneg_int(text):
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer, got {text!r}") from None
    if value < 0:
        raise argparse.ArgumentTypeError(f"expected an integer >= 0, got {value}")
    return value


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.exit(EXIT_USAGE, f"{self.prog}: error: UsageError: {' '.join(message.split())}\n")


def build_parser():
    parser = _Parser(prog="cpscan", description="Neural-network change point detection.")
    parser.add_argument("--version", action="version", version=f"cpscan {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    g = sub.add_parser("generate", help="simulate a dataset with known change points")
    g.add_argument("--spec", required=True, help="generator spec JSON")
    g.add_argument("--seed", type=int)
    g.add_argument("--out", required=True, help="output directory")
    g.set_defaults(func=cmd_generate)

    d = sub.add_parser("detect", help="error curve and change points for a dataset CSV")
    d.add_argument("data", help="dataset CSV (x*, y* columns)")
    d.add_argument("--lags", type=_positive_int, help="build inputs from this many lags of y")
    d.add_argument("--t0", type=_positive_int, help="sets T1=T2=t0, T3=2*t0")
    d.add_argument("--t1", type=_positive_int)
    d.add_argument("--t2", type=_positive_int)
    d.add_argument("--t3", type=_positive_int)
    d.add_argument("--pi", type=_threshold, help="auto | <value> | signal[:<M1>] | half[:<M1>]")
    d.add_argument("--stride", type=_positive_int)
    d.add_argument("--seed", type=int)
    d.add_argument("--workers", type=_positive_int)
    d.add_argument("--spec", help="detection config JSON")
    d.add_argument("--out", required=True, help="output directory")
    d.set_defaults(func=cmd_detect)

    e = sub.add_parser("evaluate", help="score estimates against a truth manifest")
    e.add_argument("--truth", required=True, help="dataset manifest JSON with 'tau'")
    e.add_argument("--estimates", required=True,
                   help="detection JSON or text file with one integer per line")
    e.add_argument("--margin", type=_nonneg_int)
    e.add_argument("--out", help="write the report JSON here too")
    e.set_defaults(func=cmd_evaluate)

    x = sub.add_parser("experiment", help="repeated generate/detect/evaluate runs")
    x.add_argument("--spec", required=True, help="experiment spec JSON")
    x.add_argument("--seed", type=int)
    x.add_argument("--workers", type=_positive_int)
    x.add_argument("--out", required=True, help="output directory")
    x.set_defaults(func=cmd_experiment)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except UsageError as exc:
        _fail(EXIT_USAGE, "UsageError", exc)
    except (CpscanError, OSError, ValueError) as exc:
        _fail(EXIT_FAILURE, type(exc).__name__, exc)


def _fail(code, kind, exc):
    message = " ".join(str(exc).split())
    sys.stderr.write(f"cpscan: error: {kind}: {message}\n")
    sys.exit(code)


if __name__ == "__main__":
    sys.exit(main())
