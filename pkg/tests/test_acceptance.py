"""Acceptance criteria, each run at its stated tolerance.

Every test appends one ``CRITERION n: PASS|FAIL ...`` line to the session
log, printed in the terminal summary, before asserting.
"""

import json
import time

import numpy as np
import pytest

from _oracles import (
    fd_gradient,
    naive_scan,
    oracle_greedy_tp,
    oracle_hausdorff,
    oracle_mean,
    random_model,
)
from cpscan._seeding import derive_seed
from cpscan.cli import main
from cpscan.config import DetectionConfig
from cpscan.datagen import (
    GeneratorSpec,
    companion,
    gen_var,
    lv_rhs,
    mean_shift_toy,
    rk4_step,
    simulate_var,
)
from cpscan.detector import detect, detect_single
from cpscan.experiment import run_experiment
from cpscan.metrics import (
    hausdorff_prod,
    hausdorff_sum,
    mean_cp_distance,
    precision_recall,
)
from cpscan.neural import loss_and_gradients
from cpscan.scan import ErrorCurve, compute_error_curve

pytestmark = pytest.mark.acceptance

# A small generator the window networks can learn from ~50 rows: bias-free
# ReLU network 4 -> 4 -> 4 -> 2, weights scaled by 1/sqrt(fan_in), with a
# fixed change signal.  Detection uses the noise-aware threshold
# (M1*/2 - 2 h sigma^2) T2 with M1* read from the generated data.
SMALL_GEN = {"family": "mlp_piecewise", "p": 4, "h": 2, "hidden": [4, 4],
             "weight_scale": "fan_in", "signal": 4.0, "sigma": 0.4, "N": 5}
SMALL_DET = {"hidden": [8], "stride": 2, "pi": "half",
             "train": {"max_epochs": 300, "lr": 0.01, "weight_decay": 1.0}}


def _record(log, n, ok, detail, seconds, limit):
    line = f"CRITERION {n}: {'PASS' if ok else 'FAIL'} {detail}; {seconds:.1f}s"
    if limit is not None:
        line += f" (limit {limit:.0f}s)"
    log.append(line)
    print(line)
    return ok and (limit is None or seconds < limit)


def _fmt(x):
    return "nan" if x is None or not np.isfinite(x) else f"{x:.2f}"


def test_criterion_1_gradient_oracle(acceptance_log):
    start = time.perf_counter()
    rng = np.random.default_rng(101)
    worst = 0.0
    for _ in range(50):
        depth = int(rng.integers(0, 3))  # hidden layers, so 1 to 3 weight layers
        widths = tuple(int(w) for w in rng.integers(1, 9, size=depth + 2))
        model = random_model(rng, widths)
        X = rng.standard_normal((8, widths[0]))
        Y = rng.standard_normal((8, widths[-1]))
        _, grads = loss_and_gradients(model, X, Y)
        fd = fd_gradient(model, X, Y, eps=1e-5)
        for g, f in zip([*grads.weights, *grads.biases], fd):
            mask = np.abs(f) > 1e-8
            if mask.any():
                worst = max(worst, float(np.max(np.abs(g[mask] - f[mask]) / np.abs(f[mask]))))
    ok = worst < 1e-4
    passed = _record(acceptance_log, 1, ok, f"max relative gradient error {worst:.2e} (< 1e-4)",
                     time.perf_counter() - start, 10)
    assert passed


def test_criterion_2_detector_oracle(acceptance_log):
    start = time.perf_counter()
    rng = np.random.default_rng(202)
    mismatches = 0
    for _ in range(100):
        n = int(rng.integers(1, 200))
        t = np.sort(rng.choice(np.arange(3 * n + 5), size=n, replace=False))
        e = rng.integers(0, 10, size=n).astype(float)
        T3 = int(rng.integers(1, 30))
        pi = float(rng.integers(0, 11))
        got = list(detect(ErrorCurve(t, e, 5, 5), T3, pi).change_points)
        mismatches += got != naive_scan(t, e, T3, pi)
    passed = _record(acceptance_log, 2, mismatches == 0,
                     f"{100 - mismatches}/100 curves match the naive scan exactly",
                     time.perf_counter() - start, 5)
    assert passed


def test_criterion_3_metrics_oracle(acceptance_log):
    start = time.perf_counter()
    rng = np.random.default_rng(303)
    mismatches = 0
    for _ in range(200):
        truth = sorted(rng.choice(600, size=int(rng.integers(1, 7)), replace=False).tolist())
        est = sorted(rng.choice(600, size=int(rng.integers(1, 7)), replace=False).tolist())
        margin = int(rng.integers(0, 80))
        tp = oracle_greedy_tp(truth, est, margin)
        p, r, _ = precision_recall(truth, est, margin)
        mismatches += not (
            mean_cp_distance(truth, est) == oracle_mean(truth, est)
            and hausdorff_sum(truth, est) == oracle_hausdorff(truth, est, "sum")
            and hausdorff_prod(truth, est) == oracle_hausdorff(truth, est, "prod")
            and p == tp / len(est) and r == tp / len(truth)
        )
    worked = hausdorff_sum([100], [90, 110]) == 20 and hausdorff_prod([100], [90, 110]) == 100
    passed = _record(acceptance_log, 3, mismatches == 0 and worked,
                     f"{200 - mismatches}/200 instances match brute force; worked values "
                     f"{'reproduce' if worked else 'differ'}",
                     time.perf_counter() - start, 5)
    assert passed


def test_criterion_4_single_change_toy(acceptance_log):
    start = time.perf_counter()
    hits, found = 0, []
    for seed in range(10):
        data = mean_shift_toy(seed=seed, T_sum=1000, tau=500, alpha=1.0, beta=2.0, sigma=0.2)
        cfg = DetectionConfig(T1=100, T2=100, T3=200, hidden=(16, 16), seed=seed)
        cfg = cfg.with_train(max_epochs=300, lr=1e-2)
        tau_hat = detect_single(compute_error_curve(data, cfg))
        found.append(tau_hat)
        hits += abs(tau_hat - 500) <= 50
    passed = _record(acceptance_log, 4, hits >= 9,
                     f"{hits}/10 seeds within 50 of 500 (need >= 9), estimates {found}",
                     time.perf_counter() - start, 180)
    assert passed


def test_criterion_5_scaled_relu_regression(acceptance_log):
    start = time.perf_counter()
    spec = {"repetitions": 10, "seed": 5,
            "generator": {"family": "mlp_piecewise", "p": 40, "h": 20, "N": 5,
                          "gap_range": [300, 600], "sigma": 0.4},
            "detection": {"hidden": [32, 32], "stride": 1, "pi": "half",
                          "train": {"max_epochs": 300, "lr": 0.01, "weight_decay": 3.0}}}
    agg = run_experiment(spec, workers=1).aggregates["all"]
    prop, dbar = agg["prop_matched"], agg["mean_distance_matched"]
    ok = prop >= 0.8 and np.isfinite(dbar) and dbar <= 30
    passed = _record(acceptance_log, 5, ok,
                     f"Prop(N_hat=N)={prop:.2f} (need >= 0.8), d_bar over matched runs="
                     f"{_fmt(dbar)} (need <= 30), d_bar all runs={_fmt(agg['mean_distance'])}",
                     time.perf_counter() - start, 1800)
    assert passed


def test_criterion_6_independent_vs_dependent_inputs(acceptance_log):
    start = time.perf_counter()
    spec = {"repetitions": 10, "seed": 6,
            "generator": {**SMALL_GEN, "gap_range": [200, 300]},
            "detection": SMALL_DET,
            "sweep": {"inputs": ["iid", "var1"]}}
    aggs = run_experiment(spec, workers=1).aggregates
    iid, dep = aggs["inputs=iid"]["prop_matched"], aggs["inputs=var1"]["prop_matched"]
    passed = _record(acceptance_log, 6, iid > dep,
                     f"Prop(N_hat=N) iid={iid:.2f} vs VAR(1) inputs={dep:.2f} (need iid > dep); "
                     f"d_bar iid={_fmt(aggs['inputs=iid']['mean_distance'])} "
                     f"dep={_fmt(aggs['inputs=var1']['mean_distance'])}",
                     time.perf_counter() - start, 2700)
    assert passed


def test_criterion_7_smaller_window_localizes_better(acceptance_log):
    start = time.perf_counter()
    spec = {"repetitions": 10, "seed": 7,
            "generator": {**SMALL_GEN, "N": 3, "gap_range": [300, 600]},
            "detection": SMALL_DET,
            "sweep": {"t0": [20, 50]}}
    result = run_experiment(spec, workers=1)
    by_rep = {}
    for run in result.runs:
        d = run.report["mean_distance"] if run.report else float("inf")
        by_rep.setdefault(run.rep, {})[run.group] = d
    wins = sum(v["t0=20"] < v["t0=50"] for v in by_rep.values())
    means = {g: _fmt(a["mean_distance"]) for g, a in result.aggregates.items()}
    passed = _record(acceptance_log, 7, wins >= 8,
                     f"T0=20 beats T0=50 on d_bar in {wins}/10 paired seeds (need >= 8); "
                     f"d_bar T0=20 {means['t0=20']}, T0=50 {means['t0=50']}",
                     time.perf_counter() - start, 1800)
    assert passed


def test_criterion_8_noise_sweep(acceptance_log):
    start = time.perf_counter()
    spec = {"repetitions": 10, "seed": 8,
            "generator": {**SMALL_GEN, "signal": 50.0, "gap_range": [300, 600]},
            "detection": SMALL_DET,
            "sweep": {"sigma": [0.4, 2.0, 4.0]}}
    aggs = run_experiment(spec, workers=1).aggregates
    groups = ["sigma=0.4", "sigma=2.0", "sigma=4.0"]
    dbar = [aggs[g]["mean_distance"] for g in groups]
    prop = [aggs[g]["prop_matched"] for g in groups]
    ok = (all(a <= b for a, b in zip(dbar, dbar[1:]))
          and all(a >= b for a, b in zip(prop, prop[1:])))
    passed = _record(acceptance_log, 8, ok,
                     f"d_bar {[_fmt(d) for d in dbar]} (need non-decreasing), "
                     f"Prop {[round(p, 2) for p in prop]} (need non-increasing)",
                     time.perf_counter() - start, 2700)
    assert passed


def test_criterion_9_generator_validity(acceptance_log):
    start = time.perf_counter()
    radii, worst_flat = [], 0.0
    for seed in range(10):
        spec = GeneratorSpec(family="var", h=20, lags=4, N=3, gap_range=(50, 80), seed=seed)
        _, data = gen_var(spec)
        radii.extend(data.meta["spectral_radii"])
        coefs, tau = data.meta["coefficients"], data.meta["raw_tau"]
        T = tau[-1] + 80
        rng = np.random.default_rng(seed)
        y = simulate_var(coefs, tau, T, 0.0, rng, init=rng.standard_normal((4, 20)))
        bounds = [0, *tau, T]
        for j, c in enumerate(coefs):
            B = companion(c)
            for t in range(max(bounds[j], 4), bounds[j + 1]):
                z_now = y[t - 3:t + 1][::-1].reshape(-1)
                z_prev = y[t - 4:t][::-1].reshape(-1)
                scale = max(1.0, float(np.abs(z_now).max()))
                worst_flat = max(worst_flat, float(np.abs(z_now - B @ z_prev).max()) / scale)

    def logistic(s):
        return lv_rhs(s, [()], [()], 1.0, 0.0, 0.0, 0.0)

    s = np.array([0.1, 1.0])
    for _ in range(100):
        s = rk4_step(logistic, s, 0.01)
    exact = 0.1 * np.e / (1 - 0.1 + 0.1 * np.e)
    lv_err = abs(s[0] - exact)
    ok = max(radii) <= 0.9 + 1e-9 and worst_flat <= 1e-10 and lv_err <= 1e-6
    passed = _record(acceptance_log, 9, ok,
                     f"max companion radius {max(radii):.6f} (<= 0.9+1e-9), flattened identity "
                     f"error {worst_flat:.1e} (<= 1e-10), logistic RK4 error {lv_err:.1e} (<= 1e-6)",
                     time.perf_counter() - start, None)
    assert passed


def test_criterion_10_determinism_across_workers(acceptance_log, tmp_path):
    start = time.perf_counter()
    spec = {"repetitions": 3, "seed": 10,
            "generator": {**SMALL_GEN, "N": 2, "gap_range": [150, 200]},
            "detection": {**SMALL_DET, "train": {"max_epochs": 50, "lr": 0.01}},
            "sweep": {"sigma": [0.4, 2.0]}}
    spec_path = tmp_path / "exp.json"
    spec_path.write_text(json.dumps(spec))
    outs = []
    for workers in (1, 2):
        out = tmp_path / f"w{workers}"
        assert main(["experiment", "--spec", str(spec_path), "--workers", str(workers),
                     "--out", str(out)]) == 0
        outs.append({p.name: p.read_bytes() for p in sorted((out / "runs").iterdir())})
    same = outs[0] == outs[1] and len(outs[0]) == 6
    seeds = [derive_seed(10, r) for r in range(3)]
    passed = _record(acceptance_log, 10, same,
                     f"{len(outs[0])} detection JSON files byte-identical between 1 and 2 "
                     f"workers: {same} (rep seeds {seeds})",
                     time.perf_counter() - start, None)
    assert passed
