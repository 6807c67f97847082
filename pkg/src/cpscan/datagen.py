"""Synthetic series with known change points.

Families
--------
``mlp_piecewise``
    ``Y = f_j(X) + noise`` where every ``f_j`` is a bias-free three-layer
    ReLU network with weights ``W_i + W_ij``: a shared dense base plus a
    sparse perturbation drawn afresh for each segment.  Weights are
    standard normal, or divided by ``sqrt(fan_in)`` with
    ``weight_scale="fan_in"``.
``var``
    Piecewise VAR(q) with sparse coefficient matrices, kept stable by
    shrinking the companion spectral radius; exposed both raw and lagged.
``nonlinear_var``
    ``x_t = A x_{t-1} + sum_i Lam_i rho_i(f_{r t - i} + e_t)`` driven by a
    latent VAR(2) factor process.
``lotka_volterra``
    Multi-species predator/prey ODE integrated by RK4; the interaction
    graph is redrawn at each change point.
``mean_shift``
    A univariate level shift with an irrelevant Gaussian covariate.

All randomness comes from :func:`cpscan._seeding.make_rng` substreams keyed
by ``(seed, purpose, segment)`` so segments are independent of each other.
"""

import math
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy.optimize import brentq

from ._seeding import make_rng
from ._validation import check_int, check_nonneg
from .dataset import SeriesDataset, lag_series
from .exceptions import ConfigurationError, IntegrationError
from .neural import MlpModel, MlpSpec, forward

__all__ = [
    "FAMILIES",
    "GeneratorSpec",
    "PiecewiseModelSet",
    "place_change_points",
    "build_mlp_models",
    "gen_mlp_piecewise",
    "companion",
    "spectral_radius",
    "simulate_var",
    "gen_var",
    "simulate_nonlinear_var",
    "gen_nonlinear_var",
    "lv_rhs",
    "rk4_step",
    "simulate_lotka_volterra",
    "gen_lotka_volterra",
    "gen_mean_shift",
    "generate",
]

FAMILIES = ("mlp_piecewise", "var", "nonlinear_var", "lotka_volterra", "mean_shift")

# substream purposes
_S_PLACE, _S_BASE, _S_PERT, _S_INPUT, _S_NOISE, _S_SIGNAL, _S_COEF, _S_INIT = range(8)


@dataclass(frozen=True)
class GeneratorSpec:
    """Everything needed to reproduce one synthetic dataset.

    Shared fields are ``family``, ``p``, ``h``, ``N``, ``gap_range``,
    ``sigma`` and ``seed``; the rest only matter to some families and are
    grouped below by family.
    """

    family: str = "mlp_piecewise"
    p: int = 40
    h: int = 20
    N: int = 5
    gap_range: tuple = (300, 600)
    sigma: float = 0.4
    seed: int = 0
    # mlp_piecewise
    hidden: tuple = None
    sparsity: float = 0.1
    perturbation: str = "normal"
    weight_scale: str = "unit"
    signal: float = None
    signal_samples: int = 20000
    inputs: str = "iid"
    input_radius: float = 0.9
    # var
    lags: int = 4
    density: float = 0.1
    spectral_target: float = 0.9
    burn_in: int = 100
    restart: bool = False
    # nonlinear_var
    nl_lags: int = 6
    factor_dim: int = 10
    freq: int = 3
    # lotka_volterra
    alpha: float = 1.1
    beta: float = 0.4
    delta: float = 1.0
    gamma: float = 0.5
    n_parents: int = 2
    dt: float = 0.01
    # mean_shift
    levels: tuple = (1.0, 2.0)

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ConfigurationError(f"family must be one of {FAMILIES}, got {self.family!r}")
        check_int(self.p, "p", minimum=1)
        check_int(self.h, "h", minimum=1)
        check_int(self.N, "N", minimum=0)
        lo, hi = (int(g) for g in self.gap_range)
        if lo < 1 or hi < lo:
            raise ConfigurationError(f"gap_range must satisfy 1 <= min <= max, got {self.gap_range}")
        object.__setattr__(self, "gap_range", (lo, hi))
        check_nonneg(self.sigma, "sigma")
        if not 0 <= self.sparsity <= 1 or not 0 <= self.density <= 1:
            raise ConfigurationError("sparsity and density must lie in [0, 1]")
        if self.perturbation not in ("normal", "uniform"):
            raise ConfigurationError("perturbation must be 'normal' or 'uniform'")
        if self.weight_scale not in ("unit", "fan_in"):
            raise ConfigurationError("weight_scale must be 'unit' or 'fan_in'")
        if self.inputs not in ("iid", "var1"):
            raise ConfigurationError("inputs must be 'iid' or 'var1'")
        if self.signal is not None and not self.signal > 0:
            raise ConfigurationError("signal target must be > 0")
        check_int(self.lags, "lags", minimum=1)
        check_int(self.nl_lags, "nl_lags", minimum=0)
        check_int(self.factor_dim, "factor_dim", minimum=1)
        check_int(self.freq, "freq", minimum=1)
        check_int(self.burn_in, "burn_in", minimum=0)
        if not 0 < self.spectral_target < 1 or not 0 < self.input_radius < 1:
            raise ConfigurationError("spectral targets must lie in (0, 1)")
        if min(self.alpha, self.beta, self.delta, self.gamma) < 0 or not self.dt > 0:
            raise ConfigurationError("Lotka-Volterra rates must be >= 0 and dt > 0")
        if self.hidden is not None:
            object.__setattr__(self, "hidden", tuple(int(w) for w in self.hidden))
        object.__setattr__(self, "levels", tuple(float(v) for v in self.levels))

    @property
    def generator_hidden(self):
        if self.hidden is not None:
            return self.hidden
        w = max(1, self.p // 4)
        return (w, w)

    def to_dict(self):
        d = asdict(self)
        for key in ("gap_range", "hidden", "levels"):
            if d[key] is not None:
                d[key] = list(d[key])
        return d

    @classmethod
    def from_dict(cls, d):
        d = dict(d)
        for key in ("gap_range", "hidden", "levels"):
            if d.get(key) is not None:
                d[key] = tuple(d[key])
        unknown = set(d) - set(cls.__dataclass_fields__)
        if unknown:
            raise ConfigurationError(f"unknown generator parameters: {sorted(unknown)}")
        return cls(**d)


def place_change_points(gap_range, N, rng):
    """Draw ``N + 1`` segment lengths uniformly from ``gap_range`` (inclusive).

    Returns ``(tau, T_sum)`` where ``tau`` are the cumulative segment ends,
    excluding the final one.
    """
    N = check_int(N, "N", minimum=0)
    lo, hi = gap_range
    gaps = rng.integers(lo, hi + 1, size=N + 1)
    ends = np.cumsum(gaps)
    return [int(v) for v in ends[:-1]], int(ends[-1])


def _bounds(tau, T_sum):
    return [0, *tau, T_sum]


# --------------------------------------------------------------------------
# piecewise MLP


@dataclass
class PiecewiseModelSet:
    """Base weights, one perturbation set per segment, and the boundaries.

    Weight matrices are stored as ``(fan_out, fan_in)``.
    """

    base: list
    perturbations: list
    tau: list
    T_sum: int
    signals: list = field(default_factory=list)

    @property
    def n_segments(self):
        return len(self.perturbations)

    def segment_model(self, j):
        weights = tuple(W + D for W, D in zip(self.base, self.perturbations[j]))
        widths = (weights[0].shape[1], *(W.shape[0] for W in weights))
        spec = MlpSpec(widths)
        return MlpModel(spec, weights, tuple(np.zeros(w) for w in widths[1:-1]))


def _layer_scale(shape, spec):
    # "fan_in" keeps every layer's output on the scale of its input
    return 1.0 if spec.weight_scale == "unit" else 1.0 / math.sqrt(shape[1])


def _draw_perturbation(shapes, spec, rng):
    out = []
    for shape in shapes:
        mask = rng.random(shape) < spec.sparsity
        if spec.perturbation == "normal":
            vals = rng.standard_normal(shape)
        else:
            vals = rng.random(shape)
        out.append(mask * vals * _layer_scale(shape, spec))
    return out


def _mc_signal(base, d_prev, d_next, Xmc):
    def f(D):
        a = Xmc
        for k, (W, P) in enumerate(zip(base, D)):
            a = a @ (W + P).T
            if k < len(base) - 1:
                a = np.maximum(a, 0.0)
        return a

    gap = f(d_next) - f(d_prev)
    return float(np.mean(np.sum(gap * gap, axis=1)))


def build_mlp_models(spec):
    """Draw the boundaries and per-segment networks of ``mlp_piecewise``.

    With ``spec.signal`` set, each new segment's perturbation is moved
    along the line from the previous segment's perturbation towards a
    fresh draw, by the scalar that makes the Monte-Carlo estimate of
    ``E||f_{j+1}(X) - f_j(X)||^2`` equal the target.
    """
    tau, T_sum = place_change_points(spec.gap_range, spec.N, make_rng(spec.seed, _S_PLACE))
    widths = (spec.p, *spec.generator_hidden, spec.h)
    shapes = [(widths[k + 1], widths[k]) for k in range(len(widths) - 1)]
    rng = make_rng(spec.seed, _S_BASE)
    base = [rng.standard_normal(s) * _layer_scale(s, spec) for s in shapes]
    perts = [_draw_perturbation(shapes, spec, make_rng(spec.seed, _S_PERT, j))
             for j in range(spec.N + 1)]
    Xmc = make_rng(spec.seed, _S_SIGNAL).standard_normal((spec.signal_samples, spec.p))
    signals = []
    for j in range(1, spec.N + 1):
        prev, fresh = perts[j - 1], perts[j]
        if spec.signal is not None:
            def moved(c, prev=prev, fresh=fresh):
                return [P + c * (F - P) for P, F in zip(prev, fresh)]

            def excess(c):
                return _mc_signal(base, prev, moved(c), Xmc) - spec.signal

            hi = 1.0
            while excess(hi) < 0:
                hi *= 2.0
                if hi > 1e6:
                    raise ConfigurationError("cannot reach the requested signal level")
            c = brentq(excess, 0.0, hi, xtol=1e-12, rtol=1e-10)
            perts[j] = moved(c)
        signals.append(_mc_signal(base, perts[j - 1], perts[j], Xmc))
    return PiecewiseModelSet(base, perts, tau, T_sum, signals)


def _var1_inputs(T, p, radius, rng):
    A = rng.standard_normal((p, p)) / math.sqrt(p)
    A *= radius / spectral_radius(A)
    X = np.empty((T, p))
    x = np.zeros(p)
    for _ in range(200):
        x = A @ x + rng.standard_normal(p)
    for t in range(T):
        x = A @ x + rng.standard_normal(p)
        X[t] = x
    X -= X.mean(axis=0)
    X /= X.std(axis=0)
    return X


def gen_mlp_piecewise(spec, return_models=False):
    """Piecewise feed-forward-network regression data."""
    if spec.family != "mlp_piecewise":
        raise ConfigurationError("spec.family must be 'mlp_piecewise'")
    models = build_mlp_models(spec)
    T, tau = models.T_sum, models.tau
    rng_in = make_rng(spec.seed, _S_INPUT)
    if spec.inputs == "iid":
        X = rng_in.standard_normal((T, spec.p))
    else:
        X = _var1_inputs(T, spec.p, spec.input_radius, rng_in)
    Y = np.empty((T, spec.h))
    bounds = _bounds(tau, T)
    for j in range(models.n_segments):
        a, b = bounds[j], bounds[j + 1]
        Y[a:b] = forward(models.segment_model(j), X[a:b])
    if spec.sigma > 0:
        Y += spec.sigma * make_rng(spec.seed, _S_NOISE).standard_normal(Y.shape)
    ds = SeriesDataset(X, Y, tau, spec.sigma, {
        "family": spec.family, "seed": spec.seed, "params": spec.to_dict(),
        "signals": models.signals,
    })
    return (ds, models) if return_models else ds


# --------------------------------------------------------------------------
# VAR(q)


def companion(coefs):
    """Block companion matrix of ``[A_1, ..., A_q]``."""
    q = len(coefs)
    h = coefs[0].shape[0]
    B = np.zeros((q * h, q * h))
    B[:h] = np.hstack(coefs)
    if q > 1:
        B[h:, :-h] = np.eye((q - 1) * h)
    return B


def spectral_radius(M):
    return float(np.max(np.abs(np.linalg.eigvals(M))))


def _stable_var_coefs(h, q, density, target, rng):
    for _ in range(100):
        coefs = [(rng.random((h, h)) < density) * rng.standard_normal((h, h))
                 for _ in range(q)]
        rho = spectral_radius(companion(coefs))
        if not np.isfinite(rho) or rho == 0:
            continue
        if rho > target:
            # A_k -> c^k A_k scales every companion eigenvalue by c
            c = target / rho
            coefs = [A * c ** (k + 1) for k, A in enumerate(coefs)]
        if spectral_radius(companion(coefs)) <= target + 1e-9:
            return coefs
    raise ConfigurationError("could not draw stable VAR coefficients in 100 tries")


def simulate_var(coefs_per_segment, tau, T_sum, sigma, rng, init=None, burn_in=0,
                 restart=False):
    """Run a piecewise VAR(q) forward and return the ``(T_sum, h)`` series.

    ``init`` holds the ``q`` pre-sample values ``[Y_{-1}, ..., Y_{-q}]``
    (default: standard normal draws).  ``burn_in`` steps of the first
    segment's dynamics run before the recorded sample starts; with
    ``restart`` every segment begins from its own fresh burn-in instead of
    continuing the previous state.
    """
    q = len(coefs_per_segment[0])
    h = coefs_per_segment[0][0].shape[0]
    if q >= T_sum:
        raise ConfigurationError(f"lag order {q} must be smaller than the series length {T_sum}")

    def fresh_state():
        return rng.standard_normal((q, h))

    def step(coefs, hist):
        y = sum(A @ hist[k] for k, A in enumerate(coefs))
        if sigma > 0:
            y = y + sigma * rng.standard_normal(h)
        return y

    def burn(coefs, hist):
        for _ in range(burn_in):
            y = step(coefs, hist)
            hist = np.vstack([y, hist[:-1]])
        return hist

    hist = np.asarray(init, dtype=np.float64).reshape(q, h) if init is not None else fresh_state()
    hist = burn(coefs_per_segment[0], hist)
    out = np.empty((T_sum, h))
    bounds = _bounds(tau, T_sum)
    for j, coefs in enumerate(coefs_per_segment):
        if restart and j > 0:
            hist = burn(coefs, fresh_state())
        for t in range(bounds[j], bounds[j + 1]):
            y = step(coefs, hist)
            out[t] = y
            hist = np.vstack([y, hist[:-1]])
    return out


def gen_var(spec):
    """Piecewise VAR(q): returns ``(raw series, lagged SeriesDataset)``."""
    if spec.family != "var":
        raise ConfigurationError("spec.family must be 'var'")
    tau, T = place_change_points(spec.gap_range, spec.N, make_rng(spec.seed, _S_PLACE))
    if spec.lags >= T:
        raise ConfigurationError(f"lag order {spec.lags} >= series length {T}")
    coefs = [_stable_var_coefs(spec.h, spec.lags, spec.density, spec.spectral_target,
                               make_rng(spec.seed, _S_COEF, j))
             for j in range(spec.N + 1)]
    raw = simulate_var(coefs, tau, T, max(spec.sigma, 0.0), make_rng(spec.seed, _S_NOISE),
                       burn_in=spec.burn_in, restart=spec.restart)
    radii = [spectral_radius(companion(c)) for c in coefs]
    meta = {"family": spec.family, "seed": spec.seed, "params": spec.to_dict(),
            "spectral_radii": radii, "lags": spec.lags, "raw_tau": tau,
            "coefficients": coefs}
    flat = lag_series(raw, spec.lags, tau, noise_sigma=spec.sigma, meta=meta)
    return raw, flat


# --------------------------------------------------------------------------
# nonlinear VAR


def _leaky_relu(z):
    return np.where(z > 0, z, 0.1 * z)


NONLINEARITIES = {"tanh": np.tanh, "sin": np.sin, "leaky_relu": _leaky_relu}


def _stable_dense(d, target, rng):
    for _ in range(100):
        A = rng.standard_normal((d, d)) / math.sqrt(d)
        rho = spectral_radius(A)
        if np.isfinite(rho) and rho > 0:
            A *= min(1.0, target / rho)
            if spectral_radius(A) <= target + 1e-9:
                return A
    raise ConfigurationError("could not draw a stable matrix in 100 tries")


def simulate_nonlinear_var(spec, lambda_scale=1.0, factor_sigma=1.0, x0=None):
    """Raw nonlinear-VAR series plus the per-segment parameters used.

    Returns ``(x, tau, info)`` where ``x`` has shape ``(T_sum, h)`` and
    ``info`` holds ``A``, ``Lambda`` and the nonlinearity names per segment.
    Factor indices ``r t - i`` below zero are clamped to zero.
    """
    tau, T = place_change_points(spec.gap_range, spec.N, make_rng(spec.seed, _S_PLACE))
    d, k, q, r = spec.h, spec.factor_dim, spec.nl_lags, spec.freq
    # latent VAR(2) factors, long enough for index r * (T - 1)
    rng_f = make_rng(spec.seed, _S_BASE)
    gammas = _stable_var_coefs(k, 2, 1.0, spec.spectral_target, rng_f)
    n_f = r * T + 1
    f = np.zeros((n_f, k))
    for t in range(2, n_f):
        f[t] = gammas[0] @ f[t - 1] + gammas[1] @ f[t - 2]
        if factor_sigma > 0:
            f[t] += factor_sigma * rng_f.standard_normal(k)
    names = list(NONLINEARITIES)
    segs = []
    for j in range(spec.N + 1):
        rng = make_rng(spec.seed, _S_COEF, j)
        A = _stable_dense(d, spec.spectral_target, rng)
        lams = [lambda_scale * rng.standard_normal((d, k)) / math.sqrt(k) for _ in range(q + 1)]
        rhos = [names[int(i)] for i in rng.integers(0, len(names), size=q + 1)]
        segs.append({"A": A, "Lambda": lams, "rho": rhos})
    rng_e = make_rng(spec.seed, _S_NOISE)
    x = np.empty((T, d))
    prev = np.zeros(d) if x0 is None else np.asarray(x0, dtype=np.float64)
    bounds = _bounds(tau, T)
    for j, seg in enumerate(segs):
        for t in range(bounds[j], bounds[j + 1]):
            eps = spec.sigma * rng_e.standard_normal(k) if spec.sigma > 0 else 0.0
            drive = np.zeros(d)
            for i, (L, name) in enumerate(zip(seg["Lambda"], seg["rho"])):
                drive += L @ NONLINEARITIES[name](f[max(0, r * t - i)] + eps)
            prev = seg["A"] @ prev + drive
            x[t] = prev
    return x, tau, {"segments": segs, "factors": f, "gammas": gammas}


def gen_nonlinear_var(spec):
    """Nonlinear VAR as a lag-1 regression dataset."""
    if spec.family != "nonlinear_var":
        raise ConfigurationError("spec.family must be 'nonlinear_var'")
    x, tau, info = simulate_nonlinear_var(spec)
    meta = {"family": spec.family, "seed": spec.seed, "params": spec.to_dict(),
            "lags": 1, "raw_tau": tau,
            "nonlinearities": [s["rho"] for s in info["segments"]]}
    return lag_series(x, 1, tau, noise_sigma=spec.sigma, meta=meta)


# --------------------------------------------------------------------------
# Lotka-Volterra


def _incidence(parents, n):
    M = np.zeros((len(parents), n))
    for i, pa in enumerate(parents):
        M[i, list(pa)] = 1.0
    return M


def lv_rhs(state, parents_x, parents_y, alpha, beta, delta, gamma):
    """Time derivative of ``(prey, predators)``.

    ``parents_x[i]`` lists the predators acting on prey ``i`` and
    ``parents_y[j]`` the prey feeding predator ``j``; either may also be
    given directly as a 0/1 incidence matrix.
    """
    n = state.size // 2
    x, y = state[:n], state[n:]
    Mx = parents_x if isinstance(parents_x, np.ndarray) else _incidence(parents_x, n)
    My = parents_y if isinstance(parents_y, np.ndarray) else _incidence(parents_y, n)
    dx = alpha * x - beta * x * (Mx @ y) - alpha * x * x
    dy = delta * y * (My @ x) - gamma * y
    return np.concatenate([dx, dy])


def rk4_step(fun, state, dt):
    k1 = fun(state)
    k2 = fun(state + 0.5 * dt * k1)
    k3 = fun(state + 0.5 * dt * k2)
    k4 = fun(state + dt * k3)
    return state + dt / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)


def _draw_parents(n, n_parents, rng):
    """Each predator feeds on ``n_parents`` prey; prey parents are the transpose.

    Keeping the two sides consistent means every predator depletes exactly
    the prey it grows on, which keeps the system bounded.
    """
    k = min(n_parents, n)
    py = [tuple(int(i) for i in sorted(rng.choice(n, size=k, replace=False)))
          for _ in range(n)]
    px = [tuple(j for j in range(n) if i in py[j]) for i in range(n)]
    return px, py


def simulate_lotka_volterra(spec, init=None, floor=1e-6):
    """Integrate the piecewise system; returns ``(series, tau, parent sets)``.

    One sample is kept every ``round(1 / dt)`` RK4 steps and states are
    clamped below at ``floor``.
    """
    tau, T = place_change_points(spec.gap_range, spec.N, make_rng(spec.seed, _S_PLACE))
    n = spec.p
    parents = [_draw_parents(n, spec.n_parents, make_rng(spec.seed, _S_COEF, j))
               for j in range(spec.N + 1)]
    if init is None:
        state = make_rng(spec.seed, _S_INIT).uniform(0.2, 1.0, size=2 * n)
    else:
        state = np.asarray(init, dtype=np.float64).copy()
    sub = max(1, int(round(1.0 / spec.dt)))
    out = np.empty((T, 2 * n))
    bounds = _bounds(tau, T)
    step = 0
    for j in range(spec.N + 1):
        px, py = (_incidence(pa, n) for pa in parents[j])

        def fun(s, px=px, py=py):
            return lv_rhs(s, px, py, spec.alpha, spec.beta, spec.delta, spec.gamma)

        for t in range(bounds[j], bounds[j + 1]):
            for _ in range(sub):
                state = np.maximum(rk4_step(fun, state, spec.dt), floor)
                step += 1
                if not np.all(np.isfinite(state)):
                    raise IntegrationError(step)
            out[t] = state
    if spec.sigma > 0:
        out = out + spec.sigma * make_rng(spec.seed, _S_NOISE).standard_normal(out.shape)
    return out, tau, parents


def gen_lotka_volterra(spec):
    """Multi-species Lotka-Volterra as a lag-1 regression dataset."""
    if spec.family != "lotka_volterra":
        raise ConfigurationError("spec.family must be 'lotka_volterra'")
    series, tau, parents = simulate_lotka_volterra(spec)
    meta = {"family": spec.family, "seed": spec.seed, "params": spec.to_dict(),
            "lags": 1, "raw_tau": tau,
            "parents": [[list(map(list, px)), list(map(list, py))] for px, py in parents]}
    return lag_series(series, 1, tau, noise_sigma=spec.sigma, meta=meta)


# --------------------------------------------------------------------------
# mean shift


def gen_mean_shift(spec):
    """Univariate levels ``spec.levels`` switching at each change point.

    The single input column is standard normal noise unrelated to the
    output.  Levels cycle if there are more segments than levels.
    """
    if spec.family != "mean_shift":
        raise ConfigurationError("spec.family must be 'mean_shift'")
    tau, T = place_change_points(spec.gap_range, spec.N, make_rng(spec.seed, _S_PLACE))
    return _mean_shift_series(tau, T, spec.levels, spec.sigma, spec.seed, spec.to_dict())


def _mean_shift_series(tau, T, levels, sigma, seed, params):
    bounds = _bounds(tau, T)
    y = np.empty(T)
    for j in range(len(bounds) - 1):
        y[bounds[j]:bounds[j + 1]] = levels[j % len(levels)]
    y += sigma * make_rng(seed, _S_NOISE).standard_normal(T)
    X = make_rng(seed, _S_INPUT).standard_normal((T, 1))
    signals = [(levels[(j + 1) % len(levels)] - levels[j % len(levels)]) ** 2
               for j in range(len(tau))]
    return SeriesDataset(X, y[:, None], tau, sigma, {
        "family": "mean_shift", "seed": seed, "params": params, "signals": signals,
    })


def mean_shift_toy(seed=0, T_sum=1000, tau=500, alpha=1.0, beta=2.0, sigma=0.2):
    """The single-change level-shift example: ``alpha`` before ``tau``, ``beta`` after."""
    params = {"family": "mean_shift", "T_sum": T_sum, "tau": tau, "levels": [alpha, beta],
              "sigma": sigma, "seed": seed}
    return _mean_shift_series([tau], T_sum, (alpha, beta), sigma, seed, params)


def generate(spec):
    """Dispatch on ``spec.family``; always returns a :class:`SeriesDataset`."""
    if spec.family == "mlp_piecewise":
        return gen_mlp_piecewise(spec)
    if spec.family == "var":
        return gen_var(spec)[1]
    if spec.family == "nonlinear_var":
        return gen_nonlinear_var(spec)
    if spec.family == "lotka_volterra":
        return gen_lotka_volterra(spec)
    return gen_mean_shift(spec)
