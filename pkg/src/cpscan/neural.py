"""Fully connected ReLU regressor trained by full-batch ADAM.

The network maps ``x`` to ``W_L s_L(... W_1 s_1(W_0 x))`` where each hidden
activation ``s_j(z) = max(0, z - v_j)`` carries its own bias ``v_j`` and the
output layer is purely linear (no output bias).

All heavy lifting happens in batched helpers that operate on a leading
"window" axis, so many independent small networks can be trained in one
pass of stacked matrix products.  The single-model functions are thin
wrappers over the same code with a batch of one.
"""

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from sklearn.base import BaseEstimator, RegressorMixin
from sklearn.utils.validation import check_is_fitted

from ._seeding import make_rng
from ._validation import check_int, check_matrix, check_nonneg, check_paired
from .exceptions import (
    ConfigurationError,
    EmptyWindowError,
    ShapeError,
    TrainingDivergenceError,
)

__all__ = [
    "MlpSpec",
    "MlpModel",
    "Gradients",
    "AdamState",
    "TrainConfig",
    "mlp_init",
    "forward",
    "loss_and_gradients",
    "adam_step",
    "train_window",
    "train_windows",
    "MLPWindowRegressor",
]


@dataclass(frozen=True)
class MlpSpec:
    """Layer widths ``(p_0, p_1, ..., p_{L+1})`` of a ReLU network.

    ``p_0`` is the input dimension, ``p_{L+1}`` the output dimension and the
    widths in between are hidden layers (possibly none).
    """

    layer_widths: tuple

    def __post_init__(self):
        widths = tuple(int(w) for w in self.layer_widths)
        if len(widths) < 2:
            raise ConfigurationError("an MLP needs at least input and output widths")
        if any(w < 1 for w in widths):
            raise ConfigurationError(f"layer widths must be >= 1, got {widths}")
        object.__setattr__(self, "layer_widths", widths)

    @classmethod
    def from_dims(cls, input_dim, output_dim, hidden=(256, 256)):
        return cls((input_dim, *hidden, output_dim))

    @property
    def n_hidden(self):
        return len(self.layer_widths) - 2

    @property
    def input_dim(self):
        return self.layer_widths[0]

    @property
    def output_dim(self):
        return self.layer_widths[-1]


@dataclass(frozen=True)
class MlpModel:
    """Weights ``W_j`` of shape ``(p_{j+1}, p_j)`` and hidden biases ``v_j``."""

    spec: MlpSpec
    weights: tuple
    biases: tuple

    def __post_init__(self):
        widths = self.spec.layer_widths
        if len(self.weights) != len(widths) - 1:
            raise ShapeError("wrong number of weight matrices for spec")
        if len(self.biases) != self.spec.n_hidden:
            raise ShapeError("wrong number of bias vectors for spec")
        for j, W in enumerate(self.weights):
            if W.shape != (widths[j + 1], widths[j]):
                raise ShapeError(
                    f"W_{j} has shape {W.shape}, expected {(widths[j + 1], widths[j])}"
                )
        for j, v in enumerate(self.biases, start=1):
            if v.shape != (widths[j],):
                raise ShapeError(f"v_{j} has shape {v.shape}, expected {(widths[j],)}")

    @property
    def parameters(self):
        return [*self.weights, *self.biases]

    def n_parameters(self):
        return sum(p.size for p in self.parameters)


class Gradients(NamedTuple):
    weights: tuple
    biases: tuple


@dataclass
class AdamState:
    """First/second moment accumulators and step counter for ADAM."""

    m: list
    v: list
    step: int = 0
    lr: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8

    @classmethod
    def zeros_like(cls, model, lr=1e-3, beta1=0.9, beta2=0.999, eps=1e-8):
        params = model.parameters
        return cls(
            m=[np.zeros_like(p) for p in params],
            v=[np.zeros_like(p) for p in params],
            step=0, lr=lr, beta1=beta1, beta2=beta2, eps=eps,
        )


@dataclass(frozen=True)
class TrainConfig:
    """Optimisation settings for one window fit.

    Training stops when the best loss so far improved by less than ``tol``
    (relative) over the last ``patience`` epochs, or after ``max_epochs``
    updates.  The stopping rule is not checked before ``min_epochs``.
    """

    max_epochs: int = 1500
    tol: float = 1e-5
    patience: int = 10
    seed: int = 0
    lr: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    weight_decay: float = 0.0
    min_epochs: int = 100

    def __post_init__(self):
        check_nonneg(self.weight_decay, "weight_decay")
        check_int(self.min_epochs, "min_epochs", minimum=0)
        check_int(self.max_epochs, "max_epochs", minimum=0)
        check_int(self.patience, "patience", minimum=1)
        check_nonneg(self.tol, "tol")
        if not self.lr > 0:
            raise ConfigurationError(f"lr must be > 0, got {self.lr}")
        if not (0 <= self.beta1 < 1 and 0 <= self.beta2 < 1):
            raise ConfigurationError("ADAM betas must lie in [0, 1)")

    def digest(self):
        return {
            "max_epochs": self.max_epochs, "tol": self.tol,
            "patience": self.patience, "lr": self.lr, "beta1": self.beta1,
            "beta2": self.beta2, "eps": self.eps,
            "weight_decay": self.weight_decay, "min_epochs": self.min_epochs,
        }


# --------------------------------------------------------------------------
# single-model API


def mlp_init(spec, seed):
    """He-scaled normal weights (variance ``2 / fan_in``) and zero biases."""
    if not isinstance(spec, MlpSpec):
        spec = MlpSpec(tuple(spec))
    rng = make_rng(seed)
    widths = spec.layer_widths
    weights = tuple(
        rng.standard_normal((widths[j + 1], widths[j])) * np.sqrt(2.0 / widths[j])
        for j in range(len(widths) - 1)
    )
    biases = tuple(np.zeros(w) for w in widths[1:-1])
    return MlpModel(spec, weights, biases)


def forward(model, x):
    """Evaluate the network on one input vector or on rows of a matrix."""
    x = np.asarray(x, dtype=np.float64)
    single = x.ndim == 1
    X = x[None, :] if single else x
    if X.ndim != 2 or X.shape[1] != model.spec.input_dim:
        raise ShapeError(
            f"input has shape {x.shape}, network expects {model.spec.input_dim} features"
        )
    Ws, vs = _stack([model])
    out, _ = _forward_batch(Ws, vs, X[None])
    return out[0, 0] if single else out[0]


def loss_and_gradients(model, X, Y):
    """Mean over rows of the squared Euclidean error, and its exact gradient."""
    X = np.asarray(X, dtype=np.float64)
    Y = np.asarray(Y, dtype=np.float64)
    if X.ndim != 2 or Y.ndim != 2:
        raise ShapeError("X and Y must be 2-D")
    if X.shape[0] == 0:
        raise EmptyWindowError("cannot compute a loss over zero rows")
    if X.shape[0] != Y.shape[0] or X.shape[1] != model.spec.input_dim \
            or Y.shape[1] != model.spec.output_dim:
        raise ShapeError(
            f"X {X.shape} / Y {Y.shape} do not match spec {model.spec.layer_widths}"
        )
    Ws, vs = _stack([model])
    loss, gW, gv = _loss_and_grads_batch(Ws, vs, X[None], Y[None])
    return float(loss[0]), Gradients(tuple(g[0] for g in gW), tuple(g[0] for g in gv))


def adam_step(model, gradients, state):
    """Return the updated ``(model, state)``; inputs are left untouched."""
    params = model.parameters
    grads = [*gradients.weights, *gradients.biases]
    if len(grads) != len(params) or any(g.shape != p.shape for g, p in zip(grads, params)):
        raise ShapeError("gradient shapes do not match model parameters")
    if len(state.m) != len(params) or any(m.shape != p.shape for m, p in zip(state.m, params)):
        raise ShapeError("ADAM state shapes do not match model parameters")
    new_params = [p.copy() for p in params]
    m = [a.copy() for a in state.m]
    v = [a.copy() for a in state.v]
    step = state.step + 1
    _adam_update(new_params, grads, m, v, step, state.lr, state.beta1, state.beta2, state.eps)
    n_w = len(model.weights)
    new_model = MlpModel(model.spec, tuple(new_params[:n_w]), tuple(new_params[n_w:]))
    new_state = AdamState(m, v, step, state.lr, state.beta1, state.beta2, state.eps)
    return new_model, new_state


def train_window(X, Y, spec, cfg=None):
    """Fit a freshly initialised network on one window of rows."""
    cfg = cfg or TrainConfig()
    X = np.asarray(X, dtype=np.float64)
    Y = np.asarray(Y, dtype=np.float64)
    if X.ndim != 2 or Y.ndim != 2 or X.shape[0] != Y.shape[0]:
        raise ShapeError("X and Y must be 2-D with equal row counts")
    return train_windows(X[None], Y[None], spec, cfg, seeds=[cfg.seed])[0]


def train_windows(Xs, Ys, spec, cfg, seeds, init_models=None):
    """Train one independent network per window, batched.

    Parameters
    ----------
    Xs, Ys : ndarray of shape (B, n, p) and (B, n, h)
        Stacked training windows.
    spec : MlpSpec
    cfg : TrainConfig
        Shared optimisation settings; ``cfg.seed`` is ignored in favour of
        ``seeds``.
    seeds : sequence of int
        One initialisation seed per window.
    init_models : sequence of MlpModel, optional
        Starting points (warm start) instead of fresh initialisations.

    Returns
    -------
    list of MlpModel
        Each entry is identical to what a batch of one would produce.
    """
    Xs = np.asarray(Xs, dtype=np.float64)
    Ys = np.asarray(Ys, dtype=np.float64)
    if Xs.ndim != 3 or Ys.ndim != 3 or Xs.shape[:2] != Ys.shape[:2]:
        raise ShapeError("Xs and Ys must be (B, n, .) arrays with matching B and n")
    if Xs.shape[1] == 0:
        raise EmptyWindowError("cannot train on zero rows")
    if Xs.shape[2] != spec.input_dim or Ys.shape[2] != spec.output_dim:
        raise ShapeError(
            f"window dims {(Xs.shape[2], Ys.shape[2])} do not match spec "
            f"{spec.layer_widths}"
        )
    B = Xs.shape[0]
    if init_models is None:
        models = [mlp_init(spec, s) for s in seeds]
    else:
        models = list(init_models)
    if len(models) != B:
        raise ConfigurationError("need exactly one seed or initial model per window")
    if cfg.max_epochs == 0:
        return models

    Ws, vs = _stack(models)
    params = [*Ws, *vs]
    n_w = len(Ws)
    m = [np.zeros_like(p) for p in params]
    v = [np.zeros_like(p) for p in params]
    active = np.arange(B)
    history = np.empty((B, cfg.max_epochs + 1))
    final = [None] * B

    def retire(local_idx):
        for li in local_idx:
            g = active[li]
            final[g] = MlpModel(
                spec,
                tuple(params[k][li].copy() for k in range(n_w)),
                tuple(params[k][li].copy() for k in range(n_w, len(params))),
            )

    for epoch in range(cfg.max_epochs + 1):
        # overflow shows up as a non-finite loss, reported below
        with np.errstate(over="ignore", invalid="ignore"):
            loss, gW, gv = _loss_and_grads_batch(params[:n_w], params[n_w:], Xs, Ys)
        if not np.all(np.isfinite(loss)):
            raise TrainingDivergenceError(epoch)
        # running best loss, so a transient ADAM overshoot does not stop training
        best = loss if epoch == 0 else np.minimum(history[active, epoch - 1], loss)
        history[active, epoch] = best
        if epoch == cfg.max_epochs:
            retire(range(len(active)))
            break
        done = loss == 0.0
        if epoch >= max(cfg.patience, cfg.min_epochs):
            old = history[active, epoch - cfg.patience]
            done |= (old - best) < cfg.tol * np.abs(old)
        if done.any():
            retire(np.flatnonzero(done))
            keep = np.flatnonzero(~done)
            if keep.size == 0:
                break
            active = active[keep]
            params = [p[keep] for p in params]
            m = [a[keep] for a in m]
            v = [a[keep] for a in v]
            gW = [g[keep] for g in gW]
            gv = [g[keep] for g in gv]
            Xs, Ys = Xs[keep], Ys[keep]
        if cfg.weight_decay:
            for p in params[:n_w]:
                p *= 1.0 - cfg.lr * cfg.weight_decay
        _adam_update(params, [*gW, *gv], m, v, epoch + 1,
                     cfg.lr, cfg.beta1, cfg.beta2, cfg.eps)
    return final


# --------------------------------------------------------------------------
# batched kernels


def _stack(models):
    n_w = len(models[0].weights)
    Ws = [np.stack([mdl.weights[k] for mdl in models]) for k in range(n_w)]
    vs = [np.stack([mdl.biases[k] for mdl in models]) for k in range(n_w - 1)]
    return Ws, vs


def _forward_batch(Ws, vs, X):
    # X: (B, n, p); Ws[j]: (B, out, in); vs[j]: (B, width)
    z = X @ Ws[0].transpose(0, 2, 1)
    acts = [X]
    pre = []
    for W, b in zip(Ws[1:], vs):
        pre.append(z)
        a = np.maximum(z - b[:, None, :], 0.0)
        acts.append(a)
        z = a @ W.transpose(0, 2, 1)
    return z, (acts, pre)


def _loss_and_grads_batch(Ws, vs, X, Y):
    n = X.shape[1]
    out, (acts, pre) = _forward_batch(Ws, vs, X)
    resid = out - Y
    loss = np.einsum("bij,bij->b", resid, resid) / n
    g = resid * (2.0 / n)
    gW = [None] * len(Ws)
    gv = [None] * len(vs)
    for j in range(len(Ws) - 1, -1, -1):
        gW[j] = g.transpose(0, 2, 1) @ acts[j]
        if j > 0:
            ga = g @ Ws[j]
            # subgradient 0 at the kink
            ga *= pre[j - 1] > vs[j - 1][:, None, :]
            gv[j - 1] = -ga.sum(axis=1)
            g = ga
    return loss, gW, gv


def _adam_update(params, grads, m, v, step, lr, beta1, beta2, eps):
    c1 = 1.0 - beta1 ** step
    c2 = 1.0 - beta2 ** step
    for p, g, mk, vk in zip(params, grads, m, v):
        mk *= beta1
        mk += (1.0 - beta1) * g
        vk *= beta2
        vk += (1.0 - beta2) * (g * g)
        p -= lr * (mk / c1) / (np.sqrt(vk / c2) + eps)


# --------------------------------------------------------------------------
# estimator


class MLPWindowRegressor(RegressorMixin, BaseEstimator):
    """Scikit-learn style wrapper around :func:`train_window`.

    Parameters
    ----------
    hidden_layer_sizes : tuple of int, default=(256, 256)
    max_epochs : int, default=1500
    tol : float, default=1e-5
        Relative improvement of the best loss over ``patience`` epochs below
        which training stops.
    patience : int, default=10
    min_epochs : int, default=100
        Epochs before the stopping rule is checked.
    learning_rate : float, default=1e-3
    beta1, beta2, epsilon : float
        ADAM hyperparameters.
    random_state : int, default=0

    Attributes
    ----------
    model_ : MlpModel
    n_features_in_ : int
    n_outputs_ : int
    """

    def __init__(self, hidden_layer_sizes=(256, 256), max_epochs=1500, tol=1e-5,
                 patience=10, min_epochs=100, learning_rate=1e-3, beta1=0.9,
                 beta2=0.999, epsilon=1e-8, random_state=0):
        self.hidden_layer_sizes = hidden_layer_sizes
        self.max_epochs = max_epochs
        self.tol = tol
        self.patience = patience
        self.min_epochs = min_epochs
        self.learning_rate = learning_rate
        self.beta1 = beta1
        self.beta2 = beta2
        self.epsilon = epsilon
        self.random_state = random_state

    def _train_config(self):
        return TrainConfig(
            max_epochs=self.max_epochs, tol=self.tol, patience=self.patience,
            min_epochs=self.min_epochs, seed=int(self.random_state or 0), lr=self.learning_rate,
            beta1=self.beta1, beta2=self.beta2, eps=self.epsilon,
        )

    def fit(self, X, y):
        X, Y = check_paired(X, y)
        self._y_was_1d = np.asarray(y).ndim == 1
        spec = MlpSpec.from_dims(X.shape[1], Y.shape[1], tuple(self.hidden_layer_sizes))
        self.model_ = train_window(X, Y, spec, self._train_config())
        self.n_features_in_ = X.shape[1]
        self.n_outputs_ = Y.shape[1]
        self.loss_ = loss_and_gradients(self.model_, X, Y)[0]
        return self

    def predict(self, X):
        check_is_fitted(self, "model_")
        X = check_matrix(X, "X")
        out = forward(self.model_, X)
        return out[:, 0] if self._y_was_1d else out
