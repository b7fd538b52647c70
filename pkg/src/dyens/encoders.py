"""Encoder pool: models mapping velocity to expected firing rates.

Every encoder carries a diagonal Gaussian residual noise model, so it doubles
as the measurement density ``p_k(y | x)`` used by the particle filters.

Three families are provided:

* :class:`LinearEncoder`: ``y = W x``
* :class:`PolynomialEncoder`: ``y = W2 x**2 + W1 x`` (elementwise square)
* :class:`MlpEncoder`: ``y = V tanh(U x + c) + d``

Linear and polynomial models have no intercept unless ``fit_intercept`` is
requested; inputs are expected to be z-scored.
"""

from __future__ import annotations

import json
import math
import warnings
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Iterator, Sequence

import numpy as np

from dyens.errors import NonFiniteLoss, ShapeMismatch, SingularFit, TooFewSamples

VARIANCE_FLOOR = 1e-8
RIDGE_FALLBACK = 1e-6
LOG_2PI = math.log(2.0 * math.pi)


@dataclass(frozen=True)
class NoiseModel:
    """Per-channel residual variances (floored at 1e-8)."""

    sigma2: np.ndarray

    def __post_init__(self):
        s = np.maximum(np.asarray(self.sigma2, dtype=float).reshape(-1), VARIANCE_FLOOR)
        s.setflags(write=False)
        object.__setattr__(self, "sigma2", s)

    @classmethod
    def from_residuals(cls, resid: np.ndarray) -> "NoiseModel":
        # zero-mean noise MLE: mean squared residual, not the centred variance
        return cls(np.mean(np.asarray(resid) ** 2, axis=0))


class Encoder:
    """Common behaviour of the encoder family. Subclasses implement ``predict``."""

    kind = "base"
    noise: NoiseModel
    id: str

    @property
    def n_channels(self) -> int:
        return self.noise.sigma2.shape[0]

    def predict(self, X: np.ndarray) -> np.ndarray:  # pragma: no cover - abstract
        raise NotImplementedError

    def log_likelihood_batch(self, X: np.ndarray, y: np.ndarray) -> np.ndarray:
        """Diagonal Gaussian log-density of ``y`` for each row of ``X`` (shape ``(N,)``)."""
        resid = y[None, :] - self.predict(X)
        inv = 1.0 / self.noise.sigma2
        const = -0.5 * (y.shape[0] * LOG_2PI + np.sum(np.log(self.noise.sigma2)))
        return const - 0.5 * (resid**2 @ inv)

    def _params(self) -> dict[str, np.ndarray]:  # pragma: no cover - abstract
        raise NotImplementedError

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "id": self.id,
            "n_channels": self.n_channels,
            "params": {k: _pack(v) for k, v in self._params().items()},
            "noise": _pack(self.noise.sigma2),
            "meta": dict(getattr(self, "meta", {})),
        }


def _pack(arr: np.ndarray) -> dict:
    arr = np.asarray(arr, dtype=float)
    return {"shape": list(arr.shape), "data": [float(v) for v in arr.ravel(order="C")]}


def _unpack(d: dict) -> np.ndarray:
    return np.array(d["data"], dtype=float).reshape(d["shape"])


def _frozen(a) -> np.ndarray:
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class LinearEncoder(Encoder):
    W: np.ndarray
    noise: NoiseModel
    intercept: np.ndarray | None = None
    id: str = "linear"
    meta: dict = field(default_factory=dict)
    kind = "linear"

    def __post_init__(self):
        object.__setattr__(self, "W", _frozen(self.W))
        if self.intercept is not None:
            object.__setattr__(self, "intercept", _frozen(self.intercept))

    def predict(self, X):
        out = np.asarray(X, dtype=float) @ self.W.T
        if self.intercept is not None:
            out = out + self.intercept
        return out

    def _params(self):
        p = {"W": self.W}
        if self.intercept is not None:
            p["intercept"] = self.intercept
        return p


@dataclass(frozen=True, eq=False)
class PolynomialEncoder(Encoder):
    W2: np.ndarray
    W1: np.ndarray
    noise: NoiseModel
    ridge_lambda: float = 0.0
    W_cross: np.ndarray | None = None
    intercept: np.ndarray | None = None
    id: str = "polynomial"
    meta: dict = field(default_factory=dict)
    kind = "polynomial"

    def __post_init__(self):
        object.__setattr__(self, "W2", _frozen(self.W2))
        object.__setattr__(self, "W1", _frozen(self.W1))
        for name in ("W_cross", "intercept"):
            if getattr(self, name) is not None:
                object.__setattr__(self, name, _frozen(getattr(self, name)))

    def predict(self, X):
        X = np.asarray(X, dtype=float)
        out = (X * X) @ self.W2.T + X @ self.W1.T
        if self.W_cross is not None:
            out = out + (X[:, :1] * X[:, 1:2]) @ self.W_cross.T
        if self.intercept is not None:
            out = out + self.intercept
        return out

    def _params(self):
        p = {"W2": self.W2, "W1": self.W1}
        if self.W_cross is not None:
            p["W_cross"] = self.W_cross
        if self.intercept is not None:
            p["intercept"] = self.intercept
        return p


@dataclass(frozen=True, eq=False)
class MlpEncoder(Encoder):
    """One tanh hidden layer: ``y = W_out tanh(W_in x + b_in) + b_out``."""

    W_in: np.ndarray
    b_in: np.ndarray
    W_out: np.ndarray
    b_out: np.ndarray
    noise: NoiseModel
    id: str = "mlp"
    meta: dict = field(default_factory=dict)
    kind = "mlp"

    def __post_init__(self):
        for name in ("W_in", "b_in", "W_out", "b_out"):
            object.__setattr__(self, name, _frozen(getattr(self, name)))

    @property
    def hidden(self) -> int:
        return self.W_in.shape[0]

    def predict(self, X):
        h = np.tanh(np.asarray(X, dtype=float) @ self.W_in.T + self.b_in)
        return h @ self.W_out.T + self.b_out

    def _params(self):
        return {"W_in": self.W_in, "b_in": self.b_in, "W_out": self.W_out, "b_out": self.b_out}


class EncoderPool(Sequence):
    """Ordered, non-empty collection of encoders sharing one channel count."""

    def __init__(self, models: Iterable[Encoder]):
        self.models = list(models)
        if self.models:
            c = {m.n_channels for m in self.models}
            if len(c) != 1:
                raise ShapeMismatch(f"pool members disagree on channel count: {sorted(c)}")

    def __len__(self) -> int:
        return len(self.models)

    def __getitem__(self, i):
        return self.models[i]

    def __iter__(self) -> Iterator[Encoder]:
        return iter(self.models)

    @property
    def n_channels(self) -> int:
        return self.models[0].n_channels

    @property
    def ids(self) -> list[str]:
        return [m.id for m in self.models]


# ---------------------------------------------------------------- fitting


def _check_xy(X, Y, min_n: int) -> tuple[np.ndarray, np.ndarray]:
    X = np.asarray(X, dtype=float)
    Y = np.asarray(Y, dtype=float)
    if X.ndim == 1:
        X = X.reshape(-1, 2)
    if Y.ndim == 1:
        Y = Y.reshape(len(X), -1)
    if X.ndim != 2 or X.shape[1] != 2:
        raise ShapeMismatch(f"X must have shape (T, 2), got {X.shape}")
    if Y.ndim != 2 or len(Y) != len(X):
        raise ShapeMismatch(f"X and Y must have the same length, got {len(X)} and {len(Y)}")
    if len(X) < min_n:
        raise TooFewSamples(f"need >= {min_n} samples, got {len(X)}")
    return X, Y


def _ridge(F: np.ndarray, Y: np.ndarray, lam: float) -> np.ndarray:
    """Solve min ||Y - F B^T||^2 + lam ||B||^2 for B of shape (C, p)."""
    p = F.shape[1]
    if lam == 0.0 and np.linalg.matrix_rank(F) < p:
        warnings.warn(f"rank-deficient regression; ridge fallback lambda={RIDGE_FALLBACK}", SingularFit, stacklevel=3)
        lam = RIDGE_FALLBACK
    if lam == 0.0:
        coef, *_ = np.linalg.lstsq(F, Y, rcond=None)
        return coef.T
    G = F.T @ F + lam * np.eye(p)
    return np.linalg.solve(G, F.T @ Y).T


def _center(F, Y, fit_intercept):
    if not fit_intercept:
        return F, Y, None, None
    fm, ym = F.mean(axis=0), Y.mean(axis=0)
    return F - fm, Y - ym, fm, ym


def fit_linear(X, Y, fit_intercept: bool = False, id: str = "linear") -> LinearEncoder:
    """Least-squares ``Y ~ W X``; noise variance from the residuals.

    Rank-deficient ``X`` (e.g. all zeros) triggers a tiny ridge penalty so the
    fit still returns finite weights.
    """
    X, Y = _check_xy(X, Y, 3)
    F, Yc, fm, ym = _center(X, Y, fit_intercept)
    W = _ridge(F, Yc, 0.0)
    intercept = None if fm is None else ym - W @ fm
    model = LinearEncoder(W=W, noise=NoiseModel(np.ones(Y.shape[1])), intercept=intercept, id=id)
    noise = NoiseModel.from_residuals(Y - model.predict(X))
    return LinearEncoder(W=W, noise=noise, intercept=intercept, id=id, meta={"n_samples": len(X)})


def polynomial_features(X: np.ndarray, cross_term: bool = False) -> np.ndarray:
    cols = [X * X, X]
    if cross_term:
        cols.append(X[:, :1] * X[:, 1:2])
    return np.hstack(cols)


def fit_polynomial(
    X,
    Y,
    ridge_lambda: float = 1.0,
    cross_term: bool = False,
    fit_intercept: bool = False,
    id: str = "polynomial",
) -> PolynomialEncoder:
    """Ridge regression on features ``(vx^2, vy^2, vx, vy[, vx*vy])``."""
    if ridge_lambda < 0:
        raise ValueError("ridge_lambda must be >= 0")
    X, Y = _check_xy(X, Y, 3)
    F = polynomial_features(X, cross_term)
    Fc, Yc, fm, ym = _center(F, Y, fit_intercept)
    B = _ridge(Fc, Yc, float(ridge_lambda))
    intercept = None if fm is None else ym - B @ fm
    W2, W1 = B[:, :2], B[:, 2:4]
    W_cross = B[:, 4:5] if cross_term else None
    kwargs = dict(ridge_lambda=float(ridge_lambda), W_cross=W_cross, intercept=intercept, id=id)
    model = PolynomialEncoder(W2, W1, NoiseModel(np.ones(Y.shape[1])), **kwargs)
    noise = NoiseModel.from_residuals(Y - model.predict(X))
    return PolynomialEncoder(W2, W1, noise, meta={"ridge_lambda": float(ridge_lambda), "n_samples": len(X)}, **kwargs)


# ---------------------------------------------------------------- MLP


def init_mlp_params(n_in: int, hidden: int, n_out: int, rng: np.random.Generator) -> dict[str, np.ndarray]:
    """Glorot-uniform weights, zero biases."""
    lim_in = math.sqrt(6.0 / (n_in + hidden))
    lim_out = math.sqrt(6.0 / (hidden + n_out))
    return {
        "W_in": rng.uniform(-lim_in, lim_in, (hidden, n_in)),
        "b_in": np.zeros(hidden),
        "W_out": rng.uniform(-lim_out, lim_out, (n_out, hidden)),
        "b_out": np.zeros(n_out),
    }


def mlp_forward(params: dict, X: np.ndarray) -> np.ndarray:
    h = np.tanh(X @ params["W_in"].T + params["b_in"])
    return h @ params["W_out"].T + params["b_out"]


def mlp_loss_and_grad(params: dict, X: np.ndarray, Y: np.ndarray) -> tuple[float, dict]:
    """Mean squared error over samples and channels, and its gradient."""
    h = np.tanh(X @ params["W_in"].T + params["b_in"])
    pred = h @ params["W_out"].T + params["b_out"]
    diff = pred - Y
    loss = float(np.mean(diff**2))
    d_pred = 2.0 * diff / diff.size
    d_h = (d_pred @ params["W_out"]) * (1.0 - h * h)
    grads = {
        "W_out": d_pred.T @ h,
        "b_out": d_pred.sum(axis=0),
        "W_in": d_h.T @ X,
        "b_in": d_h.sum(axis=0),
    }
    return loss, grads


def fit_mlp(
    X,
    Y,
    hidden: int = 30,
    lr: float = 0.01,
    weight_decay: float = 1e-4,
    max_epochs: int = 500,
    patience: int = 10,
    seed: int = 0,
    batch_size: int = 64,
    val_fraction: float = 0.2,
    id: str | None = None,
) -> MlpEncoder:
    """Train a one-hidden-layer tanh network with Adam and decoupled weight decay.

    The last ``val_fraction`` of the samples (chronological) is held out for
    early stopping: training stops once validation MSE has not improved for
    ``patience`` epochs and the best weights are restored. The residual noise
    model is computed on the training portion at the restored weights.
    """
    X, Y = _check_xy(X, Y, 10)
    rng = np.random.default_rng(seed)
    n_val = max(1, int(round(val_fraction * len(X))))
    n_tr = len(X) - n_val
    Xtr, Ytr, Xva, Yva = X[:n_tr], Y[:n_tr], X[n_tr:], Y[n_tr:]

    params = init_mlp_params(2, hidden, Y.shape[1], rng)
    m = {k: np.zeros_like(v) for k, v in params.items()}
    v = {k: np.zeros_like(p) for k, p in params.items()}
    beta1, beta2, eps = 0.9, 0.999, 1e-8

    best = {k: p.copy() for k, p in params.items()}
    best_val = float(np.mean((mlp_forward(params, Xva) - Yva) ** 2))
    stale, epochs_run, t = 0, 0, 0
    for epoch in range(max_epochs):
        order = rng.permutation(n_tr)
        for start in range(0, n_tr, batch_size):
            idx = order[start : start + batch_size]
            loss, grads = mlp_loss_and_grad(params, Xtr[idx], Ytr[idx])
            if not math.isfinite(loss):
                raise NonFiniteLoss(f"non-finite training loss at epoch {epoch}, batch starting {start}")
            t += 1
            c1, c2 = 1.0 - beta1**t, 1.0 - beta2**t
            for k, p in params.items():
                g = grads[k]
                m[k] = beta1 * m[k] + (1.0 - beta1) * g
                v[k] = beta2 * v[k] + (1.0 - beta2) * g * g
                p -= lr * ((m[k] / c1) / (np.sqrt(v[k] / c2) + eps) + weight_decay * p)
        epochs_run = epoch + 1
        val = float(np.mean((mlp_forward(params, Xva) - Yva) ** 2))
        if not math.isfinite(val):
            raise NonFiniteLoss(f"non-finite validation loss at epoch {epoch}")
        if val < best_val:
            best_val, stale = val, 0
            best = {k: p.copy() for k, p in params.items()}
        else:
            stale += 1
            if stale >= patience:
                break

    noise = NoiseModel.from_residuals(Ytr - mlp_forward(best, Xtr))
    meta = {
        "seed": int(seed),
        "hidden": int(hidden),
        "epochs_run": int(epochs_run),
        "best_val_mse": best_val,
        "lr": lr,
        "weight_decay": weight_decay,
    }
    return MlpEncoder(noise=noise, id=id or f"mlp{hidden}", meta=meta, **best)


# ---------------------------------------------------------------- evaluation


def encode(model: Encoder, x) -> np.ndarray:
    """Noise-free mean firing rates ``m_k(x)`` for a single state."""
    return model.predict(np.asarray(x, dtype=float).reshape(1, 2))[0]


def log_likelihood(model: Encoder, x, y) -> float:
    y = np.asarray(y, dtype=float).reshape(-1)
    if y.shape[0] != model.n_channels:
        raise ShapeMismatch(f"observation has {y.shape[0]} channels, model expects {model.n_channels}")
    return float(model.log_likelihood_batch(np.asarray(x, dtype=float).reshape(1, 2), y)[0])


def fit_standard_pool(
    X,
    Y,
    hidden_sizes: Sequence[int] = (30, 50),
    ridge_lambda: float = 1.0,
    fit_intercept: bool = False,
    seed: int = 0,
    **mlp_kwargs,
) -> EncoderPool:
    """Linear, polynomial and one MLP per entry of ``hidden_sizes``."""
    models: list[Encoder] = [
        fit_linear(X, Y, fit_intercept=fit_intercept),
        fit_polynomial(X, Y, ridge_lambda=ridge_lambda, fit_intercept=fit_intercept),
    ]
    for j, h in enumerate(hidden_sizes):
        models.append(fit_mlp(X, Y, hidden=h, seed=seed + j, id=f"nn{j + 1}", **mlp_kwargs))
    return EncoderPool(models)


# ---------------------------------------------------------------- serialisation

_KINDS = {"linear": LinearEncoder, "polynomial": PolynomialEncoder, "mlp": MlpEncoder}


def encoder_from_dict(d: dict) -> Encoder:
    kind = d["kind"]
    if kind not in _KINDS:
        raise ValueError(f"unknown encoder kind {kind!r}")
    params = {k: _unpack(v) for k, v in d["params"].items()}
    noise = NoiseModel(_unpack(d["noise"]))
    extra = {}
    if kind == "polynomial":
        extra["ridge_lambda"] = float(d.get("meta", {}).get("ridge_lambda", 0.0))
    return _KINDS[kind](noise=noise, id=d["id"], meta=dict(d.get("meta", {})), **params, **extra)


def save_encoder(model: Encoder, path) -> None:
    # json writes floats with repr(), the shortest string that round-trips exactly
    Path(path).write_text(json.dumps(model.to_dict(), indent=1))


def load_encoder(path) -> Encoder:
    return encoder_from_dict(json.loads(Path(path).read_text()))
