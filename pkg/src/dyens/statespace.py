"""Kinematic state, neural observation conventions and the linear-Gaussian
state-transition model shared by every decoder.

A kinematic state is a float array of shape ``(2,)`` holding ``(vx, vy)`` in
screen units per second. A neural observation is a float array of shape
``(C,)`` of smoothed per-channel firing rates for one 20 ms bin. Sequences of
either are stacked row-wise into ``(T, 2)`` / ``(T, C)`` arrays.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Sequence, Union

import numpy as np

from dyens.errors import SingularFit, TooFewSamples

VARIANCE_FLOOR = 1e-8
FALLBACK_GAIN = 0.99

StateSequence = Union[np.ndarray, Sequence[np.ndarray]]


@dataclass(frozen=True)
class TransitionModel:
    """x_t = A x_{t-1} + b + u, with u ~ N(0, diag(sigma_u))."""

    A: np.ndarray
    b: np.ndarray
    sigma_u: np.ndarray

    def __post_init__(self):
        A = np.asarray(self.A, dtype=float).reshape(2, 2)
        b = np.asarray(self.b, dtype=float).reshape(2)
        sigma_u = np.asarray(self.sigma_u, dtype=float).reshape(2)
        if np.any(sigma_u <= 0):
            raise ValueError("sigma_u components must be > 0")
        for arr in (A, b, sigma_u):
            arr.setflags(write=False)
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "b", b)
        object.__setattr__(self, "sigma_u", sigma_u)

    def propagate(self, particles: np.ndarray, noise: np.ndarray | None = None) -> np.ndarray:
        """Vectorised transition of an ``(N, 2)`` particle array."""
        out = particles @ self.A.T + self.b
        if noise is not None:
            out = out + noise
        return out

    def sample_noise(self, rng: np.random.Generator, n: int) -> np.ndarray:
        return rng.standard_normal((n, 2)) * np.sqrt(self.sigma_u)

    def to_dict(self) -> dict:
        return {"A": self.A.tolist(), "b": self.b.tolist(), "sigma_u": self.sigma_u.tolist()}

    @classmethod
    def from_dict(cls, d: dict) -> "TransitionModel":
        return cls(np.array(d["A"]), np.array(d["b"]), np.array(d["sigma_u"]))


def _segments(states: StateSequence) -> list[np.ndarray]:
    if isinstance(states, np.ndarray) and states.ndim == 2:
        return [states]
    segs = [np.asarray(s, dtype=float).reshape(-1, 2) for s in states]
    # a flat list of 2-vectors is a single trajectory, not many segments
    if segs and all(len(s) == 1 for s in segs):
        return [np.vstack(segs)]
    return segs


def fit_transition(states: StateSequence) -> TransitionModel:
    """Least-squares fit of ``x_t ~ A x_{t-1} + b``.

    ``states`` is either one ``(T, 2)`` trajectory or a list of trajectories;
    consecutive pairs are only formed inside a trajectory, so trial boundaries
    never produce spurious transitions.

    When the regressors ``[x_{t-1}, 1]`` are rank deficient the fit falls back
    to ``A = 0.99 I, b = 0`` and a :class:`SingularFit` warning is emitted.
    Residual variances are floored at 1e-8.
    """
    segs = _segments(states)
    n_states = sum(len(s) for s in segs)
    if n_states < 3:
        raise TooFewSamples(f"fit_transition needs >= 3 states, got {n_states}")
    prev = np.vstack([s[:-1] for s in segs if len(s) > 1])
    nxt = np.vstack([s[1:] for s in segs if len(s) > 1])
    if not (np.all(np.isfinite(prev)) and np.all(np.isfinite(nxt))):
        raise ValueError("states must be finite")

    design = np.hstack([prev, np.ones((len(prev), 1))])
    if len(prev) < 3 or np.linalg.matrix_rank(design) < 3:
        warnings.warn("rank-deficient transition fit; using A = 0.99 I, b = 0", SingularFit, stacklevel=2)
        A = FALLBACK_GAIN * np.eye(2)
        b = np.zeros(2)
    else:
        coef, *_ = np.linalg.lstsq(design, nxt, rcond=None)
        A = coef[:2].T
        b = coef[2]
    resid = nxt - prev @ A.T - b
    sigma_u = np.maximum(np.mean(resid**2, axis=0), VARIANCE_FLOOR)
    return TransitionModel(A, b, sigma_u)


def spectral_radius(A) -> float:
    return float(np.max(np.abs(np.linalg.eigvals(np.asarray(A, dtype=float)))))


def stabilize_transition(model: TransitionModel, max_radius: float = 0.995) -> TransitionModel:
    """Scale ``A`` down so its spectral radius is at most ``max_radius``.

    Reach data recorded from rest is dominated by acceleration, which makes a
    plain least-squares ``A`` slightly explosive; long closed-loop runs then
    drift wherever the likelihood is flat. ``b`` and ``sigma_u`` are kept.
    """
    rho = spectral_radius(model.A)
    if rho <= max_radius:
        return model
    return TransitionModel(np.asarray(model.A) * (max_radius / rho), model.b, model.sigma_u)


def predict_state(model: TransitionModel, x_prev: np.ndarray, noise_sample: np.ndarray | None = None) -> np.ndarray:
    x_prev = np.asarray(x_prev, dtype=float).reshape(2)
    out = model.A @ x_prev + model.b
    if noise_sample is not None:
        out = out + np.asarray(noise_sample, dtype=float).reshape(2)
    return out
