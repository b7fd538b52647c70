"""Dynamic-ensemble particle filter.

One particle cloud is shared by all encoders in the pool. Each encoder keeps
its own row of importance weights (sequential importance sampling under that
encoder's likelihood); the rows are mixed with the model posterior into a
single combined weight vector, which drives the point estimate and the
resampling decision.

Per step:

1. propagate particles through the transition model;
2. per-model marginal likelihood ``log sum_i w_{t-1}^i p_k(y | x^i)``;
3. model posterior = Bayes update of the forgetting prior;
4. per-model SIS row update;
5. combined weights = posterior-weighted sum of rows;
6. point estimate = weighted particle mean;
7. systematic resampling when ESS drops below a fraction of N.

All likelihood arithmetic stays in the log domain.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Callable, Optional, TextIO

import numpy as np

from dyens.encoders import EncoderPool
from dyens.errors import EmptyPool, NonFiniteObservation, ShapeMismatch
from dyens.statespace import TransitionModel


def logsumexp(a, axis=None, keepdims=False):
    """Max-shifted log-sum-exp; all ``-inf`` inputs give ``-inf``."""
    a = np.asarray(a, dtype=float)
    m = np.max(a, axis=axis, keepdims=True)
    m = np.where(np.isfinite(m), m, 0.0)
    with np.errstate(divide="ignore"):
        out = np.log(np.sum(np.exp(a - m), axis=axis, keepdims=True)) + m
    if not keepdims:
        out = np.squeeze(out, axis=axis) if axis is not None else out.reshape(())[()]
    return out


@dataclass(frozen=True)
class FilterConfig:
    n_particles: int = 500
    forgetting_alpha: float = 0.98
    weight_floor: float = 1e-6
    ess_threshold_fraction: float = 0.5
    seed: int = 0

    def __post_init__(self):
        if self.n_particles < 2:
            raise ValueError("n_particles must be >= 2")
        if not 0.0 < self.forgetting_alpha <= 1.0:
            raise ValueError("forgetting_alpha must be in (0, 1]")
        if self.weight_floor < 0:
            raise ValueError("weight_floor must be >= 0")


@dataclass
class EnsembleFilterState:
    particles: np.ndarray  # (N, 2)
    per_model_weights: np.ndarray  # (q, N), rows sum to 1
    combined_weights: np.ndarray  # (N,)
    model_posterior: np.ndarray  # (q,)
    t: int
    rng: np.random.Generator = field(repr=False)
    ess: float = 0.0
    resampled: bool = False

    @property
    def n_particles(self) -> int:
        return self.particles.shape[0]


def effective_sample_size(weights: np.ndarray) -> float:
    return float(1.0 / np.sum(np.square(weights)))


def apply_floor(p: np.ndarray, floor: float) -> np.ndarray:
    """Raise entries below ``floor`` to it and rescale the rest so the sum is 1."""
    p = np.asarray(p, dtype=float)
    if floor <= 0.0:
        return p / p.sum()
    q = p.shape[0]
    if floor * q >= 1.0:
        return np.full(q, 1.0 / q)
    p = p / p.sum()
    low = p < floor
    while np.any(low):
        out = np.empty_like(p)
        out[low] = floor
        rest = p[~low]
        out[~low] = rest * ((1.0 - floor * low.sum()) / rest.sum())
        p = out
        new_low = low | (p < floor)
        if np.array_equal(new_low, low):
            break
        low = new_low
    return p


def init_filter(
    pool: EncoderPool,
    trans: TransitionModel,
    cfg: FilterConfig,
    x0=(0.0, 0.0),
    rng: np.random.Generator | None = None,
) -> EnsembleFilterState:
    """Particles ~ N(x0, diag(sigma_u)); uniform particle and model weights."""
    if len(pool) == 0:
        raise EmptyPool("the encoder pool is empty")
    rng = np.random.default_rng(cfg.seed) if rng is None else rng
    n, q = cfg.n_particles, len(pool)
    x0 = np.asarray(x0, dtype=float).reshape(2)
    particles = x0 + trans.sample_noise(rng, n)
    return EnsembleFilterState(
        particles=particles,
        per_model_weights=np.full((q, n), 1.0 / n),
        combined_weights=np.full(n, 1.0 / n),
        model_posterior=np.full(q, 1.0 / q),
        t=0,
        rng=rng,
        ess=float(n),
    )


def forgetting_prior(posterior_prev, alpha: float, weight_floor: float = 1e-6) -> np.ndarray:
    """Flatten the previous model posterior: ``p_k**alpha / sum_j p_j**alpha``."""
    with np.errstate(divide="ignore"):
        logp = alpha * np.log(np.asarray(posterior_prev, dtype=float))
    out = np.exp(logp - logsumexp(logp))
    return apply_floor(out, weight_floor)


def model_posterior_update(prior, log_marg, weight_floor: float = 1e-6) -> np.ndarray:
    """Bayes rule over models, evaluated in the log domain."""
    with np.errstate(divide="ignore"):
        logp = np.log(np.asarray(prior, dtype=float)) + np.asarray(log_marg, dtype=float)
    norm = logsumexp(logp)
    if not np.isfinite(norm):
        # no model explains the observation; keep the prior
        return apply_floor(np.asarray(prior, dtype=float), weight_floor)
    return apply_floor(np.exp(logp - norm), weight_floor)


def loglik_matrix(pool: EncoderPool, particles: np.ndarray, y: np.ndarray) -> np.ndarray:
    """``(q, N)`` array of ``log p_k(y | x^i)``."""
    return np.vstack([m.log_likelihood_batch(particles, y) for m in pool])


def marginal_likelihood(pool: EncoderPool, state: EnsembleFilterState, predicted_particles, y) -> np.ndarray:
    """Per-model log marginal likelihood estimated from the propagated cloud.

    Uses the combined weights of the previous step.
    """
    y = np.asarray(y, dtype=float).reshape(-1)
    ll = loglik_matrix(pool, np.asarray(predicted_particles, dtype=float), y)
    return _log_marginals(ll, state.combined_weights)


def _log_marginals(ll: np.ndarray, weights: np.ndarray) -> np.ndarray:
    with np.errstate(divide="ignore"):
        logw = np.log(weights)
    return logsumexp(ll + logw[None, :], axis=1)


def systematic_resample(weights: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    n = weights.shape[0]
    positions = (rng.random() + np.arange(n)) / n
    cum = np.cumsum(weights)
    cum[-1] = 1.0
    return np.searchsorted(cum, positions, side="right").clip(max=n - 1)


def step(
    state: EnsembleFilterState,
    pool: EncoderPool,
    trans: TransitionModel,
    cfg: FilterConfig,
    y,
    noise: np.ndarray | None = None,
    update_posterior: bool = True,
) -> tuple[EnsembleFilterState, np.ndarray, np.ndarray]:
    """Advance the filter by one bin.

    Args:
        state: filter state at t-1; its generator is advanced in place.
        y: observation of length C.
        noise: optional ``(N, 2)`` transition noise; drawn from the state's
            generator when omitted.
        update_posterior: False freezes the model posterior (fixed-weight
            model averaging).

    Returns:
        ``(new_state, x_hat, model_posterior)``.
    """
    y = np.asarray(y, dtype=float).reshape(-1)
    if y.shape[0] != pool.n_channels:
        raise ShapeMismatch(f"observation has {y.shape[0]} channels, pool expects {pool.n_channels}")
    if not np.all(np.isfinite(y)):
        raise NonFiniteObservation("observation contains NaN or Inf")
    n = state.n_particles

    if noise is None:
        noise = trans.sample_noise(state.rng, n)
    particles = trans.propagate(state.particles, noise)

    ll = loglik_matrix(pool, particles, y)

    if update_posterior:
        log_marg = _log_marginals(ll, state.combined_weights)
        prior = forgetting_prior(state.model_posterior, cfg.forgetting_alpha, cfg.weight_floor)
        posterior = model_posterior_update(prior, log_marg, cfg.weight_floor)
    else:
        posterior = state.model_posterior.copy()

    with np.errstate(divide="ignore"):
        logw = np.log(state.per_model_weights) + ll
    row_norm = logsumexp(logw, axis=1, keepdims=True)
    dead = ~np.isfinite(row_norm[:, 0])
    rows = np.exp(logw - np.where(dead[:, None], 0.0, row_norm))
    if np.any(dead):
        rows[dead] = state.per_model_weights[dead]

    combined = posterior @ rows
    combined = combined / combined.sum()
    x_hat = combined @ particles

    ess = effective_sample_size(combined)
    resampled = ess < cfg.ess_threshold_fraction * n
    if resampled:
        idx = systematic_resample(combined, state.rng)
        particles = particles[idx]
        rows = np.full_like(rows, 1.0 / n)
        combined = np.full(n, 1.0 / n)

    new_state = EnsembleFilterState(
        particles=particles,
        per_model_weights=rows,
        combined_weights=combined,
        model_posterior=posterior,
        t=state.t + 1,
        rng=state.rng,
        ess=ess,
        resampled=bool(resampled),
    )
    return new_state, x_hat, posterior


def dominant_model(model_posterior) -> int:
    """Index of the largest posterior weight; ties go to the lowest index."""
    return int(np.argmax(np.asarray(model_posterior)))


class TelemetryWriter:
    """Appends one JSON object per filter step to a text stream."""

    def __init__(self, stream: TextIO):
        self.stream = stream

    def __call__(self, state: EnsembleFilterState, x_hat: np.ndarray) -> None:
        rec = {
            "t": state.t,
            "x_hat": [float(v) for v in x_hat],
            "model_posterior": [float(v) for v in state.model_posterior],
            "ess": state.ess,
            "resampled": state.resampled,
        }
        self.stream.write(json.dumps(rec) + "\n")


class DyEnsembleDecoder:
    """Stateful wrapper around :func:`step` for online use.

    ``frozen_posterior`` pins the model weights (fixed-weight averaging);
    a single-model pool gives a plain bootstrap particle filter.
    """

    def __init__(
        self,
        pool: EncoderPool,
        trans: TransitionModel,
        cfg: FilterConfig = FilterConfig(),
        x0=(0.0, 0.0),
        frozen_posterior=None,
        rng: np.random.Generator | None = None,
        telemetry: Optional[Callable[[EnsembleFilterState, np.ndarray], None]] = None,
    ):
        self.pool = pool
        self.trans = trans
        self.cfg = cfg
        self.frozen_posterior = None if frozen_posterior is None else np.asarray(frozen_posterior, dtype=float)
        self.rng = np.random.default_rng(cfg.seed) if rng is None else rng
        self.telemetry = telemetry
        self.reset(x0)

    def reset(self, x0=(0.0, 0.0)) -> None:
        self.state = init_filter(self.pool, self.trans, self.cfg, x0, rng=self.rng)
        if self.frozen_posterior is not None:
            if self.frozen_posterior.shape != (len(self.pool),):
                raise ShapeMismatch("frozen_posterior must have one entry per pool member")
            self.state.model_posterior = self.frozen_posterior / self.frozen_posterior.sum()

    @property
    def model_posterior(self) -> np.ndarray:
        return self.state.model_posterior

    def step(self, y) -> np.ndarray:
        self.state, x_hat, _ = step(
            self.state, self.pool, self.trans, self.cfg, y, update_posterior=self.frozen_posterior is None
        )
        if self.telemetry is not None:
            self.telemetry(self.state, x_hat)
        return x_hat

    def run(self, observations) -> tuple[np.ndarray, np.ndarray]:
        """Decode a ``(T, C)`` sequence; returns estimates ``(T, 2)`` and posteriors ``(T, q)``."""
        obs = np.asarray(observations, dtype=float)
        est = np.empty((len(obs), 2))
        post = np.empty((len(obs), len(self.pool)))
        for t, y in enumerate(obs):
            est[t] = self.step(y)
            post[t] = self.state.model_posterior
        return est, post
