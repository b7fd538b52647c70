"""Synthetic brain: ground-truth encoders, encoder variability and smoothing."""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Sequence, Union

import numpy as np

from dyens.encoders import Encoder, EncoderPool, LinearEncoder, MlpEncoder, NoiseModel, PolynomialEncoder

TRUTH_NAMES = ("linear", "polynomial", "nn1", "nn2")
DEFAULT_SMOOTHING_BINS = 22  # 450 ms window at 20 ms bins

ScheduleEntry = tuple[int, Union[int, Sequence[float]]]


def make_truth_encoders(
    n_channels: int,
    rng: np.random.Generator,
    nonlinearity: float = 1.0,
    noise_var: Union[float, Sequence[float]] = 1.0,
    baseline: tuple[float, float] = (4.0, 6.0),
    hidden_sizes: Sequence[int] = (30, 50),
) -> list[Encoder]:
    """Ground-truth encoders ``[linear, polynomial, nn1, nn2]``.

    All four share one cosine-tuned linear core (preferred direction and gain
    per channel) and a positive baseline rate, so they agree near zero
    velocity and diverge as speed grows. ``nonlinearity`` scales how far the
    non-linear members depart from the core. ``noise_var`` is either shared
    or given per encoder in output order.
    """
    C = n_channels
    theta = rng.uniform(0.0, 2.0 * math.pi, C)
    gain = rng.uniform(0.6, 1.4, C)
    W0 = gain[:, None] * np.column_stack([np.cos(theta), np.sin(theta)])
    base = rng.uniform(*baseline, C)
    q = 2 + len(hidden_sizes)
    nv = np.atleast_1d(np.asarray(noise_var, dtype=float))
    if nv.size == 1:
        nv = np.full(q, nv[0])
    elif nv.shape != (q,):
        raise ValueError(f"noise_var needs 1 or {q} entries, got {nv.size}")
    noises = [NoiseModel(np.full(C, v)) for v in nv]

    linear = LinearEncoder(W=W0, noise=noises[0], intercept=base, id="linear")

    W2 = nonlinearity * rng.normal(0.0, 1.0, (C, 2))
    poly = PolynomialEncoder(W2=W2, W1=W0, noise=noises[1], intercept=base, id="polynomial")

    nets = []
    for j, H in enumerate(hidden_sizes):
        U = rng.normal(0.0, 1.0 + nonlinearity, (H, 2))
        c = rng.normal(0.0, 0.5, H)
        M = (1.0 - np.tanh(c) ** 2)[:, None] * U
        # linearisation at the origin reproduces the shared core, plus a random tilt
        V = W0 @ np.linalg.pinv(M) + nonlinearity * rng.normal(0.0, 1.0, (C, H)) / math.sqrt(H)
        b_out = base - V @ np.tanh(c)
        nets.append(MlpEncoder(W_in=U, b_in=c, W_out=V, b_out=b_out, noise=noises[2 + j], id=f"nn{j + 1}"))
    return [linear, poly, *nets]


@dataclass
class SpeedBands:
    """Blend truth encoders by intent speed: low / mid / high bands.

    ``thresholds`` are fractions of ``v_max``; ``encoders`` index the truth
    list for each band; ``width`` softens the band edges (0 = hard switch).
    """

    thresholds: tuple[float, float] = (0.3, 0.6)
    encoders: tuple[int, int, int] = (0, 2, 1)
    width: float = 0.03
    v_max: float = 1.0

    def weights(self, speed: float, q: int) -> np.ndarray:
        t1, t2 = (t * self.v_max for t in self.thresholds)
        if self.width > 0:
            s1 = 0.5 * (1.0 + math.tanh((speed - t1) / (2.0 * self.width)))
            s2 = 0.5 * (1.0 + math.tanh((speed - t2) / (2.0 * self.width)))
        else:
            s1, s2 = float(speed >= t1), float(speed >= t2)
        w = np.zeros(q)
        for idx, val in zip(self.encoders, (1.0 - s1, s1 - s2, s2)):
            w[idx] += val
        return w


@dataclass
class SyntheticBrain:
    """Ground-truth encoders plus a variability process.

    Variability comes from ``schedule``, a list of
    ``(start_bin, encoder_index | blend_weights)`` whose last entry extends
    forever. When ``speed_bands`` is set it comes from the intent speed instead.
    Raw rates are clipped at zero, then smoothed with a single-pole
    exponential filter ``s[t] = beta s[t-1] + (1 - beta) y[t]``,
    ``beta = exp(-1 / smoothing_window_bins)``; a window of 0 disables it.
    """

    truth_encoders: list[Encoder]
    schedule: list[ScheduleEntry] = field(default_factory=lambda: [(0, 0)])
    obs_noise_scale: float = 1.0
    smoothing_window_bins: int = DEFAULT_SMOOTHING_BINS
    intent_gain: float = 1.0
    speed_bands: SpeedBands | None = None
    _smoothed: np.ndarray | None = field(default=None, init=False, repr=False)

    def __post_init__(self):
        starts = [int(s) for s, _ in self.schedule]
        if not starts:
            raise ValueError("schedule must have at least one entry")
        if any(b <= a for a, b in zip(starts, starts[1:])):
            raise ValueError("schedule start bins must be strictly increasing")
        q = len(self.truth_encoders)
        norm = []
        for start, spec in self.schedule:
            if np.ndim(spec) == 0:
                w = np.zeros(q)
                w[int(spec)] = 1.0
            else:
                w = np.asarray(spec, dtype=float)
                if w.shape != (q,) or np.any(w < 0) or w.sum() <= 0:
                    raise ValueError("blend weights must be non-negative with one entry per truth encoder")
                w = w / w.sum()
            norm.append((int(start), w))
        self._starts = np.array(starts)
        self._weights = [w for _, w in norm]

    @property
    def n_channels(self) -> int:
        return self.truth_encoders[0].n_channels

    @property
    def beta(self) -> float:
        return math.exp(-1.0 / self.smoothing_window_bins) if self.smoothing_window_bins > 0 else 0.0

    def reset(self) -> None:
        self._smoothed = None

    def blend_weights(self, t_bin: int, intent) -> np.ndarray:
        if self.speed_bands is not None:
            return self.speed_bands.weights(float(np.hypot(*intent)), len(self.truth_encoders))
        k = max(int(np.searchsorted(self._starts, t_bin, side="right")) - 1, 0)
        return self._weights[k]

    def mean_rates(self, x: np.ndarray, w: np.ndarray) -> np.ndarray:
        x = x.reshape(1, 2)
        out = np.zeros(self.n_channels)
        for wk, enc in zip(w, self.truth_encoders):
            if wk > 0:
                out += wk * enc.predict(x)[0]
        return out

    def observe(self, intent, t_bin: int, rng: np.random.Generator) -> np.ndarray:
        if t_bin < 0:
            raise ValueError("t_bin must be >= 0")
        intent = np.asarray(intent, dtype=float).reshape(2)
        w = self.blend_weights(t_bin, intent)
        mean = self.mean_rates(intent * self.intent_gain, w)
        var = sum(wk * enc.noise.sigma2 for wk, enc in zip(w, self.truth_encoders) if wk > 0)
        raw = mean + self.obs_noise_scale * np.sqrt(var) * rng.standard_normal(self.n_channels)
        raw = np.maximum(raw, 0.0)
        if self._smoothed is None or self.beta == 0.0:
            self._smoothed = raw
        else:
            self._smoothed = self.beta * self._smoothed + (1.0 - self.beta) * raw
        return self._smoothed.copy()

    def effective_pool(self) -> EncoderPool:
        """Truth encoders with noise variances scaled to what ``observe`` adds.

        Exact as a measurement model only when smoothing is disabled.
        """
        s2 = self.obs_noise_scale**2
        return EncoderPool(replace(enc, noise=NoiseModel(enc.noise.sigma2 * s2)) for enc in self.truth_encoders)


def brain_observe(brain: SyntheticBrain, intent, t_bin: int, rng: np.random.Generator) -> np.ndarray:
    return brain.observe(intent, t_bin, rng)


def random_walk_intents(
    n_bins: int, rng: np.random.Generator, coeff: float = 0.98, stationary_std: float = 0.5
) -> np.ndarray:
    """Smooth AR(1) velocity process ``x_t = coeff x_{t-1} + e_t``."""
    if n_bins == 0:
        return np.zeros((0, 2))
    step_std = stationary_std * math.sqrt(1.0 - coeff**2)
    x = np.empty((n_bins, 2))
    x[0] = rng.normal(0.0, stationary_std, 2)
    e = rng.normal(0.0, step_std, (n_bins, 2))
    for t in range(1, n_bins):
        x[t] = coeff * x[t - 1] + e[t]
    return x


def generate_switching_dataset(
    brain: SyntheticBrain, n_bins: int, intent_source, rng: np.random.Generator
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Open-loop dataset ``(states, observations, truth_schedule)``.

    ``intent_source`` is either a ``(>= n_bins, 2)`` array of recorded
    intents or a callable ``(n_bins, rng) -> intents``. ``truth_schedule[t]``
    is the index of the dominant generating encoder at bin t.
    """
    if callable(intent_source):
        states = np.asarray(intent_source(n_bins, rng), dtype=float)
    else:
        states = np.asarray(intent_source, dtype=float)[:n_bins]
    if len(states) < n_bins:
        raise ValueError(f"intent source provides {len(states)} bins, {n_bins} requested")
    brain.reset()
    obs = np.empty((n_bins, brain.n_channels))
    truth = np.empty(n_bins, dtype=int)
    for t in range(n_bins):
        truth[t] = int(np.argmax(brain.blend_weights(t, states[t])))
        obs[t] = brain.observe(states[t], t, rng)
    return states, obs, truth
