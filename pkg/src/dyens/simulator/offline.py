"""Offline decoding on an encoder-switching synthetic dataset."""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from dyens.baselines import KalmanDecoder, fit_kalman
from dyens.dyensemble import DyEnsembleDecoder, FilterConfig
from dyens.encoders import EncoderPool, fit_standard_pool
from dyens.errors import ConfigError
from dyens.evaluation import Normalizer, correlation_coefficient, dominant_model_accuracy, mse
from dyens.seeding import child_int, child_rng
from dyens.simulator.brain import SyntheticBrain, generate_switching_dataset, make_truth_encoders, random_walk_intents
from dyens.statespace import fit_transition

SINGLE_NAMES = ("Linear", "Polynomial", "NN-1", "NN-2")


@dataclass(frozen=True)
class OfflineConfig:
    """Switching-dataset experiment.

    The truth encoder cycles through ``order`` (indices into
    ``[linear, polynomial, nn1, nn2]``) every ``segment_bins`` bins. The first
    ``train_bins`` bins form the training split, the rest the test split.
    ``pool_source`` picks the decoder pool: the generating encoders
    (``"truth"``) or encoders fitted on the z-scored training split (``"fit"``).
    """

    n_bins: int = 6000
    train_bins: int = 3000
    segment_bins: int = 1000
    order: tuple[int, ...] = (0, 2, 1)
    alphas: tuple[float, ...] = (0.98, 0.5, 0.1)
    pool_source: str = "truth"
    obs_noise_scale: float = 0.3
    smoothing_window_bins: int = 0
    intent_coeff: float = 0.98
    intent_std: float = 0.5
    transition_exclusion_bins: int = 50

    def __post_init__(self):
        if self.pool_source not in ("truth", "fit"):
            raise ConfigError("pool_source must be 'truth' or 'fit'")
        if not 0 < self.train_bins < self.n_bins:
            raise ConfigError("train_bins must lie strictly between 0 and n_bins")
        if self.segment_bins < 1 or not self.order:
            raise ConfigError("segment_bins must be >= 1 and order non-empty")
        if not self.alphas or any(not 0.0 < a <= 1.0 for a in self.alphas):
            raise ConfigError("alphas must be a non-empty list of values in (0, 1]")

    def schedule(self) -> list[tuple[int, int]]:
        n_seg = -(-self.n_bins // self.segment_bins)
        return [(i * self.segment_bins, self.order[i % len(self.order)]) for i in range(n_seg)]


@dataclass
class OfflineResult:
    rows: list[tuple[str, float, float]]  # (decoder, CC, MSE)
    dominance: dict[float, float]  # alpha -> dominant-model accuracy
    posteriors: dict[float, np.ndarray]
    truth_schedule: np.ndarray
    model_ids: list[str]
    estimates: dict[str, np.ndarray] = field(default_factory=dict)
    truth_states: np.ndarray | None = None

    def cc(self, name: str) -> float:
        return next(r[1] for r in self.rows if r[0] == name)


def dyen_label(alpha: float) -> str:
    return f"DyEn({alpha:g})"


def run_offline(
    cfg: OfflineConfig = OfflineConfig(),
    seed: int = 0,
    n_channels: int = 32,
    nonlinearity: float = 1.0,
    noise_var: float = 1.0,
    hidden_sizes=(30, 50),
    filter_cfg: FilterConfig = FilterConfig(),
    baselines: bool = True,
) -> OfflineResult:
    """Decode the test split with DyEnsemble at every alpha in ``cfg.alphas``.

    Args:
        baselines: also decode with the single-model filters, the Kalman
            filter and fixed-weight averaging. Off gives only the DyEn rows.
    """
    truths = make_truth_encoders(n_channels, child_rng(seed, "truth"), nonlinearity, noise_var, hidden_sizes=hidden_sizes)
    brain = SyntheticBrain(
        truths,
        cfg.schedule(),
        obs_noise_scale=cfg.obs_noise_scale,
        smoothing_window_bins=cfg.smoothing_window_bins,
    )

    def intents(n, rng):
        return random_walk_intents(n, rng, cfg.intent_coeff, cfg.intent_std)

    X, Y, truth = generate_switching_dataset(brain, cfg.n_bins, intents, child_rng(seed, "offline/data"))
    n = cfg.train_bins
    Xtr, Ytr, Xte, Yte, truth_te = X[:n], Y[:n], X[n:], Y[n:], truth[n:]

    norm = Normalizer.fit(Ytr)
    trans = fit_transition(Xtr)
    if cfg.pool_source == "truth":
        pool, obs_te = brain.effective_pool(), Yte
    else:
        pool = fit_standard_pool(Xtr, norm.apply(Ytr), hidden_sizes=hidden_sizes, seed=child_int(seed, "offline/mlp"))
        obs_te = norm.apply(Yte)
    fcfg = replace(filter_cfg, seed=child_int(seed, "offline/filter"))

    rows, est, dominance, posts = [], {}, {}, {}
    for a in cfg.alphas:
        dec = DyEnsembleDecoder(pool, trans, replace(fcfg, forgetting_alpha=a))
        e, p = dec.run(obs_te)
        est[dyen_label(a)] = e
        posts[a] = p
        dominance[a] = dominant_model_accuracy(p, truth_te, cfg.transition_exclusion_bins)
    if baselines:
        for k, name in enumerate(SINGLE_NAMES[: len(pool)]):
            est[name], _ = DyEnsembleDecoder(EncoderPool([pool[k]]), trans, fcfg).run(obs_te)
        est["Kalman"] = KalmanDecoder(fit_kalman(Xtr, norm.apply(Ytr))).run(norm.apply(Yte))
        est["BMA"], _ = DyEnsembleDecoder(pool, trans, fcfg, frozen_posterior=np.ones(len(pool))).run(obs_te)

    for name, e in est.items():
        rows.append((name, correlation_coefficient(e, Xte), mse(e, Xte)))
    return OfflineResult(rows, dominance, posts, truth_te, pool.ids, est, Xte)
