"""Block/session protocol: calibration with refits, then a frozen-decoder test phase."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from dyens.baselines import KalmanDecoder, fit_kalman
from dyens.dyensemble import DyEnsembleDecoder, FilterConfig
from dyens.encoders import EncoderPool, fit_linear, fit_mlp, fit_standard_pool
from dyens.errors import CalibrationFailed, ConfigError, TooFewSamples
from dyens.evaluation import Normalizer, success_metrics
from dyens.seeding import child_int, child_rng
from dyens.simulator.task import TASK_KINDS, TaskConfig, TrialRecord, radial8_targets, rtp_target, run_trial
from dyens.statespace import fit_transition, stabilize_transition

DECODER_KINDS = ("dyensemble", "kalman", "linear-pf", "nn-pf", "static-bma")


@dataclass(frozen=True)
class FitOptions:
    """Calibration-time fitting settings shared by every decoder kind."""

    hidden_sizes: tuple[int, ...] = (30, 50)
    ridge_lambda: float = 1.0
    fit_intercept: bool = False
    lr: float = 0.01
    weight_decay: float = 1e-4
    max_epochs: int = 500
    patience: int = 10
    batch_size: int = 64
    max_transition_radius: Optional[float] = 0.995

    def mlp_kwargs(self) -> dict:
        return dict(
            lr=self.lr,
            weight_decay=self.weight_decay,
            max_epochs=self.max_epochs,
            patience=self.patience,
            batch_size=self.batch_size,
        )


@dataclass(frozen=True)
class BlockSpec:
    task_kind: str
    mode: str
    assist: float
    phase: str  # "calibration" | "test"


@dataclass(frozen=True)
class SessionPlan:
    """Block layout of one session.

    Calibration: ``n_observation_blocks`` planner-driven blocks, then one
    assisted block per entry of ``assist_levels``. Test: one FullControl
    block per entry of ``test_tasks`` followed by ``n_rtp_blocks`` RTP blocks.
    """

    n_observation_blocks: int = 2
    assist_levels: tuple[float, ...] = (0.7, 0.5, 0.3, 0.0)
    calibration_task: str = "Radial8Big"
    test_tasks: tuple[str, ...] = ("Radial8Big", "Radial8Small")
    n_rtp_blocks: int = 3
    trials_per_block: int = 16
    max_attempts: int = 3
    calibration_timeout: float = 3.0
    test_timeout: float = 10.0
    rtp_min_distance: float = 0.2
    inter_trial_bins: int = 50

    def __post_init__(self):
        if self.n_observation_blocks < 1:
            raise ConfigError("at least one observation block is required")
        if any(not 0.0 <= a <= 1.0 for a in self.assist_levels):
            raise ConfigError("assist levels must lie in [0, 1]")
        for kind in (self.calibration_task, *self.test_tasks):
            if kind not in TASK_KINDS:
                raise ConfigError(f"unknown task kind {kind!r}")
        if self.inter_trial_bins < 0:
            raise ConfigError("inter_trial_bins must be >= 0")
        if self.n_rtp_blocks < 0 or self.trials_per_block < 1 or self.max_attempts < 1:
            raise ConfigError("block counts must be positive")

    def blocks(self) -> list[BlockSpec]:
        out = [BlockSpec(self.calibration_task, "Observation", 1.0, "calibration")] * self.n_observation_blocks
        out += [BlockSpec(self.calibration_task, "Assisted", a, "calibration") for a in self.assist_levels]
        out += [BlockSpec(k, "FullControl", 0.0, "test") for k in self.test_tasks]
        out += [BlockSpec("RTP", "FullControl", 0.0, "test")] * self.n_rtp_blocks
        return out


class CalibratedDecoder:
    """Z-scores raw observations with frozen calibration statistics, then decodes."""

    def __init__(self, inner, normalizer: Normalizer, kind: str, model_ids: Sequence[str] = ()):
        self.inner = inner
        self.normalizer = normalizer
        self.kind = kind
        self.model_ids = list(model_ids)

    @property
    def model_posterior(self):
        return self.inner.model_posterior

    def reset(self, x0=(0.0, 0.0)) -> None:
        self.inner.reset(x0)

    def step(self, y) -> np.ndarray:
        return self.inner.step(self.normalizer.apply(y))


def fit_decoder(
    kind: str,
    states: list[np.ndarray],
    observations: list[np.ndarray],
    filter_cfg: FilterConfig = FilterConfig(),
    fit_opts: FitOptions = FitOptions(),
    seed: int = 0,
) -> CalibratedDecoder:
    """Fit a decoder of ``kind`` on aligned per-trial (velocity, raw rate) segments."""
    if kind not in DECODER_KINDS:
        raise ConfigError(f"unknown decoder kind {kind!r}; expected one of {DECODER_KINDS}")
    X = np.vstack(states)
    Y = np.vstack(observations)
    norm = Normalizer.fit(Y)
    Z = norm.apply(Y)
    trans = fit_transition(states)
    if fit_opts.max_transition_radius is not None:
        trans = stabilize_transition(trans, fit_opts.max_transition_radius)
    if kind == "kalman":
        km = fit_kalman(states, [norm.apply(o) for o in observations])
        km.A, km.b = np.array(trans.A), np.array(trans.b)
        return CalibratedDecoder(KalmanDecoder(km), norm, kind)

    rng = child_rng(seed, "filter")
    if kind == "linear-pf":
        pool = EncoderPool([fit_linear(X, Z, fit_intercept=fit_opts.fit_intercept)])
    elif kind == "nn-pf":
        h = fit_opts.hidden_sizes[0]
        pool = EncoderPool([fit_mlp(X, Z, hidden=h, seed=child_int(seed, "mlp"), id="nn1", **fit_opts.mlp_kwargs())])
    else:
        pool = fit_standard_pool(
            X,
            Z,
            hidden_sizes=fit_opts.hidden_sizes,
            ridge_lambda=fit_opts.ridge_lambda,
            fit_intercept=fit_opts.fit_intercept,
            seed=child_int(seed, "mlp"),
            **fit_opts.mlp_kwargs(),
        )
    frozen = np.full(len(pool), 1.0 / len(pool)) if kind == "static-bma" else None
    inner = DyEnsembleDecoder(pool, trans, filter_cfg, frozen_posterior=frozen, rng=rng)
    return CalibratedDecoder(inner, norm, kind, pool.ids)


@dataclass
class BlockRecord:
    index: int  # 1-based
    spec: BlockSpec
    trials: list[TrialRecord] = field(default_factory=list)

    @property
    def task_kind(self) -> str:
        return self.spec.task_kind

    def summary(self) -> dict:
        m = success_metrics(self.trials)
        return {
            "block_index": self.index,
            "task": self.spec.task_kind,
            "n_trials": len(self.trials),
            "n_success": sum(t.outcome == "Success" for t in self.trials),
            "success_rate": m["success_rate"],
            "mean_reach_time_s": m["mean_reach_time"],
        }


@dataclass
class SessionLog:
    decoder_kind: str
    blocks: list[BlockRecord]
    model_ids: list[str]

    def test_blocks(self, task_kind: Optional[str] = None) -> list[BlockRecord]:
        return [b for b in self.blocks if b.spec.phase == "test" and (task_kind is None or b.task_kind == task_kind)]

    def success_rate(self, task_kind: str) -> float:
        trials = [t for b in self.test_blocks(task_kind) for t in b.trials]
        return success_metrics(trials)["success_rate"]


def _training_segments(blocks: list[BlockRecord]) -> tuple[list[np.ndarray], list[np.ndarray]]:
    states, obs = [], []
    for b in blocks:
        for tr in b.trials:
            sl = tr.reach_stage
            if tr.outcome == "Success" and sl.stop >= 2:
                states.append(tr.planner[sl])
                obs.append(tr.observations[sl])
    return states, obs


def inter_trial_rest(brain, decoder, rng: np.random.Generator, n_bins: int, t_bin: int) -> None:
    """Resting user between trials: zero intent, cursor held, signals keep flowing."""
    for k in range(n_bins):
        y = brain.observe(np.zeros(2), t_bin + k, rng)
        if decoder is not None:
            decoder.step(y)


def run_session(
    decoder_kind: str,
    brain,
    plan: SessionPlan = SessionPlan(),
    filter_cfg: FilterConfig = FilterConfig(),
    seed: int = 0,
    fit_opts: FitOptions = FitOptions(),
    task_overrides: Optional[dict] = None,
    on_block: Optional[Callable[[BlockRecord], None]] = None,
) -> SessionLog:
    """Run calibration and test blocks with one synthetic user.

    The decoder is refit after every calibration block on the reach-stage bins
    of all successful trials so far; the decoder from the last calibration
    block is used unchanged for every test block.

    Raises:
        CalibrationFailed: no usable successful trials at a refit.
    """
    if decoder_kind not in DECODER_KINDS:
        raise ConfigError(f"unknown decoder kind {decoder_kind!r}; expected one of {DECODER_KINDS}")
    overrides = dict(task_overrides or {})
    brain.reset()
    obs_rng = child_rng(seed, "brain")
    target_rng = child_rng(seed, "targets")

    decoder: Optional[CalibratedDecoder] = None
    blocks: list[BlockRecord] = []
    t_bin = 0
    for i, spec in enumerate(plan.blocks(), start=1):
        calib = spec.phase == "calibration"
        task = TaskConfig.for_kind(
            spec.task_kind,
            trials_per_block=plan.trials_per_block,
            timeout=plan.calibration_timeout if calib else plan.test_timeout,
            **overrides,
        )
        if decoder is not None:
            decoder.reset()
        block = BlockRecord(i, spec)
        ring = radial8_targets(task.target_distance)
        pos = np.zeros(2)
        slot, attempt = 0, 1
        target = None
        while len(block.trials) < task.trials_per_block:
            if target is None:
                if spec.task_kind == "RTP":
                    target = rtp_target(target_rng, task.target_radius, avoid=pos, min_distance=plan.rtp_min_distance)
                else:
                    target = ring[slot % 8]
                    pos = np.zeros(2)  # instantaneous auto-return to the centre
            inter_trial_rest(brain, decoder, obs_rng, plan.inter_trial_bins, t_bin)
            t_bin += plan.inter_trial_bins
            tr = run_trial(task, decoder, brain, spec.assist, spec.mode, obs_rng, target, start=pos, t_bin=t_bin)
            tr.attempt = attempt
            t_bin += tr.n_bins
            block.trials.append(tr)
            if calib and tr.outcome != "Success" and attempt < plan.max_attempts:
                attempt += 1
                continue
            if spec.task_kind == "RTP":
                pos = target.copy()
            slot, attempt, target = slot + 1, 1, None
        blocks.append(block)
        if on_block is not None:
            on_block(block)

        if calib:
            states, obs = _training_segments(blocks)
            if not states:
                raise CalibrationFailed(f"no successful trials with a reach stage after block {i}")
            try:
                decoder = fit_decoder(
                    decoder_kind, states, obs, filter_cfg, fit_opts, seed=child_int(seed, f"fit/{i}")
                )
            except TooFewSamples as exc:
                raise CalibrationFailed(f"too little calibration data after block {i}: {exc}") from exc

    model_ids = decoder.model_ids if decoder is not None else []
    return SessionLog(decoder_kind, blocks, model_ids)
