"""Cursor tasks: planner, assistance, integration and the single-trial loop."""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass
from typing import Optional, Protocol

import numpy as np

from dyens.errors import ConfigError

TASK_KINDS = ("Radial8Big", "Radial8Small", "RTP")
MODES = ("Observation", "Assisted", "FullControl")

# cursor radius, target radius, reach threshold, holding time
_GEOMETRY = {
    "Radial8Big": (0.07, 0.13, 0.1, 0.05),
    "Radial8Small": (0.05, 0.1, 0.075, 0.05),
    "RTP": (0.05, 0.1, 0.075, 0.05),
}
CALIBRATION_TIMEOUT = 3.0
TEST_TIMEOUT = 10.0


@dataclass(frozen=True)
class TaskConfig:
    task_kind: str
    cursor_radius: float
    target_radius: float
    reach_threshold: float
    holding_time: float
    timeout: float = TEST_TIMEOUT
    trials_per_block: int = 16
    target_distance: float = 0.6
    dt: float = 0.02
    a_max: float = 2.0
    v_max: float = 1.0
    reaction_delay_bins: int = 0

    def __post_init__(self):
        if self.task_kind not in TASK_KINDS:
            raise ConfigError(f"unknown task_kind {self.task_kind!r}; expected one of {TASK_KINDS}")
        if self.dt <= 0 or self.timeout <= 0:
            raise ConfigError("dt and timeout must be positive")
        if self.trials_per_block < 1:
            raise ConfigError("trials_per_block must be >= 1")
        if self.reaction_delay_bins < 0:
            raise ConfigError("reaction_delay_bins must be >= 0")

    @classmethod
    def for_kind(cls, task_kind: str, calibration: bool = False, **overrides) -> "TaskConfig":
        if task_kind not in _GEOMETRY:
            raise ConfigError(f"unknown task_kind {task_kind!r}; expected one of {TASK_KINDS}")
        cursor, target, reach, hold = _GEOMETRY[task_kind]
        base = dict(
            task_kind=task_kind,
            cursor_radius=cursor,
            target_radius=target,
            reach_threshold=reach,
            holding_time=hold,
            timeout=CALIBRATION_TIMEOUT if calibration else TEST_TIMEOUT,
        )
        base.update(overrides)
        return cls(**base)

    @property
    def max_bins(self) -> int:
        return int(round(self.timeout / self.dt))

    @property
    def hold_bins(self) -> int:
        # small guard so 0.04 / 0.02 does not round up to 3
        return max(1, math.ceil(self.holding_time / self.dt - 1e-9))


def planner_velocity(cursor_pos, target_pos, current_speed: float, a_max=2.0, v_max=1.0, dt=0.02):
    """Target-directed velocity with an accelerate/brake rule.

    Returns ``(velocity, new_speed)``.
    """
    delta = np.asarray(target_pos, dtype=float) - np.asarray(cursor_pos, dtype=float)
    dist = float(np.hypot(*delta))
    d_brake = current_speed**2 / (2.0 * a_max)
    if dist <= d_brake:
        speed = max(0.0, current_speed - a_max * dt)
    else:
        speed = min(v_max, current_speed + a_max * dt)
    if dist < 1e-12:
        return np.zeros(2), speed
    return delta / dist * speed, speed


def ortho_impedance(decoded_v, cursor_pos, target_pos, assist: float) -> np.ndarray:
    """Keep the component along the ideal direction, shrink the perpendicular one by ``assist``."""
    if not 0.0 <= assist <= 1.0:
        raise ValueError("assist must be in [0, 1]")
    v = np.asarray(decoded_v, dtype=float)
    delta = np.asarray(target_pos, dtype=float) - np.asarray(cursor_pos, dtype=float)
    dist = float(np.hypot(*delta))
    if dist < 1e-9:
        return v.copy()
    u = delta / dist
    v_par = (v @ u) * u
    return v_par + (1.0 - assist) * (v - v_par)


def integrate_cursor(pos, control_v, dt: float) -> np.ndarray:
    if dt <= 0:
        raise ValueError("dt must be positive")
    return np.clip(np.asarray(pos, dtype=float) + np.asarray(control_v, dtype=float) * dt, -1.0, 1.0)


def radial8_targets(radius: float = 0.6) -> np.ndarray:
    """Eight ring targets, clockwise from the top."""
    ang = math.pi / 2 - np.arange(8) * math.pi / 4
    return radius * np.column_stack([np.cos(ang), np.sin(ang)])


def rtp_target(rng: np.random.Generator, target_radius: float, avoid=None, min_distance: float = 0.0) -> np.ndarray:
    """Uniform target inside the workspace shrunk by ``target_radius``.

    Draws are repeated while the target lies within ``min_distance`` of ``avoid``.
    """
    lim = 1.0 - target_radius
    while True:
        t = rng.uniform(-lim, lim, 2)
        if avoid is None or np.hypot(*(t - np.asarray(avoid))) >= min_distance:
            return t


class Decoder(Protocol):
    def reset(self, x0=(0.0, 0.0)) -> None: ...

    def step(self, y) -> np.ndarray: ...


@dataclass
class TrialRecord:
    target: np.ndarray
    start: np.ndarray
    intent: np.ndarray
    decoded: np.ndarray
    control: np.ndarray
    planner: np.ndarray
    cursor: np.ndarray
    observations: np.ndarray
    model_posterior: Optional[np.ndarray]
    outcome: str
    reach_time: Optional[float]
    hold_start_bin: Optional[int] = None
    mode: str = "FullControl"
    assist: float = 0.0
    first_bin: int = 0
    attempt: int = 1

    @property
    def n_bins(self) -> int:
        return len(self.cursor)

    @property
    def reach_stage(self) -> slice:
        """Bins before the successful hold begins (empty for a timeout)."""
        return slice(0, self.hold_start_bin if self.outcome == "Success" else 0)


def run_trial(
    task: TaskConfig,
    decoder: Optional[Decoder],
    brain,
    assist: float,
    mode: str,
    rng: np.random.Generator,
    target,
    start=(0.0, 0.0),
    t_bin: int = 0,
) -> TrialRecord:
    """Simulate one reach.

    Args:
        decoder: fitted decoder; may be None in Observation mode, in which
            case decoded velocities are logged as NaN.
        brain: anything with ``observe(intent, t_bin, rng)``.
        rng: observation-noise stream.
        t_bin: session-level bin counter at trial start (drives the brain schedule).
    """
    if mode not in MODES:
        raise ValueError(f"unknown mode {mode!r}")
    if decoder is None and mode != "Observation":
        raise ValueError(f"{mode} mode needs a decoder")
    target = np.asarray(target, dtype=float)
    pos = np.asarray(start, dtype=float).copy()
    T = task.max_bins
    rec = {k: np.full((T, 2), np.nan) for k in ("intent", "decoded", "control", "planner", "cursor")}
    obs = np.empty((T, brain.n_channels))
    posts = None

    speed = 0.0
    delayed = deque([np.zeros(2)] * task.reaction_delay_bins)
    inside = 0
    outcome, reach_time, hold_start = "Timeout", None, None
    n = T
    for k in range(T):
        v_plan, speed = planner_velocity(pos, target, speed, task.a_max, task.v_max, task.dt)
        delayed.append(v_plan)
        intent = delayed.popleft()
        y = brain.observe(intent, t_bin + k, rng)

        if decoder is not None:
            decoded = np.asarray(decoder.step(y), dtype=float)
            post = getattr(decoder, "model_posterior", None)
            if post is not None:
                if posts is None:
                    posts = np.full((T, len(post)), np.nan)
                posts[k] = post
        else:
            decoded = np.full(2, np.nan)

        if mode == "Observation":
            control = v_plan
        elif mode == "Assisted":
            control = ortho_impedance(decoded, pos, target, assist)
        else:
            control = decoded
        pos = integrate_cursor(pos, control, task.dt)

        rec["intent"][k] = intent
        rec["decoded"][k] = decoded
        rec["control"][k] = control
        rec["planner"][k] = v_plan
        rec["cursor"][k] = pos
        obs[k] = y

        if np.hypot(*(pos - target)) < task.reach_threshold:
            inside += 1
            if inside >= task.hold_bins:
                hold_start = k - inside + 1
                outcome = "Success"
                reach_time = (hold_start + 1) * task.dt
                n = k + 1
                break
        else:
            inside = 0

    return TrialRecord(
        target=target,
        start=np.asarray(start, dtype=float),
        intent=rec["intent"][:n],
        decoded=rec["decoded"][:n],
        control=rec["control"][:n],
        planner=rec["planner"][:n],
        cursor=rec["cursor"][:n],
        observations=obs[:n],
        model_posterior=None if posts is None else posts[:n],
        outcome=outcome,
        reach_time=reach_time,
        hold_start_bin=hold_start,
        mode=mode,
        assist=float(assist),
        first_bin=t_bin,
    )
