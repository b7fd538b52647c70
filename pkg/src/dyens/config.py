"""Strict JSON run configuration.

Top-level sections: ``task``, ``brain``, ``filter``, ``session_plan``,
``fit``, ``offline`` and ``seed``. Every section is optional and falls back
to its defaults; unknown keys and wrongly typed values raise
:class:`~dyens.errors.ConfigError`. See the README for the full schema.
"""

from __future__ import annotations

import dataclasses
import hashlib
import json
import typing
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Optional, Union

from dyens.dyensemble import FilterConfig
from dyens.errors import ConfigError
from dyens.simulator.brain import SpeedBands, SyntheticBrain, make_truth_encoders
from dyens.simulator.offline import OfflineConfig
from dyens.simulator.session import FitOptions, SessionPlan
from dyens.seeding import child_rng


@dataclass(frozen=True)
class TaskSection:
    """Overrides applied to every task kind (geometry comes from the kind)."""

    dt: float = 0.02
    a_max: float = 2.0
    v_max: float = 1.0
    target_distance: float = 0.6
    reaction_delay_bins: int = 0

    def overrides(self) -> dict:
        return dataclasses.asdict(self)


@dataclass(frozen=True)
class SpeedBandsSection:
    thresholds: tuple[float, float] = (0.3, 0.6)
    encoders: tuple[int, int, int] = (0, 2, 1)
    width: float = 0.03


@dataclass(frozen=True)
class BrainSection:
    """Synthetic brain.

    ``schedule`` entries are ``[start_bin, index]`` or
    ``[start_bin, [w_linear, w_polynomial, w_nn1, w_nn2]]``; ``speed_bands``,
    when present, replaces the schedule with speed-dependent blending.
    ``noise_var`` is one value shared by all truth encoders or one per encoder.
    """

    n_channels: int = 32
    nonlinearity: float = 1.0
    noise_var: Union[float, tuple[float, ...]] = 1.0
    baseline: tuple[float, float] = (4.0, 6.0)
    hidden_sizes: tuple[int, ...] = (30, 50)
    obs_noise_scale: float = 0.1
    smoothing_window_bins: int = 22
    intent_gain: float = 1.0
    schedule: tuple = ((0, 0),)
    speed_bands: Optional[SpeedBandsSection] = None

    def build(self, seed: int, v_max: float = 1.0) -> SyntheticBrain:
        truths = make_truth_encoders(
            self.n_channels,
            child_rng(seed, "truth"),
            nonlinearity=self.nonlinearity,
            noise_var=self.noise_var,
            baseline=self.baseline,
            hidden_sizes=self.hidden_sizes,
        )
        bands = None
        if self.speed_bands is not None:
            sb = self.speed_bands
            bands = SpeedBands(sb.thresholds, sb.encoders, sb.width, v_max)
        try:
            return SyntheticBrain(
                truths,
                schedule=[(int(s), w if isinstance(w, int) else list(w)) for s, w in self.schedule],
                obs_noise_scale=self.obs_noise_scale,
                smoothing_window_bins=self.smoothing_window_bins,
                intent_gain=self.intent_gain,
                speed_bands=bands,
            )
        except (ValueError, IndexError) as exc:
            raise ConfigError(f"brain: {exc}") from exc


@dataclass(frozen=True)
class FilterSection:
    n_particles: int = 500
    forgetting_alpha: float = 0.98
    weight_floor: float = 1e-6
    ess_threshold_fraction: float = 0.5

    def build(self, seed: int) -> FilterConfig:
        try:
            return FilterConfig(seed=seed, **dataclasses.asdict(self))
        except ValueError as exc:
            raise ConfigError(f"filter: {exc}") from exc


@dataclass(frozen=True)
class RunConfig:
    task: TaskSection = field(default_factory=TaskSection)
    brain: BrainSection = field(default_factory=BrainSection)
    filter: FilterSection = field(default_factory=FilterSection)
    session_plan: SessionPlan = field(default_factory=SessionPlan)
    fit: FitOptions = field(default_factory=FitOptions)
    offline: OfflineConfig = field(default_factory=OfflineConfig)
    seed: int = 0
    sha256: str = ""


# ---------------------------------------------------------------- strict parsing


def _type_name(tp) -> str:
    return getattr(tp, "__name__", str(tp))


def _coerce(value: Any, tp, where: str):
    origin = typing.get_origin(tp)
    args = typing.get_args(tp)
    if tp is Any:
        return value
    if origin is Union:
        if value is None and type(None) in args:
            return None
        errors = []
        for a in args:
            if a is type(None):
                continue
            try:
                return _coerce(value, a, where)
            except ConfigError as exc:
                errors.append(str(exc))
        raise ConfigError(errors[-1] if errors else f"{where}: unexpected null")
    if dataclasses.is_dataclass(tp):
        if not isinstance(value, dict):
            raise ConfigError(f"{where}: expected an object")
        return _build(tp, value, where)
    if tp is bool:
        if not isinstance(value, bool):
            raise ConfigError(f"{where}: expected true/false, got {value!r}")
        return value
    if tp is int:
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigError(f"{where}: expected an integer, got {value!r}")
        return value
    if tp is float:
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(f"{where}: expected a number, got {value!r}")
        return float(value)
    if tp is str:
        if not isinstance(value, str):
            raise ConfigError(f"{where}: expected a string, got {value!r}")
        return value
    if origin is tuple:
        if not isinstance(value, list):
            raise ConfigError(f"{where}: expected a list, got {value!r}")
        if not args:
            return tuple(value)
        if len(args) == 2 and args[1] is Ellipsis:
            return tuple(_coerce(v, args[0], f"{where}[{i}]") for i, v in enumerate(value))
        if len(value) != len(args):
            raise ConfigError(f"{where}: expected {len(args)} entries, got {len(value)}")
        return tuple(_coerce(v, a, f"{where}[{i}]") for i, (v, a) in enumerate(zip(value, args)))
    raise ConfigError(f"{where}: unsupported field type {_type_name(tp)}")  # pragma: no cover


def _build(cls, data: dict, where: str):
    hints = typing.get_type_hints(cls)
    names = {f.name for f in dataclasses.fields(cls) if f.init}
    unknown = sorted(set(data) - names)
    if unknown:
        raise ConfigError(f"{where}: unknown key(s) {', '.join(unknown)}")
    kwargs = {k: _coerce(v, hints[k], f"{where}.{k}") for k, v in data.items()}
    try:
        return cls(**kwargs)
    except ConfigError as exc:
        raise ConfigError(f"{where}: {exc}") from exc
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{where}: {exc}") from exc


def _check_schedule(schedule: tuple, where: str) -> tuple:
    out = []
    for i, entry in enumerate(schedule):
        if not isinstance(entry, (list, tuple)) or len(entry) != 2:
            raise ConfigError(f"{where}[{i}]: expected [start_bin, index | weights]")
        start, spec = entry
        if isinstance(start, bool) or not isinstance(start, int):
            raise ConfigError(f"{where}[{i}]: start_bin must be an integer")
        if isinstance(spec, list):
            if not all(isinstance(w, (int, float)) and not isinstance(w, bool) for w in spec):
                raise ConfigError(f"{where}[{i}]: blend weights must be numbers")
            spec = tuple(float(w) for w in spec)
        elif isinstance(spec, bool) or not isinstance(spec, int):
            raise ConfigError(f"{where}[{i}]: encoder index must be an integer")
        out.append((start, spec))
    return tuple(out)


_SECTIONS = {
    "task": TaskSection,
    "brain": BrainSection,
    "filter": FilterSection,
    "session_plan": SessionPlan,
    "fit": FitOptions,
    "offline": OfflineConfig,
}


def parse_config(data: Any, sha256: str = "") -> RunConfig:
    if not isinstance(data, dict):
        raise ConfigError("config root must be a JSON object")
    unknown = sorted(set(data) - set(_SECTIONS) - {"seed"})
    if unknown:
        raise ConfigError(f"unknown top-level key(s) {', '.join(unknown)}")
    kwargs: dict[str, Any] = {"sha256": sha256}
    if "seed" in data:
        kwargs["seed"] = _coerce(data["seed"], int, "seed")
    for name, cls in _SECTIONS.items():
        if name not in data:
            continue
        section = data[name]
        if not isinstance(section, dict):
            raise ConfigError(f"{name}: expected an object")
        if name == "brain" and "schedule" in section:
            section = dict(section)
            schedule = section.pop("schedule")
            if not isinstance(schedule, list) or not schedule:
                raise ConfigError("brain.schedule: expected a non-empty list")
            built = _build(cls, section, name)
            kwargs[name] = dataclasses.replace(built, schedule=_check_schedule(schedule, "brain.schedule"))
        else:
            kwargs[name] = _build(cls, section, name)
    return RunConfig(**kwargs)


def load_config(path) -> RunConfig:
    path = Path(path)
    try:
        raw = path.read_bytes()
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc.strerror or exc}") from exc
    try:
        data = json.loads(raw.decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise ConfigError(f"{path}: invalid JSON ({exc})") from exc
    return parse_config(data, hashlib.sha256(raw).hexdigest())
