"""Metrics, z-score normalisation and CSV reports."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from dyens.errors import ConstantSeries, EmptyInput, ShapeMismatch

STD_FLOOR = 1e-6


@dataclass(frozen=True)
class Normalizer:
    mean: np.ndarray
    std: np.ndarray

    @classmethod
    def fit(cls, Y) -> "Normalizer":
        Y = np.asarray(Y, dtype=float)
        return cls(Y.mean(axis=0), np.maximum(Y.std(axis=0), STD_FLOOR))

    @classmethod
    def identity(cls, n_channels: int) -> "Normalizer":
        return cls(np.zeros(n_channels), np.ones(n_channels))

    def apply(self, Y) -> np.ndarray:
        return (np.asarray(Y, dtype=float) - self.mean) / self.std

    def invert(self, Z) -> np.ndarray:
        return np.asarray(Z, dtype=float) * self.std + self.mean


def _pair(pred, truth) -> tuple[np.ndarray, np.ndarray]:
    pred = np.asarray(pred, dtype=float)
    truth = np.asarray(truth, dtype=float)
    if pred.shape != truth.shape:
        raise ShapeMismatch(f"prediction shape {pred.shape} != truth shape {truth.shape}")
    if pred.ndim == 1:
        pred, truth = pred[:, None], truth[:, None]
    return pred, truth


def correlation_coefficient(pred, truth) -> float:
    """Pearson r per velocity component, averaged over components."""
    pred, truth = _pair(pred, truth)
    if len(pred) < 2:
        raise EmptyInput("need at least two samples for a correlation")
    rs = []
    for j in range(truth.shape[1]):
        t = truth[:, j] - truth[:, j].mean()
        p = pred[:, j] - pred[:, j].mean()
        tn, pn = np.sqrt(t @ t), np.sqrt(p @ p)
        if tn == 0.0:
            raise ConstantSeries(f"truth component {j} is constant")
        # a constant prediction carries no linear information
        rs.append(0.0 if pn == 0.0 else float(t @ p / (tn * pn)))
    return float(np.mean(rs))


def mse(pred, truth) -> float:
    """Mean squared error pooled over time and components."""
    pred, truth = _pair(pred, truth)
    return float(np.mean((pred - truth) ** 2))


def success_metrics(records: Sequence) -> dict:
    """Success rate and mean reach time (seconds, successes only; None if no successes)."""
    if len(records) == 0:
        raise EmptyInput("no trial records")
    times = [r.reach_time for r in records if r.outcome == "Success"]
    return {
        "success_rate": len(times) / len(records),
        "mean_reach_time": float(np.mean(times)) if times else None,
    }


def dominant_model_accuracy(model_posteriors, truth_schedule, transition_exclusion_bins: int = 50) -> float:
    """Fraction of bins whose argmax model matches the generating encoder index.

    Bins within ``transition_exclusion_bins`` of a change in ``truth_schedule``
    are not scored.
    """
    post = np.asarray(model_posteriors, dtype=float)
    truth = np.asarray(truth_schedule)
    if len(post) != len(truth):
        raise ShapeMismatch(f"{len(post)} posteriors but {len(truth)} schedule entries")
    keep = np.ones(len(truth), dtype=bool)
    switches = np.flatnonzero(truth[1:] != truth[:-1]) + 1
    for s in switches:
        keep[max(0, s - transition_exclusion_bins) : s + transition_exclusion_bins] = False
    if not keep.any():
        raise EmptyInput("every bin falls inside a transition window")
    dominant = np.argmax(post, axis=1)
    return float(np.mean(dominant[keep] == truth[keep]))


def _finite_speeds(speeds, posteriors) -> tuple[np.ndarray, np.ndarray]:
    speeds = np.asarray(speeds, dtype=float)
    post = np.asarray(posteriors, dtype=float)
    if len(speeds) != len(post):
        raise ShapeMismatch(f"{len(speeds)} speeds but {len(post)} posterior rows")
    keep = np.isfinite(speeds)
    return speeds[keep], post[keep]


def weight_speed_histogram(speeds, posteriors, v_max: float = 1.0, n_bins: int = 20) -> list[dict]:
    """Mean model posterior per speed bucket.

    Speeds are split into ``n_bins`` equal buckets over ``[0, v_max]``; speeds
    above ``v_max`` land in the last bucket. Empty buckets and non-finite
    speeds are omitted.
    """
    speeds, post = _finite_speeds(speeds, posteriors)
    edges = np.linspace(0.0, v_max, n_bins + 1)
    idx = np.clip(np.floor(speeds / v_max * n_bins).astype(int), 0, n_bins - 1)
    rows = []
    for b in range(n_bins):
        sel = idx == b
        if not sel.any():
            continue
        rows.append(
            {
                "speed_lo": float(edges[b]),
                "speed_hi": float(edges[b + 1]),
                "n": int(sel.sum()),
                "mean_weights": [float(v) for v in post[sel].mean(axis=0)],
            }
        )
    return rows


def tercile_weights(speeds, posteriors, v_max: float = 1.0) -> np.ndarray:
    """``(3, q)`` mean posterior in the low/mid/high thirds of ``[0, v_max]`` (NaN if empty)."""
    speeds, post = _finite_speeds(speeds, posteriors)
    band = np.clip(np.floor(speeds / v_max * 3).astype(int), 0, 2)
    out = np.full((3, post.shape[1]), np.nan)
    for b in range(3):
        if np.any(band == b):
            out[b] = post[band == b].mean(axis=0)
    return out


# ---------------------------------------------------------------- CSV output

METRICS_HEADER = ["block_index", "task", "n_trials", "n_success", "success_rate", "mean_reach_time_s"]


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, float):
        if math.isnan(v):
            return ""
        return repr(v)
    return str(v)


def write_csv(path, header: Sequence[str], rows: Iterable[Sequence]) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([_fmt(v) for v in row])


def write_weights_by_speed(path, hist: list[dict], model_ids: Sequence[str]) -> None:
    header = ["speed_lo", "speed_hi", "n"] + [f"w_{m}" for m in model_ids]
    write_csv(path, header, ([r["speed_lo"], r["speed_hi"], r["n"], *r["mean_weights"]] for r in hist))
