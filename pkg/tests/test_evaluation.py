import csv
from types import SimpleNamespace

import numpy as np
import pytest

from dyens.errors import ConstantSeries, EmptyInput, ShapeMismatch
from dyens.evaluation import (
    Normalizer,
    correlation_coefficient,
    dominant_model_accuracy,
    mse,
    success_metrics,
    tercile_weights,
    weight_speed_histogram,
    write_csv,
)


def test_correlation_examples():
    t = np.column_stack([np.arange(10.0), np.sin(np.arange(10.0))])
    assert correlation_coefficient(t, t) == pytest.approx(1.0)
    assert correlation_coefficient(-t, t) == pytest.approx(-1.0)
    assert correlation_coefficient(3 * t + 1, t) == pytest.approx(1.0)
    const = np.column_stack([np.ones(10), np.sin(np.arange(10.0))])
    assert correlation_coefficient(const, t) == pytest.approx(0.5)
    with pytest.raises(ConstantSeries):
        correlation_coefficient(t, const)
    with pytest.raises(EmptyInput):
        correlation_coefficient(t[:1], t[:1])
    with pytest.raises(ShapeMismatch):
        correlation_coefficient(t[:5], t)


def test_mse():
    assert mse(np.zeros((4, 2)), np.ones((4, 2))) == 1.0
    assert mse([1.0, 2.0], [1.0, 4.0]) == 2.0


def test_normalizer_round_trip_and_floor():
    Y = np.random.default_rng(0).normal(3.0, 2.0, (100, 4))
    Y[:, 3] = 7.0
    n = Normalizer.fit(Y)
    Z = n.apply(Y)
    np.testing.assert_allclose(Z[:, :3].mean(axis=0), 0.0, atol=1e-12)
    np.testing.assert_allclose(Z[:, :3].std(axis=0), 1.0)
    np.testing.assert_allclose(Z[:, 3], 0.0)
    np.testing.assert_allclose(n.invert(Z), Y, atol=1e-12)
    np.testing.assert_array_equal(Normalizer.identity(3).apply(np.ones(3)), np.ones(3))


def test_success_metrics():
    recs = [SimpleNamespace(outcome="Success", reach_time=1.0), SimpleNamespace(outcome="Timeout", reach_time=None)]
    recs.append(SimpleNamespace(outcome="Success", reach_time=2.0))
    m = success_metrics(recs)
    assert m["success_rate"] == pytest.approx(2 / 3)
    assert m["mean_reach_time"] == 1.5
    assert success_metrics(recs[1:2])["mean_reach_time"] is None
    with pytest.raises(EmptyInput):
        success_metrics([])


def test_dominant_model_accuracy_excludes_transitions():
    truth = np.repeat([0, 1], 100)
    post = np.zeros((200, 2))
    post[:, 0] = 1.0  # always says model 0
    assert dominant_model_accuracy(post, truth, 0) == 0.5
    post[:110, 0], post[:110, 1] = 1.0, 0.0
    post[110:, 1], post[110:, 0] = 1.0, 0.0
    assert dominant_model_accuracy(post, truth, 10) == 1.0
    with pytest.raises(EmptyInput):
        dominant_model_accuracy(post[:20], truth[90:110], 50)
    with pytest.raises(ShapeMismatch):
        dominant_model_accuracy(post[:5], truth, 0)


def test_tercile_weights_and_histogram():
    speeds = np.array([0.1, 0.2, 0.5, 0.9, 1.5, np.nan])
    post = np.array([[1.0, 0.0], [0.8, 0.2], [0.5, 0.5], [0.0, 1.0], [0.2, 0.8], [0.3, 0.7]])
    t = tercile_weights(speeds, post)
    np.testing.assert_allclose(t, [[0.9, 0.1], [0.5, 0.5], [0.1, 0.9]])
    assert np.all(np.isnan(tercile_weights(np.array([0.1]), np.array([[1.0, 0.0]]))[1:]))
    hist = weight_speed_histogram(speeds, post, n_bins=2)
    assert [h["n"] for h in hist] == [2, 3]
    assert hist[1]["speed_lo"] == 0.5
    np.testing.assert_allclose(hist[0]["mean_weights"], [0.9, 0.1])


def test_write_csv_formats(tmp_path):
    path = tmp_path / "out.csv"
    write_csv(path, ["a", "b", "c"], [[1, 0.1, None], ["x", float("nan"), 1 / 3]])
    rows = list(csv.reader(path.open()))
    assert rows == [["a", "b", "c"], ["1", "0.1", ""], ["x", "", "0.3333333333333333"]]


def test_mse_matches_double_loop():
    rng = np.random.default_rng(8)
    a, b = rng.normal(size=(50, 2)), rng.normal(size=(50, 2))
    total = 0.0
    for t in range(50):
        for j in range(2):
            total += (a[t, j] - b[t, j]) ** 2
    assert mse(a, b) == pytest.approx(total / 100, abs=1e-12)
    assert mse(b + [1.0, 0.0], b) == pytest.approx(0.5)


def test_success_metric_examples():
    def rec(ok, rt=None):
        return SimpleNamespace(outcome="Success" if ok else "Timeout", reach_time=rt)

    m = success_metrics([rec(True, 1.0), rec(True, 2.0), rec(True, 3.0)])
    assert m == {"success_rate": 1.0, "mean_reach_time": 2.0}
    assert success_metrics([rec(False)] * 4) == {"success_rate": 0.0, "mean_reach_time": None}
    assert success_metrics([rec(True, 1.0)] * 13 + [rec(False)] * 3)["success_rate"] == 0.8125


def test_uniform_posterior_ties_go_to_first_model():
    post = np.full((100, 4), 0.25)
    assert dominant_model_accuracy(post, np.zeros(100, dtype=int), 50) == 1.0
    assert dominant_model_accuracy(post, np.ones(100, dtype=int), 50) == 0.0


def test_single_model_histogram_is_all_ones():
    speeds = np.linspace(0.0, 1.2, 50)
    hist = weight_speed_histogram(speeds, np.ones((50, 1)))
    assert len(hist) == 20
    assert all(h["mean_weights"] == [1.0] for h in hist)
    assert sum(h["n"] for h in hist) == 50
