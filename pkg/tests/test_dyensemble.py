import io
import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dyens.baselines import static_bma_step
from dyens.dyensemble import (
    DyEnsembleDecoder,
    FilterConfig,
    TelemetryWriter,
    apply_floor,
    dominant_model,
    effective_sample_size,
    forgetting_prior,
    init_filter,
    logsumexp,
    marginal_likelihood,
    model_posterior_update,
    step,
    systematic_resample,
)
from dyens.encoders import EncoderPool, LinearEncoder, NoiseModel
from dyens.errors import EmptyPool, NonFiniteObservation, ShapeMismatch
from dyens.statespace import TransitionModel
from dyens.verify import hand_enumerated_step, hand_instance

TRANS = TransitionModel(0.95 * np.eye(2), np.zeros(2), np.array([0.01, 0.01]))


def _pool(C=4, seed=0, q=2):
    rng = np.random.default_rng(seed)
    return EncoderPool(
        LinearEncoder(W=rng.normal(size=(C, 2)), noise=NoiseModel(np.full(C, 0.5)), id=f"m{k}") for k in range(q)
    )


def test_logsumexp_matches_direct_sum():
    a = np.array([[0.1, -2.0, 3.0], [1.0, 1.0, 1.0]])
    np.testing.assert_allclose(logsumexp(a, axis=1), np.log(np.exp(a).sum(axis=1)))
    assert logsumexp(np.array([1000.0, 1000.0])) == pytest.approx(1000.0 + math.log(2.0))
    assert logsumexp(np.array([-np.inf, -np.inf])) == -np.inf
    assert logsumexp(a, axis=0, keepdims=True).shape == (1, 3)


def test_step_matches_hand_enumeration():
    state, pool, trans, cfg, noise, y = hand_instance()
    _, x_hat, post = step(state, pool, trans, cfg, y, noise=noise)
    ref_x, ref_p = hand_enumerated_step()
    np.testing.assert_allclose(x_hat, ref_x, atol=1e-10)
    np.testing.assert_allclose(post, ref_p, atol=1e-10)


def test_marginal_likelihood_uses_previous_combined_weights():
    state, pool, trans, cfg, noise, y = hand_instance()
    pred = trans.propagate(state.particles, noise)
    lm = marginal_likelihood(pool, state, pred, y)
    direct = [
        math.log(sum(w * math.exp(m.log_likelihood_batch(pred[i : i + 1], y)[0]) for i, w in enumerate(state.combined_weights)))
        for m in pool
    ]
    np.testing.assert_allclose(lm, direct, atol=1e-12)


def test_forgetting_prior_examples():
    np.testing.assert_allclose(forgetting_prior([0.5, 0.5], 0.3), [0.5, 0.5])
    np.testing.assert_allclose(forgetting_prior([0.9, 0.1], 1.0, 0.0), [0.9, 0.1])
    flat = forgetting_prior([0.9, 0.1], 0.5, 0.0)
    np.testing.assert_allclose(flat, np.sqrt([0.9, 0.1]) / np.sqrt([0.9, 0.1]).sum())
    # a tiny exponent flattens the prior almost completely
    assert np.ptp(forgetting_prior([0.99, 0.01], 1e-6, 0.0)) < 1e-4


def test_apply_floor():
    p = apply_floor(np.array([1.0, 0.0, 0.0]), 1e-6)
    assert p.sum() == pytest.approx(1.0)
    assert p.min() == pytest.approx(1e-6)
    np.testing.assert_allclose(apply_floor(np.array([0.9, 0.1]), 0.6), [0.5, 0.5])
    np.testing.assert_allclose(apply_floor(np.array([2.0, 2.0]), 0.0), [0.5, 0.5])


def test_posterior_update_keeps_prior_when_nothing_explains_y():
    post = model_posterior_update([0.3, 0.7], [-np.inf, -np.inf])
    np.testing.assert_allclose(post, [0.3, 0.7])


def test_identical_models_keep_uniform_posterior():
    W = np.random.default_rng(0).normal(size=(4, 2))
    pool = EncoderPool([LinearEncoder(W=W, noise=NoiseModel(np.ones(4)), id=i) for i in ("a", "b", "c")])
    dec = DyEnsembleDecoder(pool, TRANS, FilterConfig(n_particles=200, seed=1))
    _, post = dec.run(np.random.default_rng(2).normal(size=(30, 4)))
    np.testing.assert_allclose(post, 1.0 / 3.0, atol=1e-12)


def test_pinned_posterior_equals_fixed_weight_averaging():
    pool = _pool()
    cfg = FilterConfig(n_particles=300, forgetting_alpha=1.0, weight_floor=0.0)
    ys = np.random.default_rng(3).normal(size=(40, 4))
    noise = np.random.default_rng(4).normal(0.0, 0.1, size=(40, 300, 2))
    a = init_filter(pool, TRANS, cfg, rng=np.random.default_rng(5))
    b = init_filter(pool, TRANS, cfg, rng=np.random.default_rng(5))
    for t, y in enumerate(ys):
        a, xa, _ = step(a, pool, TRANS, cfg, y, noise=noise[t], update_posterior=False)
        b, xb = static_bma_step(b, pool, TRANS, cfg, y, noise=noise[t])
        np.testing.assert_allclose(xa, xb, atol=1e-12)
    np.testing.assert_array_equal(a.model_posterior, [0.5, 0.5])


def test_dominant_model_tracks_generating_encoder():
    pool = _pool(C=8, seed=6, q=3)
    rng = np.random.default_rng(7)
    x = np.zeros((300, 2))
    for t in range(1, 300):
        x[t] = 0.95 * x[t - 1] + rng.normal(0, 0.1, 2)
    y = x @ pool[2].W.T + rng.normal(0, math.sqrt(0.5), (300, 8))
    _, post = DyEnsembleDecoder(pool, TRANS, FilterConfig(seed=0)).run(y)
    assert np.mean(np.argmax(post[50:], axis=1) == 2) > 0.9
    assert dominant_model(post[-1]) == 2


def test_resampling_resets_weights_and_reports_pre_resample_ess():
    pool = _pool()
    cfg = FilterConfig(n_particles=100, ess_threshold_fraction=1.0)
    state = init_filter(pool, TRANS, cfg)
    state, _, _ = step(state, pool, TRANS, cfg, np.full(4, 3.0))
    assert state.resampled
    assert state.ess < 100
    np.testing.assert_allclose(state.per_model_weights, 1.0 / 100)
    assert effective_sample_size(state.combined_weights) == pytest.approx(100.0)


def test_systematic_resample_counts():
    w = np.array([0.1, 0.2, 0.3, 0.4])
    idx = systematic_resample(w, np.random.default_rng(0))
    counts = np.bincount(idx, minlength=4)
    assert np.all(np.abs(counts - 4 * w) < 1.0)


def test_decoder_is_deterministic_per_seed():
    pool = _pool()
    ys = np.random.default_rng(1).normal(size=(25, 4))
    e1, p1 = DyEnsembleDecoder(pool, TRANS, FilterConfig(seed=9)).run(ys)
    e2, p2 = DyEnsembleDecoder(pool, TRANS, FilterConfig(seed=9)).run(ys)
    e3, _ = DyEnsembleDecoder(pool, TRANS, FilterConfig(seed=10)).run(ys)
    np.testing.assert_array_equal(e1, e2)
    np.testing.assert_array_equal(p1, p2)
    assert not np.array_equal(e1, e3)


def test_input_errors():
    pool = _pool()
    with pytest.raises(EmptyPool):
        init_filter(EncoderPool([]), TRANS, FilterConfig())
    state = init_filter(pool, TRANS, FilterConfig())
    with pytest.raises(ShapeMismatch):
        step(state, pool, TRANS, FilterConfig(), np.zeros(3))
    with pytest.raises(NonFiniteObservation):
        step(state, pool, TRANS, FilterConfig(), np.array([0.0, np.nan, 0.0, 0.0]))
    with pytest.raises(ValueError):
        FilterConfig(forgetting_alpha=0.0)
    with pytest.raises(ShapeMismatch):
        DyEnsembleDecoder(pool, TRANS, frozen_posterior=[1.0, 1.0, 1.0])


def test_telemetry_lines():
    buf = io.StringIO()
    dec = DyEnsembleDecoder(_pool(), TRANS, FilterConfig(n_particles=50), telemetry=TelemetryWriter(buf))
    dec.run(np.zeros((3, 4)))
    recs = [json.loads(line) for line in buf.getvalue().splitlines()]
    assert [r["t"] for r in recs] == [1, 2, 3]
    assert all(sum(r["model_posterior"]) == pytest.approx(1.0) for r in recs)


def test_reset_restores_initial_state():
    dec = DyEnsembleDecoder(_pool(), TRANS, FilterConfig(n_particles=50))
    dec.run(np.ones((5, 4)))
    dec.reset((0.2, -0.1))
    assert dec.state.t == 0
    np.testing.assert_allclose(dec.model_posterior, [0.5, 0.5])
    assert abs(dec.state.particles.mean(axis=0) - [0.2, -0.1]).max() < 0.1


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**31 - 1), st.floats(0.05, 1.0))
def test_posterior_stays_normalised_and_floored(seed, alpha):
    rng = np.random.default_rng(seed)
    pool = _pool(seed=seed, q=3)
    cfg = FilterConfig(n_particles=50, forgetting_alpha=alpha, seed=seed)
    state = init_filter(pool, TRANS, cfg)
    for y in rng.normal(0.0, 3.0, size=(10, 4)):
        state, x_hat, post = step(state, pool, TRANS, cfg, y)
        assert post.sum() == pytest.approx(1.0, abs=1e-12)
        assert post.min() >= 1e-6 - 1e-15
        assert state.combined_weights.sum() == pytest.approx(1.0, abs=1e-12)
        assert np.all(np.isfinite(x_hat))


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**31 - 1), st.floats(0.2, 5.0))
def test_posterior_is_invariant_to_scaling_every_model(seed, scale):
    # scaling all models and y by one factor shifts every log marginal by the same constant
    rng = np.random.default_rng(seed)
    pool = _pool(seed=seed)
    scaled = EncoderPool(
        LinearEncoder(W=scale * m.W, noise=NoiseModel(scale**2 * m.noise.sigma2), id=m.id) for m in pool
    )
    cfg = FilterConfig(n_particles=40, seed=seed)
    ys = rng.normal(size=(5, 4))
    _, p1 = DyEnsembleDecoder(pool, TRANS, cfg).run(ys)
    _, p2 = DyEnsembleDecoder(scaled, TRANS, cfg).run(scale * ys)
    np.testing.assert_allclose(p1, p2, atol=1e-9)
