import warnings

import numpy as np
import pytest

from dyens.errors import SingularFit, TooFewSamples
from dyens.statespace import (
    TransitionModel,
    fit_transition,
    predict_state,
    spectral_radius,
    stabilize_transition,
)
from oracle_data import A_STAR, transition_data

# frozen from tests/oracles/derive_frozen.py (independent normal-equation solve)
FROZEN_A = np.array([[0.9442489048095285, 0.01524217339514092], [-0.01414961209169567, 0.9320231514595265]])
FROZEN_B = np.array([-0.0018041767211294838, 0.0002574796216311368])
FROZEN_SIGMA_U = np.array([0.0024731239593778352, 0.002604018216116224])


def test_fit_transition_matches_frozen_solution():
    model = fit_transition(transition_data())
    np.testing.assert_allclose(model.A, FROZEN_A, atol=1e-9)
    np.testing.assert_allclose(model.b, FROZEN_B, atol=1e-9)
    np.testing.assert_allclose(model.sigma_u, FROZEN_SIGMA_U, atol=1e-9)


def test_fit_transition_recovers_generating_matrix():
    model = fit_transition(transition_data())
    assert np.max(np.abs(model.A - A_STAR)) < 0.02
    np.testing.assert_allclose(model.sigma_u, 0.05**2, rtol=0.1)


def test_segments_do_not_pair_across_boundaries():
    x = transition_data(n=600)
    base = fit_transition(x[:300])
    # a far-away single-state segment contributes no pairs
    padded = fit_transition([x[:300], np.array([[100.0, -100.0]])])
    np.testing.assert_array_equal(padded.A, base.A)
    np.testing.assert_array_equal(padded.b, base.b)
    joined = fit_transition(np.vstack([x[:300], [[100.0, -100.0]]]))
    assert np.all(joined.sigma_u > 10 * base.sigma_u)


def test_fit_transition_too_few_states():
    with pytest.raises(TooFewSamples):
        fit_transition(np.zeros((2, 2)))


def test_constant_states_fall_back_with_warning():
    with pytest.warns(SingularFit):
        model = fit_transition(np.ones((50, 2)))
    np.testing.assert_allclose(model.A, 0.99 * np.eye(2))
    np.testing.assert_allclose(model.b, 0.0)
    assert np.all(model.sigma_u >= 1e-8)


def test_predict_state_is_affine():
    model = TransitionModel(np.array([[0.5, 0.1], [0.0, 0.9]]), np.array([0.1, -0.2]), np.array([0.01, 0.02]))
    x = np.array([1.0, 2.0])
    np.testing.assert_allclose(predict_state(model, x), [0.8, 1.6])
    np.testing.assert_allclose(predict_state(model, x, np.array([0.1, 0.1])), [0.9, 1.7])


def test_transition_dict_round_trip():
    model = fit_transition(transition_data(n=200))
    back = TransitionModel.from_dict(model.to_dict())
    np.testing.assert_array_equal(back.A, model.A)
    np.testing.assert_array_equal(back.b, model.b)
    np.testing.assert_array_equal(back.sigma_u, model.sigma_u)


def test_stabilize_caps_spectral_radius():
    model = TransitionModel(np.array([[1.02, 0.0], [0.0, 0.5]]), np.zeros(2), np.ones(2))
    capped = stabilize_transition(model, 0.995)
    assert spectral_radius(capped.A) == pytest.approx(0.995)
    np.testing.assert_array_equal(capped.sigma_u, model.sigma_u)


def test_stabilize_leaves_stable_models_alone():
    model = TransitionModel(0.9 * np.eye(2), np.zeros(2), np.ones(2))
    assert stabilize_transition(model) is model


def test_transition_rejects_bad_shapes():
    with pytest.raises(ValueError):
        TransitionModel(np.eye(3), np.zeros(2), np.ones(2))
