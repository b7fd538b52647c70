import numpy as np
import pytest

from dyens.baselines import KalmanDecoder, KalmanModel, fit_kalman, kalman_step, single_model_pf, static_bma_posterior
from dyens.dyensemble import FilterConfig
from dyens.encoders import LinearEncoder, NoiseModel
from dyens.errors import NonFiniteObservation, ShapeMismatch
from dyens.statespace import TransitionModel
from dyens.verify import linear_gaussian_problem, textbook_kalman
from oracle_data import kalman_h_data

KALMAN_H = np.array(
    [
        [-0.8068677581142597, -1.31742073275703],
        [-0.24204078157320072, 0.4226231780921876],
        [1.1376639676656128, 0.10496392744732617],
        [-0.5402162852075884, -0.7842061957425575],
        [0.7486551120943353, 1.6358807359373546],
        [0.2668524620067569, -1.2301415144831616],
        [-0.9558412899396104, 1.5958537746241783],
        [0.2140553526981876, -1.7369525173424392],
    ]
)


def _model(seed=0):
    A, b, su, H, sv, xs, ys = linear_gaussian_problem(seed)
    return KalmanModel(A=A, b=b, P_noise=np.diag(su), H=H, Q_noise=np.diag(sv)), xs, ys


def test_matches_textbook_recursion():
    km, _, ys = _model(3)
    ours = KalmanDecoder(km).run(ys)
    ref = textbook_kalman(km.A, km.b, km.P_noise, km.H, km.Q_noise, np.zeros(2), ys)
    np.testing.assert_allclose(ours, ref, atol=1e-9)


def test_fit_recovers_observation_matrix():
    x, Y, H = kalman_h_data()
    km = fit_kalman(x, Y)
    np.testing.assert_allclose(km.H, KALMAN_H, atol=1e-9)
    assert np.max(np.abs(km.H - H)) < 0.02
    np.testing.assert_allclose(np.diag(km.A), 0.9, atol=0.05)


def test_covariance_stays_symmetric_psd():
    km, _, ys = _model(1)
    for y in ys:
        kalman_step(km, y)
        np.testing.assert_array_equal(km.cov, km.cov.T)
        assert np.all(np.linalg.eigvalsh(km.cov) >= 0.0)


def test_estimate_is_linear_in_observations():
    # with b = 0 and a zero start the filtered mean is linear in y
    km, _, ys = _model(2)
    km.b = np.zeros(2)
    a = KalmanDecoder(km).run(ys)
    b = KalmanDecoder(km).run(2.5 * ys)
    np.testing.assert_allclose(b, 2.5 * a, atol=1e-10)


def test_tracks_true_state():
    km, xs, ys = _model(4)
    est = KalmanDecoder(km).run(ys)
    assert np.sqrt(np.mean((est - xs) ** 2)) < 0.5 * np.sqrt(np.mean(xs**2))


def test_step_validates_observation():
    km, _, _ = _model()
    with pytest.raises(ShapeMismatch):
        kalman_step(km, np.zeros(km.n_channels + 1))
    with pytest.raises(NonFiniteObservation):
        kalman_step(km, np.full(km.n_channels, np.inf))


def test_reset_and_decoder_surface():
    km, _, ys = _model()
    dec = KalmanDecoder(km)
    first = dec.run(ys[:5])
    dec.reset()
    np.testing.assert_array_equal(dec.run(ys[:5]), first)
    assert dec.model_posterior is None


def test_single_model_pf_close_to_kalman():
    km, _, ys = _model(5)
    kf = KalmanDecoder(km).run(ys)
    enc = LinearEncoder(W=km.H, noise=NoiseModel(np.diag(km.Q_noise)))
    trans = TransitionModel(km.A, km.b, np.diag(km.P_noise))
    pf = single_model_pf(enc, trans, FilterConfig(n_particles=5000, seed=0), ys)
    assert np.sqrt(np.mean(np.sum((pf - kf) ** 2, axis=1))) < 0.05


def test_static_bma_posterior():
    lm = np.log(np.array([[0.2, 0.1], [0.5, 0.5], [0.3, 0.6]]))
    post = static_bma_posterior([0.5, 0.5], lm)
    expected = np.array([0.2 * 0.5 * 0.3, 0.1 * 0.5 * 0.6])
    np.testing.assert_allclose(post, expected / expected.sum(), atol=1e-14)
