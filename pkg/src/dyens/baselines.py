"""Reference decoders: velocity Kalman filter, single-model particle filters and
fixed-weight Bayesian model averaging."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from dyens.dyensemble import DyEnsembleDecoder, EnsembleFilterState, FilterConfig, logsumexp, step
from dyens.encoders import Encoder, EncoderPool, fit_linear
from dyens.errors import NonFiniteObservation, NumericalFailure, ShapeMismatch
from dyens.statespace import VARIANCE_FLOOR, StateSequence, TransitionModel, _segments, fit_transition


@dataclass
class KalmanModel:
    """Linear-Gaussian velocity model plus the running posterior (mean, cov)."""

    A: np.ndarray
    b: np.ndarray
    P_noise: np.ndarray
    H: np.ndarray
    Q_noise: np.ndarray
    mean: np.ndarray = None
    cov: np.ndarray = None

    def __post_init__(self):
        if self.mean is None:
            self.mean = np.zeros(2)
        if self.cov is None:
            self.cov = self.P_noise.copy()

    @property
    def n_channels(self) -> int:
        return self.H.shape[0]

    @property
    def transition(self) -> TransitionModel:
        return TransitionModel(self.A, self.b, np.diag(self.P_noise))

    def reset(self, x0=(0.0, 0.0), cov0=None) -> None:
        self.mean = np.asarray(x0, dtype=float).reshape(2).copy()
        self.cov = self.P_noise.copy() if cov0 is None else np.asarray(cov0, dtype=float).copy()


def fit_kalman(states: StateSequence, observations) -> KalmanModel:
    """Least-squares A, b, H with diagonal residual covariances.

    ``states`` and ``observations`` may both be lists of aligned per-trial
    arrays; transitions are only paired inside a trial.
    """
    trans = fit_transition(states)
    X = np.vstack(_segments(states))
    if isinstance(observations, np.ndarray) and observations.ndim == 2:
        Y = observations
    else:
        Y = np.vstack([np.asarray(o, dtype=float) for o in observations])
    if len(X) != len(Y):
        raise ShapeMismatch(f"{len(X)} states but {len(Y)} observations")
    enc = fit_linear(X, Y)
    return KalmanModel(
        A=np.array(trans.A),
        b=np.array(trans.b),
        P_noise=np.diag(trans.sigma_u),
        H=np.array(enc.W),
        Q_noise=np.diag(np.maximum(enc.noise.sigma2, VARIANCE_FLOOR)),
    )


def kalman_step(model: KalmanModel, y) -> np.ndarray:
    """One predict/update cycle; mutates ``model.mean``/``model.cov``."""
    y = np.asarray(y, dtype=float).reshape(-1)
    if y.shape[0] != model.n_channels:
        raise ShapeMismatch(f"observation has {y.shape[0]} channels, model expects {model.n_channels}")
    if not np.all(np.isfinite(y)):
        raise NonFiniteObservation("observation contains NaN or Inf")
    A, H = model.A, model.H
    mean = A @ model.mean + model.b
    cov = A @ model.cov @ A.T + model.P_noise

    S = H @ cov @ H.T + model.Q_noise
    try:
        K = np.linalg.solve(S, H @ cov).T
    except np.linalg.LinAlgError as exc:
        raise NumericalFailure("innovation covariance is singular; the fitted model is ill-conditioned") from exc
    if not np.all(np.isfinite(K)):
        raise NumericalFailure("non-finite Kalman gain")
    mean = mean + K @ (y - H @ mean)
    # Joseph form keeps the covariance positive semi-definite
    IKH = np.eye(2) - K @ H
    cov = IKH @ cov @ IKH.T + K @ model.Q_noise @ K.T
    model.mean = mean
    model.cov = 0.5 * (cov + cov.T)
    return mean.copy()


class KalmanDecoder:
    """Online wrapper exposing the same reset/step surface as the particle decoders."""

    model_posterior = None

    def __init__(self, model: KalmanModel, x0=(0.0, 0.0)):
        self.model = model
        self.reset(x0)

    def reset(self, x0=(0.0, 0.0)) -> None:
        self.model.reset(x0)

    def step(self, y) -> np.ndarray:
        return kalman_step(self.model, y)

    def run(self, observations) -> np.ndarray:
        return np.array([self.step(y) for y in np.asarray(observations, dtype=float)])


def single_model_pf(
    model: Encoder,
    trans: TransitionModel,
    cfg: FilterConfig,
    observations,
    x0=(0.0, 0.0),
) -> np.ndarray:
    """Bootstrap particle filter with one encoder; the q = 1 case of the ensemble filter."""
    dec = DyEnsembleDecoder(EncoderPool([model]), trans, cfg, x0=x0)
    est, _ = dec.run(observations)
    return est


def static_bma_step(
    state: EnsembleFilterState,
    pool: EncoderPool,
    trans: TransitionModel,
    cfg: FilterConfig,
    y,
    noise: np.ndarray | None = None,
) -> tuple[EnsembleFilterState, np.ndarray]:
    """Ensemble step with the model weights held at ``state.model_posterior``."""
    new_state, x_hat, _ = step(state, pool, trans, cfg, y, noise=noise, update_posterior=False)
    return new_state, x_hat


def static_bma_posterior(prior, log_marginals) -> np.ndarray:
    """Classical (non-forgetting) model posterior after a run of evidence.

    ``p_k proportional to prior_k * prod_t p_k(y_t | y_{0:t-1})``, computed in one
    shot from a ``(T, q)`` array of log marginal likelihoods.
    """
    logp = np.log(np.asarray(prior, dtype=float)) + np.sum(np.asarray(log_marginals, dtype=float), axis=0)
    return np.exp(logp - logsumexp(logp))
