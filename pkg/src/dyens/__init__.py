"""Dynamic-ensemble Bayesian filtering for kinematic decoding from binned firing rates."""

from dyens.statespace import TransitionModel, fit_transition, predict_state
from dyens.encoders import (
    EncoderPool,
    LinearEncoder,
    MlpEncoder,
    NoiseModel,
    PolynomialEncoder,
    encode,
    fit_linear,
    fit_mlp,
    fit_polynomial,
    log_likelihood,
)
from dyens.dyensemble import (
    DyEnsembleDecoder,
    EnsembleFilterState,
    FilterConfig,
    dominant_model,
    forgetting_prior,
    init_filter,
    marginal_likelihood,
    model_posterior_update,
    step,
)
from dyens.baselines import KalmanDecoder, KalmanModel, fit_kalman, kalman_step

__version__ = "0.1.0"

__all__ = [
    "TransitionModel",
    "fit_transition",
    "predict_state",
    "EncoderPool",
    "LinearEncoder",
    "MlpEncoder",
    "NoiseModel",
    "PolynomialEncoder",
    "encode",
    "fit_linear",
    "fit_mlp",
    "fit_polynomial",
    "log_likelihood",
    "DyEnsembleDecoder",
    "EnsembleFilterState",
    "FilterConfig",
    "dominant_model",
    "forgetting_prior",
    "init_filter",
    "marginal_likelihood",
    "model_posterior_update",
    "step",
    "KalmanDecoder",
    "KalmanModel",
    "fit_kalman",
    "kalman_step",
]
