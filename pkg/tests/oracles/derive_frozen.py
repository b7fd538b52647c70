"""Recompute the frozen reference values used by the tests.

Every solve here is written against plain numpy (normal equations, explicit
ridge closed form, per-segment least squares) without importing the package
code under test, except for the brain used to synthesise segment data.

    python tests/oracles/derive_frozen.py
"""

import os
import sys

import numpy as np

sys.path.insert(0, os.path.join(os.path.dirname(__file__), ".."))
import oracle_data as od  # noqa: E402


def normal_equations(F, Y):
    return np.linalg.solve(F.T @ F, F.T @ Y)


def show(name, arr):
    print(f"{name} = {np.array2string(np.asarray(arr), precision=12, separator=', ', floatmode='unique')}")


x = od.transition_data()
F = np.column_stack([x[:-1], np.ones(len(x) - 1)])
coef = normal_equations(F, x[1:])
show("TRANSITION_A", coef[:2].T)
show("TRANSITION_B", coef[2])
show("TRANSITION_SIGMA_U", np.mean((x[1:] - F @ coef) ** 2, axis=0))

X, Y, W = od.linear_encoder_data()
Wh = normal_equations(X, Y).T
show("LINEAR_W", Wh)
show("LINEAR_SIGMA2", np.mean((Y - X @ Wh.T) ** 2, axis=0))

Xtr, Ytr, Xte, Yte = od.quadratic_data()
Ftr = np.column_stack([Xtr**2, Xtr])
B = np.linalg.solve(Ftr.T @ Ftr + 1.0 * np.eye(4), Ftr.T @ Ytr)
show("POLY_W2", B[:2].T)
show("POLY_W1", B[2:].T)
pred = np.column_stack([Xte**2, Xte]) @ B
print("POLY_TEST_MSE =", repr(float(np.mean((pred - Yte) ** 2))))

x, Y, H = od.kalman_h_data()
show("KALMAN_H", normal_equations(x, Y).T)

# per-segment regression on brain output
from dyens.encoders import LinearEncoder, NoiseModel  # noqa: E402
from dyens.simulator.brain import SyntheticBrain, generate_switching_dataset, random_walk_intents  # noqa: E402

encs = [LinearEncoder(W=w, noise=NoiseModel(np.full(4, 0.01)), intercept=np.full(4, 5.0)) for w in od.segment_weights()]
brain = SyntheticBrain(encs, [(0, 0), (1000, 1), (2000, 2)], obs_noise_scale=1.0, smoothing_window_bins=0)
S, O, _ = generate_switching_dataset(brain, 3000, random_walk_intents, np.random.default_rng(3))
for k in range(3):
    sl = slice(1000 * k, 1000 * (k + 1))
    F = np.column_stack([S[sl], np.ones(1000)])
    show(f"SEGMENT_W[{k}]", normal_equations(F, O[sl])[:2].T)
