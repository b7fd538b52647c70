"""Built-in check suites: ``unit`` (randomised invariants), ``oracle``
(independent re-derivations) and ``acceptance`` (end-to-end criteria).

Each check returns ``(passed, detail)``; :func:`run_suite` prints one
``PASS``/``FAIL`` line per check and returns True iff all of them pass.
"""

from __future__ import annotations

import functools
import math
import sys
import time
from dataclasses import dataclass, replace
from typing import Callable, Optional, TextIO

import numpy as np

from dyens.baselines import KalmanDecoder, KalmanModel, static_bma_posterior
from dyens.dyensemble import (
    DyEnsembleDecoder,
    EnsembleFilterState,
    FilterConfig,
    effective_sample_size,
    init_filter,
    marginal_likelihood,
    step,
)
from dyens.encoders import EncoderPool, LinearEncoder, NoiseModel, PolynomialEncoder, init_mlp_params, mlp_loss_and_grad
from dyens.evaluation import Normalizer, tercile_weights
from dyens.simulator.brain import SpeedBands, SyntheticBrain, make_truth_encoders
from dyens.simulator.offline import OfflineConfig, run_offline
from dyens.simulator.session import DECODER_KINDS, SessionLog, SessionPlan, run_session
from dyens.simulator.task import ortho_impedance
from dyens.seeding import child_rng
from dyens.statespace import TransitionModel

CheckFn = Callable[[], tuple[bool, str]]


@dataclass(frozen=True)
class Check:
    key: str
    title: str
    fn: CheckFn
    budget_s: Optional[float] = None


# ---------------------------------------------------------------- hand enumeration

# A frozen 3-particle, 2-model instance (linear + polynomial encoder, C = 3).
HAND = dict(
    particles=[[0.2, -0.1], [0.5, 0.3], [-0.4, 0.6]],
    rows=[[0.5, 0.3, 0.2], [0.2, 0.2, 0.6]],
    posterior=[0.7, 0.3],
    A=[[0.9, 0.05], [-0.02, 0.95]],
    b=[0.01, -0.02],
    sigma_u=[0.01, 0.02],
    noise=[[0.05, -0.02], [0.0, 0.1], [-0.03, 0.04]],
    W_lin=[[1.0, 0.5], [-0.3, 0.8], [0.2, -1.1]],
    s2_lin=[0.5, 0.8, 1.2],
    W2_poly=[[0.3, 0.1], [-0.2, 0.4], [0.5, 0.0]],
    W1_poly=[[0.7, -0.2], [0.4, 0.9], [-0.6, 0.3]],
    s2_poly=[0.6, 0.4, 0.9],
    y=[0.6, -0.1, 0.3],
    alpha=0.98,
)


def hand_enumerated_step(h: dict = HAND) -> tuple[list[float], list[float]]:
    """One ensemble step written out term by term with scalar arithmetic."""
    N, C = len(h["particles"]), len(h["y"])

    x = []
    for i in range(N):
        p = h["particles"][i]
        x.append(
            [
                h["A"][0][0] * p[0] + h["A"][0][1] * p[1] + h["b"][0] + h["noise"][i][0],
                h["A"][1][0] * p[0] + h["A"][1][1] * p[1] + h["b"][1] + h["noise"][i][1],
            ]
        )

    def mean_lin(xi):
        return [h["W_lin"][c][0] * xi[0] + h["W_lin"][c][1] * xi[1] for c in range(C)]

    def mean_poly(xi):
        return [
            h["W2_poly"][c][0] * xi[0] ** 2
            + h["W2_poly"][c][1] * xi[1] ** 2
            + h["W1_poly"][c][0] * xi[0]
            + h["W1_poly"][c][1] * xi[1]
            for c in range(C)
        ]

    def density(m, s2):
        d = 1.0
        for c in range(C):
            d *= math.exp(-((h["y"][c] - m[c]) ** 2) / (2.0 * s2[c])) / math.sqrt(2.0 * math.pi * s2[c])
        return d

    lik = [
        [density(mean_lin(x[i]), h["s2_lin"]) for i in range(N)],
        [density(mean_poly(x[i]), h["s2_poly"]) for i in range(N)],
    ]
    prev_comb = [sum(h["posterior"][k] * h["rows"][k][i] for k in range(2)) for i in range(N)]
    marg = [sum(prev_comb[i] * lik[k][i] for i in range(N)) for k in range(2)]

    powered = [h["posterior"][k] ** h["alpha"] for k in range(2)]
    prior = [v / sum(powered) for v in powered]
    unnorm = [prior[k] * marg[k] for k in range(2)]
    post = [v / sum(unnorm) for v in unnorm]

    rows = []
    for k in range(2):
        r = [h["rows"][k][i] * lik[k][i] for i in range(N)]
        rows.append([v / sum(r) for v in r])
    comb = [sum(post[k] * rows[k][i] for k in range(2)) for i in range(N)]
    x_hat = [sum(comb[i] * x[i][d] for i in range(N)) for d in range(2)]
    return x_hat, post


def hand_instance() -> tuple[EnsembleFilterState, EncoderPool, TransitionModel, FilterConfig, np.ndarray, np.ndarray]:
    h = HAND
    pool = EncoderPool(
        [
            LinearEncoder(W=np.array(h["W_lin"]), noise=NoiseModel(np.array(h["s2_lin"])), id="linear"),
            PolynomialEncoder(
                W2=np.array(h["W2_poly"]),
                W1=np.array(h["W1_poly"]),
                noise=NoiseModel(np.array(h["s2_poly"])),
                id="polynomial",
            ),
        ]
    )
    trans = TransitionModel(np.array(h["A"]), np.array(h["b"]), np.array(h["sigma_u"]))
    cfg = FilterConfig(n_particles=3, forgetting_alpha=h["alpha"])
    rows = np.array(h["rows"])
    post = np.array(h["posterior"])
    state = EnsembleFilterState(
        particles=np.array(h["particles"]),
        per_model_weights=rows,
        combined_weights=post @ rows,
        model_posterior=post,
        t=0,
        rng=np.random.default_rng(0),
    )
    return state, pool, trans, cfg, np.array(h["noise"]), np.array(h["y"])


def check_hand_enumeration() -> tuple[bool, str]:
    state, pool, trans, cfg, noise, y = hand_instance()
    _, x_hat, post = step(state, pool, trans, cfg, y, noise=noise)
    ref_x, ref_p = hand_enumerated_step()
    err = max(np.max(np.abs(x_hat - ref_x)), np.max(np.abs(post - ref_p)))
    return bool(err < 1e-10), f"max abs error {err:.2e} (tol 1e-10)"


# ---------------------------------------------------------------- Kalman oracles


def textbook_kalman(A, b, P, H, Q, x0, observations) -> np.ndarray:
    """Plain predict/update recursion with the short covariance update."""
    m = np.array(x0, dtype=float)
    S = np.array(P, dtype=float)
    out = []
    for y in observations:
        m = A @ m + b
        S = A @ S @ A.T + P
        G = S @ H.T @ np.linalg.inv(H @ S @ H.T + Q)
        m = m + G @ (y - H @ m)
        S = (np.eye(len(m)) - G @ H) @ S
        out.append(m.copy())
    return np.array(out)


def linear_gaussian_problem(seed: int, T: int = 200, C: int = 6):
    rng = np.random.default_rng(seed)
    A = np.array([[0.95, 0.03], [-0.03, 0.95]])
    b = np.array([0.01, -0.01])
    sig_u = np.array([0.02, 0.03])
    H = rng.normal(0.0, 1.0, (C, 2))
    sig_v = rng.uniform(0.3, 0.8, C)
    x = np.zeros(2)
    xs, ys = [], []
    for _ in range(T):
        x = A @ x + b + rng.normal(0.0, np.sqrt(sig_u))
        xs.append(x)
        ys.append(H @ x + rng.normal(0.0, np.sqrt(sig_v)))
    return A, b, sig_u, H, sig_v, np.array(xs), np.array(ys)


def check_kalman_textbook() -> tuple[bool, str]:
    worst = 0.0
    for seed in range(5):
        A, b, su, H, sv, _, Y = linear_gaussian_problem(seed)
        km = KalmanModel(A=A, b=b, P_noise=np.diag(su), H=H, Q_noise=np.diag(sv))
        ours = KalmanDecoder(km).run(Y)
        ref = textbook_kalman(A, b, np.diag(su), H, np.diag(sv), np.zeros(2), Y)
        worst = max(worst, float(np.max(np.abs(ours - ref))))
    return worst < 1e-9, f"max abs deviation {worst:.2e} over 5 x 200 steps (tol 1e-9)"


def kalman_gap(n_particles: int, seed: int) -> float:
    A, b, su, H, sv, _, Y = linear_gaussian_problem(seed)
    km = KalmanModel(A=A, b=b, P_noise=np.diag(su), H=H, Q_noise=np.diag(sv))
    kf = KalmanDecoder(km).run(Y)
    pool = EncoderPool([LinearEncoder(W=H, noise=NoiseModel(sv), id="linear")])
    cfg = FilterConfig(n_particles=n_particles, seed=1000 + seed)
    pf, _ = DyEnsembleDecoder(pool, TransitionModel(A, b, su), cfg).run(Y)
    return float(np.sqrt(np.mean(np.sum((pf - kf) ** 2, axis=1))))


def check_kalman_equivalence() -> tuple[bool, str]:
    sizes = (500, 2000, 20000)
    gaps = [float(np.mean([kalman_gap(n, s) for s in range(10)])) for n in sizes]
    ok = gaps[-1] < 0.05 and all(a > b for a, b in zip(gaps, gaps[1:]))
    desc = ", ".join(f"N={n}: {g:.4f}" for n, g in zip(sizes, gaps))
    return ok, f"mean RMS gap {desc} (need < 0.05 at 20000, strictly decreasing)"


def check_linear_domain_marginal() -> tuple[bool, str]:
    rng = np.random.default_rng(7)
    worst = 0.0
    for _ in range(100):
        C, N = int(rng.integers(1, 5)), int(rng.integers(2, 8))
        pool = EncoderPool(
            [LinearEncoder(W=rng.normal(size=(C, 2)), noise=NoiseModel(rng.uniform(0.5, 2, C))) for _ in range(2)]
        )
        trans = TransitionModel(np.eye(2) * 0.9, np.zeros(2), np.full(2, 0.1))
        state = init_filter(pool, trans, FilterConfig(n_particles=N), rng=rng)
        state.combined_weights = rng.dirichlet(np.ones(N))
        pred = rng.normal(size=(N, 2))
        y = rng.normal(size=C)
        lm = marginal_likelihood(pool, state, pred, y)
        for k, m in enumerate(pool):
            ref = 0.0
            for i in range(N):
                mu = m.W @ pred[i]
                dens = np.prod(np.exp(-((y - mu) ** 2) / (2 * m.noise.sigma2)) / np.sqrt(2 * np.pi * m.noise.sigma2))
                ref += state.combined_weights[i] * dens
            worst = max(worst, abs(lm[k] - math.log(ref)))
    return worst < 1e-10, f"max |log marginal - linear-domain sum| {worst:.2e} over 100 cases"


# ---------------------------------------------------------------- invariant suite


def _random_pool(rng, q, C) -> EncoderPool:
    return EncoderPool(
        [LinearEncoder(W=rng.normal(size=(C, 2)), noise=NoiseModel(rng.uniform(0.3, 2.0, C))) for _ in range(q)]
    )


def inv_normalization(cases: int = 100) -> tuple[bool, str]:
    rng = np.random.default_rng(11)
    worst = 0.0
    for _ in range(cases):
        q, C, N = int(rng.integers(1, 5)), int(rng.integers(1, 6)), int(rng.integers(2, 60))
        pool = _random_pool(rng, q, C)
        trans = TransitionModel(np.eye(2) * 0.95, rng.normal(0, 0.05, 2), rng.uniform(0.01, 0.2, 2))
        state = init_filter(pool, trans, FilterConfig(n_particles=N, seed=0), rng=rng)
        for _ in range(5):
            state, _, _ = step(state, pool, trans, FilterConfig(n_particles=N), rng.normal(size=C) * 3)
            dev = max(
                abs(state.combined_weights.sum() - 1),
                abs(state.model_posterior.sum() - 1),
                float(np.max(np.abs(state.per_model_weights.sum(axis=1) - 1))),
            )
            worst = max(worst, dev)
        Y = rng.normal(5, 3, (20, C))
        nm = Normalizer.fit(Y)
        worst = max(worst, float(np.max(np.abs(nm.invert(nm.apply(Y)) - Y))))
    return worst < 1e-9, f"{cases} cases, max deviation {worst:.2e}"


def inv_ess(cases: int = 100) -> tuple[bool, str]:
    rng = np.random.default_rng(12)
    for _ in range(cases):
        N = int(rng.integers(1, 500))
        w = rng.dirichlet(np.full(N, rng.uniform(0.05, 5)))
        e = effective_sample_size(w)
        if not (1.0 - 1e-9 <= e <= N + 1e-9):
            return False, f"ESS {e} outside [1, {N}]"
        if abs(effective_sample_size(np.full(N, 1.0 / N)) - N) > 1e-6 * N:
            return False, "uniform weights did not give ESS = N"
        one_hot = np.zeros(N)
        one_hot[rng.integers(N)] = 1.0
        if abs(effective_sample_size(one_hot) - 1.0) > 1e-12:
            return False, "one-hot weights did not give ESS = 1"
    return True, f"{cases} cases"


def inv_determinism(cases: int = 100) -> tuple[bool, str]:
    rng = np.random.default_rng(13)
    for _ in range(cases):
        q, C, N = int(rng.integers(1, 4)), int(rng.integers(1, 5)), int(rng.integers(2, 40))
        pool = _random_pool(rng, q, C)
        trans = TransitionModel(np.eye(2) * 0.9, np.zeros(2), np.full(2, 0.05))
        Y = rng.normal(size=(8, C))
        seed = int(rng.integers(1 << 30))
        cfg = FilterConfig(n_particles=N, seed=seed)
        e1, p1 = DyEnsembleDecoder(pool, trans, cfg).run(Y)
        e2, p2 = DyEnsembleDecoder(pool, trans, cfg).run(Y)
        if not (np.array_equal(e1, e2) and np.array_equal(p1, p2)):
            return False, "two runs with the same seed differ"
    return True, f"{cases} cases bit-identical"


def inv_gradient(cases: int = 100) -> tuple[bool, str]:
    rng = np.random.default_rng(14)
    worst = 0.0
    eps = 1e-5
    for _ in range(cases):
        H, C, n = int(rng.integers(1, 6)), int(rng.integers(1, 4)), int(rng.integers(2, 8))
        params = init_mlp_params(2, H, C, rng)
        params = {k: v + rng.normal(0, 0.3, v.shape) for k, v in params.items()}
        X, Y = rng.normal(size=(n, 2)), rng.normal(size=(n, C))
        _, grads = mlp_loss_and_grad(params, X, Y)
        for name, p in params.items():
            num = np.zeros_like(p)
            for idx in np.ndindex(p.shape):
                orig = p[idx]
                p[idx] = orig + eps
                lp, _ = mlp_loss_and_grad(params, X, Y)
                p[idx] = orig - eps
                lm, _ = mlp_loss_and_grad(params, X, Y)
                p[idx] = orig
                num[idx] = (lp - lm) / (2 * eps)
            denom = max(np.linalg.norm(num) + np.linalg.norm(grads[name]), 1e-12)
            worst = max(worst, float(np.linalg.norm(num - grads[name]) / denom))
    return worst < 1e-4, f"{cases} networks, max relative error {worst:.2e} (tol 1e-4)"


def inv_forgetting_limit(cases: int = 100) -> tuple[bool, str]:
    rng = np.random.default_rng(15)
    worst = 0.0
    for _ in range(cases):
        q, C, N = int(rng.integers(2, 5)), int(rng.integers(1, 5)), int(rng.integers(5, 50))
        pool = _random_pool(rng, q, C)
        trans = TransitionModel(np.eye(2) * 0.9, np.zeros(2), np.full(2, 0.05))
        cfg = FilterConfig(n_particles=N, forgetting_alpha=1.0, weight_floor=0.0)
        state = init_filter(pool, trans, cfg, rng=np.random.default_rng(int(rng.integers(1 << 30))))
        prior = state.model_posterior.copy()
        lms = []
        for _ in range(10):
            y = rng.normal(size=C)
            noise = trans.sample_noise(rng, N)
            lms.append(marginal_likelihood(pool, state, trans.propagate(state.particles, noise), y))
            state, _, post = step(state, pool, trans, cfg, y, noise=noise)
        ref = static_bma_posterior(prior, np.array(lms))
        worst = max(worst, float(np.max(np.abs(post - ref))))
    return worst < 1e-9, f"{cases} cases, max |recursive - batch posterior| {worst:.2e}"


def inv_ortho(cases: int = 100) -> tuple[bool, str]:
    rng = np.random.default_rng(16)
    for _ in range(cases):
        v = rng.normal(size=2)
        cur, tgt = rng.uniform(-1, 1, 2), rng.uniform(-1, 1, 2)
        a = float(rng.uniform())
        u = (tgt - cur) / np.linalg.norm(tgt - cur)
        out = ortho_impedance(v, cur, tgt, a)
        perp_in = v - (v @ u) * u
        perp_out = out - (out @ u) * u
        if np.linalg.norm(perp_out) > np.linalg.norm(perp_in) + 1e-12:
            return False, "perpendicular speed increased"
        if abs(out @ u - v @ u) > 1e-12:
            return False, "parallel component changed"
        if not np.allclose(ortho_impedance(v, cur, tgt, 0.0), v, atol=1e-15):
            return False, "assist 0 is not the identity"
        if np.linalg.norm(ortho_impedance(v, cur, tgt, 1.0) - (v @ u) * u) > 1e-12:
            return False, "assist 1 is not the projection"
    return True, f"{cases} cases"


INVARIANTS = (
    ("normalization", inv_normalization),
    ("ESS", inv_ess),
    ("determinism", inv_determinism),
    ("gradient check", inv_gradient),
    ("forgetting limit (alpha=1 equals static BMA)", inv_forgetting_limit),
    ("ortho-impedance projection", inv_ortho),
)


def check_invariants() -> tuple[bool, str]:
    parts, ok = [], True
    for name, fn in INVARIANTS:
        passed, detail = fn()
        ok &= passed
        parts.append(f"{name}: {'ok' if passed else 'FAILED ' + detail}")
    return ok, "; ".join(parts)


# ---------------------------------------------------------------- end-to-end scenarios

N_CHANNELS = 32
LINEAR_NOISE_SCALE = 0.1
BANDED_NOISE_SCALE = 0.1


def linear_brain(seed: int) -> SyntheticBrain:
    truths = make_truth_encoders(N_CHANNELS, child_rng(seed, "truth"))
    return SyntheticBrain(truths, [(0, 0)], obs_noise_scale=LINEAR_NOISE_SCALE)


def banded_brain(seed: int) -> SyntheticBrain:
    truths = make_truth_encoders(N_CHANNELS, child_rng(seed, "truth"))
    return SyntheticBrain(truths, obs_noise_scale=BANDED_NOISE_SCALE, speed_bands=SpeedBands())


ACCEPT_PLAN = SessionPlan(n_rtp_blocks=3)


@functools.lru_cache(maxsize=None)
def banded_session(kind: str, seed: int) -> SessionLog:
    return run_session(kind, banded_brain(seed), ACCEPT_PLAN, FilterConfig(seed=seed), seed=seed)


@functools.lru_cache(maxsize=None)
def offline_result(seed: int, alphas: tuple[float, ...] = (0.98,), baselines: bool = True):
    return run_offline(OfflineConfig(alphas=alphas), seed=seed, n_channels=N_CHANNELS, baselines=baselines)


def check_dominance() -> tuple[bool, str]:
    accs = [offline_result(s, baselines=False).dominance[0.98] for s in range(5)]
    m = float(np.mean(accs))
    return m >= 0.70, f"mean dominant-model accuracy {m:.3f} over 5 seeds (need >= 0.70)"


def check_ordering() -> tuple[bool, str]:
    res = [offline_result(s) for s in range(10)]

    def mean_cc(name):
        return float(np.mean([r.cc(name) for r in res]))

    dyen, bma, kal = mean_cc("DyEn(0.98)"), mean_cc("BMA"), mean_cc("Kalman")
    best = max(mean_cc(n) for n in ("Linear", "Polynomial", "NN-1", "NN-2"))
    ok = dyen >= bma >= best - 0.02 and dyen >= kal + 0.02
    return ok, f"CC DyEn {dyen:.4f}, BMA {bma:.4f}, best single {best:.4f}, Kalman {kal:.4f}"


def check_closed_loop_sanity() -> tuple[bool, str]:
    parts, ok = [], True
    for kind in DECODER_KINDS:
        t0 = time.perf_counter()
        rates = []
        for seed in range(5):
            log = run_session(kind, linear_brain(seed), ACCEPT_PLAN, FilterConfig(seed=seed), seed=seed)
            rates.append(log.test_blocks("Radial8Big")[0].summary()["n_success"])
        dt = time.perf_counter() - t0
        mean = float(np.mean(rates))
        passed = mean >= 14 and dt < 180
        ok &= passed
        parts.append(f"{kind} {mean:.1f}/16 ({dt:.0f}s)")
    return ok, "Radial8Big test successes: " + ", ".join(parts)


def _rtp_reach_time(log: SessionLog) -> float:
    times = [t.reach_time for b in log.test_blocks("RTP") for t in b.trials if t.outcome == "Success"]
    return float(np.mean(times)) if times else float("nan")


def check_closed_loop_advantage() -> tuple[bool, str]:
    wins, pairs, rt = 0, [], []
    for seed in range(10):
        dl, kl = banded_session("dyensemble", seed), banded_session("kalman", seed)
        d, k = dl.success_rate("RTP"), kl.success_rate("RTP")
        wins += d >= k
        pairs.append(f"{d:.2f}/{k:.2f}")
        rt.append((_rtp_reach_time(dl), _rtp_reach_time(kl)))
    rd, rk = np.nanmean(rt, axis=0)
    return wins >= 8, (
        f"DyEn >= Kalman RTP success in {wins}/10 sessions (DyEn/Kalman: {' '.join(pairs)}); "
        f"mean RTP reach time {rd:.2f}s vs {rk:.2f}s"
    )


def linear_weight_by_tercile(log: SessionLog) -> np.ndarray:
    trials = [t for b in log.test_blocks() for t in b.trials]
    dec = np.vstack([t.decoded for t in trials])
    post = np.vstack([t.model_posterior for t in trials])
    lin = log.model_ids.index("linear")
    return tercile_weights(np.hypot(dec[:, 0], dec[:, 1]), post)[:, lin]


def check_speed_regimes() -> tuple[bool, str]:
    w = np.array([linear_weight_by_tercile(banded_session("dyensemble", s)) for s in range(5)])
    low, high = float(np.nanmean(w[:, 0])), float(np.nanmean(w[:, 2]))
    return low > high, f"linear weight: low-speed tercile {low:.4f}, high-speed tercile {high:.4f}"


ACCEPTANCE = (
    Check("A1", "equation-level oracle", check_hand_enumeration, 1.0),
    Check("A2", "Kalman equivalence", check_kalman_equivalence, 120.0),
    Check("A3", "dominant-model tracking", check_dominance, 60.0),
    Check("A4", "decoder ordering", check_ordering, 300.0),
    Check("A5", "closed-loop sanity", check_closed_loop_sanity, 5 * 180.0),
    Check("A6", "closed-loop advantage under variability", check_closed_loop_advantage, 900.0),
    Check("A7", "invariant suite", check_invariants, 120.0),
    Check("A8", "speed-weight regime check", check_speed_regimes, 300.0),
)

ORACLE = (
    Check("O1", "hand-enumerated ensemble step", check_hand_enumeration, 1.0),
    Check("O2", "textbook Kalman recursion", check_kalman_textbook),
    Check("O3", "linear-domain marginal likelihood", check_linear_domain_marginal),
    Check("O4", "Kalman equivalence", check_kalman_equivalence, 300.0),
)

UNIT = tuple(Check(f"U{i + 1}", name, fn) for i, (name, fn) in enumerate(INVARIANTS))

SUITES = {"unit": UNIT, "oracle": ORACLE, "acceptance": ACCEPTANCE}


def run_check(check: Check) -> tuple[bool, str, float]:
    t0 = time.perf_counter()
    try:
        passed, detail = check.fn()
    except Exception as exc:  # a crashing check is a failing check
        passed, detail = False, f"{type(exc).__name__}: {exc}"
    dt = time.perf_counter() - t0
    if check.budget_s is not None and dt >= check.budget_s:
        passed = False
        detail += f"; runtime {dt:.1f}s exceeds {check.budget_s:.0f}s"
    return passed, detail, dt


def format_line(check: Check, passed: bool, detail: str, dt: float) -> str:
    return f"{'PASS' if passed else 'FAIL'} {check.key} {check.title}: {detail} [{dt:.1f}s]"


def run_suite(name: str, out: Optional[TextIO] = None) -> bool:
    out = sys.stdout if out is None else out
    ok = True
    for check in SUITES[name]:
        passed, detail, dt = run_check(check)
        ok &= passed
        print(format_line(check, passed, detail, dt), file=out, flush=True)
    return ok
