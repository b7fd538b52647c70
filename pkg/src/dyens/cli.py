"""Command-line entry point: ``dyens session | offline | verify``."""

from __future__ import annotations

import argparse
import dataclasses
import json
import math
import os
import platform
import sys
import tempfile
import time
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from dyens import __version__
from dyens.config import RunConfig, load_config
from dyens.errors import CalibrationFailed, ConfigError
from dyens.evaluation import METRICS_HEADER, weight_speed_histogram, write_csv, write_weights_by_speed
from dyens.simulator.offline import run_offline
from dyens.simulator.session import DECODER_KINDS, SessionLog, run_session

EXIT_OK, EXIT_FAIL, EXIT_CONFIG, EXIT_CALIBRATION = 0, 1, 2, 3


def _vec(a) -> Optional[list]:
    if a is None:
        return None
    out = [None if not math.isfinite(v) else float(v) for v in np.asarray(a, dtype=float).ravel()]
    return None if all(v is None for v in out) else out


def write_session_log(path: Path, log: SessionLog) -> None:
    with open(path, "w") as fh:
        for b in log.blocks:
            for j, tr in enumerate(b.trials):
                for k in range(tr.n_bins):
                    rec = {
                        "block": b.index,
                        "trial": j,
                        "attempt": tr.attempt,
                        "bin": k,
                        "t_bin": tr.first_bin + k,
                        "task": b.task_kind,
                        "mode": b.spec.mode,
                        "assist": b.spec.assist,
                        "target": _vec(tr.target),
                        "intent": _vec(tr.intent[k]),
                        "planner": _vec(tr.planner[k]),
                        "decoded": _vec(tr.decoded[k]),
                        "control": _vec(tr.control[k]),
                        "cursor": _vec(tr.cursor[k]),
                        "model_posterior": None if tr.model_posterior is None else _vec(tr.model_posterior[k]),
                    }
                    fh.write(json.dumps(rec) + "\n")
                fh.write(
                    json.dumps(
                        {
                            "block": b.index,
                            "trial": j,
                            "event": "trial_end",
                            "outcome": tr.outcome,
                            "reach_time_s": tr.reach_time,
                        }
                    )
                    + "\n"
                )


def _atomic_json(path: Path, obj) -> None:
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=".manifest-", suffix=".tmp")
    with os.fdopen(fd, "w") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True)
        fh.write("\n")
    os.replace(tmp, path)


def _manifest(cfg: RunConfig, args, seed: int, outputs: list[str], phases: dict, **extra) -> dict:
    return {
        "command": args.command,
        "config_path": str(args.config),
        "config_sha256": cfg.sha256,
        "seed": seed,
        "versions": {
            "dyens": __version__,
            "numpy": np.__version__,
            "python": platform.python_version(),
        },
        "outputs": outputs,
        "wall_clock_s": phases,
        **extra,
    }


def _seed_dirs(out_dir: Path, seeds: Sequence[int]) -> list[Path]:
    if len(seeds) == 1:
        return [out_dir]
    return [out_dir / f"seed_{s}" for s in seeds]


def _workers(n_jobs: int) -> int:
    try:
        cap = int(os.environ.get("DYENS_THREADS", "1"))
    except ValueError:
        cap = 1
    return max(1, min(cap, n_jobs))


def _map(fn, jobs: list) -> list:
    n = _workers(len(jobs))
    if n == 1:
        return [fn(*j) for j in jobs]
    with ProcessPoolExecutor(max_workers=n) as ex:
        return list(ex.map(fn, *zip(*jobs)))


# ---------------------------------------------------------------- session


def _session_job(cfg: RunConfig, decoder: str, seed: int, out: str, args_ns: dict) -> int:
    out_dir = Path(out)
    out_dir.mkdir(parents=True, exist_ok=True)
    args = argparse.Namespace(**args_ns)
    t0 = time.perf_counter()
    brain = cfg.brain.build(seed, v_max=cfg.task.v_max)
    filt = cfg.filter.build(seed)
    try:
        log = run_session(decoder, brain, cfg.session_plan, filt, seed, cfg.fit, cfg.task.overrides())
    except CalibrationFailed as exc:
        print(f"calibration failed: {exc}", file=sys.stderr)
        return EXIT_CALIBRATION
    t1 = time.perf_counter()

    outputs = ["session.jsonl", "metrics.csv"]
    write_session_log(out_dir / "session.jsonl", log)
    write_csv(out_dir / "metrics.csv", METRICS_HEADER, ([b.summary()[h] for h in METRICS_HEADER] for b in log.blocks))
    test = [t for b in log.test_blocks() for t in b.trials]
    if test and test[0].model_posterior is not None:
        dec = np.vstack([t.decoded for t in test])
        post = np.vstack([t.model_posterior for t in test])
        hist = weight_speed_histogram(np.hypot(dec[:, 0], dec[:, 1]), post, v_max=cfg.task.v_max)
        write_weights_by_speed(out_dir / "weights_by_speed.csv", hist, log.model_ids)
        outputs.append("weights_by_speed.csv")
    t2 = time.perf_counter()
    phases = {"simulate": round(t1 - t0, 3), "write": round(t2 - t1, 3)}
    _atomic_json(out_dir / "manifest.json", _manifest(cfg, args, seed, outputs, phases, decoder=decoder))
    for b in log.blocks:
        s = b.summary()
        print(f"block {s['block_index']:2d} {s['task']:<12} {s['n_success']:2d}/{s['n_trials']} success")
    return EXIT_OK


def cmd_session(args) -> int:
    cfg = load_config(args.config)
    seeds = args.seed if args.seed else [cfg.seed]
    dirs = _seed_dirs(Path(args.out_dir), seeds)
    ns = {"command": "session", "config": str(args.config)}
    codes = _map(_session_job, [(cfg, args.decoder, s, str(d), ns) for s, d in zip(seeds, dirs)])
    return max(codes)


# ---------------------------------------------------------------- offline


def _offline_job(cfg: RunConfig, seed: int, out: str, args_ns: dict) -> int:
    out_dir = Path(out)
    out_dir.mkdir(parents=True, exist_ok=True)
    args = argparse.Namespace(**args_ns)
    t0 = time.perf_counter()
    b = cfg.brain
    res = run_offline(
        cfg.offline,
        seed=seed,
        n_channels=b.n_channels,
        nonlinearity=b.nonlinearity,
        noise_var=b.noise_var,
        hidden_sizes=b.hidden_sizes,
        filter_cfg=cfg.filter.build(seed),
    )
    t1 = time.perf_counter()
    write_csv(out_dir / "offline.csv", ["decoder", "cc", "mse"], res.rows)
    header = ["alpha", "bin", "truth", "dominant"] + [f"w_{m}" for m in res.model_ids]
    rows = []
    for a, post in res.posteriors.items():
        dom = post.argmax(axis=1)
        rows += [[a, t, int(res.truth_schedule[t]), int(dom[t]), *post[t]] for t in range(len(post))]
    write_csv(out_dir / "dominance.csv", header, rows)
    phases = {"simulate": round(t1 - t0, 3), "write": round(time.perf_counter() - t1, 3)}
    acc = {repr(a): v for a, v in res.dominance.items()}
    _atomic_json(
        out_dir / "manifest.json",
        _manifest(cfg, args, seed, ["offline.csv", "dominance.csv"], phases, dominance_accuracy=acc),
    )
    for name, cc, err in res.rows:
        print(f"{name:<12} CC {cc:.4f}  MSE {err:.4f}")
    return EXIT_OK


def cmd_offline(args) -> int:
    cfg = load_config(args.config)
    if args.alphas:
        try:
            cfg = dataclasses.replace(cfg, offline=dataclasses.replace(cfg.offline, alphas=tuple(args.alphas)))
        except ConfigError as exc:
            raise ConfigError(f"--alphas: {exc}") from exc
    seeds = args.seed if args.seed else [cfg.seed]
    dirs = _seed_dirs(Path(args.out_dir), seeds)
    ns = {"command": "offline", "config": str(args.config)}
    return max(_map(_offline_job, [(cfg, s, str(d), ns) for s, d in zip(seeds, dirs)]))


# ---------------------------------------------------------------- verify


def cmd_verify(args) -> int:
    from dyens.verify import run_suite

    return EXIT_OK if run_suite(args.suite) else EXIT_FAIL


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="dyens", description="Dynamic-ensemble decoding simulator")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("session", help="run one closed-loop calibration + test session")
    s.add_argument("config", help="JSON config file")
    s.add_argument("--decoder", choices=DECODER_KINDS, default="dyensemble")
    s.add_argument("--seed", type=int, nargs="+", help="root seed(s); defaults to the config seed")
    s.add_argument("--out-dir", default="out")
    s.set_defaults(func=cmd_session)

    o = sub.add_parser("offline", help="offline decoding on an encoder-switching dataset")
    o.add_argument("config", help="JSON config file")
    o.add_argument("--alphas", type=float, nargs="+", help="forgetting coefficients to evaluate")
    o.add_argument("--seed", type=int, nargs="+", help="root seed(s); defaults to the config seed")
    o.add_argument("--out-dir", default="out")
    o.set_defaults(func=cmd_offline)

    v = sub.add_parser("verify", help="run a built-in check suite")
    v.add_argument("--suite", choices=("unit", "oracle", "acceptance"), default="unit")
    v.set_defaults(func=cmd_verify)
    return p


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
