"""Command-line front end: ``specrecon gen | augment | train | reconstruct | eval | bench``.

Commands communicate through files: a dataset is a directory holding
``x.csv``, ``y.csv``, ``manifest.json`` and the ``response.csv`` (+ sidecar)
it was encoded with.  Errors are reported as one JSON line on stderr.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import replace
from pathlib import Path

import numpy as np
from threadpoolctl import threadpool_limits

from . import io as sio
from .bench import benchmark
from .config import RunConfig, load_config
from .core import ResponseMatrix, RngSeed, synthetic_response
from .errors import BadConfig, DimensionMismatch, IoError, MaxIterExceeded, SpecReconError
from .evaluation import evaluate, intensity_error_csv, position_error_csv
from .hda import HdaConfig, augment_batch, delta_seed, eps_seed
from .nnet.checkpoint import load_checkpoint, save_checkpoint
from .nnet.train import reconstruct_batch, response_digest, train
from .simgen import sample_seed, simulate_spectrum
from .solvers import least_squares, nnls, nnls_tv

SOLVERS = {"ls": least_squares, "nnls": nnls, "nnls-tv": nnls_tv}


def _pmap(fn, items, threads: int):
    """Ordered map; output order never depends on ``threads``."""
    if threads <= 1:
        return [fn(i) for i in items]
    with ThreadPoolExecutor(max_workers=threads) as ex:
        return list(ex.map(fn, items))


def _response(cfg: RunConfig, path=None) -> ResponseMatrix:
    path = path or cfg.response_path
    if path:
        R, _ = sio.load_response(path)
        return R
    d = cfg.device
    R = synthetic_response(d.K, d.L, seed=d.seed, scale=d.scale)
    return ResponseMatrix(R.entries, d.source_id)


def _check_dims(R: ResponseMatrix, cfg: RunConfig):
    if R.cols != cfg.sim.grid.count:
        raise DimensionMismatch(f"response has {R.cols} columns but [device] L = {cfg.sim.grid.count}")


def _response_meta(R: ResponseMatrix) -> dict:
    return {"source_id": R.source_id, "K": R.rows, "L": R.cols, "sha256_16": response_digest(R)}


# -- commands ----------------------------------------------------------------


def cmd_gen(cfg: RunConfig, out_dir, n: int | None = None, threads: int = 1, response=None) -> Path:
    """Simulate ``n`` spectra and their noiseless readouts into ``out_dir``."""
    n = cfg.n_samples if n is None else n
    if n < 1:
        raise BadConfig(f"n_samples must be >= 1, got {n}")
    R = _response(cfg, response)
    _check_dims(R, cfg)
    master = RngSeed(cfg.seed).child("gen")
    seeds = [sample_seed(master, i) for i in range(n)]
    results = _pmap(lambda s: simulate_spectrum(cfg.sim, s), seeds, threads)
    X = np.stack([x.values for x, _ in results])
    Y = X @ R.entries.T
    out = Path(out_dir)
    sio.save_response(R, out / sio.RESPONSE_FILE)
    manifest = {
        "kind": "dataset",
        "provenance": "simulated",
        "master_seed": master.to_dict(),
        "sample_seeds": [s.to_dict() for s in seeds],
        "peaks": [[[p.mu, p.gamma, p.intensity] for p in peaks] for _, peaks in results],
        "sim_config": cfg.sim.to_dict(),
        "response": _response_meta(R),
    }
    return sio.save_dataset(out, X, Y, manifest)


def _dataset_response(dataset) -> ResponseMatrix:
    path = Path(dataset) / sio.RESPONSE_FILE
    if not path.is_file():
        raise BadConfig(f"dataset {dataset} has no {sio.RESPONSE_FILE}")
    R, _ = sio.load_response(path)
    return R


def cmd_augment(cfg: RunConfig, dataset, out_dir, hda: HdaConfig | None = None) -> Path:
    """Expand every spectrum of ``dataset`` into ``S * T`` augmented readouts."""
    hda = hda or cfg.hda
    X, _, src = sio.load_dataset(dataset)
    if X is None:
        raise BadConfig(f"dataset {dataset} has no {sio.X_FILE}")
    R = _dataset_response(dataset)
    master = RngSeed(cfg.seed).child("augment")
    seeds = [master.child("sample", i) for i in range(len(X))]
    Y, Xrep = augment_batch(X, R, hda, seeds)
    records = [{"sample": i, "s_index": s, "t_index": t,
                "delta_seed": delta_seed(sd, s).to_dict(), "eps_seed": eps_seed(sd, s, t).to_dict()}
               for i, sd in enumerate(seeds) for s in range(hda.s_outer) for t in range(hda.t_inner)]
    out = Path(out_dir)
    sio.save_response(R, out / sio.RESPONSE_FILE)
    manifest = {
        "kind": "dataset",
        "provenance": "augmented",
        "source_manifest": src,
        "master_seed": master.to_dict(),
        "hda_config": hda.to_dict(),
        "hda_config_hash": hda.digest(),
        "perturbations": records,
        "response": _response_meta(R),
    }
    return sio.save_dataset(out, Xrep, Y, manifest)


def cmd_train(cfg: RunConfig, out_path, no_hda: bool = False, resume=None, iterations=None,
              response=None) -> Path:
    R = _response(cfg, response)
    _check_dims(R, cfg)
    hda = HdaConfig.disabled() if no_hda else cfg.hda
    tcfg = cfg.train if iterations is None else replace(cfg.train, iterations=int(iterations))
    start = load_checkpoint(resume) if resume else None
    ck = train(R, cfg.sim, hda, tcfg, arch=cfg.arch, resume=start, log_every=cfg.log_every)
    out = Path(out_path)
    out.parent.mkdir(parents=True, exist_ok=True)
    try:
        save_checkpoint(ck, out)
    except OSError as exc:
        raise IoError(f"cannot write checkpoint {out}: {exc}") from exc
    return out


def _readouts(path) -> tuple[np.ndarray, Path | None]:
    """Readouts from a dataset directory or a bare CSV file."""
    p = Path(path)
    if p.is_dir():
        _, Y, _ = sio.load_dataset(p)
        return Y, p
    return sio.read_matrix(p), None


def cmd_reconstruct(cfg: RunConfig, y_path, out_path, checkpoint=None, solver=None, response=None,
                    tv_lambda=None, max_iter=None, tol=None, threads: int = 1) -> Path:
    Y, ds = _readouts(y_path)
    if checkpoint is not None:
        ck = load_checkpoint(checkpoint)
        if Y.shape[1] != ck.arch.input_dim:
            raise DimensionMismatch(f"readouts have K={Y.shape[1]}, model expects {ck.arch.input_dim}")
        X = reconstruct_batch(ck, Y)
    else:
        if solver not in SOLVERS:
            raise BadConfig(f"choose --checkpoint or --solver from {sorted(SOLVERS)}")
        if response:
            R = _response(cfg, response)
        elif ds is not None and (ds / sio.RESPONSE_FILE).is_file():
            R = _dataset_response(ds)
        else:
            R = _response(cfg)
        if Y.shape[1] != R.rows:
            raise DimensionMismatch(f"readouts have K={Y.shape[1]}, response has {R.rows} rows")
        scfg = cfg.solver
        over = {k: v for k, v in (("tv_lambda", tv_lambda), ("max_iter", max_iter), ("tol", tol))
                if v is not None}
        scfg = replace(scfg, **over)
        fn = SOLVERS[solver]
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", MaxIterExceeded)
            if solver == "ls":
                reps = _pmap(lambda y: fn(R, y), list(Y), threads)
            else:
                reps = _pmap(lambda y: fn(R, y, scfg), list(Y), threads)
        X = np.stack([r.x_hat for r in reps])
    sio.write_matrix(out_path, X)
    return Path(out_path)


def _spectra(path) -> np.ndarray:
    p = Path(path)
    if p.is_dir():
        X, _, _ = sio.load_dataset(p)
        if X is None:
            raise IoError(f"dataset {p} has no {sio.X_FILE}")
        return X
    return sio.read_matrix(p)


def cmd_eval(cfg: RunConfig, truth, recon, out_dir) -> Path:
    """Write ``metrics.json``, ``position_errors.csv`` and ``intensity_errors.csv``."""
    Xt, Xr = _spectra(truth), _spectra(recon)
    e = cfg.eval
    rep = evaluate(Xt, Xr, e.grid(Xt.shape[1]), e.min_prominence, e.min_separation, e.match_window)
    out = Path(out_dir)
    sio.write_json(out / "metrics.json", rep.to_dict())
    sio._atomic_write(out / "position_errors.csv", position_error_csv(rep).encode())
    sio._atomic_write(out / "intensity_errors.csv", intensity_error_csv(rep).encode())
    return out


def cmd_bench(cfg: RunConfig, dataset, out_path, methods=("nnls-tv",), checkpoint=None,
              repeats=None, n_samples=None, threads: int = 1) -> Path:
    Y, ds = _readouts(dataset)
    if n_samples:
        Y = Y[:n_samples]
    repeats = cfg.bench_repeats if repeats is None else repeats
    if repeats < 3:
        raise BadConfig(f"repeats must be >= 3, got {repeats}")
    R = None
    results = []
    for m in methods:
        if m == "identity":
            fn = lambda y: y  # noqa: E731
        elif m == "nn":
            if checkpoint is None:
                raise BadConfig("method 'nn' needs --checkpoint")
            model = load_checkpoint(checkpoint).model
            fn = lambda y: reconstruct_batch(model, y[None, :])  # noqa: E731
        elif m in SOLVERS:
            if R is None:
                R = _dataset_response(ds) if ds is not None else _response(cfg)
            solve, scfg = SOLVERS[m], cfg.solver
            fn = (lambda y: solve(R, y)) if m == "ls" else (lambda y: solve(R, y, scfg))
        else:
            raise BadConfig(f"unknown bench method {m!r}")
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", MaxIterExceeded)
            results.append(benchmark(fn, Y, repeats, cfg.bench_warmup, name=m, threads=threads).to_dict())
    sio.write_json(out_path, {"results": results})
    return Path(out_path)


# -- argument parsing ----------------------------------------------------------


def _global_flags(p, suppress: bool):
    d = (lambda v: argparse.SUPPRESS) if suppress else (lambda v: v)
    p.add_argument("--config", default=d(None), help="INI file overriding the shipped defaults")
    p.add_argument("--seed", type=int, default=d(None), help="master seed (overrides [run] seed)")
    p.add_argument("--threads", type=int, default=d(os.cpu_count() or 1),
                   help="worker threads for per-sample work (default: all cores)")
    p.add_argument("--out", default=d(None), help="output directory or file")


def build_parser() -> argparse.ArgumentParser:
    """Global flags are accepted before or after the subcommand."""
    p = argparse.ArgumentParser(prog="specrecon", description=__doc__.splitlines()[0])
    _global_flags(p, suppress=False)
    common = argparse.ArgumentParser(add_help=False)
    _global_flags(common, suppress=True)
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gen", parents=[common], help="simulate a dataset")
    g.add_argument("--n", type=int, help="number of spectra (overrides [run] n_samples)")
    g.add_argument("--response", help="response CSV with JSON sidecar")

    a = sub.add_parser("augment", parents=[common], help="apply hierarchical augmentation to a dataset")
    a.add_argument("dataset")

    t = sub.add_parser("train", parents=[common], help="train the reconstruction network")
    t.add_argument("--no-hda", action="store_true", help="train without augmentation")
    t.add_argument("--resume", help="checkpoint to continue from")
    t.add_argument("--iterations", type=int)
    t.add_argument("--response")

    r = sub.add_parser("reconstruct", parents=[common], help="reconstruct spectra from readouts")
    r.add_argument("readouts", help="dataset directory or readout CSV")
    r.add_argument("--checkpoint")
    r.add_argument("--solver", choices=sorted(SOLVERS))
    r.add_argument("--response")
    r.add_argument("--tv-lambda", type=float)
    r.add_argument("--max-iter", type=int)
    r.add_argument("--tol", type=float)

    e = sub.add_parser("eval", parents=[common], help="peak and RMSE metrics")
    e.add_argument("truth", help="dataset directory or spectra CSV")
    e.add_argument("recon", help="reconstructed spectra CSV")

    b = sub.add_parser("bench", parents=[common], help="per-sample timing")
    b.add_argument("dataset")
    b.add_argument("--methods", default="nnls-tv",
                   help="comma-separated: nn, ls, nnls, nnls-tv, identity")
    b.add_argument("--checkpoint")
    b.add_argument("--repeats", type=int)
    b.add_argument("--n-samples", type=int)
    return p


def run(args) -> Path:
    cfg = load_config(args.config)
    if args.seed is not None:
        cfg = cfg.with_seed(args.seed)
    threads = max(1, int(args.threads))
    with threadpool_limits(limits=threads):
        if args.command == "gen":
            return cmd_gen(cfg, args.out, args.n, threads, args.response)
        if args.command == "augment":
            return cmd_augment(cfg, args.dataset, args.out)
        if args.command == "train":
            return cmd_train(cfg, args.out, args.no_hda, args.resume, args.iterations, args.response)
        if args.command == "reconstruct":
            return cmd_reconstruct(cfg, args.readouts, args.out, args.checkpoint, args.solver,
                                   args.response, args.tv_lambda, args.max_iter, args.tol, threads)
        if args.command == "eval":
            return cmd_eval(cfg, args.truth, args.recon, args.out)
        return cmd_bench(cfg, args.dataset, args.out, args.methods.split(","), args.checkpoint,
                         args.repeats, args.n_samples, threads)


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.out is None:
        parser.error("--out is required")
    try:
        run(args)
    except (SpecReconError, OSError, ValueError, KeyError) as exc:
        print(json.dumps({"error": type(exc).__name__, "message": str(exc), "command": args.command}),
              file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
