"""Acceptance gate: the nine end-to-end criteria at their stated tolerances.

Each test records a verdict line (see ``conftest.py``) before asserting, so a
run prints one PASS/FAIL line per criterion in the terminal summary.  Run it
alone with ``pytest tests/test_acceptance.py`` or ``python tests/test_acceptance.py``.

The two 5,000-iteration models of criterion 1 are reused by criteria 5-7.
Training is deterministic, so they are cached in the pytest cache directory
under a key that covers the package sources and every training input.
"""

import hashlib
import time
import warnings
from pathlib import Path

import numpy as np
import pytest

import specrecon
from gradcheck import LAYER_KINDS, check_layer, check_model, layer_case, residual_case
from oracles import quad_objective, refined_lattice_argmin
from specrecon.bench import benchmark
from specrecon.cli import main as cli_main
from specrecon.config import load_config
from specrecon.core import EncodedSignal, RngSeed, synthetic_response
from specrecon.errors import MaxIterExceeded
from specrecon.evaluation import evaluate
from specrecon.hda import HdaConfig, device_readouts, perturb_response, perturb_signal, shifted_device
from specrecon.nnet.checkpoint import load_checkpoint, save_checkpoint
from specrecon.nnet.model import RespecArch
from specrecon.nnet.train import TrainConfig, reconstruct_batch, train
from specrecon.simgen import SimConfig, simulate_batch
from specrecon.solvers import SolverConfig, kkt_residual, nnls, nnls_tv, select_tv_lambda

ITERATIONS = 5000
BATCH = 64          # spectra per iteration, each expanded to S*T rows under HDA
N_TEST = 500
TRAIN_SEED = RngSeed(1)
DEVICE_SEED = RngSeed(4242)   # the unseen "true device" draw of the pseudo-real domain


def record(verdicts, n, ok, title, detail):
    verdicts[n] = (bool(ok), title, detail)
    print(f"criterion {n} {'PASS' if ok else 'FAIL'}: {title}: {detail}")


# -- shared setup ------------------------------------------------------------------------------

@pytest.fixture(scope="module")
def setup():
    cfg = load_config()
    d = cfg.device
    R = synthetic_response(d.K, d.L, seed=d.seed, scale=d.scale)
    return cfg, R, shifted_device(R, cfg.hda.alpha, DEVICE_SEED)


def pseudo_real(setup, sim, label, n=N_TEST):
    """Held-out spectra with clean in-domain readouts and pseudo-real readouts
    (unseen device draw plus unseen rectified readout noise)."""
    cfg, R, Rdev = setup
    seeds = [RngSeed(2024).child(label, i) for i in range(n)]
    X, _ = simulate_batch(sim, seeds)
    return X, X @ R.entries.T, device_readouts(X, Rdev, cfg.hda.sigma_eps, seeds)


def _source_digest():
    h = hashlib.sha256()
    for p in sorted(Path(specrecon.__file__).parent.rglob("*.py")):
        h.update(p.read_bytes())
    return h.hexdigest()[:16]


@pytest.fixture(scope="module")
def models(setup, request):
    cfg, R, _ = setup
    tcfg = TrainConfig(batch_size=BATCH, iterations=ITERATIONS, learning_rate=cfg.train.learning_rate,
                       seed=TRAIN_SEED)
    out = {}
    cache = Path(request.config.cache.mkdir("specrecon-acceptance"))
    for name, hda in (("hda", cfg.hda), ("no_hda", HdaConfig.disabled())):
        key = hashlib.sha256(repr((_source_digest(), R.entries.tobytes(), hda.digest(), tcfg, cfg.sim,
                                   cfg.arch)).encode()).hexdigest()[:16]
        path = cache / f"{name}-{key}.rspn"
        if path.is_file():
            out[name] = load_checkpoint(path)
        else:
            t0 = time.perf_counter()
            out[name] = train(R, cfg.sim, hda, tcfg, arch=cfg.arch)
            print(f"trained {name} in {time.perf_counter() - t0:.0f} s")
            save_checkpoint(out[name], path)
    return out


def rmse(A, B):
    return float(np.sqrt(np.mean((A - B) ** 2)))


# -- 1. domain gap -------------------------------------------------------------------------------

def test_criterion_1_domain_gap(setup, models, verdicts):
    cfg = setup[0]
    X, Yin, Yreal = pseudo_real(setup, cfg.sim, "gap")
    r = {name: (rmse(reconstruct_batch(ck, Yin), X), rmse(reconstruct_batch(ck, Yreal), X))
         for name, ck in models.items()}
    gain = 1.0 - r["hda"][1] / r["no_hda"][1]
    ok_a = r["hda"][0] < 0.08 and r["no_hda"][0] < 0.08
    ok_b = gain >= 0.20
    record(verdicts, 1, ok_a and ok_b, "HDA domain-gap ablation",
           f"in-domain hda={r['hda'][0]:.4f} no_hda={r['no_hda'][0]:.4f} (<0.08: {ok_a}); "
           f"pseudo-real hda={r['hda'][1]:.4f} no_hda={r['no_hda'][1]:.4f}, "
           f"reduction {100 * gain:.1f}% (>=20%: {ok_b})")
    assert ok_a, r
    assert ok_b, r


# -- 2. NNLS -------------------------------------------------------------------------------------

def test_criterion_2_nnls(verdicts):
    worst_kkt = worst_ls = 0.0
    for i in range(100):
        rng = np.random.default_rng([2, i])
        A = rng.uniform(0, 1, (16, 206))
        x = np.where(rng.uniform(size=206) < 0.05, rng.uniform(0.2, 1.0, 206), 0.0)
        y = A @ x
        xh = nnls(A, y).x_hat
        worst_kkt = max(worst_kkt, kkt_residual(A, y, xh))
        P = xh > 0
        if P.any():
            ls = np.linalg.lstsq(A[:, P], y, rcond=None)[0]
            worst_ls = max(worst_ls, float(np.max(np.abs(ls - xh[P]))))
        assert np.all(xh >= 0)
    worst_oracle = 0.0
    for i in range(50):
        rng = np.random.default_rng([22, i])
        L = int(rng.integers(1, 4))
        # K >= L keeps the minimiser unique, so coordinates are comparable
        K = L + int(rng.integers(0, 3))
        A = rng.uniform(0.2, 1.0, (K, L)) + np.eye(K, L)
        b = A @ rng.uniform(-0.5, 1.0, L) + 0.1 * rng.normal(size=K)
        ref = refined_lattice_argmin(quad_objective(A, b), L, 2.0)
        worst_oracle = max(worst_oracle, float(np.max(np.abs(nnls(A, b).x_hat - ref))))
    ok = worst_kkt < 1e-8 and worst_ls < 1e-8 and worst_oracle < 1e-2
    record(verdicts, 2, ok, "Lawson-Hanson NNLS",
           f"max KKT residual {worst_kkt:.2e}, max support-LS gap {worst_ls:.2e}, "
           f"max lattice-oracle gap {worst_oracle:.2e}")
    assert ok


# -- 3. NNLS-TV ----------------------------------------------------------------------------------

def test_criterion_3_nnls_tv(verdicts):
    rises = 0
    lam0_gap = lam_big_gap = 0.0
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", MaxIterExceeded)
        for i in range(100):
            rng = np.random.default_rng([3, i])
            A = rng.uniform(0, 1, (16, 206))
            x = np.where(rng.uniform(size=206) < 0.05, rng.uniform(0.2, 1.0, 206), 0.0)
            y = A @ x + 0.01 * rng.normal(size=16)
            rep = nnls_tv(A, y, SolverConfig(tv_lambda=float(10.0 ** rng.uniform(-3, 0)), max_iter=300))
            rises += int(np.sum(np.diff(rep.objective_history) > 0))
        for i in range(10):
            rng = np.random.default_rng([33, i])
            A = rng.uniform(0, 1, (16, 12))
            y = rng.uniform(0, 1, 16)
            tol = 1e-12
            got = nnls_tv(A, y, SolverConfig(tv_lambda=0.0, max_iter=20000, tol=tol)).final_objective
            lam0_gap = max(lam0_gap, abs(got - nnls(A, y).final_objective) / np.dot(y, y))
            A = rng.uniform(0, 1, (16, 206))
            y = A @ rng.uniform(0, 1, 206)
            r1 = A.sum(axis=1)
            c = max(0.0, float(r1 @ y / (r1 @ r1)))
            xh = nnls_tv(A, y, SolverConfig(tv_lambda=1e6, max_iter=5000, tol=1e-14)).x_hat
            lam_big_gap = max(lam_big_gap, float(np.max(np.abs(xh - c))))
    ok = rises == 0 and lam0_gap <= 1e-9 and lam_big_gap < 1e-3
    record(verdicts, 3, ok, "NNLS-TV",
           f"objective increases over 100 runs: {rises}; lambda=0 vs NNLS relative gap {lam0_gap:.1e}; "
           f"lambda=1e6 distance to best constant {lam_big_gap:.1e}")
    assert ok


# -- 4. gradients ----------------------------------------------------------------------------------

def test_criterion_4_gradients(verdicts):
    worst = {}
    for k, kind in enumerate(LAYER_KINDS):
        rng = np.random.default_rng([4, k])
        worst[kind] = max(check_layer(*layer_case(kind, rng), rng) for _ in range(100))
    rng = np.random.default_rng(4)
    worst["residual"] = max(check_layer(*residual_case(rng), rng) for _ in range(100))
    worst["ReSpecNN"] = check_model(RespecArch(), n_params=20, seed=4)[0]
    ok = max(worst.values()) < 1e-4
    record(verdicts, 4, ok, "gradient integrity",
           ", ".join(f"{k} {v:.1e}" for k, v in worst.items()))
    assert ok


# -- 5. / 6. peak accuracy --------------------------------------------------------------------------

def test_criterion_5_peak_position(setup, models, verdicts):
    cfg = setup[0]
    X, _, Yreal = pseudo_real(setup, SimConfig(m_peaks=1), "single")
    rep = evaluate(X, reconstruct_batch(models["hda"], Yreal), cfg.eval.grid(X.shape[1]))
    within = np.zeros(len(X), dtype=bool)
    seen = np.zeros(len(X), dtype=bool)
    for p in rep.per_peak:
        ok_p = p.matched and abs(p.rel_position_error) <= 0.05
        within[p.sample] = ok_p if not seen[p.sample] else within[p.sample] and ok_p
        seen[p.sample] = True
    frac = float(np.mean(within))
    ok = rep.mae < 0.03 and frac >= 0.90
    record(verdicts, 5, ok, "peak position band",
           f"MAE {rep.mae:.4f} (<0.03), {100 * frac:.1f}% of samples within +-5% (>=90%), "
           f"{rep.n_unmatched_truth} unmatched truth peaks")
    assert ok


def test_criterion_6_minor_intensity(setup, models, verdicts):
    cfg = setup[0]
    X, _, Yreal = pseudo_real(setup, SimConfig(m_peaks=2), "double")
    rep = evaluate(X, reconstruct_batch(models["hda"], Yreal), cfg.eval.grid(X.shape[1]))
    e = rep.minor_intensity_errors()
    frac = float(np.mean(e < 0.5))
    ok = frac >= 0.90
    record(verdicts, 6, ok, "minor-peak intensity band",
           f"{100 * frac:.1f}% of {e.size} minor peaks with |dI/I| < 0.5 (>=90%); "
           f"{int(np.isinf(e).sum())} unmatched counted as failures, "
           f"{100 * np.mean(e[np.isfinite(e)] < 0.5):.1f}% of matched within band")
    assert ok


# -- 7. timing ---------------------------------------------------------------------------------------

def test_criterion_7_timing(setup, models, verdicts):
    cfg, R, _ = setup
    X, _, Y = pseudo_real(setup, cfg.sim, "timing", n=200)
    Xv, _, Yv = pseudo_real(setup, cfg.sim, "timing-val", n=10)
    base = SolverConfig(max_iter=1000, tol=1e-7)
    fac, _ = select_tv_lambda(R, Xv, Yv, base=base)
    scfg = SolverConfig(tv_lambda=fac, tv_relative=True, max_iter=1000, tol=1e-7)
    model = models["hda"].model
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", MaxIterExceeded)
        nn = benchmark(lambda y: reconstruct_batch(model, y[None, :]), Y, repeats=5, name="nn")
        tv = benchmark(lambda y: nnls_tv(R, y, scfg), Y, repeats=5, name="nnls-tv")
    ok = nn.mean_ms < tv.mean_ms
    record(verdicts, 7, ok, "timing ordering",
           f"NN {nn.mean_ms:.3f} +- {nn.std_ms:.3f} ms, NNLS-TV {tv.mean_ms:.3f} +- {tv.std_ms:.3f} ms "
           f"per sample (lambda factor {fac:g}; {nn.hardware})")
    assert ok


# -- 8. determinism ------------------------------------------------------------------------------------

def test_criterion_8_cli_determinism(tmp_path, verdicts):
    cfg = tmp_path / "small.ini"
    cfg.write_text("[train]\nbatch_size = 8\niterations = 15\n")
    same = {}
    for run in ("a", "b"):
        d = tmp_path / run
        assert cli_main(["gen", "--n", "8", "--seed", "11", "--out", str(d / "gen")]) == 0
        assert cli_main(["augment", str(d / "gen"), "--seed", "11", "--out", str(d / "aug")]) == 0
        assert cli_main(["train", "--config", str(cfg), "--seed", "11", "--out", str(d / "m.rspn")]) == 0
    files = [f"gen/{n}" for n in ("x.csv", "y.csv", "manifest.json", "response.csv", "response.json")]
    files += [f"aug/{n}" for n in ("x.csv", "y.csv", "manifest.json")] + ["m.rspn"]
    for f in files:
        same[f] = (tmp_path / "a" / f).read_bytes() == (tmp_path / "b" / f).read_bytes()
    ok = all(same.values())
    record(verdicts, 8, ok, "CLI determinism",
           f"{sum(same.values())}/{len(same)} files byte-identical across reruns" +
           ("" if ok else f"; differing: {[f for f, s in same.items() if not s]}"))
    assert ok


# -- 9. HDA statistics ---------------------------------------------------------------------------------

def test_criterion_9_hda_statistics(setup, verdicts):
    cfg, R, _ = setup
    alpha, n = cfg.hda.alpha, 10**4
    E = R.entries
    s1 = np.zeros_like(E)
    s2 = np.zeros_like(E)
    for i in range(n):
        d = perturb_response(R, alpha, RngSeed(9).child("delta", i)).entries - E
        s1 += d
        s2 += d * d
    std = np.sqrt((s2 - s1 * s1 / n) / (n - 1))
    live = E > 0
    rel = np.abs(std[live] / (alpha * E[live]) - 1.0)
    y0 = EncodedSignal(np.zeros(R.rows))
    pos = np.mean([perturb_signal(y0, cfg.hda.sigma_eps, RngSeed(9).child("eps", i)).values > 0
                   for i in range(n)])
    ok = rel.max() < 0.03 and abs(pos - 0.5) <= 0.01
    record(verdicts, 9, ok, "HDA statistics",
           f"worst per-entry std deviation from alpha*R_ij {100 * rel.max():.2f}% over {live.sum()} entries "
           f"(<3%); positive noise fraction {pos:.4f} (0.5 +- 0.01)")
    assert ok


if __name__ == "__main__":
    import sys
    sys.exit(pytest.main([__file__, "-v"]))
