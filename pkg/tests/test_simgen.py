import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import stats

from specrecon.core import ResponseMatrix, RngSeed, Spectrum, WavelengthGrid, encode
from specrecon.errors import DegenerateSpectrum, DimensionMismatch
from specrecon.evaluation import detect_peaks
from specrecon.simgen import (PeakParams, SimConfig, _peaks_to_values, generate_dataset, lorentzian,
                              sample_peaks, sample_seed, simulate_batch, simulate_pair,
                              simulate_spectrum)

GRID = WavelengthGrid.index()


def test_defaults():
    cfg = SimConfig()
    assert cfg.mu_range == (0.0, 205.0)
    assert cfg.gamma_range == (15.0, 20.0)
    assert cfg.intensity_range == (0.25, 1.0)
    assert cfg.grid.count == 206
    assert SimConfig.from_dict(SimConfig(m_peaks=(1, 3)).to_dict()) == SimConfig(m_peaks=(1, 3))


@pytest.mark.parametrize("kw", [dict(m_peaks=0), dict(m_peaks=(3, 2)), dict(mu_range=(5, 1)),
                                dict(gamma_range=(0, 1)), dict(intensity_range=(-1, 1))])
def test_config_validation(kw):
    with pytest.raises(ValueError):
        SimConfig(**kw)


def test_peak_params_validation():
    with pytest.raises(ValueError):
        PeakParams(10, 0, 1)
    with pytest.raises(ValueError):
        PeakParams(10, 1, 0)


# -- lorentzian ---------------------------------------------------------------

def test_lorentzian_height_and_half_width():
    v = lorentzian(PeakParams(100, 15, 0.8), GRID)
    assert v[100] == 0.8
    assert v[85] == pytest.approx(0.4, abs=1e-15)
    assert v[115] == pytest.approx(0.4, abs=1e-15)
    assert np.all((v > 0) & (v <= 0.8))


def test_lorentzian_pointwise_oracle():
    v = lorentzian(PeakParams(100, 15, 0.5), GRID)
    ref = [0.5 * 225.0 / ((j - 100.0) ** 2 + 225.0) for j in range(206)]
    np.testing.assert_allclose(v, ref, rtol=0, atol=1e-14)
    # hand values: two half-widths away gives I / 5
    assert v[130] == pytest.approx(0.1, abs=1e-15)


# -- simulate_spectrum ------------------------------------------------------------

def test_single_peak_maximum_at_nearest_grid_point():
    cfg = SimConfig(m_peaks=1)
    for i in range(20):
        x, (p,) = simulate_spectrum(cfg, RngSeed(i))
        assert x.values.max() == 1.0
        assert np.argmax(x.values) == int(np.floor(p.mu + 0.5))
        assert np.sum(x.values == 1.0) == 1


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2**63), st.integers(1, 5))
def test_normalization_contract(seed, m):
    x, peaks = simulate_spectrum(SimConfig(m_peaks=m), RngSeed(seed))
    assert len(peaks) == m
    assert x.values.min() >= 0
    assert x.values.max() == 1.0


def test_three_peaks_compose_from_lorentzians():
    x, peaks = simulate_spectrum(SimConfig(m_peaks=3), RngSeed(42))
    total = sum(lorentzian(p, GRID) for p in peaks)
    np.testing.assert_allclose(x.values, total / total.max(), rtol=0, atol=1e-15)


def test_sum_is_order_invariant():
    _, peaks = simulate_spectrum(SimConfig(m_peaks=4), RngSeed(9))
    a = _peaks_to_values(peaks, GRID.values)
    b = _peaks_to_values(peaks[::-1], GRID.values)
    np.testing.assert_allclose(a, b, rtol=0, atol=1e-15)


def test_degenerate_spectrum():
    far = [PeakParams(1e9, 1.0, 0.25)]
    with pytest.raises(DegenerateSpectrum):
        _peaks_to_values(far, GRID.values)


def test_sampled_peak_count_range():
    cfg = SimConfig(m_peaks=(1, 3))
    counts = [len(simulate_spectrum(cfg, RngSeed(i))[1]) for i in range(300)]
    assert set(counts) == {1, 2, 3}


def test_batch_matches_single():
    seeds = [RngSeed(3).child(i) for i in range(10)]
    X, P = simulate_batch(SimConfig(m_peaks=(1, 3)), seeds)
    for row, peaks, s in zip(X, P, seeds):
        x, p = simulate_spectrum(SimConfig(m_peaks=(1, 3)), s)
        np.testing.assert_array_equal(row, x.values)
        assert p == peaks


def test_parameter_distributions_are_uniform():
    rng = RngSeed(2024).generator()
    cfg = SimConfig(m_peaks=1000)
    peaks = [p for _ in range(100) for p in sample_peaks(cfg, rng)]
    for name, (lo, hi) in [("mu", cfg.mu_range), ("gamma", cfg.gamma_range),
                           ("intensity", cfg.intensity_range)]:
        v = np.array([getattr(p, name) for p in peaks])
        assert lo <= v.min() and v.max() <= hi
        d = stats.kstest(v, stats.uniform(lo, hi - lo).cdf).statistic
        assert d < 0.01, name


def test_detector_finds_single_noiseless_peak():
    cfg = SimConfig(m_peaks=1)
    for i in range(50):
        x, (p,) = simulate_spectrum(cfg, RngSeed(100 + i))
        found = detect_peaks(x)
        assert len(found) == 1
        assert abs(found[0].index - p.mu) <= 1


# -- pairs and datasets -----------------------------------------------------------

def test_pair_identity_response_and_encode_oracle():
    cfg = SimConfig(m_peaks=2)
    pair = simulate_pair(cfg, ResponseMatrix(np.eye(206)), RngSeed(5))
    np.testing.assert_array_equal(pair.y.values, pair.x.values)
    R = ResponseMatrix(np.random.default_rng(0).uniform(0, 1, (16, 206)))
    pair = simulate_pair(cfg, R, RngSeed(5))
    x, _ = simulate_spectrum(cfg, RngSeed(5))
    np.testing.assert_array_equal(pair.y.values, encode(R, x).values)
    assert np.all(pair.y.values >= 0)
    assert pair.seed_trace == (RngSeed(5),)


def test_pair_dimension_mismatch():
    with pytest.raises(DimensionMismatch):
        simulate_pair(SimConfig(), ResponseMatrix(np.ones((4, 10))), RngSeed(0))


def test_generate_dataset():
    R = ResponseMatrix(np.random.default_rng(0).uniform(0, 1, (16, 206)))
    cfg = SimConfig(m_peaks=(1, 3))
    one = generate_dataset(cfg, R, 1, RngSeed(8))[0]
    ref = simulate_pair(cfg, R, sample_seed(RngSeed(8), 0))
    np.testing.assert_array_equal(one.x.values, ref.x.values)
    a = generate_dataset(cfg, R, 256, RngSeed(8))
    b = generate_dataset(cfg, R, 256, RngSeed(8))
    assert len(a) == 256
    for p, q in zip(a, b):
        np.testing.assert_array_equal(p.y.values, q.y.values)
        assert p.x.values.max() == 1.0
    with pytest.raises(ValueError):
        generate_dataset(cfg, R, 0, RngSeed(8))
