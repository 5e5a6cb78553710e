import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from specrecon.core import (EncodedSignal, ResponseMatrix, RngSeed, Spectrum, WavelengthGrid,
                            encode, encode_batch, gaussian_stream, synthetic_response)
from specrecon.errors import DimensionMismatch


def naive_encode(R, x):
    K, L = len(R), len(R[0])
    y = [0.0] * K
    for i in range(K):
        for j in range(L):
            y[i] += R[i][j] * x[j]
    return np.array(y)


# -- WavelengthGrid ---------------------------------------------------------

def test_grid_values_and_nm_mapping():
    g = WavelengthGrid.nm(206)
    assert g.value(0) == 400.0
    assert g.value(205) == 605.0
    np.testing.assert_array_equal(np.diff(g.values), np.ones(205))
    assert WavelengthGrid.from_dict(g.to_dict()) == g


@pytest.mark.parametrize("kw", [dict(step=0.0), dict(step=-1.0), dict(count=1), dict(count=2.5)])
def test_grid_rejects_bad_parameters(kw):
    with pytest.raises(ValueError):
        WavelengthGrid(**kw)


# -- types ------------------------------------------------------------------

def test_spectrum_rejects_negative_and_wrong_length():
    g = WavelengthGrid.index(4)
    with pytest.raises(ValueError):
        Spectrum(g, [0.0, -0.1, 0.2, 0.3])
    with pytest.raises(DimensionMismatch):
        Spectrum(g, [0.0, 0.1, 0.2])


def test_types_are_frozen():
    s = Spectrum(WavelengthGrid.index(3), [0.0, 1.0, 0.5])
    with pytest.raises(ValueError):
        s.values[0] = 2.0


def test_response_matrix_invariants():
    with pytest.raises(ValueError):
        ResponseMatrix([[1.0, -1.0]])
    with pytest.raises(ValueError, match="dead"):
        ResponseMatrix([[1.0, 0.0], [0.0, 0.0]])
    R = ResponseMatrix([[1.0, -0.01]], perturbed=True)
    assert R.shape == (1, 2)


def test_normalized_signal_must_span_unit_interval():
    EncodedSignal([0.0, 0.3, 1.0], normalized=True)
    with pytest.raises(ValueError):
        EncodedSignal([0.1, 0.3, 1.0], normalized=True)


def test_external_signal_warns_on_negatives():
    with pytest.warns(RuntimeWarning):
        EncodedSignal.external([0.1, -0.2])
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        EncodedSignal.external([0.1, 0.2])


# -- encode -----------------------------------------------------------------

def test_encode_zero_and_identity():
    R = ResponseMatrix(np.eye(5))
    x = Spectrum(WavelengthGrid.index(5), [0.1, 0.0, 0.4, 1.0, 0.2])
    np.testing.assert_array_equal(encode(R, x).values, x.values)
    z = Spectrum(WavelengthGrid.index(5), np.zeros(5))
    np.testing.assert_array_equal(encode(R, z).values, np.zeros(5))
    assert not encode(R, x).normalized


def test_encode_matches_double_loop():
    rng = np.random.default_rng(3)
    R = rng.uniform(0, 1, (4, 6))
    x = rng.uniform(0, 1, 6)
    y = encode(ResponseMatrix(R), Spectrum(WavelengthGrid.index(6), x)).values
    np.testing.assert_allclose(y, naive_encode(R.tolist(), x.tolist()), rtol=0, atol=1e-12)


def test_encode_dimension_mismatch():
    R = ResponseMatrix(np.ones((2, 4)))
    with pytest.raises(DimensionMismatch):
        encode(R, Spectrum(WavelengthGrid.index(5), np.ones(5)))
    with pytest.raises(DimensionMismatch):
        encode_batch(R, np.ones((3, 5)))


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 2**32 - 1), st.floats(0, 10), st.floats(0, 10))
def test_encode_is_linear_and_monotone(seed, a, b):
    rng = np.random.default_rng(seed)
    R = ResponseMatrix(rng.uniform(0, 1, (3, 8)))
    x1, x2 = rng.uniform(0, 1, (2, 8))
    lhs = encode(R, a * x1 + b * x2).values
    rhs = a * encode(R, x1).values + b * encode(R, x2).values
    np.testing.assert_allclose(lhs, rhs, rtol=0, atol=1e-10)
    lo, hi = np.minimum(x1, x2), np.maximum(x1, x2)
    assert np.all(encode(R, lo).values <= encode(R, hi).values)


# -- seeds and streams ------------------------------------------------------

def test_gaussian_stream_empty_and_deterministic():
    assert gaussian_stream(RngSeed(1), 0).shape == (0,)
    np.testing.assert_array_equal(gaussian_stream(RngSeed(1, "a"), 50), gaussian_stream(RngSeed(1, "a"), 50))
    assert not np.array_equal(gaussian_stream(RngSeed(1, "a"), 50), gaussian_stream(RngSeed(1, "b"), 50))


def test_gaussian_stream_moments():
    n = 10**6
    z = gaussian_stream(RngSeed(11), n)
    # standard errors are 1/sqrt(n) = 1e-3 and sqrt(2/n) = 1.4e-3
    assert abs(z.mean()) < 0.01
    assert abs(z.var() - 1) < 0.01


def test_gaussian_stream_frozen_values():
    # the generator is Philox keyed by blake2b, so this must never change
    z = gaussian_stream(RngSeed(0), 3)
    np.testing.assert_array_equal(z, [-0.3496029965009119, -0.33098851925537276, 0.29729398508859634])


def test_child_seeds_are_distinct_and_path_sensitive():
    s = RngSeed(5)
    kids = {s.child("sample", i).seed for i in range(1000)}
    assert len(kids) == 1000
    assert s.child("a", 1) != s.child("a", 2)
    assert s.child("x", 3).stream_label == "x/3"


def test_seed_range():
    with pytest.raises(ValueError):
        RngSeed(-1)
    with pytest.raises(ValueError):
        RngSeed(2**64)


# -- synthetic device -------------------------------------------------------

def test_synthetic_response_shape_scale_and_determinism():
    R = synthetic_response(16, 206, seed=7, scale=1e-5)
    assert R.shape == (16, 206)
    assert np.all(R.entries >= 0)
    np.testing.assert_allclose(R.entries.max(axis=1), 1e-5)
    np.testing.assert_array_equal(R.entries, synthetic_response(16, 206, seed=7, scale=1e-5).entries)
    assert not np.array_equal(R.entries, synthetic_response(16, 206, seed=8, scale=1e-5).entries)
