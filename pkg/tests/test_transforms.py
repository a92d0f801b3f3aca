import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from accs.transforms import (GridShape, SamplingPattern, Sparsifier, partial_fourier_adjoint,
                             partial_fourier_apply, sparsify, unsparsify)

from oracles import partial_fourier_matrix, psi_matrix, random_complex

SHAPES = [(16, 1), (4, 4), (8, 1), (3, 5), (6, 2)]
KINDS = ["identity", "dct2", "dft"]


def test_grid_flatten_is_column_major():
    s = GridShape(2, 3)
    g = np.arange(6).reshape(2, 3)
    assert s.flatten(g).tolist() == [0, 3, 1, 4, 2, 5]
    np.testing.assert_array_equal(s.unflatten(s.flatten(g)), g)


def test_grid_rejects_bad_dims():
    with pytest.raises(ValueError):
        GridShape(0, 3)
    with pytest.raises(ValueError):
        GridShape(2, 2).flatten(np.zeros((3, 2)))


def test_identity_sparsifier_returns_input(rng):
    x = random_complex(rng, 12)
    np.testing.assert_array_equal(sparsify(x, Sparsifier("identity", GridShape(4, 3))), x)


def test_dct_of_constant_image_is_dc_spike():
    psi = Sparsifier("dct2", GridShape(4, 4))
    z = psi.forward(np.ones(16))
    expect = np.zeros(16)
    expect[0] = 4.0
    np.testing.assert_allclose(z, expect, atol=1e-13)


@pytest.mark.parametrize("shape", SHAPES)
@pytest.mark.parametrize("kind", KINDS)
def test_sparsifier_matches_dense_oracle(kind, shape, rng):
    psi = Sparsifier(kind, GridShape(*shape))
    P = psi_matrix(kind, *shape)
    x = random_complex(rng, (psi.N, 3))
    np.testing.assert_allclose(psi.forward(x), P @ x, rtol=0, atol=1e-12 * np.linalg.norm(x))
    np.testing.assert_allclose(psi.inverse(x), P.conj().T @ x, rtol=0,
                               atol=1e-12 * np.linalg.norm(x))


def test_dct_n64_matches_cosine_formula(rng):
    psi = Sparsifier("dct2", GridShape(64))
    x = random_complex(rng, 64)
    ref = psi_matrix("dct2", 64) @ x
    assert np.linalg.norm(psi.forward(x) - ref) <= 1e-12 * np.linalg.norm(ref)


def test_2d_dct_is_rows_then_columns(rng):
    from scipy.fft import dct
    shape = GridShape(6, 5)
    g = random_complex(rng, (6, 5))
    ref = dct(dct(g, axis=0, norm="ortho"), axis=1, norm="ortho")
    out = shape.unflatten(Sparsifier("dct2", shape).forward(shape.flatten(g)))
    np.testing.assert_allclose(out, ref, atol=1e-12)


@given(st.sampled_from(SHAPES), st.sampled_from(KINDS), st.integers(0, 2**32 - 1))
@settings(max_examples=60, deadline=None)
def test_parseval_and_roundtrip(shape, kind, seed):
    rng = np.random.default_rng(seed)
    psi = Sparsifier(kind, GridShape(*shape))
    x = random_complex(rng, psi.N)
    z = psi.forward(x)
    assert abs(np.linalg.norm(z) - np.linalg.norm(x)) <= 1e-12 * np.linalg.norm(x)
    assert np.linalg.norm(unsparsify(z, psi) - x) <= 1e-12 * np.linalg.norm(x)


def test_sparsifier_shape_mismatch():
    with pytest.raises(ValueError):
        Sparsifier("dct2", GridShape(4, 4)).forward(np.zeros(15))


def test_sampling_pattern_validation():
    with pytest.raises(ValueError):
        SamplingPattern(np.array([], dtype=int), 4)
    with pytest.raises(ValueError):
        SamplingPattern(np.array([2, 1]), 4)
    with pytest.raises(ValueError):
        SamplingPattern(np.array([1, 1]), 4)
    with pytest.raises(ValueError):
        SamplingPattern(np.array([0, 4]), 4)
    om = SamplingPattern(np.array([0, 3]), 4)
    assert om.L == 2
    with pytest.raises(ValueError):
        om.indices[0] = 1
    assert om == SamplingPattern([0, 3], 4) and hash(om) == hash(SamplingPattern([0, 3], 4))


def test_full_sampling_is_isometry(rng):
    shape = GridShape(4, 4)
    x = random_complex(rng, 16)
    y = partial_fourier_apply(x, SamplingPattern.full(16), shape)
    assert abs(np.linalg.norm(y) - np.linalg.norm(x)) <= 1e-12 * np.linalg.norm(x)


def test_impulse_has_flat_spectrum():
    shape = GridShape(4, 4)
    om = SamplingPattern([1, 5, 7, 12, 15], 16)
    x = np.zeros(16)
    x[0] = 1.0
    np.testing.assert_allclose(partial_fourier_apply(x, om, shape), np.full(5, 1 / np.sqrt(5)),
                               atol=1e-15)


@pytest.mark.parametrize("shape", [(16, 1), (4, 4), (3, 5)])
def test_partial_fourier_matches_dense(shape, rng):
    gs = GridShape(*shape)
    om = SamplingPattern(np.sort(rng.permutation(gs.N)[:5]), gs.N)
    F = partial_fourier_matrix(om.indices, *shape)
    x = random_complex(rng, (gs.N, 2))
    y = random_complex(rng, (5, 2))
    np.testing.assert_allclose(partial_fourier_apply(x, om, gs), F @ x, atol=1e-12 * np.linalg.norm(x))
    np.testing.assert_allclose(partial_fourier_adjoint(y, om, gs), F.conj().T @ y,
                               atol=1e-12 * np.linalg.norm(y))
    np.testing.assert_allclose(F @ F.conj().T, (gs.N / 5) * np.eye(5), atol=1e-12)


@given(st.integers(0, 2**32 - 1), st.sampled_from([(16, 1), (4, 4), (8, 8), (5, 3)]))
@settings(max_examples=50, deadline=None)
def test_partial_fourier_adjoint_identity(seed, shape):
    rng = np.random.default_rng(seed)
    gs = GridShape(*shape)
    L = int(rng.integers(1, gs.N + 1))
    om = SamplingPattern(np.sort(rng.permutation(gs.N)[:L]), gs.N)
    x = random_complex(rng, gs.N)
    y = random_complex(rng, L)
    lhs = np.vdot(y, partial_fourier_apply(x, om, gs))
    rhs = np.vdot(partial_fourier_adjoint(y, om, gs), x)
    assert abs(lhs - rhs) <= 1e-12 * np.linalg.norm(x) * np.linalg.norm(y) * np.sqrt(gs.N / L)


def test_adjoint_of_zero_and_length_check():
    gs = GridShape(16)
    om = SamplingPattern([0, 2, 9], 16)
    assert not np.any(partial_fourier_adjoint(np.zeros(3), om, gs))
    with pytest.raises(ValueError):
        partial_fourier_adjoint(np.zeros(4), om, gs)
    with pytest.raises(ValueError):
        partial_fourier_apply(np.zeros(16), SamplingPattern([0], 8), gs)
