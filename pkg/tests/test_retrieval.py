import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from accs.liftops import lift
from accs.retrieval import (aligned_relative_error, average_reshape, best_rank_one,
                            lifted_relative_error, phase_align, recover_signal)
from accs.transforms import GridShape, Sparsifier

from oracles import random_complex


def test_average_reshape_layout():
    X = np.arange(12, dtype=complex).reshape(6, 2)  # k=2, N=3, C=2
    M = average_reshape(X, 2)
    assert M.shape == (2, 3)
    np.testing.assert_allclose(M, [[0.5, 4.5, 8.5], [2.5, 6.5, 10.5]])
    with pytest.raises(ValueError):
        average_reshape(np.zeros((5, 1)), 2)


@given(st.integers(0, 2**32 - 1), st.integers(1, 5), st.integers(2, 20))
@settings(max_examples=60, deadline=None)
def test_best_rank_one_matches_svd(seed, k, N):
    rng = np.random.default_rng(seed)
    M = random_complex(rng, (k, N))
    f = best_rank_one(M, max_iters=5000, tol=1e-15)
    s = np.linalg.svd(M, compute_uv=False)
    assert f.sigma == pytest.approx(s[0], rel=1e-8)
    if k == 1 or s[0] - s[1] > 1e-3 * s[0]:
        U, S, Vh = np.linalg.svd(M)
        P = S[0] * np.outer(U[:, 0], Vh[0])
        assert np.linalg.norm(f.matrix() - P) <= 1e-6 * s[0]


def test_best_rank_one_exact_rank_one(rng):
    u, v = random_complex(rng, 3), random_complex(rng, 7)
    f = best_rank_one(np.outer(u, v))
    np.testing.assert_allclose(f.matrix(), np.outer(u, v), atol=1e-12)


def test_best_rank_one_zero_and_tie():
    f = best_rank_one(np.zeros((2, 3)))
    assert f.sigma == 0 and f.u[0] == 1 and f.v[0] == 1
    # repeated top singular value: any unit vector of the top subspace is valid
    f = best_rank_one(np.eye(2, 4))
    assert f.sigma == pytest.approx(1.0)
    assert np.linalg.norm(f.matrix()) == pytest.approx(1.0)
    with pytest.raises(ValueError):
        best_rank_one(np.zeros((0, 3)))


def test_phase_align():
    v = phase_align(np.array([1j, -2j, 0.5]))
    np.testing.assert_allclose(v, np.array([-1, 2, 0.5j]) / np.linalg.norm([1, 2, 0.5]),
                               atol=1e-15)
    # equal magnitudes go to the first index
    w = phase_align(np.array([-1.0, 1.0]))
    assert w[0].real > 0 and w[0].imag == 0
    with pytest.raises(ValueError):
        phase_align(np.zeros(3))


@given(st.integers(0, 2**32 - 1), st.integers(1, 4), st.integers(1, 6))
@settings(max_examples=40, deadline=None)
def test_recover_signal_from_exact_lift(seed, k, C):
    rng = np.random.default_rng(seed)
    psi = Sparsifier("dct2", GridShape(16))
    z = random_complex(rng, 16)
    H = random_complex(rng, (k, C))
    rec = recover_signal(lift(z, H), psi, k)
    assert aligned_relative_error(rec.z, z) < 1e-10
    assert np.linalg.norm(rec.z) == pytest.approx(1.0)
    np.testing.assert_allclose(rec.x, psi.inverse(rec.z), atol=1e-14)
    # recovered coils equal H up to the scalar absorbed by z
    assert aligned_relative_error(rec.coil_coeffs, H) < 1e-10


def test_recover_signal_fallback_when_mean_cancels(rng):
    psi = Sparsifier("identity", GridShape(8))
    z = random_complex(rng, 8)
    h = random_complex(rng, 2)
    H = np.stack([h, -h], axis=1)
    rec = recover_signal(lift(z, H), psi, 2)
    assert rec.used_fallback
    assert aligned_relative_error(rec.z, z) < 1e-10
    with pytest.raises(ValueError):
        recover_signal(np.zeros((16, 2)), psi, 2)
    with pytest.raises(ValueError):
        recover_signal(lift(z, H), Sparsifier("identity", GridShape(4)), 2)


def test_error_metrics():
    b = np.array([1.0, 2.0, 3.0])
    assert aligned_relative_error((2 - 1j) * b, b) == pytest.approx(0.0, abs=1e-15)
    assert aligned_relative_error(np.array([1.0, 0, 0]), np.array([0, 1.0, 0])) == 1.0
    assert lifted_relative_error(2 * b, b) == pytest.approx(1.0)
    with pytest.raises(ValueError):
        lifted_relative_error(b, 0 * b)
    with pytest.raises(ValueError):
        aligned_relative_error(b, b[:2])


def test_average_reshape_of_lift_is_mean_coil_times_signal(rng):
    z, H = random_complex(rng, 7), random_complex(rng, (3, 4))
    np.testing.assert_allclose(average_reshape(lift(z, H), 3),
                               np.outer(H.mean(axis=1), z), atol=1e-14)
    np.testing.assert_allclose(average_reshape(lift(z, H[:, :1]), 3),
                               lift(z, H[:, :1]).reshape(7, 3).T, atol=0)


def test_rank_one_examples(rng):
    a, b = random_complex(rng, 3), random_complex(rng, 8)
    a /= np.linalg.norm(a)
    b /= np.linalg.norm(b)
    f = best_rank_one(3 * np.outer(a, b))
    assert f.sigma == pytest.approx(3.0, rel=1e-12)
    c = np.vdot(a, f.u)  # u = c a with |c| = 1, then v = conj(c) b
    assert abs(c) == pytest.approx(1.0, rel=1e-12)
    np.testing.assert_allclose(f.u, c * a, atol=1e-12)
    np.testing.assert_allclose(f.v, np.conj(c) * b, atol=1e-12)


def test_repeated_singular_value_residual():
    M = np.diag([2.0, 2.0, 1.0]).astype(complex)
    f = best_rank_one(M)
    assert f.sigma == pytest.approx(2.0)
    assert np.linalg.norm(M - f.matrix()) == pytest.approx(np.sqrt(5.0), rel=1e-12)


def test_random_residual_matches_truncated_svd():
    rng = np.random.default_rng(44)
    M = random_complex(rng, (4, 16))
    f = best_rank_one(M, max_iters=5000, tol=1e-15)
    s = np.linalg.svd(M, compute_uv=False)
    assert abs(np.linalg.norm(M - f.matrix()) - np.linalg.norm(s[1:])) <= 1e-10


def test_rank_one_beats_random_probes(rng):
    M = random_complex(rng, (3, 10))
    best = np.linalg.norm(M - best_rank_one(M).matrix())
    for _ in range(1000):
        p = np.outer(random_complex(rng, 3), random_complex(rng, 10))
        assert best <= np.linalg.norm(M - p) + 1e-12


def test_aligned_error_invariance(rng):
    b = random_complex(rng, 9)
    a = random_complex(rng, 9)
    base = aligned_relative_error(a, b)
    assert aligned_relative_error((2 - 3j) * a, b) == pytest.approx(base, rel=1e-12)
    assert aligned_relative_error(1j * b, b) <= 1e-15


def test_identical_coils_match_single_coil(rng):
    gs = GridShape(12)
    psi = Sparsifier("dct2", gs)
    z = random_complex(rng, 12)
    h = random_complex(rng, (2, 1))
    one = recover_signal(lift(z, h), psi, 2)
    many = recover_signal(lift(z, np.tile(h, (1, 5))), psi, 2)
    np.testing.assert_allclose(many.z, one.z, atol=1e-13)
    assert aligned_relative_error(many.z, z) < 1e-13
