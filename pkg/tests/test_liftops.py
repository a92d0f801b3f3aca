import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from accs.liftops import (LiftedOperator, SubspaceBasis, block_view, lift, materialize_dense,
                          operator_norm_estimate, phi_apply)
from accs.transforms import GridShape, SamplingPattern, Sparsifier

from oracles import (lifted_matrix, partial_fourier_matrix, phi_matrix, psi_matrix, random_complex,
                     random_orthonormal)


def _op(rng, shape=(16, 1), k=2, L=9, kind="dct2"):
    gs = GridShape(*shape)
    B = random_orthonormal(rng, gs.N, k)
    om = SamplingPattern(np.sort(rng.permutation(gs.N)[:L]), gs.N)
    return LiftedOperator(B, Sparsifier(kind, gs), om), B, om


def test_basis_validation():
    with pytest.raises(ValueError):
        SubspaceBasis(np.ones((4, 2)))
    with pytest.raises(ValueError):
        SubspaceBasis(np.eye(4))
    with pytest.raises(ValueError):
        SubspaceBasis(np.ones(4))
    b = SubspaceBasis(np.eye(4)[:, :2])
    assert (b.N, b.k) == (4, 2)
    with pytest.raises(ValueError):
        b.B[0, 0] = 2


def test_lift_blocks_are_scaled_H(rng):
    z = random_complex(rng, 5)
    H = random_complex(rng, (3, 2))
    X = lift(z, H)
    assert X.shape == (15, 2)
    V = block_view(X, 3)
    for j in range(5):
        np.testing.assert_allclose(V[j], z[j] * H, rtol=0, atol=1e-15)
    with pytest.raises(ValueError):
        block_view(np.zeros((7, 1)), 3)


def test_phi_with_k1_unit_basis_is_psi_adjoint():
    N = 8
    B = np.ones((N, 1)) / np.sqrt(N)
    op = LiftedOperator(B, Sparsifier("identity", GridShape(N)), SamplingPattern.full(N))
    e = np.zeros(N)
    e[3] = 1.0
    np.testing.assert_allclose(op.phi(e), e / np.sqrt(N), atol=1e-15)


@pytest.mark.parametrize("shape,kind", [((16, 1), "dct2"), ((4, 4), "dct2"), ((3, 5), "dft"),
                                        ((12, 1), "identity"), ((32, 1), "dct2")])
@pytest.mark.parametrize("k", [1, 3])
def test_dense_operator_matches_oracle(shape, kind, k, rng, backend):
    op, B, om = _op(rng, shape, k, L=max(2, shape[0] * shape[1] // 2), kind=kind)
    A = lifted_matrix(B, psi_matrix(kind, *shape), om.indices, *shape)
    np.testing.assert_allclose(materialize_dense(op), A, atol=1e-12)
    P = phi_matrix(B, psi_matrix(kind, *shape))
    x = random_complex(rng, op.k * op.N)
    np.testing.assert_allclose(phi_apply(x, op), P @ x, atol=1e-12 * np.linalg.norm(x))
    u = random_complex(rng, op.N)
    np.testing.assert_allclose(op.phi_adjoint(u), P.conj().T @ u, atol=1e-12 * np.linalg.norm(u))


def test_forward_of_lift_is_direct_measurement(rng, backend):
    # A(z kron H) column i equals F_Omega(B h_i * Psi^* z)
    op, B, om = _op(rng, (16, 1), k=3, L=10)
    z = random_complex(rng, 16)
    H = random_complex(rng, (3, 4))
    Psi = psi_matrix("dct2", 16)
    Fo = partial_fourier_matrix(om.indices, 16)
    direct = Fo @ ((B @ H) * (Psi.conj().T @ z)[:, None])
    np.testing.assert_allclose(op.forward(lift(z, H)), direct, atol=1e-12 * np.abs(direct).max())


@given(st.integers(0, 2**32 - 1), st.integers(1, 4), st.integers(1, 5),
       st.sampled_from([(16, 1), (4, 4), (6, 3)]))
@settings(max_examples=40, deadline=None)
def test_adjoint_identity(seed, k, C, shape):
    rng = np.random.default_rng(seed)
    gs = GridShape(*shape)
    L = int(rng.integers(1, gs.N + 1))
    op, _, _ = _op(rng, shape, k, L)
    X = random_complex(rng, (k * gs.N, C))
    Y = random_complex(rng, (L, C))
    lhs = np.vdot(Y, op.forward(X))
    rhs = np.vdot(op.adjoint(Y), X)
    scale = np.linalg.norm(X) * np.linalg.norm(Y) * np.sqrt(gs.N / L)
    assert abs(lhs - rhs) <= 1e-12 * scale


@given(st.integers(0, 2**32 - 1))
@settings(max_examples=25, deadline=None)
def test_linearity(seed):
    rng = np.random.default_rng(seed)
    op, _, _ = _op(rng, (16, 1), 2, 7)
    X1, X2 = random_complex(rng, (32, 3)), random_complex(rng, (32, 3))
    a, b = complex(*rng.standard_normal(2)), complex(*rng.standard_normal(2))
    lhs = op.forward(a * X1 + b * X2)
    rhs = a * op.forward(X1) + b * op.forward(X2)
    assert np.linalg.norm(lhs - rhs) <= 1e-12 * (np.linalg.norm(X1) + np.linalg.norm(X2)) * 4


def test_columns_are_independent(rng, backend):
    op, _, _ = _op(rng, (16, 1), 2, 8)
    X = random_complex(rng, (32, 4))
    Y = op.forward(X)
    for i in range(4):
        np.testing.assert_allclose(Y[:, i], op.forward(X[:, i]), atol=1e-12 * np.linalg.norm(X))
    R = random_complex(rng, (8, 4))
    Z = op.adjoint(R)
    for i in range(4):
        np.testing.assert_allclose(Z[:, i], op.adjoint(R[:, i]), atol=1e-12 * np.linalg.norm(R))


def test_shape_errors(rng):
    op, _, _ = _op(rng, (16, 1), 2, 8)
    with pytest.raises(ValueError):
        op.forward(np.zeros((31, 1)))
    with pytest.raises(ValueError):
        op.adjoint(np.zeros((7, 1)))
    with pytest.raises(ValueError):
        LiftedOperator(np.eye(8)[:, :2], Sparsifier("dct2", GridShape(16)), SamplingPattern.full(16))
    with pytest.raises(ValueError):
        materialize_dense(op, limit=10)


@pytest.mark.parametrize("shape,k,L", [((16, 1), 2, 8), ((4, 4), 3, 16), ((32, 1), 1, 5)])
def test_norm_estimate_bounds_spectral_norm(shape, k, L, rng):
    op, _, _ = _op(rng, shape, k, L)
    s = np.linalg.norm(materialize_dense(op), 2) ** 2
    est = operator_norm_estimate(op, iters=500, tol=1e-10)
    assert s <= est <= 1.05 * s * (1 + 1e-6)


def test_single_atom_lift_is_pointwise_product(rng):
    op, B, _ = _op(rng, shape=(4, 4), k=2, L=7)
    psi = Sparsifier("dct2", GridShape(4, 4))
    h = random_complex(rng, 2)
    for j in (0, 5, 15):
        z = np.zeros(16, dtype=complex)
        z[j] = 1.0
        expected = psi.inverse(z) * (B @ h)
        np.testing.assert_allclose(phi_apply(lift(z, h[:, None])[:, 0], op), expected, atol=1e-14)


def test_zero_inputs_give_zero(rng):
    op, _, _ = _op(rng)
    assert not np.any(phi_apply(np.zeros(op.k * op.N, dtype=complex), op))
    assert not np.any(op.forward(np.zeros((op.k * op.N, 3), dtype=complex)))
    assert not np.any(op.adjoint(np.zeros((op.L, 3), dtype=complex)))


def test_small_dense_forward(rng):
    # N=8, k=2, C=2, L=4 against the explicit matrix
    op, B, om = _op(rng, shape=(8, 1), k=2, L=4)
    X = random_complex(rng, (16, 2))
    A = lifted_matrix(B, psi_matrix("dct2", 8), om.indices, 8)
    np.testing.assert_allclose(op.forward(X), A @ X, atol=1e-13)


def test_constant_coil_reduces_to_scaled_partial_fourier():
    gs = GridShape(12)
    om = SamplingPattern(np.array([0, 3, 4, 9]), 12)
    op = LiftedOperator(np.ones((12, 1)) / np.sqrt(12), Sparsifier("identity", gs), om)
    F = partial_fourier_matrix(om.indices, 12)
    # B = 1/sqrt(N) enters as a scalar, so A = F_Omega / sqrt(N)
    np.testing.assert_allclose(materialize_dense(op), F / np.sqrt(12), atol=1e-15)
    full = LiftedOperator(np.ones((12, 1)) / np.sqrt(12), Sparsifier("dct2", gs),
                          SamplingPattern(np.arange(12), 12))
    assert operator_norm_estimate(full) / 1.05 == pytest.approx(1 / 12, rel=1e-6)


def test_norm_estimate_within_two_percent_of_dense(rng):
    for _ in range(5):
        op, _, _ = _op(rng, shape=(6, 5), k=3, L=11)
        s = np.linalg.norm(materialize_dense(op), 2) ** 2
        assert abs(operator_norm_estimate(op) / 1.05 - s) <= 0.02 * s


def test_zero_width_basis_rejected():
    with pytest.raises(ValueError):
        SubspaceBasis(np.zeros((4, 0)))
