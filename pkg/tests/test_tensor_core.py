import struct

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import naive_bcirc, naive_tprod, naive_ttranspose, rel
from tubal.exceptions import FormatError, NumericalError, ShapeError
from tubal.tensor_core import (bcirc, bdiag, dft_tubes, dumps_tns3, fold, fro_norm,
                               identity_tensor, idft_tubes, inner, is_orthogonal,
                               loads_tns3, read_tns3, tprod, ttranspose, unfold, unvec,
                               vec, write_tns3)

dims = st.integers(1, 6)


@settings(max_examples=40, deadline=None)
@given(n1=dims, n2=dims, n4=dims, n3=dims, seed=st.integers(0, 2**31))
def test_tprod_matches_circular_convolution(n1, n2, n4, n3, seed):
    rng = np.random.default_rng(seed)
    A = rng.standard_normal((n1, n2, n3))
    B = rng.standard_normal((n2, n4, n3))
    assert rel(tprod(A, B), naive_tprod(A, B)) <= 1e-12


def test_tprod_matches_bcirc_unfold(rng):
    A = rng.standard_normal((4, 3, 5))
    B = rng.standard_normal((3, 2, 5))
    ref = fold(bcirc(A) @ unfold(B), (4, 2, 5))
    assert rel(tprod(A, B), ref) <= 1e-12


def test_tprod_hand_example():
    # 1x1x2 tubes: (1, 2) * (3, 4) = (1*3 + 2*4, 1*4 + 2*3)
    a = np.array([1.0, 2.0]).reshape(1, 1, 2)
    b = np.array([3.0, 4.0]).reshape(1, 1, 2)
    np.testing.assert_allclose(tprod(a, b).ravel(), [11.0, 10.0])


def test_tprod_rejects_mismatch(rng):
    with pytest.raises(ShapeError):
        tprod(rng.standard_normal((2, 3, 4)), rng.standard_normal((2, 3, 4)))
    with pytest.raises(ShapeError):
        tprod(rng.standard_normal((2, 3, 4)), rng.standard_normal((3, 3, 5)))


def test_bcirc_layout(rng):
    X = rng.standard_normal((3, 2, 4))
    np.testing.assert_array_equal(bcirc(X), naive_bcirc(X))


def test_bcirc_is_homomorphism(rng):
    A = rng.standard_normal((3, 4, 5))
    B = rng.standard_normal((4, 2, 5))
    assert rel(bcirc(tprod(A, B)), bcirc(A) @ bcirc(B)) <= 1e-12
    assert rel(bcirc(ttranspose(A)), bcirc(A).T) <= 1e-14


def test_transpose_identities(rng):
    A = rng.standard_normal((3, 4, 6))
    B = rng.standard_normal((4, 2, 6))
    np.testing.assert_array_equal(ttranspose(A), naive_ttranspose(A))
    np.testing.assert_array_equal(ttranspose(ttranspose(A)), A)
    assert rel(ttranspose(tprod(A, B)), tprod(ttranspose(B), ttranspose(A))) <= 1e-12


def test_identity_is_neutral(rng):
    X = rng.standard_normal((3, 4, 5))
    assert rel(tprod(identity_tensor(3, 5), X), X) <= 1e-14
    assert rel(tprod(X, identity_tensor(4, 5)), X) <= 1e-14
    assert is_orthogonal(identity_tensor(4, 5))


def test_orthogonal_from_slice_qr(rng):
    # a tensor whose Fourier slices are all unitary is t-orthogonal
    n, n3 = 4, 5
    Qh = np.empty((n, n, n3), dtype=complex)
    Qh[:, :, 0] = np.linalg.qr(rng.standard_normal((n, n)))[0]
    for k in range(1, n3 // 2 + 1):
        Qh[:, :, k] = np.linalg.qr(rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n)))[0]
        Qh[:, :, n3 - k] = Qh[:, :, k].conj()
    Q = np.fft.ifft(Qh, axis=2).real
    assert is_orthogonal(Q, tol=1e-10)
    assert not is_orthogonal(2 * Q)


def test_bdiag_of_slices(rng):
    X = rng.standard_normal((2, 3, 4))
    D = bdiag(X)
    for k in range(4):
        np.testing.assert_array_equal(D[2 * k:2 * k + 2, 3 * k:3 * k + 3], X[:, :, k])
    assert np.count_nonzero(D) == X.size


def test_dft_block_diagonalizes_bcirc(rng):
    n1, n2, n3 = 3, 3, 4
    X = rng.standard_normal((n1, n2, n3))
    F = np.exp(-2j * np.pi * np.outer(np.arange(n3), np.arange(n3)) / n3)
    lhs = np.kron(F, np.eye(n1)) @ bcirc(X) @ np.kron(F.conj().T / n3, np.eye(n2))
    np.testing.assert_allclose(bdiag(dft_tubes(X)), lhs, atol=1e-12)


def test_single_slice_degenerates(rng):
    X = rng.standard_normal((3, 2, 1))
    np.testing.assert_array_equal(bcirc(X), X[:, :, 0])
    np.testing.assert_array_equal(bdiag(X), X[:, :, 0])
    np.testing.assert_allclose(tprod(X, rng.standard_normal((2, 2, 1)))[:, :, 0].shape, (3, 2))


def test_vec_order():
    X = np.arange(12.0).reshape(2, 3, 2, order="F")
    np.testing.assert_array_equal(vec(X), np.arange(12.0))
    np.testing.assert_array_equal(unvec(vec(X), X.shape), X)
    # entry (i, j, k) sits at i + n1 j + n1 n2 k
    assert vec(X)[1 + 2 * 2 + 6 * 1] == X[1, 2, 1]


def test_fold_unfold_roundtrip(rng):
    X = rng.standard_normal((3, 4, 5))
    U = unfold(X)
    assert U.shape == (15, 4)
    np.testing.assert_array_equal(U[3:6], X[:, :, 1])
    np.testing.assert_array_equal(fold(U, X.shape), X)
    with pytest.raises(ShapeError):
        fold(U, (3, 4, 4))


def test_inner_and_norm(rng):
    X = rng.standard_normal((3, 4, 5))
    Y = rng.standard_normal((3, 4, 5))
    assert inner(X, Y) == pytest.approx(float(np.sum(X * Y)))
    assert fro_norm(X) == pytest.approx(np.sqrt(inner(X, X)))


def test_dft_roundtrip(rng):
    X = rng.standard_normal((3, 2, 7))
    T = dft_tubes(X)
    np.testing.assert_allclose(T, np.fft.fft(X, axis=2), atol=1e-12)
    np.testing.assert_allclose(idft_tubes(T), X, atol=1e-14)


def test_idft_rejects_asymmetric(rng):
    T = dft_tubes(rng.standard_normal((2, 2, 4)))
    T[0, 0, 1] += 1.0
    with pytest.raises(NumericalError):
        idft_tubes(T)


def test_tns3_roundtrip(tmp_path, rng):
    X = rng.standard_normal((3, 4, 5))
    p = tmp_path / "x.tns3"
    write_tns3(X, p)
    np.testing.assert_array_equal(read_tns3(p), X)
    buf = p.read_bytes()
    assert buf[:4] == b"TNS3"
    assert struct.unpack("<3I", buf[4:16]) == (3, 4, 5)
    assert len(buf) == 16 + 8 * 60
    # first payload value is X[0, 0, 0], second is X[1, 0, 0]
    assert struct.unpack("<2d", buf[16:32]) == (X[0, 0, 0], X[1, 0, 0])


@pytest.mark.parametrize("mutate", [
    lambda b: b"XNS3" + b[4:],
    lambda b: b[:10],
    lambda b: b[:-3],
    lambda b: b + b"\x00",
])
def test_tns3_rejects_malformed(mutate, rng):
    buf = dumps_tns3(rng.standard_normal((2, 2, 2)))
    with pytest.raises(FormatError):
        loads_tns3(mutate(buf))
