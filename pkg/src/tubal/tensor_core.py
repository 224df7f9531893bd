"""Third-order tensors and the t-product algebra.

Tensors are plain ``numpy.ndarray`` objects of shape ``(n1, n2, n3)``.
The canonical linear layout (used by :func:`vec`, the TNS3 file format and
measurement vectors) is frontal-slice-major with column-major order inside
each slice, i.e. ``X.ravel(order="F")``: index ``i`` varies fastest, then
``j``, then ``k``.

The t-product and friends are evaluated in the Fourier domain along tubes.
Only the first ``n3 // 2 + 1`` transform slices are ever computed; the
remainder follow from conjugate symmetry, so inverse transforms are real by
construction.
"""

import struct

import numpy as np

from ._validation import check_dims, check_tensor3
from .exceptions import FormatError, NumericalError, ShapeError

__all__ = [
    "vec", "unvec", "unfold", "fold", "bcirc", "bdiag", "tprod", "ttranspose",
    "identity_tensor", "is_orthogonal", "inner", "fro_norm", "dft_tubes",
    "idft_tubes", "read_tns3", "write_tns3", "dumps_tns3", "loads_tns3",
]

TNS3_MAGIC = b"TNS3"


def vec(X):
    """Column-stack each frontal slice, then stack the slices."""
    return np.asarray(X).ravel(order="F")


def unvec(v, dims):
    dims = check_dims(dims)
    v = np.asarray(v)
    if v.size != dims[0] * dims[1] * dims[2]:
        raise ShapeError(f"vector of length {v.size} does not match dims {dims}")
    return v.reshape(dims, order="F")


def unfold(X):
    """Stack the frontal slices vertically into an ``(n1*n3, n2)`` matrix."""
    X = np.asarray(X)
    if X.ndim != 3:
        raise ShapeError(f"unfold expects a third-order tensor, got ndim={X.ndim}")
    n1, n2, n3 = X.shape
    return X.transpose(2, 0, 1).reshape(n1 * n3, n2)


def fold(M, dims):
    """Inverse of :func:`unfold`."""
    n1, n2, n3 = check_dims(dims)
    M = np.asarray(M)
    if M.ndim != 2 or M.shape != (n1 * n3, n2):
        raise ShapeError(f"cannot fold matrix of shape {M.shape} into dims {(n1, n2, n3)}")
    return M.reshape(n3, n1, n2).transpose(1, 2, 0).copy()


def bcirc(X):
    """Block-circulant matrix whose first block column is ``unfold(X)``."""
    X = np.asarray(X)
    n1, n2, n3 = X.shape
    out = np.empty((n1 * n3, n2 * n3), dtype=X.dtype)
    for p in range(n3):
        for q in range(n3):
            out[p * n1:(p + 1) * n1, q * n2:(q + 1) * n2] = X[:, :, (p - q) % n3]
    return out


def bdiag(X):
    """Block-diagonal matrix of the frontal slices."""
    X = np.asarray(X)
    n1, n2, n3 = X.shape
    out = np.zeros((n1 * n3, n2 * n3), dtype=X.dtype)
    for k in range(n3):
        out[k * n1:(k + 1) * n1, k * n2:(k + 1) * n2] = X[:, :, k]
    return out


def _rfft(X):
    return np.fft.rfft(X, axis=2)


def _irfft(Xh, n3):
    return np.fft.irfft(Xh, n=n3, axis=2)


def tprod(A, B):
    """t-product ``A * B`` of an ``n1 x n2 x n3`` and an ``n2 x n4 x n3`` tensor.

    Computed as slice-wise complex matrix products in the Fourier domain;
    equal to ``fold(bcirc(A) @ unfold(B))``.
    """
    A = np.asarray(A, dtype=np.float64)
    B = np.asarray(B, dtype=np.float64)
    if A.ndim != 3 or B.ndim != 3:
        raise ShapeError("tprod expects third-order tensors")
    if A.shape[1] != B.shape[0] or A.shape[2] != B.shape[2]:
        raise ShapeError(f"cannot t-multiply shapes {A.shape} and {B.shape}")
    n3 = A.shape[2]
    Ch = np.einsum("ijk,jlk->ilk", _rfft(A), _rfft(B))
    return _irfft(Ch, n3)


def ttranspose(X):
    """Tensor transpose: transpose every slice, reverse slices 2..n3."""
    X = np.asarray(X)
    n3 = X.shape[2]
    idx = (-np.arange(n3)) % n3
    return X[:, :, idx].transpose(1, 0, 2).copy()


def identity_tensor(n1, n3):
    if n1 < 1 or n3 < 1:
        raise ShapeError("identity_tensor needs n1, n3 >= 1")
    out = np.zeros((n1, n1, n3))
    out[:, :, 0] = np.eye(n1)
    return out


def is_orthogonal(Q, tol=1e-10):
    """True iff ``Q * Q^T`` and ``Q^T * Q`` are both within ``tol`` of identity."""
    Q = np.asarray(Q, dtype=np.float64)
    if Q.ndim != 3 or Q.shape[0] != Q.shape[1]:
        return False
    eye = identity_tensor(Q.shape[0], Q.shape[2])
    Qt = ttranspose(Q)
    return (fro_norm(tprod(Q, Qt) - eye) <= tol
            and fro_norm(tprod(Qt, Q) - eye) <= tol)


def inner(X, Y):
    X = np.asarray(X)
    Y = np.asarray(Y)
    if X.shape != Y.shape:
        raise ShapeError(f"inner product of shapes {X.shape} and {Y.shape}")
    return float(np.vdot(X.ravel(), Y.ravel()))


def fro_norm(X):
    return float(np.linalg.norm(np.asarray(X).ravel()))


def dft_tubes(X):
    """Unnormalized DFT of every tube, returned as a full complex tensor."""
    X = check_tensor3(X)
    n3 = X.shape[2]
    half = _rfft(X)
    full = np.empty(X.shape, dtype=np.complex128)
    full[:, :, :half.shape[2]] = half
    for k in range(half.shape[2], n3):
        full[:, :, k] = np.conj(half[:, :, n3 - k])
    return full


def idft_tubes(T, rtol=1e-8):
    """Inverse of :func:`dft_tubes`; the result is exactly real.

    Raises
    ------
    NumericalError
        If ``T`` violates conjugate symmetry ``T[..., k] == conj(T[..., -k])``
        by more than ``rtol`` relative to its largest entry.
    """
    T = np.asarray(T, dtype=np.complex128)
    if T.ndim != 3:
        raise ShapeError("idft_tubes expects a third-order array")
    n3 = T.shape[2]
    mirror = np.conj(T[:, :, (-np.arange(n3)) % n3])
    scale = max(float(np.abs(T).max(initial=0.0)), 1.0)
    err = float(np.abs(T - mirror).max(initial=0.0))
    if err > rtol * scale:
        raise NumericalError(f"transform tensor is not conjugate symmetric (max deviation {err:.3e})")
    # symmetrize before discarding the redundant half
    sym = 0.5 * (T + mirror)
    return _irfft(sym[:, :, :n3 // 2 + 1], n3)


def dumps_tns3(X):
    X = check_tensor3(X)
    header = TNS3_MAGIC + struct.pack("<3I", *X.shape)
    return header + vec(X).astype("<f8").tobytes()


def loads_tns3(buf):
    buf = bytes(buf)
    if len(buf) < 16:
        raise FormatError("TNS3 header truncated", offset=len(buf))
    if buf[:4] != TNS3_MAGIC:
        raise FormatError(f"bad magic {buf[:4]!r}", offset=0)
    dims = struct.unpack("<3I", buf[4:16])
    if min(dims) < 1:
        raise FormatError(f"non-positive dimension in {dims}", offset=4)
    need = 16 + 8 * dims[0] * dims[1] * dims[2]
    if len(buf) < need:
        raise FormatError(f"payload truncated: expected {need} bytes, got {len(buf)}", offset=len(buf))
    if len(buf) > need:
        raise FormatError(f"{len(buf) - need} trailing bytes after payload", offset=need)
    data = np.frombuffer(buf, dtype="<f8", offset=16).astype(np.float64)
    return unvec(data, dims).copy()


def write_tns3(X, path):
    with open(path, "wb") as fh:
        fh.write(dumps_tns3(X))


def read_tns3(path):
    with open(path, "rb") as fh:
        return loads_tns3(fh.read())
