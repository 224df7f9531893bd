"""Tensor SVD, tubal rank, and singular-tube hard thresholding."""

from dataclasses import dataclass, field

import numpy as np

from ._validation import check_rank, check_tensor3
from .exceptions import ArgumentError, SVDError
from .tensor_core import _irfft, _rfft, fro_norm, tprod, ttranspose

__all__ = ["TSvdFactors", "RankReport", "tsvd", "tubal_rank", "stht",
           "reduced_tsvd", "tube_norms"]

DEFAULT_RANK_TOL = 1e-10


@dataclass
class TSvdFactors:
    """Factors of ``X = U * S * V^T`` with orthogonal ``U``, ``V`` and f-diagonal ``S``.

    ``singular_values`` holds the transform-domain diagonals of ``S`` for the
    non-redundant slices, shape ``(min(n1, n2), n3 // 2 + 1)``.
    """

    U: np.ndarray
    S: np.ndarray
    V: np.ndarray
    singular_values: np.ndarray = field(repr=False, default=None)

    def reconstruct(self):
        return tprod(tprod(self.U, self.S), ttranspose(self.V))


@dataclass
class RankReport:
    tubal_rank: int
    tube_norms: list
    zero_threshold: float

    def to_dict(self):
        return {"tubal_rank": int(self.tubal_rank),
                "tube_norms": [float(t) for t in self.tube_norms],
                "zero_threshold": float(self.zero_threshold)}


def _self_conjugate(n3):
    """Indices of rfft bins whose transform slice is real for real input."""
    bins = [0]
    if n3 % 2 == 0 and n3 > 1:
        bins.append(n3 // 2)
    return bins


def _slice_svd(Xh, n3, full_matrices):
    """SVD of every non-redundant transform slice.

    ``Xh`` has shape ``(n1, n2, h)``. Returns ``U (h, n1, *)``, ``s (h, p)``,
    ``Vh (h, *, n2)``. Self-conjugate bins are decomposed in real arithmetic
    so that the inverse transform of the factors is exactly real.
    """
    batch = np.ascontiguousarray(Xh.transpose(2, 0, 1))
    try:
        U, s, Vh = np.linalg.svd(batch, full_matrices=full_matrices)
    except np.linalg.LinAlgError:
        for k in range(batch.shape[0]):
            try:
                np.linalg.svd(batch[k], full_matrices=full_matrices)
            except np.linalg.LinAlgError as exc:
                raise SVDError(k) from exc
        raise SVDError(-1, "batched SVD failed but no single slice reproduced the failure")
    for k in _self_conjugate(n3):
        try:
            Uk, sk, Vhk = np.linalg.svd(batch[k].real, full_matrices=full_matrices)
        except np.linalg.LinAlgError as exc:
            raise SVDError(k) from exc
        U[k], s[k], Vh[k] = Uk, sk, Vhk
    return U, s, Vh


def tsvd(X):
    """Full t-SVD of ``X`` computed slice-by-slice in the Fourier domain.

    Returns
    -------
    TSvdFactors
        ``U`` is ``n1 x n1 x n3``, ``S`` is ``n1 x n2 x n3`` f-diagonal and
        ``V`` is ``n2 x n2 x n3``.
    """
    X = check_tensor3(X)
    n1, n2, n3 = X.shape
    U, s, Vh = _slice_svd(_rfft(X), n3, full_matrices=True)
    p = min(n1, n2)
    h = U.shape[0]
    Sh = np.zeros((n1, n2, h))
    Sh[np.arange(p), np.arange(p), :] = s.T
    Uh = U.transpose(1, 2, 0)
    Vhat = np.conj(Vh).transpose(2, 1, 0)  # V_k = Vh_k^H
    return TSvdFactors(U=_irfft(Uh, n3), S=_irfft(Sh, n3), V=_irfft(Vhat, n3),
                       singular_values=s.T.copy())


def tube_norms(X):
    """Frobenius norms of the singular tubes ``S(i, i, :)`` in index order."""
    X = check_tensor3(X)
    n3 = X.shape[2]
    s = np.linalg.svd(np.ascontiguousarray(_rfft(X).transpose(2, 0, 1)), compute_uv=False)
    # Parseval over the full spectrum; redundant bins count twice
    w = np.full(s.shape[0], 2.0)
    w[_self_conjugate(n3)] = 1.0
    return np.sqrt((w[:, None] * s ** 2).sum(axis=0) / n3)


def tubal_rank(X, rel_tol=DEFAULT_RANK_TOL):
    """Count singular tubes whose norm exceeds ``rel_tol`` times the largest."""
    if not 0.0 < rel_tol < 1.0:
        raise ArgumentError(f"rel_tol must lie in (0, 1), got {rel_tol}")
    norms = tube_norms(X)
    threshold = rel_tol * float(norms.max(initial=0.0))
    rank = int(np.count_nonzero(norms > threshold))
    return RankReport(tubal_rank=rank, tube_norms=norms.tolist(), zero_threshold=threshold)


def stht(X, r, scale=True):
    """Singular tube hard thresholding: keep singular tubes ``1..r``.

    This is the reduced t-SVD ``X_r``, a best tubal-rank-``r`` approximation
    of ``X`` in Frobenius norm. With ``scale=True`` the input is normalized
    to unit norm before the SVDs and rescaled afterwards.
    """
    X = check_tensor3(X)
    r = check_rank(r, X.shape)
    n1, n2, n3 = X.shape
    if r >= min(n1, n2):
        return X.copy()
    c = fro_norm(X) if scale else 1.0
    if r == 0 or c == 0.0:
        return np.zeros_like(X)
    U, s, Vh = _slice_svd(_rfft(X / c), n3, full_matrices=False)
    Zh = np.einsum("kir,kr,krj->ijk", U[:, :, :r], s[:, :r], Vh[:, :r, :])
    return c * _irfft(Zh, n3)


def reduced_tsvd(X, r):
    """Leading ``r`` t-SVD factors ``(U_r, S_r, V_r)`` with ``U_r*S_r*V_r^T == stht(X, r)``."""
    X = check_tensor3(X)
    r = check_rank(r, X.shape, lower=1)
    n3 = X.shape[2]
    U, s, Vh = _slice_svd(_rfft(X), n3, full_matrices=False)
    Sh = np.zeros((r, r, U.shape[0]))
    Sh[np.arange(r), np.arange(r), :] = s[:, :r].T
    Ur = _irfft(U[:, :, :r].transpose(1, 2, 0), n3)
    Vr = _irfft(np.conj(Vh[:, :r, :]).transpose(2, 1, 0), n3)
    return Ur, _irfft(Sh, n3), Vr
