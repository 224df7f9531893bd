"""scikit-learn compatible wrappers around the solvers.

The estimators follow the usual conventions: hyperparameters are stored
verbatim in ``__init__``, learned state ends in an underscore, and
:func:`sklearn.base.clone` / ``get_params`` work out of the box.
"""

import numpy as np
from sklearn.base import BaseEstimator, RegressorMixin, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from ._validation import check_rank, check_tensor3
from .exceptions import ArgumentError, ShapeError
from .objectives import MeasurementOp, cs_objective, inpainting_objective
from .solvers import SolverConfig, solve
from .tsvd import stht

__all__ = ["TubalImputer", "TubalSensingRegressor", "TubalRankProjector"]


class TubalRankProjector(TransformerMixin, BaseEstimator):
    """Project a tensor onto tubal rank ``rank`` (best approximation).

    Stateless; ``fit`` only records the input shape.

    Parameters
    ----------
    rank : int
    scale : bool, default=True
        Normalize by the Frobenius norm before the slice SVDs.
    """

    def __init__(self, rank=1, scale=True):
        self.rank = rank
        self.scale = scale

    def fit(self, X, y=None):
        X = check_tensor3(X)
        check_rank(self.rank, X.shape)
        self.shape_ = X.shape
        return self

    def transform(self, X):
        check_is_fitted(self, "shape_")
        X = check_tensor3(X)
        return stht(X, self.rank, scale=self.scale)


class _SolverMixin:
    def _config(self, rank, ground_truth=None):
        return SolverConfig(rank=rank, step_size=self.step_size, max_iters=self.max_iters,
                            tol=self.tol, variant=self.variant, batch_size=self.batch_size,
                            seed=self.random_state if self.random_state is not None else 0,
                            momentum=self.momentum, ground_truth=ground_truth)


class TubalImputer(_SolverMixin, TransformerMixin, BaseEstimator):
    """Fill missing entries of a low tubal rank tensor.

    Missing entries are marked with NaN in ``X`` or given explicitly via
    ``mask`` (``True`` where observed).

    Parameters
    ----------
    rank : int
        Target tubal rank.
    step_size : float, default=1.0
        With the unit step, each iteration keeps the observed entries and
        refits the missing ones from the current rank-``rank`` estimate.
    max_iters, tol : solver stopping controls.
    variant : {"istht", "aistht", "stoistht", "bstoistht"}
    batch_size : int, optional
        Only for ``bstoistht``; components are the ``n_blocks`` row blocks.
    n_blocks : int, default=1
    momentum : {"nesterov", "literal"}
    random_state : int, optional

    Attributes
    ----------
    completed_ : ndarray of shape (n1, n2, n3)
        Observed entries from the input, the rest from the recovered tensor.
    low_rank_ : ndarray
        Final solver iterate.
    trace_ : RunTrace
    n_iter_ : int
    """

    def __init__(self, rank=1, step_size=1.0, max_iters=500, tol=1e-10, variant="istht",
                 batch_size=None, n_blocks=1, momentum="nesterov", random_state=None):
        self.rank = rank
        self.step_size = step_size
        self.max_iters = max_iters
        self.tol = tol
        self.variant = variant
        self.batch_size = batch_size
        self.n_blocks = n_blocks
        self.momentum = momentum
        self.random_state = random_state

    def _split(self, X, mask):
        X = check_tensor3(X, allow_nan=True, copy=True)
        if mask is None:
            mask = np.isfinite(X)
        else:
            mask = np.asarray(mask, dtype=bool)
            if mask.shape != X.shape:
                raise ShapeError(f"mask shape {mask.shape} differs from X shape {X.shape}")
            if not np.isfinite(X[mask]).all():
                raise ArgumentError("observed entries must be finite")
        if not mask.any():
            raise ArgumentError("no observed entries")
        return X, mask

    def fit(self, X, y=None, mask=None):
        X, mask = self._split(X, mask)
        check_rank(self.rank, X.shape, lower=1)
        op = MeasurementOp.from_mask(mask)
        obj = inpainting_objective(op, op.apply(np.where(mask, X, 0.0)), n_blocks=self.n_blocks)
        self.trace_ = solve(obj, self._config(self.rank))
        self.low_rank_ = self.trace_.X
        self.n_iter_ = self.trace_.n_iter
        self.mask_ = mask
        self.completed_ = np.where(mask, X, self.low_rank_)
        return self

    def transform(self, X, mask=None):
        """Replace missing entries of ``X`` by the fitted low-rank values."""
        check_is_fitted(self, "low_rank_")
        X, mask = self._split(X, mask)
        if X.shape != self.low_rank_.shape:
            raise ShapeError(f"X shape {X.shape} differs from fitted shape {self.low_rank_.shape}")
        return np.where(mask, X, self.low_rank_)

    def fit_transform(self, X, y=None, mask=None):
        return self.fit(X, mask=mask).completed_


class TubalSensingRegressor(_SolverMixin, RegressorMixin, BaseEstimator):
    """Recover a low tubal rank tensor from linear measurements.

    ``fit(A, y)`` takes the sensing tensors stacked as ``A`` of shape
    ``(M, n1, n2, n3)`` and the measurements ``y`` of length ``M``; the
    recovered tensor is ``coef_`` and ``predict(A)`` returns ``<A_j, coef_>``.

    Parameters
    ----------
    rank : int
    step_size : float, default=0.3
        Gaussian sensing at the usual sampling rates diverges with a unit
        step once the rank exceeds one; 0.3 is stable across ranks 1 to 4.
    max_iters, tol, variant, batch_size, momentum, random_state
        As in :class:`TubalImputer`; components are single measurements.
    """

    def __init__(self, rank=1, step_size=0.3, max_iters=500, tol=1e-10, variant="istht",
                 batch_size=None, momentum="nesterov", random_state=None):
        self.rank = rank
        self.step_size = step_size
        self.max_iters = max_iters
        self.tol = tol
        self.variant = variant
        self.batch_size = batch_size
        self.momentum = momentum
        self.random_state = random_state

    @staticmethod
    def _check_A(A):
        A = np.asarray(A, dtype=np.float64)
        if A.ndim != 4:
            raise ShapeError(f"A must have shape (M, n1, n2, n3), got {A.shape}")
        if not np.isfinite(A).all():
            raise ArgumentError("A contains non-finite values")
        return A

    def fit(self, A, y):
        A = self._check_A(A)
        y = np.asarray(y, dtype=np.float64).ravel()
        if y.shape[0] != A.shape[0]:
            raise ShapeError(f"{A.shape[0]} sensing tensors but {y.shape[0]} measurements")
        op = MeasurementOp.from_sensing_tensors(A)
        check_rank(self.rank, op.dims, lower=1)
        self.trace_ = solve(cs_objective(op, y), self._config(self.rank))
        self.coef_ = self.trace_.X
        self.n_iter_ = self.trace_.n_iter
        return self

    def predict(self, A):
        check_is_fitted(self, "coef_")
        A = self._check_A(A)
        if A.shape[1:] != self.coef_.shape:
            raise ShapeError(f"sensing tensors {A.shape[1:]} differ from fitted {self.coef_.shape}")
        return MeasurementOp.from_sensing_tensors(A).apply(self.coef_)
