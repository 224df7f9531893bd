"""Synthetic ground truths, sensing ensembles, test images and occlusion masks."""

import numpy as np

from ._validation import check_dims, check_same_shape, check_tensor3
from .exceptions import ArgumentError, TubalError
from .objectives import MeasurementOp
from .tensor_core import fro_norm, tprod
from .tsvd import tubal_rank

__all__ = [
    "GenerationError", "gen_lowrank", "gen_gaussian_op", "make_checkerboard",
    "make_facade", "occlude_center", "recovery_error", "n_measurements",
    "board_balance",
]

RANK_CHECK_TOL = 1e-8

DEFAULT_BOARD_COLORS = ((16, 20, 40), (248, 196, 80))
BOARD_BALANCE = (2.0 / 3.0, 1.5)


class GenerationError(TubalError):
    """A generated ground truth failed its tubal-rank check."""


def gen_lowrank(n1, n2, n3, r, seed=0):
    """Gaussian tubal-rank-``r`` tensor ``X1 * X2`` with N(0, 1) factors."""
    n1, n2, n3 = check_dims((n1, n2, n3))
    if not 1 <= r <= min(n1, n2):
        raise ArgumentError(f"rank {r} outside [1, {min(n1, n2)}]")
    rng = np.random.default_rng(seed)
    X = tprod(rng.standard_normal((n1, r, n3)), rng.standard_normal((r, n2, n3)))
    got = tubal_rank(X, RANK_CHECK_TOL).tubal_rank
    if got != r:
        raise GenerationError(f"generated tensor has tubal rank {got}, expected {r}")
    return X


def n_measurements(dims, rate):
    """``floor(rate * n1 * n2 * n3)`` with a guard against round-off below integers."""
    if not 0 < rate <= 1:
        raise ArgumentError(f"sampling rate {rate} outside (0, 1]")
    n = int(np.prod(dims))
    return max(1, int(np.floor(rate * n + 1e-9)))


def gen_gaussian_op(M, dims, seed=0):
    """Dense operator with ``M`` i.i.d. N(0, 1) sensing tensors."""
    dims = check_dims(dims)
    if M < 1:
        raise ArgumentError("M must be >= 1")
    rng = np.random.default_rng(seed)
    return MeasurementOp(dims, matrix=rng.standard_normal((M, int(np.prod(dims)))))


def _check_rank(img, expected):
    got = tubal_rank(img, RANK_CHECK_TOL).tubal_rank
    if got != expected:
        raise GenerationError(f"image has tubal rank {got}, expected {expected}")
    return img


def board_balance(c1, c2):
    """Per-Fourier-slice ratio ``|c1_hat + c2_hat| / |c2_hat - c1_hat|``.

    In slice ``k`` the board is ``a J + b s s^T`` with orthogonal terms,
    ``a = (c1_hat + c2_hat) / 2`` and ``b = (c2_hat - c1_hat) / 2``; the ratio of
    the two singular values is ``|a| / |b|``.
    """
    h1 = np.fft.rfft(np.asarray(c1, float))
    h2 = np.fft.rfft(np.asarray(c2, float))
    diff = np.abs(h2 - h1)
    total = np.abs(h1 + h2)
    out = np.full(diff.shape, np.inf)
    np.divide(total, diff, out=out, where=diff > 0)
    # a slice where both colors vanish is zero and needs no balancing
    out[(diff == 0) & (total == 0)] = 1.0
    return out


def _board_colors(rng):
    """A dark and a bright RGB byte triple with balanced slices."""
    lo, hi = BOARD_BALANCE
    while True:
        dark = rng.integers(0, 48, size=3)
        bright = rng.integers(144, 256, size=3)
        if len(set(dark.tolist())) < 3 or len(set(bright.tolist())) < 3:
            continue
        ratio = board_balance(dark, bright)
        if ((ratio >= lo) & (ratio <= hi)).all():
            return dark, bright


def make_checkerboard(n=128, cell=16, colors=None, seed=None):
    """Two-color ``n x n x 3`` checkerboard of tubal rank 2.

    The board is ``B ⊗ c1 + (1 - B) ⊗ c2`` with a 0/1 pattern ``B``; since
    ``B`` is an affine combination of the all-ones matrix and a sign outer
    product, every Fourier slice has rank at most two. Colors are RGB byte
    triples so the image is exactly representable in 8-bit PPM.

    Iterative hard thresholding from zero converges quickly only when the
    two singular values of every Fourier slice are comparable, so random
    palettes (``seed`` given) pair a dark with a bright color and are redrawn
    until :func:`board_balance` lies in ``BOARD_BALANCE`` for all slices.

    Parameters
    ----------
    colors : pair of RGB byte triples, optional
        Explicit palette; not balance-checked.
    """
    if cell < 1 or n % cell:
        raise ArgumentError(f"cell size {cell} must divide board size {n}")
    if colors is None:
        colors = DEFAULT_BOARD_COLORS if seed is None else _board_colors(np.random.default_rng(seed))
    c1, c2 = (np.asarray(c, float) / 255.0 for c in colors)
    idx = np.arange(n) // cell
    B = ((idx[:, None] + idx[None, :]) % 2).astype(float)
    img = B[:, :, None] * c1 + (1.0 - B)[:, :, None] * c2
    return _check_rank(img, 2)


DEFAULT_FACADE_COLORS = ((125, 111, 133), (25, 30, 48), (227, 217, 207))


def _facade_colors(rng):
    """Mid-tone wall, dark windows, bright storefront."""
    while True:
        cols = [rng.integers(60, 140, size=3), rng.integers(0, 50, size=3),
                rng.integers(150, 256, size=3)]
        if all(len(set(c.tolist())) == 3 for c in cols):
            return cols


def make_facade(n=200, colors=None, seed=None):
    """Synthetic ``n x n x 3`` building facade of tubal rank 3.

    A flat wall, three storeys of windows on a regular grid, and a wide
    ground-floor storefront, each a separable 0/1 layer in one flat color.
    The wall is kept mid-tone: with a near-white wall, hard thresholding
    from zero can stall on the occlusion edge.
    """
    if n < 40:
        raise ArgumentError("facade needs n >= 40")
    if colors is None:
        colors = DEFAULT_FACADE_COLORS if seed is None else _facade_colors(np.random.default_rng(seed))
    wall, window, store = (np.asarray(c, float) / 255.0 for c in colors)
    i = np.arange(n)
    period = n // 5
    phase = i % period
    win_rows = (phase >= period // 4) & (phase < 3 * period // 4) & (i < 3 * n // 5)
    win_cols = (phase >= 3 * period // 10) & (phase < 7 * period // 10)
    store_rows = i >= 3 * n // 4
    store_cols = (i >= 3 * n // 20) & (i < 17 * n // 20)
    ones = np.ones(n)
    img = (np.einsum("i,j,k->ijk", ones, ones, wall)
           + np.einsum("i,j,k->ijk", win_rows, win_cols, window - wall)
           + np.einsum("i,j,k->ijk", store_rows, store_cols, store - wall))
    return _check_rank(img, 3)


def occlude_center(img, w, h):
    """Mask operator observing everything outside a centered ``w x h`` box.

    Returns ``(op, y)`` with ``y`` the observed values. The box occupies
    rows ``(n1 - w) // 2 ...`` and columns ``(n2 - h) // 2 ...`` on all channels.
    """
    img = check_tensor3(img)
    n1, n2, n3 = img.shape
    if not (0 <= w <= n1 and 0 <= h <= n2):
        raise ArgumentError(f"box {w}x{h} does not fit image {n1}x{n2}")
    mask = np.ones(img.shape, dtype=bool)
    r0, c0 = (n1 - w) // 2, (n2 - h) // 2
    mask[r0:r0 + w, c0:c0 + h, :] = False
    if not mask.any():
        raise ArgumentError("occlusion box covers the whole image; nothing observed")
    op = MeasurementOp.from_mask(mask)
    return op, op.apply(img)


def recovery_error(X_hat, X):
    """``||X - X_hat|| / ||X||``."""
    X_hat = np.asarray(X_hat, dtype=np.float64)
    X = np.asarray(X, dtype=np.float64)
    check_same_shape(X_hat, X, ("X_hat", "X"))
    nx = fro_norm(X)
    if nx == 0:
        raise ArgumentError("ground truth has zero norm")
    return fro_norm(X - X_hat) / nx
