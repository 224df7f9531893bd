"""Linear measurement maps and separable least-squares objectives.

Two measurement modes are supported:

``dense``
    ``M`` sensing tensors ``A_j`` stored as the rows of an ``M x (n1 n2 n3)``
    matrix acting on :func:`~tubal.tensor_core.vec`. Measurement ``j`` is
    ``<A_j, X>``.
``mask``
    An index set of observed entries. Measurements are the entries of ``X``
    at those positions, ordered lexicographically by ``(k, j, i)``, which is
    the same as ascending position in ``vec(X)``.

Objectives are ``F(X) = (c/2) ||theta(X) - y||^2`` with ``c = 1/M`` for
compressive sensing and ``c = 1`` for inpainting, written as the average
``F = (1/K) sum_j f_j`` of ``K`` components obtained by splitting the
measurement rows into contiguous blocks.
"""

import json
import math
import os
import struct
from dataclasses import dataclass, field

import numpy as np

from ._validation import check_dims, check_tensor3
from .exceptions import ArgumentError, FormatError, ShapeError
from .tensor_core import read_tns3, tprod, unvec, vec, write_tns3

__all__ = [
    "MeasurementOp", "SeparableObjective", "SamplingDistribution", "RipEstimate",
    "apply", "adjoint", "cs_objective", "inpainting_objective", "estimate_rip",
    "noisy_observe", "alpha_constant", "save_measurements", "load_measurements",
    "write_vector", "read_vector",
]


class MeasurementOp:
    """Linear map from ``R^{n1 x n2 x n3}`` to ``R^M`` with its adjoint."""

    def __init__(self, dims, *, matrix=None, indices=None):
        self.dims = check_dims(dims)
        n = self.dims[0] * self.dims[1] * self.dims[2]
        if (matrix is None) == (indices is None):
            raise ArgumentError("give exactly one of matrix= or indices=")
        if matrix is not None:
            matrix = np.asarray(matrix, dtype=np.float64)
            if matrix.ndim != 2 or matrix.shape[1] != n or matrix.shape[0] < 1:
                raise ShapeError(f"sensing matrix shape {matrix.shape} incompatible with dims {self.dims}")
            self.mode = "dense"
            self.matrix = matrix
            self.indices = None
        else:
            indices = np.asarray(indices, dtype=np.int64).ravel()
            if indices.size and (indices.min() < 0 or indices.max() >= n):
                raise ArgumentError("mask index out of range")
            if np.unique(indices).size != indices.size:
                raise ArgumentError("mask indices contain duplicates")
            self.mode = "mask"
            self.matrix = None
            self.indices = np.sort(indices)

    @classmethod
    def from_sensing_tensors(cls, tensors):
        """Dense operator from an ``(M, n1, n2, n3)`` stack of sensing tensors."""
        tensors = np.asarray(tensors, dtype=np.float64)
        if tensors.ndim != 4:
            raise ShapeError("sensing tensors must be stacked as (M, n1, n2, n3)")
        M = tensors.shape[0]
        # row j is vec(A_j)
        matrix = tensors.transpose(0, 3, 2, 1).reshape(M, -1)
        return cls(tensors.shape[1:], matrix=matrix)

    @classmethod
    def from_mask(cls, mask):
        mask = np.asarray(mask, dtype=bool)
        if mask.ndim != 3:
            raise ShapeError("mask must be a third-order boolean array")
        return cls(mask.shape, indices=np.flatnonzero(vec(mask)))

    @classmethod
    def from_positions(cls, positions, dims):
        """Mask operator from ``(i, j, k)`` triples (0-based)."""
        dims = check_dims(dims)
        pos = np.asarray(positions, dtype=np.int64).reshape(-1, 3)
        for axis in range(3):
            if pos.size and (pos[:, axis].min() < 0 or pos[:, axis].max() >= dims[axis]):
                raise ArgumentError(f"position index out of range on axis {axis}")
        flat = pos[:, 0] + dims[0] * (pos[:, 1] + dims[1] * pos[:, 2])
        return cls(dims, indices=flat)

    @property
    def n_measurements(self):
        return self.matrix.shape[0] if self.mode == "dense" else self.indices.size

    @property
    def mask(self):
        """Boolean observation mask (mask mode only)."""
        if self.mode != "mask":
            raise ArgumentError("dense operators have no mask")
        m = np.zeros(int(np.prod(self.dims)), dtype=bool)
        m[self.indices] = True
        return unvec(m, self.dims)

    def positions(self):
        if self.mode != "mask":
            raise ArgumentError("dense operators have no positions")
        i, j, k = np.unravel_index(self.indices, self.dims, order="F")
        return np.stack([i, j, k], axis=1)

    def sensing_tensor(self, j):
        if self.mode == "dense":
            return unvec(self.matrix[j], self.dims).copy()
        out = np.zeros(int(np.prod(self.dims)))
        out[self.indices[j]] = 1.0
        return unvec(out, self.dims)

    def _check_x(self, X):
        X = np.asarray(X, dtype=np.float64)
        if X.shape != self.dims:
            raise ShapeError(f"operand shape {X.shape} does not match operator dims {self.dims}")
        return X

    def apply(self, X, rows=None):
        x = vec(self._check_x(X))
        if self.mode == "dense":
            A = self.matrix if rows is None else self.matrix[rows]
            return A @ x
        idx = self.indices if rows is None else self.indices[rows]
        return x[idx].copy()

    def adjoint(self, z, rows=None):
        z = np.asarray(z, dtype=np.float64).ravel()
        expected = self.n_measurements if rows is None else np.atleast_1d(rows).size
        if z.size != expected:
            raise ShapeError(f"adjoint expects a vector of length {expected}, got {z.size}")
        if self.mode == "dense":
            A = self.matrix if rows is None else self.matrix[rows]
            out = A.T @ z
        else:
            idx = self.indices if rows is None else self.indices[rows]
            out = np.zeros(int(np.prod(self.dims)))
            out[idx] = z
        return unvec(out, self.dims).copy()

    def __repr__(self):
        return f"MeasurementOp(mode={self.mode!r}, dims={self.dims}, M={self.n_measurements})"


def apply(op, X):
    return op.apply(X)


def adjoint(op, z):
    return op.adjoint(z)


@dataclass
class SamplingDistribution:
    """Probabilities over the components of a separable objective."""

    p: np.ndarray

    def __post_init__(self):
        p = np.asarray(self.p, dtype=np.float64).ravel()
        if p.size < 1 or (p <= 0).any():
            raise ArgumentError("sampling probabilities must be positive")
        if abs(p.sum() - 1.0) > 1e-12:
            raise ArgumentError(f"sampling probabilities sum to {p.sum()!r}, not 1")
        self.p = p

    @classmethod
    def uniform(cls, n):
        return cls(np.full(n, 1.0 / n))

    @property
    def is_uniform(self):
        return bool(np.all(self.p == self.p[0]))

    def __len__(self):
        return self.p.size


class SeparableObjective:
    """``F(X) = (c/2)||theta(X) - y||^2`` split into ``K`` block components.

    Component ``j`` is ``f_j(X) = (c K / 2) ||theta_j(X) - y_j||^2`` where
    ``theta_j`` keeps the measurement rows of block ``j``, so that ``F`` is
    exactly the uniform average of the ``f_j``.

    Parameters
    ----------
    op : MeasurementOp
    y : array-like of shape (M,)
        Observations.
    weight : float
        The constant ``c``.
    n_components : int, optional
        Number of contiguous row blocks ``K``; defaults to ``M`` (one
        component per measurement).
    rho_minus, rho_plus, delta : float, optional
        Known restricted convexity/smoothness/isometry constants. Carried as
        metadata for diagnostics; solvers never read them.
    """

    def __init__(self, op, y, weight=1.0, n_components=None,
                 rho_minus=None, rho_plus=None, delta=None):
        y = np.asarray(y, dtype=np.float64).ravel()
        if y.size != op.n_measurements:
            raise ShapeError(f"y has length {y.size}, operator has {op.n_measurements} rows")
        if not np.isfinite(y).all():
            raise ArgumentError("observations must be finite")
        K = op.n_measurements if n_components is None else int(n_components)
        if not 1 <= K <= op.n_measurements:
            raise ArgumentError(f"n_components={K} must lie in [1, {op.n_measurements}]")
        self.op = op
        self.y = y
        self.weight = float(weight)
        self.n_components = K
        self.rho_minus, self.rho_plus, self.delta = rho_minus, rho_plus, delta
        bounds = np.linspace(0, op.n_measurements, K + 1).round().astype(np.int64)
        self._bounds = bounds
        self._singleton = K == op.n_measurements

    @property
    def dims(self):
        return self.op.dims

    def block_rows(self, j):
        if not 0 <= j < self.n_components:
            raise ArgumentError(f"component index {j} outside [0, {self.n_components})")
        return np.arange(self._bounds[j], self._bounds[j + 1])

    def _rows(self, components):
        components = np.atleast_1d(np.asarray(components, dtype=np.int64))
        if components.size and (components.min() < 0 or components.max() >= self.n_components):
            raise ArgumentError("component index out of range")
        if self._singleton:
            return components
        return np.concatenate([self.block_rows(j) for j in components])

    def residual(self, X):
        return self.op.apply(X) - self.y

    def value(self, X):
        r = self.residual(X)
        return 0.5 * self.weight * float(r @ r)

    def gradient(self, X):
        return self.weight * self.op.adjoint(self.residual(X))

    def component_value(self, j, X):
        rows = self.block_rows(j)
        r = self.op.apply(X, rows) - self.y[rows]
        return 0.5 * self.weight * self.n_components * float(r @ r)

    def component_gradient(self, j, X):
        rows = self.block_rows(j)
        r = self.op.apply(X, rows) - self.y[rows]
        return self.weight * self.n_components * self.op.adjoint(r, rows)

    def batch_gradient(self, components, X, weights=None):
        """``(1/b) sum_j w_j grad f_j(X)`` over the listed components.

        Components may repeat (sampling with replacement); ``weights``
        defaults to all ones.
        """
        components = np.atleast_1d(np.asarray(components, dtype=np.int64))
        b = components.size
        if weights is None and np.unique(components).size == b:
            rows = self._rows(components)
            r = self.op.apply(X, rows) - self.y[rows]
            return self.weight * self.n_components / b * self.op.adjoint(r, rows)
        weights = np.ones(b) if weights is None else np.asarray(weights, dtype=np.float64)
        out = np.zeros(self.dims)
        for j, w in zip(components, weights):
            out += w * self.component_gradient(int(j), X)
        return out / b


def cs_objective(op, y, **kwargs):
    """Compressive-sensing objective ``(1/2M)||theta(X) - y||^2``."""
    return SeparableObjective(op, y, weight=1.0 / op.n_measurements, **kwargs)


def inpainting_objective(op, y, n_blocks=1, **kwargs):
    """Inpainting objective ``(1/2)||P_Omega(X_obs - Y)||^2``.

    ``op`` must be a mask operator; ``y`` holds the observed entries.
    """
    if op.mode != "mask":
        raise ArgumentError("inpainting needs a mask operator")
    if op.n_measurements == 0:
        raise ArgumentError("nothing observed")
    return SeparableObjective(op, y, weight=1.0, n_components=n_blocks, **kwargs)


@dataclass
class RipEstimate:
    """Monte-Carlo lower estimate of a tubal-rank restricted isometry constant."""

    r: int
    delta_hat: float
    trials: int
    ratios: np.ndarray = field(repr=False, default=None)

    def contraction_factor(self, gamma):
        """``2(|1 - gamma| + gamma * delta)``; contraction is certified when < 1."""
        return 2.0 * (abs(1.0 - gamma) + gamma * self.delta_hat)

    def noise_factor(self, gamma, eps):
        """``2 gamma eps sqrt(1 + delta)`` for a noise vector of norm at most ``eps``."""
        return 2.0 * gamma * eps * math.sqrt(1.0 + self.delta_hat)


def alpha_constant(rho_plus, sampling):
    """``max_i rho_plus(i) / (M p(i))`` for per-component smoothness constants."""
    rho_plus = np.asarray(rho_plus, dtype=np.float64)
    p = sampling.p if isinstance(sampling, SamplingDistribution) else np.asarray(sampling)
    return float(np.max(rho_plus / (p.size * p)))


def _lowrank_probe(rng, dims, r):
    n1, n2, n3 = dims
    return tprod(rng.standard_normal((n1, r, n3)), rng.standard_normal((r, n2, n3)))


def estimate_rip(op, r, trials=100, seed=0):
    """Largest observed ``| ||theta(X)||^2 - 1 |`` over random unit tubal-rank-``r`` probes.

    Dense operators are scaled by ``1/sqrt(M)`` so that an i.i.d. N(0, 1)
    ensemble is an approximate isometry; mask operators are used as is.
    """
    if trials < 1:
        raise ArgumentError("trials must be >= 1")
    rng = np.random.default_rng(seed)
    scale = 1.0 / op.n_measurements if op.mode == "dense" else 1.0
    ratios = np.empty(trials)
    for t in range(trials):
        X = _lowrank_probe(rng, op.dims, r)
        X /= np.linalg.norm(X)
        yx = op.apply(X)
        ratios[t] = scale * float(yx @ yx)
    return RipEstimate(r=int(r), delta_hat=float(np.abs(ratios - 1.0).max()),
                       trials=int(trials), ratios=ratios)


def noisy_observe(op, X, sigma, seed=0):
    """``theta(X) + e`` with ``e ~ N(0, (sigma * max|theta(X)|)^2)`` i.i.d."""
    if sigma < 0:
        raise ArgumentError("sigma must be nonnegative")
    y = op.apply(check_tensor3(X))
    if sigma == 0:
        return y
    std = float(np.abs(y).max()) * sigma
    return y + np.random.default_rng(seed).normal(0.0, std, size=y.size)


def write_vector(v, path):
    v = np.asarray(v, dtype="<f8").ravel()
    with open(path, "wb") as fh:
        fh.write(struct.pack("<I", v.size))
        fh.write(v.tobytes())


def read_vector(path):
    with open(path, "rb") as fh:
        buf = fh.read()
    if len(buf) < 4:
        raise FormatError("vector length prefix truncated", offset=len(buf))
    (n,) = struct.unpack("<I", buf[:4])
    if len(buf) != 4 + 8 * n:
        raise FormatError(f"expected {n} float64 values", offset=len(buf))
    return np.frombuffer(buf, dtype="<f8", offset=4).astype(np.float64)


def save_measurements(directory, op, y=None):
    """Write ``op`` (and optionally observations ``y``) into ``directory``.

    Layout: ``manifest.json`` with ``{mode, M, dims}``; dense mode adds
    ``A_000001.tns3`` ... one file per sensing tensor; mask mode adds
    ``indices.json`` holding ``[i, j, k]`` triples. ``y.f64`` stores the
    observation vector with a u32 length prefix.
    """
    os.makedirs(directory, exist_ok=True)
    manifest = {"mode": op.mode, "M": int(op.n_measurements), "dims": list(op.dims)}
    with open(os.path.join(directory, "manifest.json"), "w") as fh:
        json.dump(manifest, fh)
    if op.mode == "dense":
        for j in range(op.n_measurements):
            write_tns3(op.sensing_tensor(j), os.path.join(directory, f"A_{j + 1:06d}.tns3"))
    else:
        with open(os.path.join(directory, "indices.json"), "w") as fh:
            json.dump(op.positions().tolist(), fh)
    if y is not None:
        write_vector(y, os.path.join(directory, "y.f64"))


def load_measurements(directory):
    """Inverse of :func:`save_measurements`; returns ``(op, y_or_None)``."""
    with open(os.path.join(directory, "manifest.json")) as fh:
        manifest = json.load(fh)
    dims, M = tuple(manifest["dims"]), int(manifest["M"])
    if manifest["mode"] == "dense":
        tensors = [read_tns3(os.path.join(directory, f"A_{j + 1:06d}.tns3")) for j in range(M)]
        op = MeasurementOp.from_sensing_tensors(np.stack(tensors))
    elif manifest["mode"] == "mask":
        with open(os.path.join(directory, "indices.json")) as fh:
            op = MeasurementOp.from_positions(json.load(fh), dims)
    else:
        raise FormatError(f"unknown measurement mode {manifest['mode']!r}")
    if op.n_measurements != M or op.dims != dims:
        raise FormatError("manifest does not match stored operator")
    ypath = os.path.join(directory, "y.f64")
    y = read_vector(ypath) if os.path.exists(ypath) else None
    if y is not None and y.size != M:
        raise FormatError(f"y has {y.size} entries, manifest says {M}")
    return op, y
