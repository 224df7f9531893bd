"""Iterative singular tube hard thresholding solvers.

All four solvers share one loop: form a pre-threshold point ``Z`` from the
current iterate, project it with :func:`~tubal.tsvd.stht`, record, and stop
on a small relative step or after ``max_iters`` iterations. They differ only
in how ``Z`` is formed:

``istht``      ``Z = X - gamma grad F(X)``
``aistht``     Nesterov-style mixing of consecutive gradient points
``stoistht``   one randomly drawn component gradient
``bstoistht``  the mean of a random batch of component gradients
"""

import csv
import json
import math
import time
from dataclasses import asdict, dataclass, field
from typing import NamedTuple, Optional

import numpy as np

from .exceptions import ArgumentError, DivergenceError, NumericalError
from .objectives import SamplingDistribution
from .tensor_core import fro_norm
from .tsvd import stht, tubal_rank

__all__ = [
    "SolverConfig", "RunTrace", "IterRecord", "NesterovState", "check_stop",
    "istht", "aistht", "stoistht", "bstoistht", "solve", "stochastic_step",
    "batch_step", "VARIANTS",
]

VARIANTS = ("istht", "aistht", "stoistht", "bstoistht")
TRACE_HEADER = ("iter", "objective", "rec_error", "rel_step", "ms")


@dataclass
class SolverConfig:
    """Hyperparameters of a solver run.

    ``ground_truth``, when set, makes every trace record carry the recovery
    error against it. ``momentum`` selects how ``aistht`` uses the Nesterov
    schedule: ``"nesterov"`` keeps ``step_size`` for the gradient and uses the
    schedule only as the mixing weight; ``"literal"`` uses the schedule value
    for both, exactly as the algorithm is usually written down.
    """

    rank: int
    step_size: float = 1.0
    max_iters: int = 500
    tol: float = 1e-10
    variant: str = "istht"
    batch_size: Optional[int] = None
    sampling: Optional[SamplingDistribution] = None
    seed: int = 0
    ground_truth: Optional[np.ndarray] = field(default=None, repr=False)
    momentum: str = "nesterov"
    scale: bool = True
    record_every: int = 1
    check_rank: bool = False
    divergence_factor: float = 1e6

    def validate(self, obj):
        n1, n2, _ = obj.dims
        if not isinstance(self.rank, (int, np.integer)) or not 1 <= self.rank <= min(n1, n2):
            raise ArgumentError(f"rank={self.rank} outside [1, {min(n1, n2)}]")
        if self.variant not in VARIANTS:
            raise ArgumentError(f"unknown variant {self.variant!r}")
        if self.step_size < 0 or not math.isfinite(self.step_size):
            raise ArgumentError("step_size must be finite and nonnegative")
        if self.tol <= 0:
            raise ArgumentError("tol must be positive")
        if self.max_iters < 1:
            raise ArgumentError("max_iters must be >= 1")
        if self.momentum not in ("nesterov", "literal"):
            raise ArgumentError(f"unknown momentum mode {self.momentum!r}")
        if self.variant == "bstoistht":
            b = self.batch_size
            if b is None or not 1 <= b <= obj.n_components:
                raise ArgumentError(f"batch_size={b} outside [1, {obj.n_components}]")
        if self.sampling is not None and len(self.sampling) != obj.n_components:
            raise ArgumentError("sampling distribution length differs from component count")
        if self.ground_truth is not None:
            if np.shape(self.ground_truth) != obj.dims:
                raise ArgumentError("ground truth shape differs from objective dims")
            if fro_norm(self.ground_truth) == 0:
                raise ArgumentError("ground truth has zero norm")
        if self.record_every < 1:
            raise ArgumentError("record_every must be >= 1")

    def to_dict(self):
        d = asdict(self)
        d.pop("ground_truth")
        d["sampling"] = None if self.sampling is None else self.sampling.p.tolist()
        d["has_ground_truth"] = self.ground_truth is not None
        return d


class IterRecord(NamedTuple):
    iter: int
    objective: float
    rec_error: Optional[float]
    rel_step: float
    ms: float


@dataclass
class RunTrace:
    records: list = field(default_factory=list)
    status: str = "max_iters"
    X: Optional[np.ndarray] = field(default=None, repr=False)
    indices: list = field(default_factory=list, repr=False)

    @property
    def n_iter(self):
        return self.records[-1].iter if self.records else 0

    @property
    def rec_errors(self):
        return np.array([np.nan if r.rec_error is None else r.rec_error for r in self.records])

    @property
    def objectives(self):
        return np.array([r.objective for r in self.records])

    @property
    def final_rec_error(self):
        return self.records[-1].rec_error if self.records else None

    def iterations_to(self, threshold):
        """First recorded iteration with recovery error at or below ``threshold``."""
        for rec in self.records:
            if rec.rec_error is not None and rec.rec_error <= threshold:
                return rec.iter
        return None

    def to_csv(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(TRACE_HEADER)
            for r in self.records:
                w.writerow([r.iter, repr(r.objective),
                            "" if r.rec_error is None else repr(r.rec_error),
                            repr(r.rel_step), f"{r.ms:.3f}"])

    def write_sidecar(self, path, cfg=None):
        meta = {"status": self.status, "n_iter": self.n_iter,
                "final_objective": self.records[-1].objective if self.records else None,
                "final_rec_error": self.final_rec_error,
                "config": None if cfg is None else cfg.to_dict()}
        with open(path, "w") as fh:
            json.dump(meta, fh, indent=2)


def check_stop(X_prev, X_next, tol):
    """Relative-step stopping rule; absolute step when ``X_prev`` is zero."""
    if tol <= 0:
        raise ArgumentError("tol must be positive")
    return _rel_step(X_prev, X_next) < tol


def _rel_step(X_prev, X_next):
    den = fro_norm(X_prev)
    num = fro_norm(X_next - X_prev)
    return num / den if den > 0 else fro_norm(X_next)


@dataclass
class NesterovState:
    """Momentum schedule ``lam_{t+1} = (1 + sqrt(1 + 4 lam_t^2)) / 2``.

    ``beta`` is the weight ``(1 - lam_t) / lam_{t+1}`` produced by the most
    recent :meth:`advance`; it is zero at the first step and negative after.
    """

    lam: float = 1.0
    beta: float = 0.0
    zhat_prev: Optional[np.ndarray] = field(default=None, repr=False)

    def advance(self):
        lam_next = 0.5 * (1.0 + math.sqrt(1.0 + 4.0 * self.lam ** 2))
        self.beta = (1.0 - self.lam) / lam_next
        self.lam = lam_next
        return self.beta


def stochastic_step(obj, X, i, gamma, sampling=None):
    """Pre-threshold point of one stochastic step using component ``i``."""
    K = obj.n_components
    p_i = 1.0 / K if sampling is None else sampling.p[i]
    return X - (gamma / (K * p_i)) * obj.component_gradient(i, X)


def batch_step(obj, X, batch, gamma, sampling=None):
    """Pre-threshold point of one batched stochastic step.

    Uniform sampling uses the scale ``gamma``, so a batch holding every
    component reproduces the deterministic step. With a non-uniform
    ``sampling`` each drawn component is importance-weighted by
    ``1 / (K p_j)``.
    """
    batch = np.asarray(batch, dtype=np.int64)
    if batch.size == obj.n_components and np.unique(batch).size == batch.size:
        return X - gamma * obj.gradient(X)
    if sampling is None or sampling.is_uniform:
        return X - gamma * obj.batch_gradient(batch, X)
    w = 1.0 / (obj.n_components * sampling.p[batch])
    return X - gamma * obj.batch_gradient(batch, X, weights=w)


class _ResidualCache:
    """Reuses the residual of the most recent iterate between the gradient
    and objective evaluations. Iterates are never mutated inside a run, so
    identity is a safe key."""

    def __init__(self, obj):
        self._obj = obj
        self._key = None
        self._res = None

    def __getattr__(self, name):
        return getattr(self._obj, name)

    def _residual(self, X):
        if X is not self._key:
            self._key, self._res = X, self._obj.residual(X)
        return self._res

    def value(self, X):
        r = self._residual(X)
        return 0.5 * self._obj.weight * float(r @ r)

    def gradient(self, X):
        return self._obj.weight * self._obj.op.adjoint(self._residual(X))


def _run(obj, cfg, propose):
    cfg.validate(obj)
    X = np.zeros(obj.dims)
    truth = cfg.ground_truth
    truth_norm = fro_norm(truth) if truth is not None else None
    f0 = obj.value(X)
    trace = RunTrace(X=X)
    for t in range(cfg.max_iters):
        tic = time.perf_counter()
        Z = propose(t, X, trace)
        if not np.isfinite(Z).all():
            trace.status = "diverged"
            raise DivergenceError(f"non-finite gradient step at iteration {t + 1}", trace)
        X_next = stht(Z, cfg.rank, scale=cfg.scale)
        ms = 1e3 * (time.perf_counter() - tic)
        f = obj.value(X_next)
        if not math.isfinite(f) or (f0 > 0 and f > cfg.divergence_factor * f0):
            trace.status = "diverged"
            raise DivergenceError(f"objective {f!r} exploded at iteration {t + 1}", trace)
        if cfg.check_rank and tubal_rank(X_next, 1e-8).tubal_rank > cfg.rank:
            raise NumericalError(f"iterate {t + 1} exceeds tubal rank {cfg.rank}")
        step = _rel_step(X, X_next)
        stop = step < cfg.tol
        last = stop or t + 1 == cfg.max_iters
        if (t + 1) % cfg.record_every == 0 or last:
            re = None if truth is None else fro_norm(X_next - truth) / truth_norm
            trace.records.append(IterRecord(t + 1, f, re, step, ms))
        X = X_next
        trace.X = X
        if stop:
            trace.status = "converged"
            break
    return trace


def istht(obj, cfg):
    """Iterative singular tube hard thresholding from ``X^0 = 0``."""
    gamma = cfg.step_size
    obj = _ResidualCache(obj)
    return _run(obj, cfg, lambda t, X, tr: X - gamma * obj.gradient(X))


def aistht(obj, cfg):
    """Accelerated variant with the Nesterov momentum schedule."""
    obj = _ResidualCache(obj)
    state = NesterovState(zhat_prev=np.zeros(obj.dims))
    literal = cfg.momentum == "literal"

    def propose(t, X, tr):
        beta = state.advance()
        step = beta if literal else cfg.step_size
        zhat = X - step * obj.gradient(X)
        Z = (1.0 - beta) * zhat + beta * state.zhat_prev
        state.zhat_prev = zhat
        return Z

    return _run(obj, cfg, propose)


def stoistht(obj, cfg):
    """Stochastic variant: one component gradient per iteration."""
    rng = np.random.default_rng(cfg.seed)
    sampling = cfg.sampling
    K = obj.n_components
    uniform = sampling is None or sampling.is_uniform

    def propose(t, X, tr):
        i = int(rng.integers(K)) if uniform else int(rng.choice(K, p=sampling.p))
        tr.indices.append(i)
        return stochastic_step(obj, X, i, cfg.step_size, None if uniform else sampling)

    return _run(obj, cfg, propose)


def bstoistht(obj, cfg):
    """Batched stochastic variant.

    Uniform sampling draws ``batch_size`` distinct components as the prefix
    of a seeded random permutation; non-uniform sampling draws with
    replacement according to ``cfg.sampling``.
    """
    rng = np.random.default_rng(cfg.seed)
    sampling = cfg.sampling
    K, b = obj.n_components, cfg.batch_size
    uniform = sampling is None or sampling.is_uniform

    def propose(t, X, tr):
        if b == K and uniform:
            batch = np.arange(K)
        elif uniform:
            batch = rng.permutation(K)[:b]
        else:
            batch = rng.choice(K, size=b, replace=True, p=sampling.p)
        tr.indices.append(batch)
        return batch_step(obj, X, batch, cfg.step_size, None if uniform else sampling)

    return _run(obj, cfg, propose)


_DISPATCH = {"istht": istht, "aistht": aistht, "stoistht": stoistht, "bstoistht": bstoistht}


def solve(obj, cfg):
    """Run the solver named by ``cfg.variant``."""
    if cfg.variant not in _DISPATCH:
        raise ArgumentError(f"unknown variant {cfg.variant!r}")
    return _DISPATCH[cfg.variant](obj, cfg)
