"""Hybrid Jacobi coordinate descent and the full-batch gradient-descent baseline.

Each hybrid epoch computes a target value for every first-layer weight from
the same frozen state, then blends all of them in at once::

    W <- W + alpha * (T - W)

The target of a coordinate is ``w - dL/dw`` when ``|dL/dw| >= dw`` and the
result of a fixed-increment line search along that coordinate otherwise.
"""

from __future__ import annotations

import enum
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import kernels
from .coord_eval import PreactivationCache, build_cache
from .model import Dataset, NetworkParams, gradient_from_preactivations, loss

__all__ = [
    "Rule",
    "HybridConfig",
    "GdConfig",
    "CoordinateTarget",
    "EpochStats",
    "EpochTrace",
    "DivergedError",
    "line_search",
    "coordinate_target",
    "hybrid_epoch",
    "gd_epoch",
]

DEFAULT_MAX_PROBES = 10_000


class Rule(enum.IntEnum):
    GRADIENT = kernels.GRADIENT
    LINE_SEARCH = kernels.LINE_SEARCH
    NO_CHANGE = kernels.NO_CHANGE


class DivergedError(ArithmeticError):
    """Raised when an epoch produces a non-finite loss or parameters."""

    def __init__(self, epoch: int, detail: str = "non-finite loss or parameters"):
        super().__init__(f"diverged at epoch {epoch}: {detail}")
        self.epoch = epoch


@dataclass(frozen=True)
class HybridConfig:
    """Settings for :func:`hybrid_epoch`.

    ``alpha=None`` means one over the number of coordinates blended
    together, ``1/(m*p)``; the blended point is then a convex combination of
    single-coordinate moves.
    """

    dw: float = 0.5
    alpha: Optional[float] = None
    max_probes: int = DEFAULT_MAX_PROBES
    parallel: bool = True
    workers: Optional[int] = None

    def __post_init__(self):
        if not (np.isfinite(self.dw) and self.dw > 0):
            raise ValueError(f"dw must be a positive finite number, got {self.dw!r}")
        if self.alpha is not None and not (0 < self.alpha <= 1):
            raise ValueError(f"alpha must lie in (0, 1], got {self.alpha!r}")
        if int(self.max_probes) != self.max_probes or self.max_probes < 2:
            raise ValueError(f"max_probes must be an integer >= 2, got {self.max_probes!r}")

    def blend(self, n_coords: int) -> float:
        return 1.0 / n_coords if self.alpha is None else float(self.alpha)


@dataclass(frozen=True)
class GdConfig:
    """Settings for :func:`gd_epoch`; ``lr=None`` means ``1/n``."""

    lr: Optional[float] = None

    def __post_init__(self):
        if self.lr is not None and not (np.isfinite(self.lr) and self.lr > 0):
            raise ValueError(f"lr must be a positive finite number, got {self.lr!r}")

    def step(self, n: int) -> float:
        return 1.0 / n if self.lr is None else float(self.lr)


@dataclass(frozen=True)
class CoordinateTarget:
    value: float
    rule: Rule
    probes_used: int


@dataclass(frozen=True)
class EpochStats:
    loss: float
    grad_updates: int = 0
    ls_updates: int = 0
    nochange_updates: int = 0
    ls_probes: int = 0
    capped: int = 0  # coordinates whose line search hit max_probes
    cache_bytes: int = 0


@dataclass(frozen=True)
class EpochTrace:
    """Per-coordinate detail of one hybrid epoch, for auditing."""

    cache: PreactivationCache
    grad: np.ndarray
    targets: np.ndarray
    rules: np.ndarray
    probes: np.ndarray


def _validate_index(params: NetworkParams, r: int, j: int):
    m, p = params.W.shape
    if not (0 <= r < m):
        raise ValueError(f"neuron index r={r} out of range [0, {m})")
    if not (0 <= j < p):
        raise ValueError(f"feature index j={j} out of range [0, {p})")


def line_search(cache: PreactivationCache, params: NetworkParams, data: Dataset,
                r: int, j: int, dw: float, max_probes: int = DEFAULT_MAX_PROBES,
                backend=None) -> CoordinateTarget:
    """Walk coordinate ``(r, j)`` in steps of ``dw`` while the loss strictly drops.

    Probes ``+dw`` and ``-dw`` first.  Equal losses, or neither probe beating
    the cached loss, leave the coordinate unchanged.  Otherwise the walk
    continues in the better direction until the first non-improving probe or
    until ``max_probes`` probes have been spent, and the best point seen is
    returned.
    """
    _validate_index(params, r, j)
    if not dw > 0:
        raise ValueError(f"dw must be positive, got {dw!r}")
    if max_probes < 2:
        raise ValueError(f"max_probes must be >= 2, got {max_probes!r}")
    kern = kernels.get_backend(backend)
    value, rule, probes = kern.line_search(
        cache.Z[r], cache.XT[j], cache.residuals, float(params.coef[r]),
        float(params.W[r, j]), cache.base_loss, float(dw), int(max_probes),
    )
    return CoordinateTarget(value, Rule(rule), probes)


def coordinate_target(cache: PreactivationCache, params: NetworkParams, data: Dataset,
                      grad_entry: float, r: int, j: int, config: HybridConfig,
                      backend=None) -> CoordinateTarget:
    """Target for one coordinate: unit gradient step above the threshold, line search below."""
    _validate_index(params, r, j)
    if abs(grad_entry) >= config.dw:
        return CoordinateTarget(float(params.W[r, j]) - grad_entry, Rule.GRADIENT, 0)
    return line_search(cache, params, data, r, j, config.dw, config.max_probes, backend)


def _row_chunks(m: int, workers: int):
    bounds = np.linspace(0, m, min(m, workers * 4) + 1).astype(int)
    return [(int(a), int(b)) for a, b in zip(bounds[:-1], bounds[1:]) if b > a]


def compute_targets(params: NetworkParams, cache: PreactivationCache, grad: np.ndarray,
                    config: HybridConfig, backend=None, row_order=None):
    """Targets, rule codes and probe counts for every coordinate.

    Every coordinate reads only the frozen ``params``/``cache``/``grad`` and
    writes its own slot, so the result does not depend on evaluation order
    or on how rows are split across threads.  ``row_order`` (a sequence of
    row indices) forces a specific sequential order.
    """
    kern = kernels.get_backend(backend)
    m, p = params.W.shape
    targets = np.empty((m, p), dtype=np.float64)
    rules = np.empty((m, p), dtype=np.int8)
    probes = np.empty((m, p), dtype=np.int64)
    grad = np.ascontiguousarray(grad, dtype=np.float64)
    coef = np.ascontiguousarray(params.coef)
    args = (params.W, cache.Z, cache.XT, cache.residuals, coef, grad,
            cache.base_loss, float(config.dw), int(config.max_probes))

    def run(r0, r1):
        kern.coordinate_targets(*args, r0, r1, targets, rules, probes)

    if row_order is not None:
        for r in row_order:
            run(int(r), int(r) + 1)
    elif config.parallel:
        workers = config.workers or os.cpu_count() or 1
        with ThreadPoolExecutor(max_workers=workers) as pool:
            list(pool.map(lambda c: run(*c), _row_chunks(m, workers)))
    else:
        run(0, m)
    return targets, rules, probes


def hybrid_epoch(params: NetworkParams, data: Dataset, config: HybridConfig,
                 epoch: int = 0, backend=None, trace: bool = False, row_order=None):
    """One Jacobi epoch of hybrid coordinate descent on ``W``.

    Returns ``(new_params, stats)``, or ``(new_params, stats, EpochTrace)``
    when ``trace`` is true.  ``A`` is never changed.
    """
    cache = build_cache(params, data, backend)
    grad = gradient_from_preactivations(cache.Z, cache.residuals, params.coef, data.features)
    targets, rules, probes = compute_targets(params, cache, grad, config, backend, row_order)

    alpha = config.blend(params.W.size)
    with np.errstate(over="ignore", invalid="ignore"):
        W_new = params.W + alpha * (targets - params.W)
        if not np.all(np.isfinite(W_new)):
            raise DivergedError(epoch, "non-finite weights after blend")
        new_params = params.with_W(W_new)
        new_loss = loss(new_params, data)
    if not np.isfinite(new_loss):
        raise DivergedError(epoch, "non-finite loss after blend")

    counts = np.bincount(rules.ravel(), minlength=3)
    ls_mask = rules != Rule.GRADIENT
    stats = EpochStats(
        loss=new_loss,
        grad_updates=int(counts[Rule.GRADIENT]),
        ls_updates=int(counts[Rule.LINE_SEARCH]),
        nochange_updates=int(counts[Rule.NO_CHANGE]),
        ls_probes=int(probes[ls_mask].sum()),
        capped=int(np.count_nonzero(probes >= config.max_probes)),
        cache_bytes=cache.nbytes,
    )
    if trace:
        return new_params, stats, EpochTrace(cache, grad, targets, rules, probes)
    return new_params, stats


def gd_epoch(params: NetworkParams, data: Dataset, config: GdConfig, epoch: int = 0):
    """One full-batch gradient step on ``W``; ``A`` is left alone."""
    Z = params.W @ data.features.T
    residuals = params.scale * (params.A @ np.maximum(Z, 0.0)) - data.labels
    grad = gradient_from_preactivations(Z, residuals, params.coef, data.features)
    with np.errstate(over="ignore", invalid="ignore"):
        W_new = params.W - config.step(data.n) * grad
        if not np.all(np.isfinite(W_new)):
            raise DivergedError(epoch, "non-finite weights after gradient step")
        new_params = params.with_W(W_new)
        new_loss = loss(new_params, data)
    if not np.isfinite(new_loss):
        raise DivergedError(epoch, "non-finite loss after gradient step")
    return new_params, EpochStats(loss=new_loss)
