"""Epoch-frozen preactivation cache for O(n) single-coordinate loss probes.

Shifting ``W[r, j]`` by ``delta`` only changes neuron ``r``'s preactivations,
by ``delta * X[:, j]``.  With ``Z = W X^T`` and the residuals cached, the
perturbed loss is one pass over the samples.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import kernels
from .model import Dataset, NetworkParams, _check_compatible

__all__ = ["PreactivationCache", "build_cache", "perturbed_loss", "cache_nbytes"]


@dataclass(frozen=True)
class PreactivationCache:
    Z: np.ndarray  # (m, n), Z[r, s] = w_r . X_s
    preds: np.ndarray  # (n,)
    residuals: np.ndarray  # (n,), preds - labels
    base_loss: float
    XT: np.ndarray  # (p, n) contiguous copy of the features, column access for probes

    @property
    def nbytes(self) -> int:
        """Analytic size of the cached quantities: ``8 * (m*n + 2n + 1)``."""
        m, n = self.Z.shape
        return cache_nbytes(m, n)


def cache_nbytes(m: int, n: int) -> int:
    return 8 * (m * n + 2 * n + 1)


def _readonly(a):
    a = np.ascontiguousarray(a, dtype=np.float64)
    a.flags.writeable = False
    return a


def build_cache(params: NetworkParams, data: Dataset, backend=None) -> PreactivationCache:
    """One full forward pass, kept for the rest of the epoch."""
    _check_compatible(params, data)
    kern = kernels.get_backend(backend)
    Z = params.W @ data.features.T
    preds = params.scale * (params.A @ np.maximum(Z, 0.0))
    residuals = preds - data.labels
    return PreactivationCache(
        Z=_readonly(Z),
        preds=_readonly(preds),
        residuals=_readonly(residuals),
        base_loss=kern.half_sq_sum(residuals),
        XT=_readonly(data.features.T),
    )


def perturbed_loss(cache: PreactivationCache, params: NetworkParams, data: Dataset,
                   r: int, j: int, delta: float, backend=None) -> float:
    """Loss with ``W[r, j]`` replaced by ``W[r, j] + delta``, everything else frozen.

    ``delta == 0`` returns ``cache.base_loss`` exactly.
    """
    m, p = params.W.shape
    if not (0 <= r < m):
        raise ValueError(f"neuron index r={r} out of range [0, {m})")
    if not (0 <= j < p):
        raise ValueError(f"feature index j={j} out of range [0, {p})")
    delta = float(delta)
    if not np.isfinite(delta):
        raise ValueError(f"delta must be finite, got {delta}")
    kern = kernels.get_backend(backend)
    coef = float(params.A[r] * params.scale)
    return kern.perturbed_loss(cache.Z[r], cache.XT[j], cache.residuals, coef, delta)
