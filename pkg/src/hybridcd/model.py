"""Two-layer ReLU regression network, squared-error loss and data generation.

The network is

    f(W, A, x) = (1 / sqrt(m)) * sum_r a_r * max(w_r . x, 0)

with first-layer weights ``W`` (m x p) and output weights ``A`` (m,).  Only
``W`` is ever trained; ``A`` stays at its initial draw.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

__all__ = [
    "Dataset",
    "NetworkParams",
    "generate_dataset",
    "init_params",
    "forward",
    "predict",
    "loss",
    "gradient",
    "save_dataset",
    "load_dataset",
]


def _as_matrix(a, name: str) -> np.ndarray:
    arr = np.ascontiguousarray(a, dtype=np.float64)
    if arr.ndim != 2:
        raise ValueError(f"{name} must be 2-dimensional, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains non-finite values")
    return arr


def _as_vector(a, name: str) -> np.ndarray:
    arr = np.ascontiguousarray(a, dtype=np.float64)
    if arr.ndim != 1:
        raise ValueError(f"{name} must be 1-dimensional, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains non-finite values")
    return arr


@dataclass(frozen=True)
class Dataset:
    """``n`` samples with ``p`` features each and one scalar label per sample."""

    features: np.ndarray
    labels: np.ndarray

    def __post_init__(self):
        features = _as_matrix(self.features, "features")
        labels = _as_vector(self.labels, "labels")
        if features.shape[0] < 1 or features.shape[1] < 1:
            raise ValueError(f"dataset needs n >= 1 and p >= 1, got {features.shape}")
        if labels.shape[0] != features.shape[0]:
            raise ValueError(
                f"{features.shape[0]} feature rows but {labels.shape[0]} labels"
            )
        features.flags.writeable = False
        labels.flags.writeable = False
        object.__setattr__(self, "features", features)
        object.__setattr__(self, "labels", labels)

    @property
    def n(self) -> int:
        return self.features.shape[0]

    @property
    def p(self) -> int:
        return self.features.shape[1]


@dataclass(frozen=True)
class NetworkParams:
    """First-layer weights ``W`` (m x p) and output weights ``A`` (m,)."""

    W: np.ndarray
    A: np.ndarray
    _scale: float = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        W = _as_matrix(self.W, "W")
        A = _as_vector(self.A, "A")
        if W.shape[0] < 1 or W.shape[1] < 1:
            raise ValueError(f"W needs m >= 1 and p >= 1, got {W.shape}")
        if A.shape[0] != W.shape[0]:
            raise ValueError(f"W has {W.shape[0]} rows but A has {A.shape[0]} entries")
        W.flags.writeable = False
        A.flags.writeable = False
        object.__setattr__(self, "W", W)
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "_scale", 1.0 / math.sqrt(W.shape[0]))

    @property
    def m(self) -> int:
        return self.W.shape[0]

    @property
    def p(self) -> int:
        return self.W.shape[1]

    @property
    def scale(self) -> float:
        """The output scale factor ``1/sqrt(m)``."""
        return self._scale

    @property
    def coef(self) -> np.ndarray:
        """Per-neuron output coefficients ``a_r / sqrt(m)``."""
        return self.A * self._scale

    def with_W(self, W) -> "NetworkParams":
        return NetworkParams(W, self.A)


def _check_compatible(params: NetworkParams, data: Dataset):
    if params.p != data.p:
        raise ValueError(
            f"parameter dimension p={params.p} does not match data dimension p={data.p}"
        )


def _check_counts(**counts):
    for name, value in counts.items():
        if int(value) != value or value < 1:
            raise ValueError(f"{name} must be a positive integer, got {value!r}")


def generate_dataset(n: int, p: int, seed: int) -> Dataset:
    """Draw ``n`` points uniformly on the unit sphere in R^p with N(0, 1) labels.

    Points are standard Gaussian vectors scaled to unit norm, which is
    exactly uniform on the sphere.  Deterministic in ``seed``.
    """
    _check_counts(n=n, p=p)
    rng = np.random.default_rng(seed)
    features = rng.standard_normal((n, p))
    norms = np.linalg.norm(features, axis=1, keepdims=True)
    # a zero draw has probability zero; redraw rather than divide by it
    while np.any(norms == 0.0):
        bad = norms[:, 0] == 0.0
        features[bad] = rng.standard_normal((int(bad.sum()), p))
        norms = np.linalg.norm(features, axis=1, keepdims=True)
    features /= norms
    labels = rng.standard_normal(n)
    return Dataset(features, labels)


def init_params(m: int, p: int, seed: int) -> NetworkParams:
    """``W`` entries i.i.d. N(0, 1), ``A`` entries i.i.d. Uniform[-1, 1]."""
    _check_counts(m=m, p=p)
    rng = np.random.default_rng(seed)
    W = rng.standard_normal((m, p))
    A = rng.uniform(-1.0, 1.0, size=m)
    return NetworkParams(W, A)


def forward(params: NetworkParams, x) -> float:
    """Network output for a single feature vector ``x``."""
    x = np.asarray(x, dtype=np.float64)
    if x.shape != (params.p,):
        raise ValueError(f"expected a feature vector of length {params.p}, got {x.shape}")
    z = params.W @ x
    return float(params.scale * (params.A @ np.maximum(z, 0.0)))


def preactivations(params: NetworkParams, data: Dataset) -> np.ndarray:
    """``Z[r, s] = w_r . X_s``, shape (m, n)."""
    _check_compatible(params, data)
    return params.W @ data.features.T


def predict(params: NetworkParams, data: Dataset) -> np.ndarray:
    """Network outputs for every sample, shape (n,)."""
    Z = preactivations(params, data)
    return params.scale * (params.A @ np.maximum(Z, 0.0))


def loss(params: NetworkParams, data: Dataset) -> float:
    """Half the sum of squared residuals over the dataset."""
    residuals = predict(params, data) - data.labels
    return 0.5 * float(residuals @ residuals)


def gradient(params: NetworkParams, data: Dataset) -> np.ndarray:
    """Analytic gradient of :func:`loss` with respect to ``W``, shape (m, p).

    The ReLU derivative at exactly zero preactivation is taken as 0.
    """
    Z = preactivations(params, data)
    residuals = params.scale * (params.A @ np.maximum(Z, 0.0)) - data.labels
    return gradient_from_preactivations(Z, residuals, params.coef, data.features)


def gradient_from_preactivations(Z, residuals, coef, features) -> np.ndarray:
    active = (Z > 0.0).astype(np.float64)
    weights = coef[:, None] * active * residuals[None, :]
    return weights @ features


def save_dataset(data: Dataset, path) -> None:
    """Write ``data`` as text: ``n p`` header, n feature rows, then n labels."""
    path = Path(path)
    lines = [f"{data.n} {data.p}"]
    lines.extend(" ".join(f"{v:.17g}" for v in row) for row in data.features)
    lines.extend(f"{v:.17g}" for v in data.labels)
    try:
        path.write_text("\n".join(lines) + "\n")
    except OSError as exc:
        raise OSError(f"cannot write dataset to {path}: {exc}") from exc


def load_dataset(path) -> Dataset:
    """Inverse of :func:`save_dataset`."""
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise OSError(f"cannot read dataset from {path}: {exc}") from exc
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if not lines:
        raise ValueError(f"{path}: empty dataset file")
    try:
        n, p = (int(tok) for tok in lines[0].split())
    except ValueError:
        raise ValueError(f"{path}:1: header must be two integers 'n p'") from None
    if len(lines) != 1 + 2 * n:
        raise ValueError(f"{path}: expected {1 + 2 * n} non-empty lines, found {len(lines)}")
    try:
        features = np.array([[float(v) for v in ln.split()] for ln in lines[1 : 1 + n]])
        labels = np.array([float(ln) for ln in lines[1 + n :]])
    except ValueError as exc:
        raise ValueError(f"{path}: malformed number ({exc})") from None
    if features.shape != (n, p):
        raise ValueError(f"{path}: feature block has shape {features.shape}, header says {(n, p)}")
    return Dataset(features, labels)
