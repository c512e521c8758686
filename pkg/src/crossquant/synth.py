"""Seeded synthetic activations and weights.

Activations are Gaussian with a few whole columns (input channels) scaled up,
which inflates every row maximum the way large-model outlier features do.
Draw order is fixed: the Gaussian block first, then the outlier column
choice, both from one ``numpy.random.Generator`` seeded with ``seed``.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np

from .errors import ConfigError
from .tensor import as_matrix

__all__ = ["SynthSpec", "outlier_count", "outlier_columns", "generate_activations", "generate_weights"]


@dataclass(frozen=True)
class SynthSpec:
    rows: int
    cols: int
    base_sigma: float = 1.0
    outlier_frac: float = 0.01
    outlier_scale: float = 30.0
    seed: int = 0

    def __post_init__(self):
        if self.rows < 1 or self.cols < 1:
            raise ConfigError(f"rows and cols must be positive, got {self.rows}x{self.cols}")
        if not (self.base_sigma > 0 and math.isfinite(self.base_sigma)):
            raise ConfigError(f"base_sigma must be positive and finite, got {self.base_sigma}")
        if not 0.0 <= self.outlier_frac <= 1.0:
            raise ConfigError(f"outlier_frac must lie in [0, 1], got {self.outlier_frac}")
        if not (self.outlier_scale >= 1 and math.isfinite(self.outlier_scale)):
            raise ConfigError(f"outlier_scale must be >= 1, got {self.outlier_scale}")
        if not 0 <= self.seed < 2**64:
            raise ConfigError(f"seed must be an unsigned 64-bit integer, got {self.seed}")

    def to_dict(self) -> dict:
        return asdict(self)


def outlier_count(frac: float, cols: int) -> int:
    # snap so that e.g. 0.1 * 30 counts 3 columns, not 4
    prod = frac * cols
    nearest = round(prod)
    if abs(prod - nearest) <= 1e-9 * max(1.0, prod):
        return int(nearest)
    return int(math.ceil(prod))


def _draw(spec: SynthSpec) -> tuple[np.ndarray, np.ndarray]:
    rng = np.random.default_rng(spec.seed)
    x = rng.normal(0.0, spec.base_sigma, size=(spec.rows, spec.cols))
    k = outlier_count(spec.outlier_frac, spec.cols)
    cols = np.sort(rng.choice(spec.cols, size=k, replace=False))
    return x, cols


def outlier_columns(spec: SynthSpec) -> np.ndarray:
    """Sorted indices of the columns :func:`generate_activations` scales up."""
    return _draw(spec)[1]


def generate_activations(spec: SynthSpec) -> np.ndarray:
    x, cols = _draw(spec)
    x[:, cols] *= spec.outlier_scale
    return as_matrix(x, copy=False)


def generate_weights(rows: int, cols: int, sigma: float = 0.02, seed: int = 0) -> np.ndarray:
    """Zero-mean Gaussian weight matrix of shape ``(rows, cols)``."""
    if rows < 1 or cols < 1:
        raise ConfigError(f"rows and cols must be positive, got {rows}x{cols}")
    if not (sigma > 0 and math.isfinite(sigma)):
        raise ConfigError(f"sigma must be positive and finite, got {sigma}")
    rng = np.random.default_rng(seed)
    return as_matrix(rng.normal(0.0, sigma, size=(rows, cols)), copy=False)
