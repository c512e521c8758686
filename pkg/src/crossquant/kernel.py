"""Quantization-kernel analysis.

The kernel of a quantizer is the set of elements it maps to code 0. With
half-away rounding an element is in the kernel exactly when its magnitude is
below the zero bound ``B = 0.5 * s / q_max``, where ``s`` is its scale
numerator. Only per-token and CrossQuant schemes are analyzed here.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError
from .quantizers import QuantScheme, SchemeKind, cross_scale
from .tensor import as_matrix

__all__ = [
    "KernelReport",
    "zero_bound",
    "kernel_mask",
    "analyze_kernel",
    "remove_kernel",
    "remove_by_proportion",
    "count_for_proportion",
]

_SUPPORTED = (SchemeKind.PER_TOKEN, SchemeKind.CROSS_QUANT)


def _scale_numerators(x: np.ndarray, scheme: QuantScheme) -> np.ndarray:
    if scheme.kind not in _SUPPORTED:
        raise ConfigError(
            f"kernel analysis supports per-token and crossquant, not {scheme.kind.value}"
        )
    t = np.max(np.abs(x), axis=1)
    if scheme.kind is SchemeKind.PER_TOKEN:
        return np.broadcast_to(t[:, None], x.shape)
    return cross_scale(t, np.max(np.abs(x), axis=0), scheme.alpha)


def zero_bound(x, scheme: QuantScheme) -> np.ndarray:
    """Elementwise zero bound ``0.5 * s / q_max``; zero where the scale is zero."""
    x = as_matrix(x, copy=False)
    s = _scale_numerators(x, scheme)
    return as_matrix(0.5 * s / scheme.q_max, copy=False)


def kernel_mask(x, scheme: QuantScheme) -> np.ndarray:
    """Boolean matrix, true where the scheme quantizes the element to zero.

    Evaluated as ``2 * |x| * q_max < s`` (or ``s == 0``), i.e. ``|x| < B``
    with both sides multiplied by ``2 * q_max``. Because the quantizer
    computes ``x * q_max / s`` and 0.5 is representable, this comparison
    agrees bit-for-bit with "code == 0".
    """
    x = as_matrix(x, copy=False)
    s = _scale_numerators(x, scheme)
    return (2.0 * (np.abs(x) * scheme.q_max) < s) | (s == 0)


@dataclass(frozen=True)
class KernelReport:
    mask: np.ndarray
    kernel_proportion: float
    nonzero_kernel_proportion: float
    frac_c_ge_t: float
    frac_Btilde_lt_B: float | None
    scheme: QuantScheme

    @property
    def rows(self) -> int:
        return self.mask.shape[0]

    @property
    def cols(self) -> int:
        return self.mask.shape[1]

    def to_dict(self) -> dict:
        return {
            "scheme": self.scheme.kind.value,
            "bits": self.scheme.bits,
            "alpha": self.scheme.alpha,
            "kernel_proportion": self.kernel_proportion,
            "nonzero_kernel_proportion": self.nonzero_kernel_proportion,
            "frac_c_ge_t": self.frac_c_ge_t,
            "frac_Btilde_lt_B": self.frac_Btilde_lt_B,
            "rows": self.rows,
            "cols": self.cols,
        }


def analyze_kernel(x, scheme: QuantScheme) -> KernelReport:
    """Kernel size plus the row/column statistics that explain it.

    ``frac_c_ge_t`` counts pairs with column maximum >= row maximum.
    ``frac_Btilde_lt_B`` (CrossQuant only) counts pairs whose CrossQuant
    bound is strictly below the per-token bound of the same matrix.
    """
    x = as_matrix(x, copy=False)
    mask = kernel_mask(x, scheme)
    n = x.size
    t = np.max(np.abs(x), axis=1)
    c = np.max(np.abs(x), axis=0)
    frac_c_ge_t = np.count_nonzero(c[None, :] >= t[:, None]) / n
    frac_lt = None
    if scheme.kind is SchemeKind.CROSS_QUANT:
        # shared 0.5/q_max factor dropped: compare numerators
        s_cross = cross_scale(t, c, scheme.alpha)
        frac_lt = np.count_nonzero(s_cross < t[:, None]) / n
    return KernelReport(
        mask=mask,
        kernel_proportion=np.count_nonzero(mask) / n,
        nonzero_kernel_proportion=np.count_nonzero(mask & (x != 0)) / n,
        frac_c_ge_t=float(frac_c_ge_t),
        frac_Btilde_lt_B=None if frac_lt is None else float(frac_lt),
        scheme=scheme,
    )


def remove_kernel(x, scheme: QuantScheme) -> np.ndarray:
    """Zero the kernel elements and leave every other element at full precision."""
    x = as_matrix(x, copy=False)
    return as_matrix(np.where(kernel_mask(x, scheme), 0.0, x), copy=False)


def count_for_proportion(p: float, n: int) -> int:
    """``floor(p * n)``, snapping products within 1e-9 of an integer.

    Without the snap, ``0.7 * 10`` style products that print as whole
    numbers would floor one short or long depending on float noise.
    """
    if not 0.0 <= p <= 1.0:
        raise ConfigError(f"proportion must lie in [0, 1], got {p!r}")
    prod = p * n
    nearest = round(prod)
    if abs(prod - nearest) <= 1e-9 * max(1.0, prod):
        return int(nearest)
    return int(math.floor(prod))


def remove_by_proportion(x, p: float) -> np.ndarray:
    """Zero the ``floor(p * n)`` smallest-magnitude elements of ``x``.

    Selection is global over the matrix; equal magnitudes are taken in
    row-major index order.
    """
    x = as_matrix(x, copy=False)
    k = count_for_proportion(p, x.size)
    out = x.copy()
    if k:
        order = np.argsort(np.abs(x), axis=None, kind="stable")
        out.reshape(-1)[order[:k]] = 0.0
    return as_matrix(out, copy=False)
