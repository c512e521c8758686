"""Symmetric integer quantizers: per-token, per-channel, group-wise, CrossQuant.

Every scheme maps an element to ``round(x * q_max / s)`` where ``s`` is a
non-negative scale numerator (a row maximum, a group maximum, or the
CrossQuant mix ``t_i**alpha * c_j**(1 - alpha)``) and ``q_max = 2**(bits-1) - 1``.
Rounding is half-away-from-zero, so a code is zero exactly when the scaled
value has magnitude below one half. No clipping is applied; the scale
construction already bounds every code by ``q_max``.
"""

from __future__ import annotations

import enum
import json
import os
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, TensorSizeError
from .tensor import as_matrix, load_tensor, save_tensor

__all__ = [
    "SchemeKind",
    "QuantScheme",
    "QuantizedTensor",
    "q_max",
    "round_half_away",
    "per_token_quantize",
    "per_channel_quantize",
    "group_wise_quantize",
    "cross_quantize",
    "cross_scale",
    "quantize",
    "dequantize",
    "fake_quantize",
    "save_quantized",
    "load_quantized",
]


class SchemeKind(str, enum.Enum):
    PER_TOKEN = "per-token"
    PER_CHANNEL = "per-channel"
    GROUP_WISE = "group"
    CROSS_QUANT = "crossquant"


@dataclass(frozen=True)
class QuantScheme:
    """Scheme selector plus its parameters.

    ``alpha`` is only meaningful for CrossQuant and ``group_size`` only for
    group-wise quantization; both must be ``None`` otherwise.
    """

    kind: SchemeKind
    bits: int = 8
    alpha: float | None = None
    group_size: int | None = None

    def __post_init__(self):
        object.__setattr__(self, "kind", SchemeKind(self.kind))
        if isinstance(self.bits, bool) or int(self.bits) != self.bits or self.bits < 2:
            raise ConfigError(f"bits must be an integer >= 2, got {self.bits!r}")
        if self.bits > 32:
            raise ConfigError(f"bits must be <= 32, got {self.bits}")
        object.__setattr__(self, "bits", int(self.bits))

        if self.kind is SchemeKind.CROSS_QUANT:
            if self.alpha is None:
                raise ConfigError("CrossQuant requires alpha")
            alpha = float(self.alpha)
            if not 0.0 <= alpha <= 1.0:
                raise ConfigError(f"alpha must lie in [0, 1], got {self.alpha!r}")
            object.__setattr__(self, "alpha", alpha)
        elif self.alpha is not None:
            raise ConfigError(f"alpha is only valid for CrossQuant, not {self.kind.value}")

        if self.kind is SchemeKind.GROUP_WISE:
            g = self.group_size
            if g is None or isinstance(g, bool) or int(g) != g or g < 1:
                raise ConfigError(f"group size must be a positive integer, got {g!r}")
            object.__setattr__(self, "group_size", int(g))
        elif self.group_size is not None:
            raise ConfigError(f"group size is only valid for group-wise, not {self.kind.value}")

    @classmethod
    def per_token(cls, bits: int = 8) -> "QuantScheme":
        return cls(SchemeKind.PER_TOKEN, bits)

    @classmethod
    def per_channel(cls, bits: int = 8) -> "QuantScheme":
        return cls(SchemeKind.PER_CHANNEL, bits)

    @classmethod
    def group_wise(cls, bits: int, group_size: int) -> "QuantScheme":
        return cls(SchemeKind.GROUP_WISE, bits, group_size=group_size)

    @classmethod
    def cross_quant(cls, bits: int = 8, alpha: float = 0.15) -> "QuantScheme":
        return cls(SchemeKind.CROSS_QUANT, bits, alpha=alpha)

    @property
    def q_max(self) -> int:
        return q_max(self.bits)

    def describe(self) -> str:
        """Compact text form, e.g. ``crossquant:8:0.15`` or ``group:4:128``."""
        parts = [self.kind.value, str(self.bits)]
        if self.alpha is not None:
            parts.append(repr(self.alpha))
        if self.group_size is not None:
            parts.append(str(self.group_size))
        return ":".join(parts)

    @classmethod
    def parse(cls, text: str) -> "QuantScheme":
        """Inverse of :meth:`describe`. The bit-width defaults to 8."""
        fields = text.strip().split(":")
        try:
            kind = SchemeKind(fields[0])
        except ValueError:
            raise ConfigError(f"unknown scheme {fields[0]!r}") from None
        try:
            bits = int(fields[1]) if len(fields) > 1 else 8
            if kind is SchemeKind.CROSS_QUANT:
                alpha = float(fields[2]) if len(fields) > 2 else 0.15
                extra = fields[3:]
                scheme = cls.cross_quant(bits, alpha)
            elif kind is SchemeKind.GROUP_WISE:
                if len(fields) < 3:
                    raise ConfigError(f"group scheme needs a group size: {text!r}")
                extra = fields[3:]
                scheme = cls.group_wise(bits, int(fields[2]))
            else:
                extra = fields[2:]
                scheme = cls(kind, bits)
        except ValueError as exc:
            raise ConfigError(f"cannot parse scheme {text!r}: {exc}") from None
        if extra:
            raise ConfigError(f"too many fields in scheme {text!r}")
        return scheme

    def to_dict(self) -> dict:
        return {
            "kind": self.kind.value,
            "bits": self.bits,
            "alpha": self.alpha,
            "group_size": self.group_size,
        }


@dataclass(frozen=True)
class QuantizedTensor:
    """Integer codes plus everything needed to dequantize them exactly.

    For group-wise schemes ``codes`` has the reshaped ``(n/g, g)`` layout and
    ``row_scales`` holds one maximum per group. ``col_scales`` is set only
    for CrossQuant.
    """

    codes: np.ndarray
    scheme: QuantScheme
    row_scales: np.ndarray
    col_scales: np.ndarray | None = None
    original_shape: tuple[int, int] = field(default=(0, 0))

    @property
    def shape(self) -> tuple[int, int]:
        return self.original_shape

    def scale_numerators(self) -> np.ndarray:
        """Per-element scale numerator ``s`` in the layout of ``codes``."""
        if self.scheme.kind is SchemeKind.CROSS_QUANT:
            return cross_scale(self.row_scales, self.col_scales, self.scheme.alpha)
        return np.broadcast_to(self.row_scales[:, None], self.codes.shape)


def q_max(bits: int) -> int:
    return 2 ** (bits - 1) - 1


def round_half_away(v):
    """Round to nearest integer, ties away from zero.

    ``floor(|v| + 0.5)`` is avoided on purpose: it misrounds
    0.49999999999999994 to 1.
    """
    v = np.asarray(v, dtype=np.float64)
    whole = np.trunc(v)
    frac = v - whole  # exact
    return whole + np.where(np.abs(frac) >= 0.5, np.sign(v), 0.0)


def _row_absmax(x: np.ndarray) -> np.ndarray:
    return np.max(np.abs(x), axis=1)


def _col_absmax(x: np.ndarray) -> np.ndarray:
    return np.max(np.abs(x), axis=0)


def _codes(x: np.ndarray, scale: np.ndarray, qmax: int) -> np.ndarray:
    scale = np.broadcast_to(scale, x.shape)
    live = scale > 0
    safe = np.where(live, scale, 1.0)
    codes = np.where(live, round_half_away(x * qmax / safe), 0.0)
    peak = np.max(np.abs(codes)) if codes.size else 0.0
    if peak > qmax:
        # unreachable when the scale construction is correct
        raise AssertionError(f"code magnitude {peak} exceeds q_max={qmax}")
    return codes.astype(np.int64)


def cross_scale(t: np.ndarray, c: np.ndarray, alpha: float) -> np.ndarray:
    """Matrix of CrossQuant scale numerators ``t_i**alpha * c_j**(1 - alpha)``.

    alpha = 1 and alpha = 0 return the row and column maxima verbatim. In
    between, the product is evaluated as ``hi * (lo / hi)**e`` with ``hi``
    the larger of the two maxima and ``e`` the exponent belonging to the
    smaller one. That equals the textbook form in exact arithmetic, keeps
    the ratio in (0, 1] so nothing overflows, and scales exactly when the
    input is multiplied by a power of two. The result is kept in
    ``[lo, hi)`` whenever ``lo < hi``, as the exact value is. A zero maximum
    on either side gives a zero scale.
    """
    t = np.asarray(t, dtype=np.float64)[:, None]
    c = np.asarray(c, dtype=np.float64)[None, :]
    shape = (t.shape[0], c.shape[1])
    if alpha == 1.0:
        return np.broadcast_to(t, shape).copy()
    if alpha == 0.0:
        return np.broadcast_to(c, shape).copy()
    t, c = np.broadcast_arrays(t, c)
    live = (t > 0) & (c > 0)
    row_big = t >= c
    hi = np.where(live, np.where(row_big, t, c), 1.0)
    lo = np.where(live, np.where(row_big, c, t), 1.0)
    expo = np.where(row_big, 1.0 - alpha, alpha)
    ratio = lo / hi
    s = hi * ratio**expo
    tiny = live & (ratio == 0)
    if tiny.any():
        # dynamic range beyond ~1e308: fall back to logs
        s[tiny] = np.exp(alpha * np.log(t[tiny]) + (1.0 - alpha) * np.log(c[tiny]))
    # the exact value lies strictly inside (lo, hi) when lo < hi; rounding
    # must not push it onto hi, or the smaller-bound guarantee breaks
    s = np.clip(s, lo, np.where(lo < hi, np.nextafter(hi, 0.0), hi))
    return np.where(live, s, 0.0)


def per_token_quantize(x, bits: int = 8) -> QuantizedTensor:
    """Quantize each row of an activation matrix with its own absolute maximum."""
    return _rowwise(x, QuantScheme.per_token(bits))


def per_channel_quantize(w, bits: int = 8) -> QuantizedTensor:
    """Quantize each row of a weight matrix with its own absolute maximum.

    Numerically identical to :func:`per_token_quantize`; the two names keep
    the activation and weight roles apart.
    """
    return _rowwise(w, QuantScheme.per_channel(bits))


def _rowwise(x, scheme: QuantScheme) -> QuantizedTensor:
    x = as_matrix(x, copy=False)
    t = _row_absmax(x)
    codes = _codes(x, t[:, None], scheme.q_max)
    return QuantizedTensor(codes, scheme, t, None, x.shape)


def group_wise_quantize(w, bits: int, g: int) -> QuantizedTensor:
    """Flatten ``w`` row-major into rows of ``g`` elements and quantize each row."""
    w = as_matrix(w, copy=False)
    scheme = QuantScheme.group_wise(bits, g)
    rows, cols = w.shape
    if (rows * cols) % g:
        raise ConfigError(
            f"group size {g} does not divide {rows}x{cols} = {rows * cols} elements"
        )
    grouped = w.reshape(-1, g)
    s = _row_absmax(grouped)
    codes = _codes(grouped, s[:, None], scheme.q_max)
    return QuantizedTensor(codes, scheme, s, None, w.shape)


def cross_quantize(x, bits: int = 8, alpha: float = 0.15) -> QuantizedTensor:
    """CrossQuant: per-element scale mixing row and column absolute maxima."""
    x = as_matrix(x, copy=False)
    scheme = QuantScheme.cross_quant(bits, alpha)
    t = _row_absmax(x)
    c = _col_absmax(x)
    codes = _codes(x, cross_scale(t, c, scheme.alpha), scheme.q_max)
    return QuantizedTensor(codes, scheme, t, c, x.shape)


def quantize(x, scheme: QuantScheme) -> QuantizedTensor:
    kind = scheme.kind
    if kind is SchemeKind.PER_TOKEN:
        return per_token_quantize(x, scheme.bits)
    if kind is SchemeKind.PER_CHANNEL:
        return per_channel_quantize(x, scheme.bits)
    if kind is SchemeKind.GROUP_WISE:
        return group_wise_quantize(x, scheme.bits, scheme.group_size)
    return cross_quantize(x, scheme.bits, scheme.alpha)


def dequantize(q: QuantizedTensor) -> np.ndarray:
    """Map codes back to reals: ``code * s / q_max``, reshaped to the source layout."""
    s = q.scale_numerators()
    values = q.codes.astype(np.float64) * s / q.scheme.q_max
    return as_matrix(values.reshape(q.original_shape), copy=False)


def fake_quantize(x, scheme: QuantScheme | None) -> np.ndarray:
    """Quantize then dequantize. ``scheme=None`` returns ``x`` unchanged."""
    if scheme is None:
        return as_matrix(x, copy=False)
    return dequantize(quantize(x, scheme))


def save_quantized(q: QuantizedTensor, codes_path, sidecar_path) -> None:
    """Write codes as a QTN1 f64 tensor and metadata as a JSON sidecar.

    Scale vectors are stored as hex floats so the round trip is lossless.
    """
    save_tensor(q.codes.astype(np.float64), codes_path, "f64")
    meta = {
        "scheme": q.scheme.to_dict(),
        "original_shape": list(q.original_shape),
        "codes_shape": list(q.codes.shape),
        "row_scales": [float(v).hex() for v in q.row_scales],
        "col_scales": None if q.col_scales is None else [float(v).hex() for v in q.col_scales],
    }
    try:
        with open(sidecar_path, "w", encoding="utf-8") as fh:
            json.dump(meta, fh, indent=2)
            fh.write("\n")
    except OSError as exc:
        raise OSError(f"cannot write sidecar to {os.fspath(sidecar_path)}: {exc}") from exc


def load_quantized(codes_path, sidecar_path) -> QuantizedTensor:
    with open(sidecar_path, encoding="utf-8") as fh:
        meta = json.load(fh)
    sd = meta["scheme"]
    scheme = QuantScheme(sd["kind"], sd["bits"], sd.get("alpha"), sd.get("group_size"))
    raw = load_tensor(codes_path)
    if list(raw.shape) != meta["codes_shape"]:
        raise TensorSizeError(f"codes shape {raw.shape} != sidecar {meta['codes_shape']}")
    codes = raw.astype(np.int64)
    if not np.array_equal(codes, raw):
        raise TensorSizeError("codes tensor holds non-integer values")
    row = np.array([float.fromhex(v) for v in meta["row_scales"]], dtype=np.float64)
    col = meta.get("col_scales")
    col = None if col is None else np.array([float.fromhex(v) for v in col], dtype=np.float64)
    return QuantizedTensor(codes, scheme, row, col, tuple(meta["original_shape"]))
