"""Desk-scale experiments: alpha sweeps, kernel-removal sweeps, matmul error.

Quality is measured as the relative Frobenius error of a quantized product
``X_hat @ W_hat`` against the full-precision ``X @ W``.
"""

from __future__ import annotations

import csv
import io
import json
import os
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .errors import DegenerateBaselineError, TensorSizeError
from .kernel import analyze_kernel, count_for_proportion, remove_by_proportion, remove_kernel
from .quantizers import QuantScheme, fake_quantize
from .tensor import as_matrix

__all__ = [
    "SweepRecord",
    "RemovalComparison",
    "matmul_error",
    "alpha_sweep",
    "removal_sweep",
    "compare_remove_vs_quant",
    "emit_report",
    "format_report",
    "parse_report",
    "FIELDS",
]

FIELDS = ("parameter_name", "parameter_value", "kernel_proportion", "matmul_rel_error", "scheme")


@dataclass(frozen=True)
class SweepRecord:
    parameter_name: str
    parameter_value: float
    kernel_proportion: float
    matmul_rel_error: float
    scheme: str

    def __post_init__(self):
        if not self.matmul_rel_error >= 0:
            raise ValueError(f"matmul_rel_error must be >= 0, got {self.matmul_rel_error}")


@dataclass(frozen=True)
class RemovalComparison:
    err_full_quant: float
    err_remove_only: float
    ratio: float | None


def _describe(scheme: QuantScheme | None) -> str:
    return "none" if scheme is None else scheme.describe()


def _product_error(reference: np.ndarray, approx: np.ndarray) -> float:
    num = float(np.linalg.norm(reference - approx))
    den = float(np.linalg.norm(reference))
    if den == 0.0:
        if num == 0.0:
            return 0.0
        raise DegenerateBaselineError(
            f"reference product is zero but quantized product has norm {num!r}"
        )
    return num / den


def _check_shapes(x: np.ndarray, w: np.ndarray) -> None:
    if x.shape[1] != w.shape[0]:
        raise TensorSizeError(f"cannot multiply {x.shape} by {w.shape}")


def matmul_error(
    x, w, scheme_x: QuantScheme | None = None, scheme_w: QuantScheme | None = None
) -> float:
    """``||X W - X_hat W_hat||_F / ||X W||_F`` with fake-quantized operands."""
    x = as_matrix(x, copy=False)
    w = as_matrix(w, copy=False)
    _check_shapes(x, w)
    return _product_error(x @ w, fake_quantize(x, scheme_x) @ fake_quantize(w, scheme_w))


def alpha_sweep(
    x,
    w,
    alphas: Sequence[float],
    bits_x: int = 8,
    weight_scheme: QuantScheme | None = None,
) -> list[SweepRecord]:
    """One CrossQuant run per alpha, in input order."""
    x = as_matrix(x, copy=False)
    w = as_matrix(w, copy=False)
    _check_shapes(x, w)
    schemes = [QuantScheme.cross_quant(bits_x, a) for a in alphas]
    reference = x @ w
    w_hat = fake_quantize(w, weight_scheme)
    records = []
    for alpha, scheme in zip(alphas, schemes):
        report = analyze_kernel(x, scheme)
        err = _product_error(reference, fake_quantize(x, scheme) @ w_hat)
        records.append(
            SweepRecord(
                "alpha",
                float(alpha),
                report.kernel_proportion,
                err,
                f"x={scheme.describe()};w={_describe(weight_scheme)}",
            )
        )
    return records


def removal_sweep(
    x, w, proportions: Sequence[float], weight_scheme: QuantScheme | None = None
) -> list[SweepRecord]:
    """Zero the smallest ``p`` fraction of activations, keep the rest exact.

    ``kernel_proportion`` in each record is the fraction of elements forced
    to zero, ``floor(p * n) / n``.
    """
    x = as_matrix(x, copy=False)
    w = as_matrix(w, copy=False)
    _check_shapes(x, w)
    reference = x @ w
    w_hat = fake_quantize(w, weight_scheme)
    desc = f"x=remove-smallest;w={_describe(weight_scheme)}"
    records = []
    for p in proportions:
        x_hat = remove_by_proportion(x, p)
        records.append(
            SweepRecord(
                "proportion",
                float(p),
                count_for_proportion(p, x.size) / x.size,
                _product_error(reference, x_hat @ w_hat),
                desc,
            )
        )
    return records


def compare_remove_vs_quant(x, w, bits: int = 8) -> RemovalComparison:
    """Per-token quantization error versus zeroing its kernel alone.

    Weights stay at full precision in both arms. ``ratio`` is ``None`` when
    full quantization is lossless.
    """
    x = as_matrix(x, copy=False)
    w = as_matrix(w, copy=False)
    _check_shapes(x, w)
    scheme = QuantScheme.per_token(bits)
    reference = x @ w
    err_full = _product_error(reference, fake_quantize(x, scheme) @ w)
    err_remove = _product_error(reference, remove_kernel(x, scheme) @ w)
    ratio = err_remove / err_full if err_full > 0 else None
    return RemovalComparison(err_full, err_remove, ratio)


def _num(v: float) -> str:
    return format(float(v), ".17g")


def format_report(records: Iterable[SweepRecord], fmt: str) -> str:
    """Render records as CSV or JSON text, numbers at 17 significant digits."""
    records = list(records)
    if len({r.parameter_name for r in records}) > 1:
        raise ValueError("records in one report must share parameter_name")
    if fmt == "csv":
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(FIELDS)
        for r in records:
            writer.writerow(
                [r.parameter_name, _num(r.parameter_value), _num(r.kernel_proportion),
                 _num(r.matmul_rel_error), r.scheme]
            )
        return buf.getvalue()
    if fmt == "json":
        # numbers written by hand so the digit count is fixed
        items = []
        for r in records:
            items.append(
                "  {"
                f'"parameter_name": {json.dumps(r.parameter_name)}, '
                f'"parameter_value": {_num(r.parameter_value)}, '
                f'"kernel_proportion": {_num(r.kernel_proportion)}, '
                f'"matmul_rel_error": {_num(r.matmul_rel_error)}, '
                f'"scheme": {json.dumps(r.scheme)}'
                "}"
            )
        return "[\n" + ",\n".join(items) + "\n]\n" if items else "[]\n"
    raise ValueError(f"format must be 'csv' or 'json', got {fmt!r}")


def emit_report(records: Iterable[SweepRecord], fmt: str, path) -> None:
    text = format_report(records, fmt)
    try:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    except OSError as exc:
        raise OSError(f"cannot write report to {os.fspath(path)}: {exc}") from exc


def parse_report(text: str, fmt: str) -> list[SweepRecord]:
    if fmt == "json":
        rows = json.loads(text)
    elif fmt == "csv":
        reader = csv.DictReader(io.StringIO(text))
        if tuple(reader.fieldnames or ()) != FIELDS:
            raise ValueError(f"unexpected CSV header {reader.fieldnames}")
        rows = list(reader)
    else:
        raise ValueError(f"format must be 'csv' or 'json', got {fmt!r}")
    return [
        SweepRecord(
            r["parameter_name"],
            float(r["parameter_value"]),
            float(r["kernel_proportion"]),
            float(r["matmul_rel_error"]),
            r["scheme"],
        )
        for r in rows
    ]
