"""``qk`` command-line front end.

Exit codes: 0 success, 1 data/validation error, 2 usage error.
Relative output paths are prefixed with ``$QK_REPORT_DIR`` when it is set.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from pathlib import Path

import numpy as np

from .errors import ConfigError, CrossQuantError
from .experiments import alpha_sweep, format_report, matmul_error, removal_sweep
from .kernel import analyze_kernel, remove_by_proportion, remove_kernel
from .quantizers import QuantScheme, SchemeKind, dequantize, quantize, save_quantized
from .synth import SynthSpec, generate_activations
from .tensor import load_tensor, save_tensor

REPORT_DIR_ENV = "QK_REPORT_DIR"


def parse_list(text: str) -> list[float]:
    """Parse ``"0.1,0.2"`` or an inclusive ``"start:stop:step"`` range."""
    text = text.strip()
    if not text:
        return []
    if ":" in text:
        parts = text.split(":")
        if len(parts) != 3:
            raise ValueError(f"range must be start:stop:step, got {text!r}")
        start, stop, step = (float(p) for p in parts)
        if step <= 0 or not all(map(math.isfinite, (start, stop, step))):
            raise ValueError(f"range step must be positive and finite, got {text!r}")
        n = int(math.floor((stop - start) / step + 1e-12))
        values = [start + i * step for i in range(n + 1)]
        # snap the last point onto stop when it is within tolerance
        if values and abs(values[-1] - stop) <= 1e-12 * max(1.0, abs(stop)):
            values[-1] = stop
        return [round(v, 12) for v in values]
    return [float(v) for v in text.split(",") if v.strip()]


def _list_arg(text: str) -> list[float]:
    try:
        return parse_list(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def _scheme_arg(text: str) -> QuantScheme | None:
    if text.strip().lower() == "none":
        return None
    try:
        return QuantScheme.parse(text)
    except ConfigError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def _out_path(path: str) -> Path:
    prefix = os.environ.get(REPORT_DIR_ENV)
    p = Path(path)
    if prefix and not p.is_absolute():
        p = Path(prefix) / p
    return p


def _scheme_from_flags(kind: str, bits: int, alpha, group_size) -> QuantScheme:
    kind = SchemeKind(kind)
    if kind is SchemeKind.CROSS_QUANT:
        return QuantScheme.cross_quant(bits, 0.15 if alpha is None else alpha)
    if kind is SchemeKind.GROUP_WISE:
        if group_size is None:
            raise ConfigError("--group-size is required for --scheme group")
        return QuantScheme.group_wise(bits, group_size)
    return QuantScheme(kind, bits)


def _write_text(text: str, out: str | None) -> None:
    if out is None:
        sys.stdout.write(text)
    else:
        with open(_out_path(out), "w", encoding="utf-8", newline="") as fh:
            fh.write(text)


def _json(obj) -> str:
    return json.dumps(obj, indent=2) + "\n"


def cmd_gen(args) -> None:
    spec = SynthSpec(args.rows, args.cols, args.sigma, args.outlier_frac, args.outlier_scale, args.seed)
    out = _out_path(args.out)
    save_tensor(generate_activations(spec), out, args.precision)
    with open(str(out) + ".json", "w", encoding="utf-8") as fh:
        fh.write(_json(spec.to_dict()))


def cmd_quantize(args) -> None:
    x = load_tensor(args.inp)
    scheme = _scheme_from_flags(args.scheme, args.bits, args.alpha, args.group_size)
    q = quantize(x, scheme)
    out = _out_path(args.out)
    if args.fake:
        save_tensor(dequantize(q), out, "f64")
        if args.scales:
            save_quantized(q, str(out) + ".codes", _out_path(args.scales))
    else:
        scales = _out_path(args.scales) if args.scales else Path(str(out) + ".json")
        save_quantized(q, out, scales)


def cmd_kernel(args) -> None:
    x = load_tensor(args.inp)
    scheme = _scheme_from_flags(args.scheme, args.bits, args.alpha, None)
    report = analyze_kernel(x, scheme)
    if args.mask_out:
        save_tensor(report.mask.astype(np.float64), _out_path(args.mask_out), "f64")
    sys.stdout.write(_json(report.to_dict()))


def cmd_remove_kernel(args) -> None:
    x = load_tensor(args.inp)
    if args.proportion is not None:
        y = remove_by_proportion(x, args.proportion)
    else:
        y = remove_kernel(x, _scheme_from_flags(args.scheme, args.bits, args.alpha, None))
    save_tensor(y, _out_path(args.out), "f64")


def cmd_stats(args) -> None:
    x = load_tensor(args.inp)
    cross = analyze_kernel(x, QuantScheme.cross_quant(args.bits, args.alpha))
    token = analyze_kernel(x, QuantScheme.per_token(args.bits))
    sys.stdout.write(
        _json(
            {
                "alpha": cross.scheme.alpha,
                "bits": args.bits,
                "rows": cross.rows,
                "cols": cross.cols,
                "frac_c_ge_t": cross.frac_c_ge_t,
                "frac_Btilde_lt_B": cross.frac_Btilde_lt_B,
                "crossquant_kernel_proportion": cross.kernel_proportion,
                "per_token_kernel_proportion": token.kernel_proportion,
            }
        )
    )


def cmd_sweep_alpha(args) -> None:
    records = alpha_sweep(load_tensor(args.x), load_tensor(args.w), args.alphas, args.bits, args.w_scheme)
    _write_text(format_report(records, args.format), args.out)


def cmd_sweep_removal(args) -> None:
    records = removal_sweep(load_tensor(args.x), load_tensor(args.w), args.proportions, args.w_scheme)
    _write_text(format_report(records, args.format), args.out)


def cmd_matmul_error(args) -> None:
    err = matmul_error(load_tensor(args.x), load_tensor(args.w), args.x_scheme, args.w_scheme)
    sys.stdout.write(format(err, ".17g") + "\n")


SCHEME_HELP = "scheme as KIND[:BITS[:ALPHA|GROUP]], e.g. per-channel:8, group:4:128, crossquant:8:0.15, or none"


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="qk", description="Quantization-kernel toolkit.")
    sub = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")

    p = sub.add_parser("gen", help="generate a seeded synthetic activation matrix")
    p.add_argument("--rows", type=int, required=True, help="number of rows (tokens)")
    p.add_argument("--cols", type=int, required=True, help="number of columns (channels)")
    p.add_argument("--sigma", type=float, required=True, help="baseline standard deviation")
    p.add_argument("--outlier-frac", type=float, default=0.0, help="fraction of outlier columns (default 0)")
    p.add_argument("--outlier-scale", type=float, default=1.0, help="outlier column multiplier (default 1)")
    p.add_argument("--seed", type=int, required=True, help="RNG seed")
    p.add_argument("--precision", choices=("f32", "f64"), default="f64", help="payload precision (default f64)")
    p.add_argument("--out", required=True, help="output QTN1 path; spec echoed to OUT.json")
    p.set_defaults(func=cmd_gen)

    schemes = [k.value for k in SchemeKind]
    p = sub.add_parser("quantize", help="quantize a matrix, writing codes or fake-quantized values")
    p.add_argument("--in", dest="inp", required=True, help="input QTN1 or CSV matrix")
    p.add_argument("--scheme", choices=schemes, required=True, help="quantization scheme")
    p.add_argument("--bits", type=int, required=True, help="bit-width N")
    p.add_argument("--alpha", type=float, help="CrossQuant exponent in [0, 1] (default 0.15)")
    p.add_argument("--group-size", type=int, help="group size g for --scheme group")
    p.add_argument("--fake", action="store_true", help="write dequantized values instead of codes")
    p.add_argument("--out", required=True, help="output QTN1 path")
    p.add_argument("--scales", help="JSON sidecar path for scheme and scales (default OUT.json)")
    p.set_defaults(func=cmd_quantize)

    kernel_schemes = [SchemeKind.PER_TOKEN.value, SchemeKind.CROSS_QUANT.value]
    p = sub.add_parser("kernel", help="report the quantization kernel as JSON")
    p.add_argument("--in", dest="inp", required=True, help="input matrix")
    p.add_argument("--scheme", choices=kernel_schemes, required=True, help="analyzed scheme")
    p.add_argument("--bits", type=int, required=True, help="bit-width N")
    p.add_argument("--alpha", type=float, help="CrossQuant exponent (default 0.15)")
    p.add_argument("--mask-out", help="also write the kernel mask as a 0/1 QTN1 tensor")
    p.set_defaults(func=cmd_kernel)

    p = sub.add_parser("remove-kernel", help="zero kernel elements or a smallest-magnitude fraction")
    p.add_argument("--in", dest="inp", required=True, help="input matrix")
    how = p.add_mutually_exclusive_group(required=True)
    how.add_argument("--scheme", choices=kernel_schemes, help="zero this scheme's kernel")
    how.add_argument("--proportion", type=float, help="zero this fraction of smallest |values|")
    p.add_argument("--bits", type=int, default=8, help="bit-width for --scheme (default 8)")
    p.add_argument("--alpha", type=float, help="CrossQuant exponent for --scheme crossquant")
    p.add_argument("--out", required=True, help="output QTN1 path")
    p.set_defaults(func=cmd_remove_kernel)

    p = sub.add_parser("stats", help="row/column maximum statistics for CrossQuant vs per-token")
    p.add_argument("--in", dest="inp", required=True, help="input matrix")
    p.add_argument("--alpha", type=float, required=True, help="CrossQuant exponent")
    p.add_argument("--bits", type=int, required=True, help="bit-width N")
    p.set_defaults(func=cmd_stats)

    p = sub.add_parser("sweep-alpha", help="CrossQuant kernel and matmul error per alpha")
    p.add_argument("--x", required=True, help="activation matrix")
    p.add_argument("--w", required=True, help="weight matrix")
    p.add_argument("--alphas", type=_list_arg, required=True, help="comma list or start:stop:step")
    p.add_argument("--bits", type=int, required=True, help="activation bit-width")
    p.add_argument("--w-scheme", type=_scheme_arg, default=None, help=SCHEME_HELP + " (default none)")
    p.add_argument("--format", choices=("csv", "json"), required=True, help="report format")
    p.add_argument("--out", help="report path (default standard output)")
    p.set_defaults(func=cmd_sweep_alpha)

    p = sub.add_parser("sweep-removal", help="matmul error after zeroing smallest activations")
    p.add_argument("--x", required=True, help="activation matrix")
    p.add_argument("--w", required=True, help="weight matrix")
    p.add_argument("--proportions", type=_list_arg, required=True, help="comma list or start:stop:step")
    p.add_argument("--w-scheme", type=_scheme_arg, default=None, help=SCHEME_HELP + " (default none)")
    p.add_argument("--format", choices=("csv", "json"), required=True, help="report format")
    p.add_argument("--out", help="report path (default standard output)")
    p.set_defaults(func=cmd_sweep_removal)

    p = sub.add_parser("matmul-error", help="relative Frobenius error of a quantized product")
    p.add_argument("--x", required=True, help="activation matrix")
    p.add_argument("--w", required=True, help="weight matrix")
    p.add_argument("--x-scheme", type=_scheme_arg, default=None, help=SCHEME_HELP + " (default none)")
    p.add_argument("--w-scheme", type=_scheme_arg, default=None, help=SCHEME_HELP + " (default none)")
    p.set_defaults(func=cmd_matmul_error)

    return parser


def run(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        args.func(args)
    except (CrossQuantError, OSError, ValueError) as exc:
        print(f"qk {args.command}: error: {exc}", file=sys.stderr)
        return 1
    return 0


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
