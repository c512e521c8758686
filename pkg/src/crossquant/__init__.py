"""Symmetric integer fake-quantization and quantization-kernel analysis.

Four schemes (per-token, per-channel, group-wise, CrossQuant), the kernel
of elements each maps to zero, and desk-scale experiments relating kernel
size to matmul error.
"""

from .errors import (
    ConfigError,
    CrossQuantError,
    DegenerateBaselineError,
    TensorFormatError,
    TensorSizeError,
    TensorValidationError,
)
from .experiments import (
    RemovalComparison,
    SweepRecord,
    alpha_sweep,
    compare_remove_vs_quant,
    emit_report,
    matmul_error,
    parse_report,
    removal_sweep,
)
from .kernel import (
    KernelReport,
    analyze_kernel,
    kernel_mask,
    remove_by_proportion,
    remove_kernel,
    zero_bound,
)
from .quantizers import (
    QuantizedTensor,
    QuantScheme,
    SchemeKind,
    cross_quantize,
    dequantize,
    fake_quantize,
    group_wise_quantize,
    per_channel_quantize,
    per_token_quantize,
    quantize,
)
from .synth import SynthSpec, generate_activations, generate_weights
from .tensor import as_matrix, load_tensor, save_tensor

__version__ = "0.1.0"
