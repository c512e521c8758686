# %% [markdown]
# # Outliers, kernels and matmul error
#
# A 256 x 512 activation matrix with 1% of its channels scaled by 30 inflates
# every row maximum, so per-token quantization zeroes many ordinary values.
# CrossQuant's column maxima for normal channels stay small.

# %%
import numpy as np

from crossquant import (
    QuantScheme,
    SynthSpec,
    alpha_sweep,
    analyze_kernel,
    compare_remove_vs_quant,
    generate_activations,
    generate_weights,
    removal_sweep,
)
from crossquant.experiments import format_report

x = generate_activations(SynthSpec(256, 512, base_sigma=1.0, outlier_frac=0.01, outlier_scale=30.0, seed=11))
w = generate_weights(512, 512, sigma=0.02, seed=12)

# %%
pt = analyze_kernel(x, QuantScheme.per_token(8)).kernel_proportion
cq = analyze_kernel(x, QuantScheme.cross_quant(8, 0.15)).kernel_proportion
print(f"per-token kernel {pt:.4f}, crossquant(0.15) kernel {cq:.4f}, ratio {pt / cq:.1f}x")

# %% [markdown]
# Sweeping alpha: kernel size and W8A8 matmul error both fall as alpha moves
# away from per-token.

# %%
recs = alpha_sweep(x, w, [0.15, 0.45, 0.75, 0.95, 1.0], bits_x=8, weight_scheme=QuantScheme.per_channel(8))
print(format_report(recs, "csv"))

# %% [markdown]
# Zeroing a growing share of the smallest activations, with INT8 weights and
# the remaining activations untouched.

# %%
recs = removal_sweep(x, w, [round(0.05 * i, 2) for i in range(13)], QuantScheme.per_channel(8))
for r in recs:
    print(f"p={r.parameter_value:4.2f}  error={r.matmul_rel_error:.5f}")

# %% [markdown]
# How much of per-token error comes from the kernel alone? On this fixture
# the per-token kernel is about 16% of elements and zeroing it produces
# about 43% of the full quantization error. The share grows with the kernel:
# heavier outliers push it up.

# %%
print(compare_remove_vs_quant(x, w, bits=8))
for scale in (60.0, 100.0):
    xs = generate_activations(SynthSpec(256, 512, 1.0, 0.01, scale, seed=11))
    k = analyze_kernel(xs, QuantScheme.per_token(8)).kernel_proportion
    print(f"outlier_scale={scale:.0f}: kernel {k:.3f}, ratio {compare_remove_vs_quant(xs, w, 8).ratio:.3f}")
