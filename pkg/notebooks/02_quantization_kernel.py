# %% [markdown]
# # Quantization kernels
#
# The kernel of a quantizer is the set of elements it sends to code 0. An
# element is in it exactly when |x| is below the zero bound 0.5 * scale / q_max.

# %%
import numpy as np

from crossquant import QuantScheme, analyze_kernel, kernel_mask, quantize, remove_kernel, zero_bound

x = np.array([[10.0, 0.03], [0.05, 0.2]])
pt = QuantScheme.per_token(8)
cq = QuantScheme.cross_quant(8, alpha=0.5)

# %%
print("per-token bounds\n", zero_bound(x, pt))
print("crossquant bounds\n", zero_bound(x, cq))
print("per-token kernel\n", kernel_mask(x, pt))
print("crossquant kernel\n", kernel_mask(x, cq))

# %% [markdown]
# The mask is the zero-code set, bit for bit.

# %%
rng = np.random.default_rng(1)
y = rng.normal(size=(64, 64))
y[:, [3, 40]] *= 25.0  # two outlier channels
for scheme in (pt, cq):
    same = np.array_equal(kernel_mask(y, scheme), quantize(y, scheme).codes == 0)
    print(scheme.describe(), "mask == (codes == 0):", same)

# %% [markdown]
# Row and column statistics. Wherever c_j < t_i the CrossQuant bound is
# strictly smaller than the per-token one, so fewer elements fall below it.

# %%
for alpha in (0.15, 0.45, 0.75, 1.0):
    r = analyze_kernel(y, QuantScheme.cross_quant(8, alpha))
    print(f"alpha={alpha:<5} kernel={r.kernel_proportion:.4f} c>=t={r.frac_c_ge_t:.4f} "
          f"Btilde<B={r.frac_Btilde_lt_B:.4f}")
print("per-token kernel", analyze_kernel(y, pt).kernel_proportion)

# %% [markdown]
# Removing the kernel zeroes those elements and keeps everything else exact.

# %%
print(remove_kernel([[2.0, -1.0, 0.006]], pt))
