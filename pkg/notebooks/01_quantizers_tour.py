# %% [markdown]
# # The four quantizers
#
# Per-token, per-channel, group-wise and CrossQuant on tiny matrices where
# every code can be checked by hand.

# %%
import numpy as np

from crossquant import (
    QuantScheme,
    cross_quantize,
    dequantize,
    fake_quantize,
    group_wise_quantize,
    per_channel_quantize,
    per_token_quantize,
)

np.set_printoptions(precision=5, suppress=True)

# %% [markdown]
# Per-token: one scale per row, the row's absolute maximum. At 8 bits the
# largest element lands on 127 and 0.006 * 127 / 2 = 0.381 rounds to zero.

# %%
row = np.array([[2.0, -1.0, 0.006]])
q = per_token_quantize(row, bits=8)
print("codes   ", q.codes)
print("scale t ", q.row_scales)
print("dequant ", dequantize(q))

# %% [markdown]
# Per-channel is the same arithmetic applied to weight rows. Ties round away
# from zero: -0.25 * 127 / 0.5 = -63.5 becomes -64.

# %%
print(per_channel_quantize([[0.5, -0.25]], bits=8).codes)

# %% [markdown]
# Group-wise flattens the matrix row-major into groups of g and gives each
# group its own maximum.

# %%
w = np.array([[1.0, 2.0], [4.0, 8.0]])
g = group_wise_quantize(w, bits=8, g=2)
print("group scales", g.row_scales)
print("codes\n", g.codes)
print("restored shape", dequantize(g).shape)

# %% [markdown]
# CrossQuant mixes row maxima t and column maxima c per element as
# t**alpha * c**(1 - alpha). The small 0.03 that per-token zeroes survives.

# %%
x = np.array([[10.0, 0.03], [0.05, 0.2]])
cq = cross_quantize(x, bits=8, alpha=0.5)
print("per-token codes\n", per_token_quantize(x, 8).codes)
print("crossquant codes\n", cq.codes)
print("scale numerators\n", cq.scale_numerators())
print("crossquant fake-quant\n", fake_quantize(x, QuantScheme.cross_quant(8, 0.5)))

# %% [markdown]
# alpha = 1 is exactly per-token; alpha = 0 is exactly per-column.

# %%
rng = np.random.default_rng(0)
z = rng.normal(size=(5, 7)) * np.logspace(-2, 1, 7)
print(np.array_equal(cross_quantize(z, 8, 1.0).codes, per_token_quantize(z, 8).codes))
print(np.array_equal(cross_quantize(z, 8, 0.0).codes, per_token_quantize(z.T, 8).codes.T))
