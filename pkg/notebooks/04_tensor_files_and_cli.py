# %% [markdown]
# # QTN1 files and the qk command
#
# Matrices travel between tools as QTN1: a 24-byte little-endian header and
# a row-major float payload.

# %%
import json
import subprocess
import sys
import tempfile
from pathlib import Path

import numpy as np

from crossquant import load_tensor, save_tensor

work = Path(tempfile.mkdtemp())
m = np.array([[0.1, 0.2], [0.3, 0.4]])
save_tensor(m, work / "m.qtn", "f64")
raw = (work / "m.qtn").read_bytes()
print(raw[:24].hex(" "))
print("bitwise round trip:", load_tensor(work / "m.qtn").tobytes() == m.tobytes())

# %% [markdown]
# The same pipeline through the CLI: generate, analyze, sweep.

# %%
def qk(*args):
    out = subprocess.run([sys.executable, "-m", "crossquant.cli", *args], capture_output=True, text=True, cwd=work)
    return out.returncode, out.stdout, out.stderr

print(qk("gen", "--rows", "64", "--cols", "128", "--sigma", "1", "--outlier-frac", "0.02",
         "--outlier-scale", "30", "--seed", "7", "--out", "a.qtn")[0])
code, out, _ = qk("kernel", "--in", "a.qtn", "--scheme", "crossquant", "--bits", "8", "--alpha", "0.15")
print(json.dumps(json.loads(out), indent=1))
print(qk("stats", "--in", "a.qtn", "--alpha", "0.15", "--bits", "8")[1])

# %%
save_tensor(np.random.default_rng(3).normal(0, 0.02, size=(128, 32)), work / "w.qtn")
print(qk("sweep-alpha", "--x", "a.qtn", "--w", "w.qtn", "--alphas", "0:1:0.25", "--bits", "8",
         "--w-scheme", "per-channel:8", "--format", "csv")[1])

# %% [markdown]
# Errors map to exit codes: 1 for bad data or configuration, 2 for usage.

# %%
print(qk("quantize", "--in", "a.qtn", "--scheme", "group", "--bits", "4", "--group-size", "7", "--out", "q.qtn"))
print(qk("kernel", "--in", "a.qtn", "--scheme", "per-token", "--bits", "eight")[0])
