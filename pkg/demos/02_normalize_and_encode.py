# %% [markdown]
# From a raw sample to the model's input grid
#
# Values are first mapped into [0, 1], then spread over an L x K grid. Each
# observation lands between two neighbouring cells and its unit weight is
# split in proportion to the distance, so nearby values stay distinguishable
# even when they share a cell.

# %%
import numpy as np

from paramformer.encode import GridShape, decode_single, encode, format_cells, locate
from paramformer.normalize import normalize, recover_params

raw = np.array([0.7, 1.9, 3.2, 0.4, 5.5])
known, rec_k = normalize("exponential", "known", raw)
unknown, rec_u = normalize("exponential", "unknown", raw)
print("known-range (x / 20):", known)
print("unknown-range (x / max):", unknown)

# a prediction made in normalized units maps back through the stored record
print("raw output 0.3 -> beta", recover_params("exponential", rec_u, [0.3]))

# %% [markdown]
# The full-size grid is 1024 x 384. A value just above one half lands at
# position 512, split between its first two dimensions.

# %%
big = GridShape(1024, 384)
a = locate(0.500001, "seq-first", big)
print(a)

# %%
shape = GridShape(8, 4)
g = encode([0.0, 0.31, 0.31, 1.0], "seq-first", shape)
print(format_cells(g))
print("total weight", g.sum())

# the embed-first layout uses the transposed factorization of the same index
print(format_cells(encode([0.31], "embed-first", shape)))

# %%
v = 0.123456
print("decode(encode(v)):", decode_single(encode([v], "seq-first", big), "seq-first", big),
      "error bound", 1 / big.cells)
