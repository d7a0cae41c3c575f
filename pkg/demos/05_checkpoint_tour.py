#!/usr/bin/env python3
"""Tour of the .sgln checkpoint container: save, inspect, remap, corrupt.

The format is a framework-free binary layout (magic + version + keyed
tensors + CRC32) so any language can read the weights back.
"""

import os

import numpy as np

from stylegan_lens import Generator, GeneratorConfig, checkpoint as ckpt

OUT = os.path.join(os.path.dirname(__file__), "out", "05_checkpoint")
os.makedirs(OUT, exist_ok=True)
path = os.path.join(OUT, "tour.sgln")

g = Generator(GeneratorConfig.desk(), seed=3)
ckpt.save(path, g.state_dict())
print(f"saved {os.path.getsize(path):,} bytes")

entries = ckpt.load(path)
rows, total = ckpt.list_keys(entries)
print(f"{len(rows)} keys, {total:,} scalars total; block 1 section:")
for key, shape, count in rows:
    if key.startswith("Src_Net.1."):
        print(f"  {key:45s} {str(shape):18s} {count}")

# exact round trip
for key, t in g.named_parameters():
    assert np.array_equal(entries[key], t.data)
print("round trip: bit-exact")

# the rename the stock pruning tooling needed: weight_orig -> weight
remapped = ckpt.remap_keys(entries, {"weight_orig": "weight"})
print("after remap:", [k for k in remapped if k.startswith("Src_Net.1.upconv")])
restored = ckpt.remap_keys(remapped, {"weight": "weight_orig"})
assert list(restored) == list(entries)
print("remap is invertible")

# corruption never loads silently
broken = os.path.join(OUT, "broken.sgln")
raw = bytearray(open(path, "rb").read())
raw[len(raw) // 2] ^= 0x01
open(broken, "wb").write(bytes(raw))
try:
    ckpt.load(broken)
except ckpt.CrcError as exc:
    print("corrupt file rejected:", exc)
