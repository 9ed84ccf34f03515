#!/usr/bin/env python3
"""Convert the digit JSON files of the npm `mnist` package to an IDX pair.

Usage: mnist_json_to_idx.py <package>/src/digits <out_dir>

Rows are shuffled with a fixed seed so that any prefix mixes all classes.
"""
import json
import struct
import sys
from pathlib import Path

import numpy as np


def main() -> None:
    src, out = Path(sys.argv[1]), Path(sys.argv[2])
    images, labels = [], []
    for digit in range(10):
        flat = np.asarray(json.loads((src / f"{digit}.json").read_text())["data"], dtype=float)
        rows = flat.reshape(-1, 784)
        images.append(np.rint(rows * 255).clip(0, 255).astype(np.uint8))
        labels.append(np.full(len(rows), digit, dtype=np.uint8))
    x, y = np.concatenate(images), np.concatenate(labels)
    order = np.random.default_rng(0).permutation(len(y))
    x, y = x[order], y[order]
    out.mkdir(parents=True, exist_ok=True)
    with open(out / "train-images-idx3-ubyte", "wb") as f:
        f.write(struct.pack(">IIII", 0x803, len(y), 28, 28))
        f.write(x.tobytes())
    with open(out / "train-labels-idx1-ubyte", "wb") as f:
        f.write(struct.pack(">II", 0x801, len(y)))
        f.write(y.tobytes())
    print(f"{len(y)} images written to {out}")


if __name__ == "__main__":
    main()
