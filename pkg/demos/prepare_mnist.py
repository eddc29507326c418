"""Write a 2,000-image MNIST subset as an IDX file for the ``mnist-small`` preset.

The images come from the 5,000-digit sample bundled with mlxtend (stored
sorted by label), so a seeded permutation picks a class-balanced subset.

    python3 demos/prepare_mnist.py [out_path] [count]
"""
import sys

import numpy as np
from mlxtend.data import mnist_data

from mrgan.datasets import load_idx, write_idx


def prepare(out_path="mnist-2k-images.idx", count=2000, seed=0):
    X, y = mnist_data()
    pick = np.random.default_rng(seed).permutation(len(X))[:count]
    write_idx(out_path, X[pick].reshape(-1, 28, 28).astype(np.uint8))
    return np.bincount(y[pick], minlength=10)


if __name__ == "__main__":
    out = sys.argv[1] if len(sys.argv) > 1 else "mnist-2k-images.idx"
    count = int(sys.argv[2]) if len(sys.argv) > 2 else 2000
    per_class = prepare(out, count)
    ds = load_idx(out)
    print(f"wrote {out}: {len(ds)} images, d={ds.d}, pixel range [{ds.samples.min():.1f}, {ds.samples.max():.1f}]")
    print("images per digit:", per_class.tolist())
