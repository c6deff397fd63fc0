#!/usr/bin/env python3
"""Build the bundled MNIST subset (IDX, gzip) from the `mnist` npm package.

The npm package (https://www.npmjs.com/package/mnist, MIT) ships 10,000
MNIST digits as JSON float arrays quantized to x/255 with three decimals.
They are converted back to bytes and split with a fixed seed:

    test   1000 images  (evaluation)
    train  9000 images  (fixture training)
    calib  first 1000 of train (activation statistics)

Usage: npm pack mnist && tar xzf mnist-*.tgz
       python3 scripts/prepare_mnist_subset.py package/src/digits data/mnist
"""
import gzip
import json
import struct
import sys
from pathlib import Path

import numpy as np


def write_idx(path, array, magic):
    with gzip.GzipFile(path, "wb", mtime=0) as f:
        f.write(struct.pack(">I", magic))
        for dim in array.shape:
            f.write(struct.pack(">I", dim))
        f.write(array.astype(np.uint8).tobytes())


def main(src, dst):
    src, dst = Path(src), Path(dst)
    dst.mkdir(parents=True, exist_ok=True)
    images, labels = [], []
    for digit in range(10):
        raw = np.asarray(json.loads((src / f"{digit}.json").read_text())["data"])
        raw = raw.reshape(-1, 28, 28)
        images.append(np.rint(raw * 255.0).clip(0, 255).astype(np.uint8))
        labels.append(np.full(len(raw), digit, dtype=np.uint8))
    images = np.concatenate(images)
    labels = np.concatenate(labels)

    order = np.random.RandomState(20221015).permutation(len(images))
    images, labels = images[order], labels[order]

    splits = {
        "test": slice(0, 1000),
        "train": slice(1000, None),
        "calib": slice(1000, 2000),
    }
    for name, sl in splits.items():
        write_idx(dst / f"{name}-images.idx3.gz", images[sl], 0x00000803)
        write_idx(dst / f"{name}-labels.idx1.gz", labels[sl], 0x00000801)
        print(name, images[sl].shape, np.bincount(labels[sl], minlength=10))


if __name__ == "__main__":
    main(*sys.argv[1:3])
