#!/usr/bin/env python3
"""Build the bundled MNIST excerpt in IDX format.

Source: the `mnist` npm package (src/digits/<d>.json), which ships real MNIST
digits as pixel intensities in [0, 1] rounded to three decimals.

    npm pack mnist && tar xzf mnist-*.tgz
    python3 scripts/make_mnist_excerpt.py package/src/digits crates/matnet/data

Writes:
    train-images-idx3-ubyte / train-labels-idx1-ubyte
        the first 20 samples of every digit 0-9, interleaved (label order 0..9 repeated)
    t10k-images-idx3-ubyte / t10k-labels-idx1-ubyte
        samples 20..119 of digits 0, 1, 2, interleaved (disjoint from the training excerpt)
"""
import json
import struct
import sys
from pathlib import Path


def load(digits_dir, d):
    flat = json.loads((Path(digits_dir) / f"{d}.json").read_text())["data"]
    return [flat[i:i + 784] for i in range(0, len(flat), 784)]


def to_bytes(img):
    return bytes(min(255, max(0, round(v * 255))) for v in img)


def write(out, stem, images, labels):
    out = Path(out)
    with open(out / f"{stem}-images-idx3-ubyte", "wb") as f:
        f.write(struct.pack(">IIII", 2051, len(images), 28, 28))
        for img in images:
            f.write(to_bytes(img))
    with open(out / f"{stem}-labels-idx1-ubyte", "wb") as f:
        f.write(struct.pack(">II", 2049, len(labels)))
        f.write(bytes(labels))


def main(digits_dir, out):
    per_digit = {d: load(digits_dir, d) for d in range(10)}
    imgs, labs = [], []
    for k in range(20):
        for d in range(10):
            imgs.append(per_digit[d][k])
            labs.append(d)
    write(out, "train", imgs, labs)
    imgs, labs = [], []
    for k in range(20, 120):
        for d in range(3):
            imgs.append(per_digit[d][k])
            labs.append(d)
    write(out, "t10k", imgs, labs)


if __name__ == "__main__":
    main(sys.argv[1], sys.argv[2])
