#!/usr/bin/env python3
"""Write the 5k-sample MNIST subset bundled with mlxtend as IDX files.

Usage: mnist_subset.py <mlxtend wheel or mnist_5k.csv.gz> <out dir>

Samples are shuffled with a fixed seed and split 4000 train / 1000 test.
"""
import gzip
import random
import struct
import sys
import zipfile
from pathlib import Path

MEMBER = "mlxtend/data/data/mnist_5k.csv.gz"


def read_rows(src):
    if src.suffix == ".whl":
        raw = zipfile.ZipFile(src).read(MEMBER)
    else:
        raw = src.read_bytes()
    rows = []
    for line in gzip.decompress(raw).decode().splitlines():
        values = [int(float(v)) for v in line.split(",")]
        rows.append((bytes(values[:-1]), values[-1]))
    return rows


def write_idx(path, images, labels):
    with gzip.GzipFile(path.with_name(path.name + "-images-idx3-ubyte.gz"), "wb", mtime=0) as f:
        f.write(struct.pack(">IIII", 0x803, len(images), 28, 28))
        for img in images:
            f.write(img)
    with gzip.GzipFile(path.with_name(path.name + "-labels-idx1-ubyte.gz"), "wb", mtime=0) as f:
        f.write(struct.pack(">II", 0x801, len(labels)))
        f.write(bytes(labels))


def main():
    src, out = Path(sys.argv[1]), Path(sys.argv[2])
    out.mkdir(parents=True, exist_ok=True)
    rows = read_rows(src)
    random.Random(20240101).shuffle(rows)
    train, test = rows[:4000], rows[4000:]
    write_idx(out / "train", [r[0] for r in train], [r[1] for r in train])
    write_idx(out / "t10k", [r[0] for r in test], [r[1] for r in test])


if __name__ == "__main__":
    main()
