"""Build the 5,000/1,000 MNIST IDX subset from the npm `mnist` package.

The package ships 10,000 MNIST digits as JSON, grouped by class, with pixel
values byte/255 rounded to three decimals (exactly invertible). Samples are
taken round-robin over the classes: the first 500 of each class form the
training split, the next 100 the test split.

usage: python3 scripts/mnist_subset.py PACKAGE_DIR OUT_DIR
    PACKAGE_DIR  unpacked `npm pack mnist` tarball (contains src/digits/)
"""

import json
import struct
import sys
from pathlib import Path

N_TRAIN_PER_CLASS = 500
N_TEST_PER_CLASS = 100
SIDE = 28


def load_digit(path):
    flat = json.loads(path.read_text())["data"]
    px = SIDE * SIDE
    assert len(flat) % px == 0, path
    images = []
    for i in range(0, len(flat), px):
        raw = [round(v * 255) for v in flat[i : i + px]]
        assert all(0 <= b <= 255 and abs(b / 255 - v) < 6e-4 for b, v in zip(raw, flat[i : i + px]))
        images.append(bytes(raw))
    return images


def write_images(path, images):
    with open(path, "wb") as f:
        f.write(struct.pack(">IIII", 0x803, len(images), SIDE, SIDE))
        for img in images:
            f.write(img)


def write_labels(path, labels):
    with open(path, "wb") as f:
        f.write(struct.pack(">II", 0x801, len(labels)))
        f.write(bytes(labels))


def main():
    pkg, out = Path(sys.argv[1]), Path(sys.argv[2])
    digits = [load_digit(pkg / "src" / "digits" / f"{d}.json") for d in range(10)]
    splits = {"train": (0, N_TRAIN_PER_CLASS), "t10k": (N_TRAIN_PER_CLASS, N_TEST_PER_CLASS)}
    out.mkdir(parents=True, exist_ok=True)
    for name, (start, count) in splits.items():
        images, labels = [], []
        for i in range(start, start + count):
            for d in range(10):
                images.append(digits[d][i])
                labels.append(d)
        write_images(out / f"{name}-images-idx3-ubyte", images)
        write_labels(out / f"{name}-labels-idx1-ubyte", labels)
        print(f"{name}: {len(images)} images")


if __name__ == "__main__":
    main()
