#!/usr/bin/env python3
"""Build the desk-scale training, validation and test corpora as 8-bit PGM files.

Sources are sample images bundled with scikit-image, scikit-learn and
matplotlib. Every image is converted to grayscale, center-cropped to a square
(optionally zoomed into a sub-window) and area-resampled to 64x64.

    python3 tools/make_corpus.py --out data
"""
import argparse
import gzip
import os

import numpy as np
from PIL import Image
import matplotlib
import skimage
import sklearn

SK = os.path.join(os.path.dirname(skimage.__file__), "data")
SL = os.path.join(os.path.dirname(sklearn.__file__), "datasets", "images")
MPL = os.path.join(os.path.dirname(matplotlib.__file__), "mpl-data", "sample_data")

# (id, category, path)
TEST = [
    ("camera", "person", os.path.join(SK, "camera.png")),
    ("astronaut", "person", os.path.join(SK, "astronaut.png")),
    ("chelsea", "animal", os.path.join(SK, "chelsea.png")),
    ("china", "building", os.path.join(SL, "china.jpg")),
    ("flower", "scenery", os.path.join(SL, "flower.jpg")),
    ("moon", "scenery", os.path.join(SK, "moon.png")),
]

# (id, path, window) where window = (cy, cx, frac) selects a square sub-window
# of side frac*min(h,w) centered at relative position (cy, cx).
TRAIN = [
    ("grace_hopper_full", os.path.join(MPL, "grace_hopper.jpg"), (0.5, 0.5, 1.0)),
    ("grace_hopper_face", os.path.join(MPL, "grace_hopper.jpg"), (0.35, 0.5, 0.5)),
    ("coffee_full", os.path.join(SK, "coffee.png"), (0.5, 0.5, 1.0)),
    ("coffee_cup", os.path.join(SK, "coffee.png"), (0.5, 0.45, 0.5)),
    ("rocket_full", os.path.join(SK, "rocket.jpg"), (0.5, 0.5, 1.0)),
    ("rocket_tower", os.path.join(SK, "rocket.jpg"), (0.4, 0.5, 0.5)),
    ("motorcycle_full", os.path.join(SK, "motorcycle_left.png"), (0.5, 0.5, 1.0)),
    ("motorcycle_detail", os.path.join(SK, "motorcycle_left.png"), (0.55, 0.4, 0.5)),
    ("coins_full", os.path.join(SK, "coins.png"), (0.5, 0.5, 1.0)),
    ("coins_detail", os.path.join(SK, "coins.png"), (0.3, 0.3, 0.5)),
    ("brick_full", os.path.join(SK, "brick.png"), (0.5, 0.5, 1.0)),
    ("grass_full", os.path.join(SK, "grass.png"), (0.5, 0.5, 1.0)),
    ("gravel_full", os.path.join(SK, "gravel.png"), (0.5, 0.5, 1.0)),
    ("hubble_full", os.path.join(SK, "hubble_deep_field.jpg"), (0.5, 0.5, 1.0)),
    ("retina_full", os.path.join(SK, "retina.jpg"), (0.5, 0.5, 1.0)),
    ("clock_full", os.path.join(SK, "clock_motion.png"), (0.5, 0.5, 1.0)),
    ("motorcycle_right_full", os.path.join(SK, "motorcycle_right.png"), (0.5, 0.5, 1.0)),
    ("cell_full", os.path.join(SK, "cell.png"), (0.5, 0.5, 1.0)),
    ("page_full", os.path.join(SK, "page.png"), (0.5, 0.5, 1.0)),
    ("coffee_beans", os.path.join(SK, "coffee.png"), (0.75, 0.75, 0.4)),
]


# Hyperparameter tuning only. Disjoint from both the training and test sources.
VAL = [
    ("ihc_full", os.path.join(SK, "ihc.png"), (0.5, 0.5, 1.0)),
    ("ihc_detail", os.path.join(SK, "ihc.png"), (0.3, 0.6, 0.4)),
    ("text", os.path.join(SK, "text.png"), (0.5, 0.5, 1.0)),
    ("microaneurysms", os.path.join(SK, "microaneurysms.png"), (0.5, 0.5, 1.0)),
    ("mri", os.path.join(MPL, "s1045.ima.gz"), (0.5, 0.5, 1.0)),
    ("dem", os.path.join(MPL, "jacksboro_fault_dem.npz"), (0.5, 0.5, 1.0)),
]


def load_gray(path):
    if path.endswith(".ima.gz"):
        with gzip.open(path) as f:
            a = np.frombuffer(f.read(), np.uint16).reshape(256, 256).astype(np.float64)
        return a / a.max()
    if path.endswith(".npz"):
        a = np.load(path)["elevation"].astype(np.float64)
        a -= a.min()
        return a / a.max()
    img = Image.open(path)
    if img.mode not in ("L", "I;16", "I"):
        img = img.convert("RGB").convert("L")
    a = np.asarray(img, dtype=np.float64)
    if a.ndim == 3:
        a = a[..., 0]
    return a / a.max()


def crop(a, window):
    cy, cx, frac = window
    h, w = a.shape
    side = int(round(min(h, w) * frac))
    y0 = int(round(cy * h - side / 2))
    x0 = int(round(cx * w - side / 2))
    y0 = min(max(y0, 0), h - side)
    x0 = min(max(x0, 0), w - side)
    return a[y0:y0 + side, x0:x0 + side]


def resample(a, size):
    img = Image.fromarray((a * 65535).astype(np.uint16).astype(np.int32), mode="I")
    img = img.convert("F").resize((size, size), Image.BOX)
    return np.clip(np.asarray(img) / 65535.0, 0.0, 1.0)


def write_pgm(path, a):
    data = np.round(a * 255).astype(np.uint8)
    with open(path, "wb") as f:
        f.write(b"P5\n%d %d\n255\n" % (data.shape[1], data.shape[0]))
        f.write(data.tobytes())


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--out", default="data")
    ap.add_argument("--size", type=int, default=64)
    args = ap.parse_args()
    test_dir = os.path.join(args.out, "test")
    os.makedirs(test_dir, exist_ok=True)
    with open(os.path.join(test_dir, "categories.txt"), "w") as f:
        for ident, cat, path in TEST:
            write_pgm(os.path.join(test_dir, ident + ".pgm"),
                      resample(crop(load_gray(path), (0.5, 0.5, 1.0)), args.size))
            f.write("%s %s\n" % (ident, cat))
    for subdir, entries in (("train", TRAIN), ("val", VAL)):
        out_dir = os.path.join(args.out, subdir)
        os.makedirs(out_dir, exist_ok=True)
        for ident, path, window in entries:
            write_pgm(os.path.join(out_dir, ident + ".pgm"),
                      resample(crop(load_gray(path), window), args.size))


if __name__ == "__main__":
    main()
