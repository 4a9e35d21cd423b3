"""File formats: Gram CSV / PGM heatmaps and JSON helpers."""

import csv
import hashlib
import json

import numpy as np


def write_gram_csv(gram, path):
    """``n`` rows of ``n`` floats, no header, row order = state order."""
    m = np.asarray(getattr(gram, "matrix", gram), dtype=np.float64)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        for row in m:
            w.writerow([repr(float(v)) for v in row])


def read_gram_csv(path):
    with open(path, newline="") as fh:
        rows = [[float(v) for v in row] for row in csv.reader(fh) if row]
    m = np.array(rows)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValueError(f"{path}: Gram CSV must be square")
    return m


def gram_to_pixels(gram):
    m = np.asarray(getattr(gram, "matrix", gram), dtype=np.float64)
    return np.rint(255.0 * np.clip(m, 0.0, 1.0)).astype(np.uint8)


def write_pgm(gram, path):
    """Binary 8-bit PGM, one pixel per entry, value ``round(255 * entry)``."""
    px = gram_to_pixels(gram)
    h, w = px.shape
    with open(path, "wb") as fh:
        fh.write(f"P5\n{w} {h}\n255\n".encode("ascii"))
        fh.write(px.tobytes())


def read_pgm(path):
    with open(path, "rb") as fh:
        data = fh.read()
    parts = data.split(maxsplit=4)
    if parts[0] != b"P5":
        raise ValueError(f"{path}: not a binary PGM")
    w, h, maxval = int(parts[1]), int(parts[2]), int(parts[3])
    if maxval != 255:
        raise ValueError(f"{path}: expected maxval 255")
    pix = np.frombuffer(parts[4][: w * h], dtype=np.uint8)
    return pix.reshape(h, w)


def dump_json(obj, path):
    with open(path, "w") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True)
        fh.write("\n")


def load_json(path):
    with open(path) as fh:
        return json.load(fh)


def sha256_file(path):
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()
