"""CSV serialization for matrices, run traces, and checkpoints.

Matrix CSV layout (documented contract): a header line ``rows,cols``, a
second line with the two integer dimensions, then one CSV line per matrix
row in row-major order. Floats are written with ``repr`` so that reading
the file back reproduces the exact float64 values and identical inputs
produce byte-identical files.
"""

from __future__ import annotations

import json
import os

import numpy as np


def _fmt(x: float) -> str:
    return repr(float(x))


def save_matrix_csv(path, W) -> None:
    """Write a 2-D array in the documented matrix CSV layout."""
    W = np.asarray(W, dtype=np.float64)
    if W.ndim != 2:
        raise ValueError(f"expected a 2-D array, got shape {W.shape}")
    rows, cols = W.shape
    lines = ["rows,cols", f"{rows},{cols}"]
    lines.extend(",".join(_fmt(v) for v in row) for row in W)
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def load_matrix_csv(path) -> np.ndarray:
    """Read a matrix written by :func:`save_matrix_csv`."""
    with open(path) as fh:
        header = fh.readline().strip()
        if header != "rows,cols":
            raise ValueError(f"{path}: expected 'rows,cols' header, got {header!r}")
        dims = fh.readline().strip().split(",")
        rows, cols = int(dims[0]), int(dims[1])
        data = np.loadtxt(fh, delimiter=",", ndmin=2)
    if data.shape != (rows, cols):
        raise ValueError(f"{path}: declared shape ({rows},{cols}) != data shape {data.shape}")
    return data


def save_checkpoint(directory, matrices: dict, meta: dict) -> None:
    """Write named matrices (one CSV each) plus a meta.json into a directory."""
    os.makedirs(directory, exist_ok=True)
    for name, W in matrices.items():
        save_matrix_csv(os.path.join(directory, f"{name}.csv"), W)
    with open(os.path.join(directory, "meta.json"), "w") as fh:
        json.dump(meta, fh, indent=2, sort_keys=True)
        fh.write("\n")


def load_checkpoint(directory) -> tuple[dict, dict]:
    """Read back a checkpoint directory -> (matrices, meta)."""
    meta_path = os.path.join(directory, "meta.json")
    if not os.path.isfile(meta_path):
        raise FileNotFoundError(f"{directory} has no meta.json; not a checkpoint")
    with open(meta_path) as fh:
        meta = json.load(fh)
    matrices = {}
    for fname in sorted(os.listdir(directory)):
        if fname.endswith(".csv"):
            matrices[fname[:-4]] = load_matrix_csv(os.path.join(directory, fname))
    return matrices, meta
