"""Capacity bounds from Bloch-sphere geometry and cluster metrics for Gram matrices."""

import math
from dataclasses import asdict, dataclass

import numpy as np

# guards floor() against 2 / (1 - 0.9) landing a few ulps below 20
_FLOOR_SLACK = 1e-9


@dataclass(frozen=True)
class CapacityReport:
    fidelity: float | None = None
    max_points: int | None = None
    classes: int | None = None
    max_sector_angle: float | None = None

    def to_json(self):
        return {k: v for k, v in asdict(self).items() if v is not None}


@dataclass(frozen=True)
class ClusterMetrics:
    intra_mean: float
    inter_mean: float
    separation_gap: float

    def to_json(self):
        return asdict(self)


def max_sector_angle(n_classes):
    """Largest cap angle such that ``n_classes`` non-overlapping caps fit on the sphere.

    Solves ``2 pi N (1 - cos(theta / 2)) = 4 pi``; one class gets the whole
    sphere (``2 pi``).
    """
    n = int(n_classes)
    if n != n_classes or n < 1:
        raise ValueError(f"number of classes must be a positive integer, got {n_classes!r}")
    if n == 1:
        return 2.0 * math.pi
    return 2.0 * math.acos(1.0 - 2.0 / n)


def sector_area(theta):
    return 2.0 * math.pi * (1.0 - math.cos(theta / 2.0))


def max_points(fid):
    """``floor(4 pi / (2 pi (1 - F)))``: states of fidelity ``F`` that fit on the sphere."""
    if not np.isfinite(fid) or fid < 0:
        raise ValueError(f"fidelity must be finite and >= 0, got {fid!r}")
    if fid >= 1:
        raise ValueError("fidelity 1 gives an unbounded capacity; pass F < 1")
    return int(math.floor(2.0 / (1.0 - fid) + _FLOOR_SLACK))


def capacity_report(fidelity=None, classes=None):
    if fidelity is None and classes is None:
        raise ValueError("give a fidelity, a number of classes, or both")
    return CapacityReport(
        fidelity=None if fidelity is None else float(fidelity),
        max_points=None if fidelity is None else max_points(fidelity),
        classes=None if classes is None else int(classes),
        max_sector_angle=None if classes is None else max_sector_angle(classes),
    )


def cluster_metrics(gram, labels):
    """Mean off-diagonal same-class entry, mean cross-class entry, and their difference."""
    g = np.asarray(getattr(gram, "matrix", gram), dtype=np.float64)
    labels = np.asarray(labels)
    if labels.shape != (g.shape[0],):
        raise ValueError("labels must match the Gram ordering")
    classes = np.unique(labels)
    if classes.size != 2:
        raise ValueError(f"cluster metrics need exactly two classes, got {classes.size}")
    same = labels[:, None] == labels[None, :]
    off = ~np.eye(g.shape[0], dtype=bool)
    intra = g[same & off]
    inter = g[~same]
    intra_mean = float(intra.mean()) if intra.size else 1.0
    inter_mean = float(inter.mean())
    return ClusterMetrics(intra_mean, inter_mean, intra_mean - inter_mean)


def spectral_split(gram):
    """Two-way split from the sign of the leading eigenvector of the centered Gram matrix.

    Returns a boolean array; the group containing index 0 is ``True``.
    """
    g = np.asarray(getattr(gram, "matrix", gram), dtype=np.float64)
    g = 0.5 * (g + g.T)
    n = g.shape[0]
    c = np.eye(n) - np.full((n, n), 1.0 / n)
    w, v = np.linalg.eigh(c @ g @ c)
    lead = v[:, np.argmax(w)]
    side = lead >= 0
    return side if side[0] else ~side


def same_partition(a, b):
    """True when two boolean splits describe the same partition (labels may be swapped)."""
    a, b = np.asarray(a, dtype=bool), np.asarray(b, dtype=bool)
    return bool(np.array_equal(a, b) or np.array_equal(a, ~b))
