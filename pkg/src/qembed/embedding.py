"""Trainable single-qubit feature map, datasets, cost and Gram matrices.

The circuit is ``Rx(x) Rz(t1) Rx(x) Rz(t2) Rx(x) Rz(t3) Rx(x)`` applied to
``S H |0>``, with the first-listed gate acting first on the state.
"""

import csv
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .core import HADAMARD, PHASE_S, rot_x, rot_z

LABELS = ("A", "B")


@dataclass(frozen=True)
class EmbeddingParams:
    theta1: float
    theta2: float
    theta3: float

    def __post_init__(self):
        if not np.all(np.isfinite(self.as_array())):
            raise ValueError(f"embedding angles must be finite, got {self!r}")

    def as_array(self):
        return np.array([self.theta1, self.theta2, self.theta3], dtype=np.float64)

    @classmethod
    def from_array(cls, arr):
        a = np.asarray(arr, dtype=np.float64)
        return cls(float(a[0]), float(a[1]), float(a[2]))

    def canonical(self):
        """Angles wrapped into ``(-pi, pi]``."""
        a = self.as_array()
        wrapped = np.pi - np.mod(np.pi - a, 2 * np.pi)
        return EmbeddingParams.from_array(wrapped)


@dataclass(frozen=True)
class LabeledDataset:
    """Scalar points in ``[-pi, pi]`` with labels ``'A'`` / ``'B'``."""

    values: np.ndarray
    labels: np.ndarray

    def __post_init__(self):
        values = np.asarray(self.values, dtype=np.float64).reshape(-1)
        labels = np.asarray(self.labels, dtype="<U1").reshape(-1)
        if values.shape != labels.shape:
            raise ValueError("values and labels differ in length")
        if not np.all(np.isfinite(values)):
            raise ValueError("dataset values must be finite")
        if np.any(np.abs(values) > np.pi + 1e-12):
            raise ValueError("dataset values must lie in [-pi, pi]")
        bad = set(labels.tolist()) - set(LABELS)
        if bad:
            raise ValueError(f"unknown labels {sorted(bad)}; expected 'A' or 'B'")
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "labels", labels)

    def __len__(self):
        return self.values.shape[0]

    @property
    def is_a(self):
        return self.labels == "A"

    def has_both_classes(self):
        a = self.is_a
        return bool(a.any() and (~a).any())

    def subset(self, idx):
        idx = np.asarray(idx)
        return LabeledDataset(self.values[idx], self.labels[idx])

    def class_values(self, label):
        return self.values[self.labels == label]

    def flipped(self):
        return LabeledDataset(self.values, np.where(self.is_a, "B", "A"))

    @classmethod
    def from_pairs(cls, pairs):
        pairs = list(pairs)
        return cls(np.array([p[0] for p in pairs], dtype=np.float64), np.array([p[1] for p in pairs]))


def write_dataset_csv(ds, path):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["value", "label"])
        for v, lab in zip(ds.values, ds.labels):
            w.writerow([repr(float(v)), lab])


def read_dataset_csv(path):
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames != ["value", "label"]:
            raise ValueError(f"{path}: expected header 'value,label', got {reader.fieldnames}")
        rows = [(float(r["value"]), r["label"].strip()) for r in reader]
    return LabeledDataset.from_pairs(rows)


# ---------------------------------------------------------------------------
# datasets
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class BandLayout:
    """Contiguous bands covering ``[lo, hi]``; labels alternate A, B, A, ...

    ``edges`` are the band boundaries (``len(edges) - 1`` bands).
    """

    edges: tuple

    def __post_init__(self):
        e = np.asarray(self.edges, dtype=np.float64)
        if e.ndim != 1 or e.size < 3:
            raise ValueError("band layout needs at least 2 bands (3 edges)")
        if not np.all(np.isfinite(e)) or np.any(np.diff(e) <= 0):
            raise ValueError("band edges must be finite and strictly increasing")
        if e[0] < -np.pi - 1e-12 or e[-1] > np.pi + 1e-12:
            raise ValueError("bands must lie inside [-pi, pi]")
        object.__setattr__(self, "edges", tuple(float(x) for x in e))

    @classmethod
    def equal(cls, n_bands=4, lo=-np.pi, hi=np.pi):
        return cls(tuple(np.linspace(lo, hi, n_bands + 1)))

    @property
    def n_bands(self):
        return len(self.edges) - 1

    def band_labels(self):
        return np.array([LABELS[k % 2] for k in range(self.n_bands)])

    def label_of(self, x):
        e = np.asarray(self.edges)
        k = np.clip(np.searchsorted(e, x, side="right") - 1, 0, self.n_bands - 1)
        return self.band_labels()[k]


def generate_dataset(layout, n_points, seed, max_retries=1000):
    """Uniform draws over the union of bands, labelled by band parity.

    If a draw happens to contain a single class (only plausible for tiny
    ``n_points``) the whole draw is repeated from the same generator, up to
    ``max_retries`` times.
    """
    if n_points < 2:
        raise ValueError("n_points must be >= 2")
    e = np.asarray(layout.edges)
    widths = np.diff(e)
    probs = widths / widths.sum()
    labels_by_band = layout.band_labels()
    rng = np.random.default_rng(seed)
    for _ in range(max_retries):
        band = rng.choice(layout.n_bands, size=n_points, p=probs)
        values = e[band] + rng.random(n_points) * widths[band]
        ds = LabeledDataset(values, labels_by_band[band])
        if ds.has_both_classes():
            return ds
    raise RuntimeError("could not draw a two-class dataset")  # pragma: no cover


def generate_validation_set(layout, n_per_class, seed):
    """``n_per_class`` fresh points per class, A block first then B."""
    e = np.asarray(layout.edges)
    widths = np.diff(e)
    labs = layout.band_labels()
    rng = np.random.default_rng(seed)
    values, labels = [], []
    for lab in LABELS:
        bands = np.flatnonzero(labs == lab)
        p = widths[bands] / widths[bands].sum()
        band = bands[rng.choice(bands.size, size=n_per_class, p=p)]
        values.append(e[band] + rng.random(n_per_class) * widths[band])
        labels += [lab] * n_per_class
    return LabeledDataset(np.concatenate(values), np.array(labels))


# ---------------------------------------------------------------------------
# feature map
# ---------------------------------------------------------------------------


def _check_x(x):
    if not np.all(np.isfinite(x)):
        raise ValueError(f"input must be finite, got {x!r}")


def feature_map(x, params):
    """Embedded state ``|x>`` for a scalar input."""
    _check_x(x)
    return _kernels.feature_states(np.array([float(x)]), params.as_array())[0]


def feature_states(xs, params):
    """Embedded states for an array of inputs, shape ``(n, 2)``."""
    xs = np.asarray(xs, dtype=np.float64).reshape(-1)
    _check_x(xs)
    return _kernels.feature_states(xs, params.as_array())


def embedding_unitary(x, params):
    """Full circuit unitary including the ``S H`` preparation, so ``U|0> = |x>``."""
    _check_x(x)
    rx = rot_x(x)
    u = PHASE_S @ HADAMARD
    u = rx @ u
    for t in params.as_array():
        u = rx @ (rot_z(t) @ u)
    return u


# ---------------------------------------------------------------------------
# Gram matrix and cost
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class GramMatrix:
    matrix: np.ndarray
    ids: tuple = ()

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=np.float64)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise ValueError("Gram matrix must be square")
        ids = tuple(self.ids) if self.ids else tuple(str(i + 1) for i in range(m.shape[0]))
        if len(ids) != m.shape[0]:
            raise ValueError("ids length does not match Gram size")
        object.__setattr__(self, "matrix", m)
        object.__setattr__(self, "ids", ids)

    @property
    def n(self):
        return self.matrix.shape[0]


def raw_overlaps(states):
    """Inner-product matrix ``G[i, j] = <psi_i|psi_j>``."""
    s = np.asarray(states, dtype=np.complex128)
    return np.conj(s) @ s.T


def gram_matrix(states, ids=()):
    s = np.asarray(states, dtype=np.complex128)
    if s.ndim != 2 or s.shape[0] == 0:
        raise ValueError("gram_matrix needs a non-empty list of states")
    norms = np.sum(np.abs(s) ** 2, axis=1)
    if np.any(np.abs(norms - 1.0) > 1e-9):
        raise ValueError("all states must be normalized")
    return GramMatrix(np.clip(_kernels.fidelity_matrix(s), 0.0, 1.0), ids)


def cost_from_states(states, is_a):
    """Cost over ordered pairs, diagonal self-overlaps included."""
    is_a = np.asarray(is_a, dtype=bool)
    if is_a.all() or not is_a.any():
        raise ValueError("cost needs both classes in the batch")
    saa, sbb, sab = _kernels.class_overlap_sums(states, is_a)
    return 1.0 - 0.5 * (saa + sbb) + sab


def cost(batch, params):
    """Embedding cost for a batch (a :class:`LabeledDataset` or ``(value, label)`` pairs)."""
    if not isinstance(batch, LabeledDataset):
        batch = LabeledDataset.from_pairs(batch)
    if not batch.has_both_classes():
        raise ValueError("cost needs both classes in the batch")
    return cost_from_states(feature_states(batch.values, params), batch.is_a)


def cost_lower_bound(m, n):
    return 1.0 - 0.5 * (m * m + n * n)
