"""Seeded synthetic domain-shift datasets and CSV ingestion.

Every generator here is a pure function of its arguments (seed included), so
downstream oracles and training runs are reproducible bit for bit. Samples
are immutable once constructed; the arrays are marked read-only and can be
shared freely across threads.

CSV schema (one sample per file): header ``x0,...,x{d-1},y,domain``, floats
printed with 17 significant digits, ``y`` an integer with ``-1`` meaning
unlabeled, ``domain`` either ``source`` or ``target`` and identical on every
row, UTF-8 with ``\\n`` line endings.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np

from .prng import Xoshiro256StarStar


class Domain(enum.Enum):
    SOURCE = "source"
    TARGET = "target"


class SpecialLabel(enum.IntEnum):
    """Sentinel labels. UNLABELED is written as -1 in CSV files."""

    UNLABELED = -1


UNLABELED = SpecialLabel.UNLABELED


class CsvFormatError(ValueError):
    """Raised on malformed CSV input; the message names the 1-based line."""


@dataclass(frozen=True)
class LabeledSample:
    """A feature matrix with per-row labels and a domain tag.

    ``labels`` holds class indices in ``[0, k)`` or ``UNLABELED``. Source
    samples must be fully labeled; target samples used for training carry
    only ``UNLABELED`` entries, while held-out target evaluation copies may
    keep their labels.
    """

    features: np.ndarray
    labels: np.ndarray
    domain: Domain
    k: int

    def __post_init__(self):
        feats = np.asarray(self.features, dtype=np.float64)
        labs = np.asarray(self.labels, dtype=np.int64)
        if feats.ndim != 2 or feats.shape[0] < 1:
            raise ValueError("features must be a non-empty n x d matrix")
        if labs.shape != (feats.shape[0],):
            raise ValueError("labels must be a length-n sequence")
        if self.k < 2:
            raise ValueError("class count k must be >= 2")
        if labs.min() < int(UNLABELED) or labs.max() >= self.k:
            raise ValueError(f"labels must lie in [0, {self.k}) or be UNLABELED")
        if self.domain is Domain.SOURCE and np.any(labs == int(UNLABELED)):
            raise ValueError("source samples must not contain UNLABELED rows")
        feats = feats.copy()
        labs = labs.copy()
        feats.flags.writeable = False
        labs.flags.writeable = False
        object.__setattr__(self, "features", feats)
        object.__setattr__(self, "labels", labs)

    @property
    def n(self) -> int:
        return self.features.shape[0]

    @property
    def d(self) -> int:
        return self.features.shape[1]

    @property
    def fully_labeled(self) -> bool:
        return bool(np.all(self.labels != int(UNLABELED)))

    def require_fully_labeled(self) -> None:
        if not self.fully_labeled:
            raise ValueError("operation requires a fully labeled sample")

    def subset(self, indices) -> "LabeledSample":
        idx = np.asarray(indices, dtype=np.int64)
        return LabeledSample(self.features[idx], self.labels[idx], self.domain, self.k)

    def without_labels(self) -> "LabeledSample":
        """Training copy with every label masked to UNLABELED (target only)."""
        if self.domain is Domain.SOURCE:
            raise ValueError("refusing to mask labels on a source sample")
        masked = np.full(self.n, int(UNLABELED), dtype=np.int64)
        return LabeledSample(self.features, masked, self.domain, self.k)


@dataclass(frozen=True)
class ShiftTransform:
    """Row-wise affine shift ``x -> scale * R(rotation) @ x + translation``.

    The rotation acts on the first two coordinates (identity beyond them);
    for 1-d data the rotation must be 0.
    """

    rotation: float = 0.0
    translation: np.ndarray = field(default_factory=lambda: np.zeros(2))
    scale: float = 1.0

    def __post_init__(self):
        if not self.scale > 0:
            raise ValueError("scale must be positive")
        t = np.asarray(self.translation, dtype=np.float64)
        if t.ndim != 1:
            raise ValueError("translation must be a vector")
        t = t.copy()
        t.flags.writeable = False
        object.__setattr__(self, "translation", t)


def make_moons(n: int, noise: float, seed: int) -> LabeledSample:
    """Two interleaving half-circles with optional isotropic Gaussian noise.

    Class 0 sits on the upper unit half-circle centered at (0, 0); class 1 on
    the lower unit half-circle centered at (1, 0.5). Angles are evenly spaced
    over [0, pi] per class (class 0 receives the extra point when n is odd),
    and noise of standard deviation ``noise`` is added per coordinate in row
    order, x before y, from a generator seeded with ``seed``.
    """
    if n < 2:
        raise ValueError("make_moons needs n >= 2")
    if noise < 0:
        raise ValueError("noise must be nonnegative")
    n1 = n // 2
    n0 = n - n1
    t0 = np.linspace(0.0, math.pi, n0)
    t1 = np.linspace(0.0, math.pi, n1) if n1 > 0 else np.empty(0)
    xs = np.concatenate(
        [
            np.column_stack([np.cos(t0), np.sin(t0)]),
            np.column_stack([1.0 - np.cos(t1), 0.5 - np.sin(t1)]),
        ]
    )
    rng = Xoshiro256StarStar(seed)
    xs = xs + noise * rng.normals(xs.shape)
    labels = np.concatenate([np.zeros(n0, dtype=np.int64), np.ones(n1, dtype=np.int64)])
    return LabeledSample(xs, labels, Domain.SOURCE, k=2)


def make_gaussian_blobs(
    means, std: float, n_per_class: int, seed: int
) -> LabeledSample:
    """``len(means)`` isotropic Gaussian clusters, ``n_per_class`` points each."""
    centers = np.asarray(means, dtype=np.float64)
    if centers.ndim != 2 or centers.shape[0] < 2:
        raise ValueError("make_gaussian_blobs needs at least 2 means")
    if not std > 0:
        raise ValueError("std must be positive")
    if n_per_class < 1:
        raise ValueError("n_per_class must be >= 1")
    k, d = centers.shape
    rng = Xoshiro256StarStar(seed)
    feats = np.empty((k * n_per_class, d))
    labels = np.empty(k * n_per_class, dtype=np.int64)
    row = 0
    for c in range(k):
        for _ in range(n_per_class):
            feats[row] = centers[c] + std * rng.normals(d)
            labels[row] = c
            row += 1
    return LabeledSample(feats, labels, Domain.SOURCE, k=k)


def apply_shift(s: LabeledSample, t: ShiftTransform) -> LabeledSample:
    """Transform features row-wise; labels survive, the domain becomes Target."""
    if t.translation.shape != (s.d,):
        raise ValueError(f"translation must have dimension {s.d}")
    feats = s.features.copy()
    if t.rotation != 0.0:
        if s.d < 2:
            raise ValueError("rotation requires at least 2 feature dimensions")
        c, sn = math.cos(t.rotation), math.sin(t.rotation)
        x0 = feats[:, 0].copy()
        x1 = feats[:, 1].copy()
        feats[:, 0] = c * x0 - sn * x1
        feats[:, 1] = sn * x0 + c * x1
    feats = t.scale * feats + t.translation
    return LabeledSample(feats, s.labels, Domain.TARGET, s.k)


def save_csv(s: LabeledSample, path) -> None:
    header = ",".join([f"x{i}" for i in range(s.d)] + ["y", "domain"])
    lines = [header]
    for i in range(s.n):
        coords = ",".join(f"{v:.17g}" for v in s.features[i])
        lines.append(f"{coords},{int(s.labels[i])},{s.domain.value}")
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


def load_csv(path, k: int | None = None) -> LabeledSample:
    """Load one sample. With ``k`` given, labels >= k are rejected by line.

    Without ``k`` the class count is inferred as ``max(2, max label + 1)``.
    """
    with open(path, "r", encoding="utf-8") as fh:
        raw = fh.read().split("\n")
    if raw and raw[-1] == "":
        raw.pop()
    if not raw:
        raise CsvFormatError(f"{path}: line 1: empty file")
    header = raw[0].split(",")
    if len(header) < 3 or header[-2] != "y" or header[-1] != "domain":
        raise CsvFormatError(f"{path}: line 1: header must be x0,...,y,domain")
    d = len(header) - 2
    if header[:d] != [f"x{i}" for i in range(d)]:
        raise CsvFormatError(f"{path}: line 1: feature columns must be x0..x{d-1}")
    feats, labels = [], []
    domain: Domain | None = None
    for lineno, line in enumerate(raw[1:], start=2):
        parts = line.split(",")
        if len(parts) != d + 2:
            raise CsvFormatError(
                f"{path}: line {lineno}: expected {d + 2} fields, got {len(parts)}"
            )
        try:
            feats.append([float(v) for v in parts[:d]])
        except ValueError:
            raise CsvFormatError(f"{path}: line {lineno}: non-numeric feature") from None
        try:
            y = int(parts[d])
        except ValueError:
            raise CsvFormatError(f"{path}: line {lineno}: non-integer label") from None
        if y < int(UNLABELED):
            raise CsvFormatError(f"{path}: line {lineno}: label below -1")
        if k is not None and y >= k:
            raise CsvFormatError(f"{path}: line {lineno}: label {y} >= k={k}")
        labels.append(y)
        try:
            row_domain = Domain(parts[d + 1])
        except ValueError:
            raise CsvFormatError(f"{path}: line {lineno}: unknown domain") from None
        if domain is None:
            domain = row_domain
        elif domain is not row_domain:
            raise CsvFormatError(f"{path}: line {lineno}: mixed domains in one file")
    if domain is None:
        raise CsvFormatError(f"{path}: line 2: no data rows")
    labels_arr = np.array(labels, dtype=np.int64)
    inferred = k if k is not None else max(2, int(labels_arr.max()) + 1)
    return LabeledSample(np.array(feats), labels_arr, domain, inferred)
