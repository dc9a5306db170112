"""Labeled point sets and CSV interchange."""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .geometry import SpherePoint, _freeze

_FLOAT_FMT = "%.17g"


@dataclass(frozen=True)
class LabeledDataset:
    """An ordered collection of points (rows) with real labels.

    Labels are arbitrary reals for regression and +-1 for
    classification.  Points are ambient coordinates; whether they are
    sphere or Euclidean data is decided by the kernel they are used
    with.
    """

    points: np.ndarray
    labels: np.ndarray

    def __post_init__(self) -> None:
        pts = np.asarray(self.points, dtype=float)
        lab = np.asarray(self.labels, dtype=float)
        if pts.ndim != 2:
            raise ValueError(f"points must be a 2-d array, got shape {pts.shape}")
        if lab.ndim != 1 or lab.size != pts.shape[0]:
            raise ValueError("labels must be one per point")
        if not np.all(np.isfinite(pts)) or not np.all(np.isfinite(lab)):
            raise ValueError("points and labels must be finite")
        object.__setattr__(self, "points", _freeze(pts))
        object.__setattr__(self, "labels", _freeze(lab))

    def __len__(self) -> int:
        return self.points.shape[0]

    @property
    def ambient_dim(self) -> int:
        return self.points.shape[1]

    def has_sign_labels(self) -> bool:
        return bool(np.all(np.isin(self.labels, (-1.0, 1.0))))

    @classmethod
    def from_sphere_points(cls, points: Sequence[SpherePoint], labels) -> "LabeledDataset":
        coords = np.array([p.coords for p in points], dtype=float)
        return cls(coords, np.asarray(labels, dtype=float))


def save_csv(path, dataset: LabeledDataset) -> None:
    """Write one row per point: coordinate columns x0..x{D-1}, then label."""
    path = Path(path)
    header = [f"x{i}" for i in range(dataset.ambient_dim)] + ["label"]
    with path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\r\n")
        writer.writerow(header)
        for row, label in zip(dataset.points, dataset.labels):
            writer.writerow([_FLOAT_FMT % v for v in row] + [_FLOAT_FMT % label])


def load_csv(path) -> LabeledDataset:
    path = Path(path)
    with path.open("r", newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if not header or header[-1] != "label":
            raise ValueError(f"{path} is not a labeled-dataset CSV (missing label column)")
        rows = [[float(v) for v in row] for row in reader if row]
    if not rows:
        return LabeledDataset(np.empty((0, len(header) - 1)), np.empty(0))
    arr = np.asarray(rows, dtype=float)
    return LabeledDataset(arr[:, :-1], arr[:, -1])
