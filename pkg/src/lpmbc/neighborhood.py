"""Distance metrics and hypercube neighborhoods around a query point."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .core import Dataset, InfeasibleError, InvalidInputError

RADIUS_FLOOR = 1e-9


class Metric(str, enum.Enum):
    CHEBYCHEV = "chebychev"
    EUCLIDEAN = "euclidean"


class Mode(str, enum.Enum):
    PER_CLASS = "per_class"
    SHARED = "shared"
    GLOBAL = "global"


@dataclass(frozen=True)
class NeighborhoodMode:
    kind: Mode
    k: int = 0

    def __post_init__(self):
        object.__setattr__(self, "kind", Mode(self.kind))
        if self.kind is not Mode.GLOBAL and self.k < 1:
            raise InvalidInputError(f"{self.kind.value} neighborhoods need k >= 1")


def distances(metric: Metric, points: np.ndarray, query: np.ndarray) -> np.ndarray:
    """Distances from ``query`` to every row of ``points``."""
    points = np.atleast_2d(np.asarray(points, dtype=float))
    query = np.asarray(query, dtype=float)
    if points.shape[1] != query.shape[-1]:
        raise InvalidInputError(f"dimension mismatch: {points.shape[1]} vs {query.shape[-1]}")
    diff = np.abs(points - query)
    if Metric(metric) is Metric.CHEBYCHEV:
        return diff.max(axis=1)
    return np.sqrt((diff**2).sum(axis=1))


def distance(metric: Metric, a, b) -> float:
    a = np.asarray(a, dtype=float).reshape(-1)
    b = np.asarray(b, dtype=float).reshape(-1)
    if a.shape != b.shape:
        raise InvalidInputError(f"dimension mismatch: {a.size} vs {b.size}")
    return float(distances(metric, a[None, :], b)[0])


def kth_nearest_radius(points, query, k: int, metric: Metric = Metric.CHEBYCHEV) -> float:
    """Distance from ``query`` to its k-th nearest point (unfloored)."""
    points = np.atleast_2d(np.asarray(points, dtype=float))
    if not 1 <= k <= points.shape[0]:
        raise InfeasibleError(f"k={k} needs between 1 and {points.shape[0]} points")
    dist = distances(metric, points, query)
    return float(np.partition(dist, k - 1)[k - 1])


@dataclass(frozen=True)
class Region:
    """Closed axis-aligned hypercube ``center +/- radius``; infinite radius is the whole space."""

    center: np.ndarray
    radius: float

    def __post_init__(self):
        c = np.array(self.center, dtype=float).reshape(-1)
        c.setflags(write=False)
        object.__setattr__(self, "center", c)
        if not self.radius > 0:
            raise InvalidInputError("region radius must be positive")

    @property
    def d(self) -> int:
        return self.center.size

    @property
    def is_global(self) -> bool:
        return math.isinf(self.radius)

    @property
    def lower(self) -> np.ndarray:
        return self.center - self.radius

    @property
    def upper(self) -> np.ndarray:
        return self.center + self.radius

    @property
    def log_volume(self) -> float:
        return self.d * math.log(2.0 * self.radius)

    def contains(self, x) -> bool:
        x = np.asarray(x, dtype=float)
        return bool(np.all(np.abs(x - self.center) <= self.radius))

    @classmethod
    def whole_space(cls, center) -> "Region":
        return cls(center, math.inf)


@dataclass(frozen=True)
class ClassNeighborhood:
    region: Region
    members: np.ndarray  # indices into the training set

    @property
    def count(self) -> int:
        return int(self.members.size)


def build_regions(train: Dataset, query, mode: NeighborhoodMode, metric: Metric = Metric.CHEBYCHEV) -> list[ClassNeighborhood]:
    """Region and member indices for every class, in class-index order.

    Regions are closed, so every point tied with the k-th distance is a
    member and a class may end up with more than k members.
    """
    query = np.asarray(query, dtype=float).reshape(-1)
    if query.size != train.d:
        raise InvalidInputError(f"query has {query.size} features, training data has {train.d}")
    dist = distances(metric, train.features, query)
    counts = train.class_counts()
    out = []
    if mode.kind is Mode.GLOBAL:
        region = Region.whole_space(query)
        return [ClassNeighborhood(region, np.flatnonzero(train.labels == cls)) for cls in range(train.c)]
    if mode.kind is Mode.SHARED:
        if mode.k > train.n:
            raise InfeasibleError(f"k={mode.k} exceeds training size {train.n}")
        radius = max(float(np.partition(dist, mode.k - 1)[mode.k - 1]), RADIUS_FLOOR)
        region = Region(query, radius)
        inside = dist <= radius
        for cls in range(train.c):
            out.append(ClassNeighborhood(region, np.flatnonzero(inside & (train.labels == cls))))
        return out
    for cls in range(train.c):
        if mode.k > counts[cls]:
            raise InfeasibleError(f"k={mode.k} exceeds the {counts[cls]} samples of class {train.class_names[cls]!r}")
        idx = np.flatnonzero(train.labels == cls)
        d_cls = dist[idx]
        radius = max(float(np.partition(d_cls, mode.k - 1)[mode.k - 1]), RADIUS_FLOOR)
        out.append(ClassNeighborhood(Region(query, radius), idx[d_cls <= radius]))
    return out
