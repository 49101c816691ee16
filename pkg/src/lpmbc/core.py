"""Shared domain types: datasets, feature scaling, seeded randomness, folds."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np


class LPMError(Exception):
    """Base class for errors raised by this package."""


class InvalidInputError(LPMError, ValueError):
    """Malformed arguments or data."""


class InfeasibleError(InvalidInputError):
    """A neighborhood size cannot be satisfied by the available samples."""


class NullEventError(LPMError, ValueError):
    """Conditioning on an event of zero probability."""


def _frozen(a: np.ndarray) -> np.ndarray:
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class Dataset:
    """Labeled feature matrix.

    ``labels`` holds indices into ``class_names``. A dataset used for
    training must contain every class at least once; call
    :meth:`check_trainable` for that. Test splits may miss classes.
    """

    features: np.ndarray
    labels: np.ndarray
    class_names: tuple[str, ...]
    feature_names: tuple[str, ...] = ()

    def __post_init__(self):
        x = np.array(self.features, dtype=float)
        if x.ndim == 1:
            x = x.reshape(-1, 1)
        if x.ndim != 2 or x.shape[0] < 1 or x.shape[1] < 1:
            raise InvalidInputError(f"features must be a non-empty n x d matrix, got shape {x.shape}")
        if not np.all(np.isfinite(x)):
            raise InvalidInputError("features contain non-finite values")
        y = np.asarray(self.labels)
        if y.shape != (x.shape[0],):
            raise InvalidInputError(f"expected {x.shape[0]} labels, got shape {y.shape}")
        y = y.astype(np.int64)
        names = tuple(str(c) for c in self.class_names)
        if len(set(names)) != len(names):
            raise InvalidInputError("class names must be distinct")
        if y.size and (y.min() < 0 or y.max() >= len(names)):
            raise InvalidInputError("label index out of range of class vocabulary")
        fnames = tuple(self.feature_names) or tuple(f"x{j + 1}" for j in range(x.shape[1]))
        if len(fnames) != x.shape[1]:
            raise InvalidInputError("feature_names length does not match feature count")
        object.__setattr__(self, "features", _frozen(x))
        object.__setattr__(self, "labels", _frozen(y))
        object.__setattr__(self, "class_names", names)
        object.__setattr__(self, "feature_names", fnames)

    @property
    def n(self) -> int:
        return self.features.shape[0]

    @property
    def d(self) -> int:
        return self.features.shape[1]

    @property
    def c(self) -> int:
        return len(self.class_names)

    def class_counts(self) -> np.ndarray:
        return np.bincount(self.labels, minlength=self.c)

    def check_trainable(self) -> None:
        if self.c < 2:
            raise InvalidInputError("classification needs at least 2 classes")
        empty = [self.class_names[i] for i, m in enumerate(self.class_counts()) if m == 0]
        if empty:
            raise InvalidInputError(f"classes without samples: {', '.join(empty)}")

    def subset(self, idx) -> "Dataset":
        idx = np.asarray(idx, dtype=np.int64)
        return Dataset(self.features[idx], self.labels[idx], self.class_names, self.feature_names)

    def with_features(self, features) -> "Dataset":
        return Dataset(features, self.labels, self.class_names, self.feature_names)

    @classmethod
    def from_labels(cls, features, labels: Sequence, feature_names=()) -> "Dataset":
        """Build a dataset from raw labels; vocabulary is ordered by first appearance."""
        vocab: dict[str, int] = {}
        idx = [vocab.setdefault(str(lab), len(vocab)) for lab in labels]
        return cls(np.asarray(features, dtype=float), np.asarray(idx, dtype=np.int64), tuple(vocab), feature_names)


@dataclass(frozen=True)
class Scaler:
    means: np.ndarray
    stddevs: np.ndarray

    def transform(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if x.shape[-1] != self.means.shape[0]:
            raise InvalidInputError(f"dimension mismatch: scaler has {self.means.shape[0]} features, data has {x.shape[-1]}")
        return (x - self.means) / self.stddevs

    def inverse(self, x: np.ndarray) -> np.ndarray:
        return np.asarray(x, dtype=float) * self.stddevs + self.means


STD_FLOOR = 1e-12


def fit_scaler(train: Dataset) -> Scaler:
    """Per-feature mean and population standard deviation of ``train``.

    Standard deviations below 1e-12 (constant columns) are replaced by 1.0
    so scaling reduces to a shift.
    """
    if train.n < 2:
        raise InvalidInputError("fitting a scaler needs at least 2 samples")
    means = train.features.mean(axis=0)
    std = train.features.std(axis=0)
    std = np.where(std < STD_FLOOR, 1.0, std)
    return Scaler(_frozen(means), _frozen(std))


def apply_scaler(scaler: Scaler, data: Dataset) -> Dataset:
    return data.with_features(scaler.transform(data.features))


class Rng:
    """Counter-based generator (Philox) keyed by a seed and a stream path.

    Child streams from :meth:`spawn` are independent of the parent and of
    each other. Uniforms are built from raw 64-bit words and normals by
    Box-Muller, so the output sequence depends only on the Philox stream.
    """

    def __init__(self, seed: int, path: tuple[int, ...] = ()):
        if not 0 <= int(seed) < 2**64:
            raise InvalidInputError("seed must be a 64-bit unsigned integer")
        self.seed = int(seed)
        self.path = tuple(int(p) for p in path)
        key = np.random.SeedSequence(self.seed, spawn_key=self.path).generate_state(2, np.uint64)
        self._bits = np.random.Philox(key=int(key[0]) | (int(key[1]) << 64))

    def spawn(self, stream: int) -> "Rng":
        return Rng(self.seed, self.path + (stream,))

    def raw(self, size: int) -> np.ndarray:
        return np.asarray(self._bits.random_raw(size), dtype=np.uint64).reshape(-1)

    def uniform(self, size: int) -> np.ndarray:
        """Doubles in [0, 1) with 53 random bits."""
        return (self.raw(size) >> np.uint64(11)).astype(float) * 2.0**-53

    def below(self, n: int) -> int:
        """Uniform integer in [0, n) by rejection."""
        if n < 1:
            raise InvalidInputError("below() needs n >= 1")
        limit = (2**64 // n) * n
        while True:
            r = int(self.raw(1)[0])
            if r < limit:
                return r % n

    def permutation(self, n: int) -> np.ndarray:
        out = np.arange(n)
        for i in range(n - 1, 0, -1):
            j = self.below(i + 1)
            out[i], out[j] = out[j], out[i]
        return out

    def normal(self, size: int) -> np.ndarray:
        m = (size + 1) // 2
        u1 = 1.0 - self.uniform(m)  # (0, 1]
        u2 = self.uniform(m)
        rad = np.sqrt(-2.0 * np.log(u1))
        z = np.empty(2 * m)
        z[0::2] = rad * np.cos(2 * math.pi * u2)
        z[1::2] = rad * np.sin(2 * math.pi * u2)
        return z[:size]


@dataclass
class FoldWarnings:
    messages: list[str] = field(default_factory=list)


def stratified_folds(data: Dataset, folds: int, rng: Rng, warn_log: FoldWarnings | None = None) -> list[np.ndarray]:
    """Split sample indices into ``folds`` class-stratified partitions.

    Each class is shuffled and dealt round-robin. The starting fold of each
    class continues where the previous class stopped, which keeps total fold
    sizes within one of each other. A class smaller than ``folds`` is still
    dealt round-robin; a warning is recorded.
    """
    if folds < 2:
        raise InvalidInputError("folds must be >= 2")
    buckets: list[list[int]] = [[] for _ in range(folds)]
    pos = 0
    for cls in range(data.c):
        members = np.flatnonzero(data.labels == cls)
        if 0 < members.size < folds:
            msg = f"class {data.class_names[cls]!r} has {members.size} samples for {folds} folds"
            warnings.warn(msg, stacklevel=2)
            if warn_log is not None:
                warn_log.messages.append(msg)
        members = members[rng.permutation(members.size)]
        for idx in members:
            buckets[pos % folds].append(int(idx))
            pos += 1
    return [np.array(sorted(b), dtype=np.int64) for b in buckets]
