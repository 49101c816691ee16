"""Bayesian classification with local probabilistic models.

For a query ``x`` every class ``l`` gets a region ``R_l(x)`` holding
``k_l`` of its training samples and a local density ``f_l`` fitted in that
region. The class score is ``ln k_l + ln f_l(x)``; posteriors are the
normalized exponentiated scores and the label minimizes expected loss.
The common ``1/n`` factor of the joint prior ``k_l / n`` is left out since
it cancels in both the argmax and the posteriors.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import lpm
from .core import Dataset, InfeasibleError, InvalidInputError
from .lpm import Assumption, Bandwidth, Kind
from .neighborhood import RADIUS_FLOOR, Metric, Mode, NeighborhoodMode, build_regions, distances

TIE_TOL = 1e-12


@dataclass(frozen=True)
class LossMatrix:
    """``values[y, l]`` is the cost of predicting ``l`` when the truth is ``y``."""

    values: np.ndarray

    def __post_init__(self):
        v = np.array(self.values, dtype=float)
        if v.ndim != 2 or v.shape[0] != v.shape[1]:
            raise InvalidInputError("loss matrix must be square")
        if np.any(v < 0) or not np.all(np.isfinite(v)):
            raise InvalidInputError("loss entries must be finite and nonnegative")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @classmethod
    def zero_one(cls, c: int) -> "LossMatrix":
        return cls(1.0 - np.eye(c))


@dataclass(frozen=True)
class ClassifierConfig:
    mode: NeighborhoodMode
    assumption: Assumption = lpm.LGA
    metric: Metric = Metric.CHEBYCHEV
    loss: LossMatrix | None = None

    def __post_init__(self):
        object.__setattr__(self, "metric", Metric(self.metric))
        if self.mode.kind is Mode.GLOBAL and self.assumption.kind is Kind.LUA:
            raise InvalidInputError("LUA is undefined on the whole space (infinite volume)")


@dataclass
class Prediction:
    label: int
    posteriors: np.ndarray
    per_class_log_scores: np.ndarray
    selected_k: int
    selected_assumption: Assumption
    class_counts: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=int))
    fallback_to_prior: bool = False


def score_with_counts(train: Dataset, query, config: ClassifierConfig) -> tuple[np.ndarray, np.ndarray]:
    hoods = build_regions(train, query, config.mode, config.metric)
    scores = np.full(train.c, -math.inf)
    counts = np.zeros(train.c, dtype=np.int64)
    for cls, hood in enumerate(hoods):
        counts[cls] = hood.count
        if hood.count == 0:
            continue
        model = lpm.fit(config.assumption, hood.region, train.features[hood.members], cls)
        scores[cls] = math.log(hood.count) + lpm.log_lpd(model, query)
    return scores, counts


def score(train: Dataset, query, config: ClassifierConfig) -> np.ndarray:
    """Per-class log scores ``ln k_l + log_lpd_l(query)``; ``-inf`` for empty classes."""
    return score_with_counts(train, query, config)[0]


def posteriors(log_scores, prior=None) -> np.ndarray:
    """Normalize log scores row-wise (log-sum-exp with max subtraction).

    Rows whose scores are all ``-inf`` take ``prior`` instead, or raise if
    no prior is given.
    """
    s = np.asarray(log_scores, dtype=float)
    single = s.ndim == 1
    s = np.atleast_2d(s)
    dead = np.all(np.isneginf(s), axis=1)
    if np.any(dead) and prior is None:
        raise InvalidInputError("every class score is -inf and no prior was given")
    out = np.empty_like(s)
    live = ~dead
    if np.any(live):
        top = s[live].max(axis=1, keepdims=True)
        e = np.exp(s[live] - top)
        out[live] = e / e.sum(axis=1, keepdims=True)
    if np.any(dead):
        p = np.asarray(prior, dtype=float)
        out[dead] = p / p.sum()
    return out[0] if single else out


def decide(post, loss: LossMatrix | None = None) -> int:
    """Class with minimum expected loss; ties go to the lowest class index."""
    p = np.asarray(post, dtype=float)
    lam = LossMatrix.zero_one(p.size).values if loss is None else loss.values
    if lam.shape != (p.size, p.size):
        raise InvalidInputError("loss matrix does not match the number of classes")
    risk = p @ lam
    return int(np.flatnonzero(risk <= risk.min() + TIE_TOL)[0])


def class_frequencies(train: Dataset) -> np.ndarray:
    return train.class_counts() / train.n


def predict(train: Dataset, query, config: ClassifierConfig) -> Prediction:
    scores, counts = score_with_counts(train, query, config)
    fallback = bool(np.all(np.isneginf(scores)))
    post = posteriors(scores, class_frequencies(train))
    return Prediction(
        label=decide(post, config.loss),
        posteriors=post,
        per_class_log_scores=scores,
        selected_k=config.mode.k,
        selected_assumption=config.assumption,
        class_counts=counts,
        fallback_to_prior=fallback,
    )


def named_config(variant: str, k: int = 0) -> ClassifierConfig:
    """Configuration of a classic rule expressed as a local Bayesian classifier.

    ``dw_knn`` and ``local_mean`` drop the region normalizer, following
    their classic definitions (kernel-weighted votes and distance to the
    local class mean).
    """
    table = {
        "voting_knn": (Mode.SHARED, Assumption(Kind.LUA)),
        "dw_knn": (Mode.SHARED, Assumption(Kind.LCA, Bandwidth.UNIT, normalized=False)),
        "local_mean": (Mode.PER_CLASS, Assumption(Kind.LGA, identity_variance=True, normalized=False)),
        "ld_knn": (Mode.SHARED, Assumption(Kind.LGA)),
        "gaussian_nb": (Mode.GLOBAL, Assumption(Kind.LGA)),
        "kde_nb": (Mode.GLOBAL, Assumption(Kind.LCA, Bandwidth.SILVERMAN)),
    }
    if variant not in table:
        raise InvalidInputError(f"unknown variant {variant!r}; choose from {', '.join(table)}")
    mode, assumption = table[variant]
    return ClassifierConfig(NeighborhoodMode(mode, k), assumption)


def predict_named(train: Dataset, query, variant: str, k: int = 0) -> Prediction:
    return predict(train, query, named_config(variant, k))


class NeighborTable:
    """Per-class distances from a batch of queries, sorted once.

    Lets many ``(k, assumption)`` combinations be scored without repeating
    the neighbor search. Results agree with :func:`score`.
    """

    def __init__(self, train: Dataset, queries, metric: Metric = Metric.CHEBYCHEV):
        train.check_trainable()
        self.train = train
        self.queries = np.atleast_2d(np.asarray(queries, dtype=float))
        if self.queries.shape[1] != train.d:
            raise InvalidInputError(f"queries have {self.queries.shape[1]} features, training data has {train.d}")
        self.metric = Metric(metric)
        self.counts = train.class_counts()
        self._sorted_d = []
        self._sorted_pts = []
        for cls in range(train.c):
            pts = train.features[train.labels == cls]
            dist = np.stack([distances(self.metric, pts, q) for q in self.queries])
            order = np.argsort(dist, axis=1, kind="stable")
            self._sorted_d.append(np.take_along_axis(dist, order, axis=1))
            self._sorted_pts.append(pts[order])
        self._all_d = np.sort(np.concatenate(self._sorted_d, axis=1), axis=1)

    def radii(self, mode: NeighborhoodMode) -> list[np.ndarray]:
        q = self.queries.shape[0]
        if mode.kind is Mode.GLOBAL:
            return [np.full(q, math.inf) for _ in range(self.train.c)]
        if mode.kind is Mode.SHARED:
            if mode.k > self.train.n:
                raise InfeasibleError(f"k={mode.k} exceeds training size {self.train.n}")
            r = np.maximum(self._all_d[:, mode.k - 1], RADIUS_FLOOR)
            return [r] * self.train.c
        out = []
        for cls in range(self.train.c):
            if mode.k > self.counts[cls]:
                raise InfeasibleError(
                    f"k={mode.k} exceeds the {self.counts[cls]} samples of class {self.train.class_names[cls]!r}")
            out.append(np.maximum(self._sorted_d[cls][:, mode.k - 1], RADIUS_FLOOR))
        return out

    def scores(self, mode: NeighborhoodMode, assumption: Assumption) -> np.ndarray:
        """``(q, c)`` log scores for one configuration."""
        if mode.kind is Mode.GLOBAL and assumption.kind is Kind.LUA:
            raise InvalidInputError("LUA is undefined on the whole space (infinite volume)")
        q = self.queries.shape[0]
        out = np.full((q, self.train.c), -math.inf)
        for cls, r in enumerate(self.radii(mode)):
            mask = self._sorted_d[cls] <= r[:, None]
            m = mask.sum(axis=1)
            width = int(m.max())
            if width == 0:
                continue
            lpd = lpm.batch_log_lpd(assumption, self.queries, r, self._sorted_pts[cls][:, :width], mask[:, :width])
            with np.errstate(divide="ignore"):
                out[:, cls] = np.where(m > 0, np.log(np.maximum(m, 1)) + lpd, -math.inf)
        return out

    def predict(self, mode: NeighborhoodMode, assumption: Assumption, loss: LossMatrix | None = None):
        """Labels ``(q,)`` and posteriors ``(q, c)``."""
        post = posteriors(self.scores(mode, assumption), class_frequencies(self.train))
        labels = np.array([decide(p, loss) for p in post], dtype=np.int64)
        return labels, post


def predict_batch(train: Dataset, queries, config: ClassifierConfig):
    """Labels and posteriors for many queries under one configuration."""
    table = NeighborTable(train, queries, config.metric)
    return table.predict(config.mode, config.assumption, config.loss)


__all__ = [
    "ClassifierConfig",
    "LossMatrix",
    "NeighborTable",
    "Prediction",
    "decide",
    "named_config",
    "posteriors",
    "predict",
    "predict_batch",
    "predict_named",
    "score",
    "score_with_counts",
]
