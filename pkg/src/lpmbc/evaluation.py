"""Cross-validated benchmark protocol.

Outer loop: repeated stratified k-fold cross test. On every training split
the features are standardized, the neighborhood size and local model
assumption are chosen by an inner stratified 4-fold cross validation, and
the held-out fold is scored by accuracy and a Brier-style MSE.
"""

from __future__ import annotations

import logging
import math
from dataclasses import asdict, dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .classifier import NeighborTable
from .core import Dataset, InvalidInputError, Rng, apply_scaler, fit_scaler, stratified_folds
from .lpm import DEFAULT_ASSUMPTIONS, Assumption, Kind
from .neighborhood import Metric, Mode, NeighborhoodMode

log = logging.getLogger(__name__)

K_FRACTIONS = tuple(j / 10 for j in range(1, 11))


def accuracy(predictions, truth) -> float:
    p = np.asarray(predictions)
    t = np.asarray(truth)
    if p.shape != t.shape or p.ndim != 1 or p.size == 0:
        raise InvalidInputError("predictions and truth must be equal-length non-empty vectors")
    return float(np.mean(p == t))


def mse(posterior_rows, truth) -> float:
    """Mean over samples and classes of ``(onehot - P)^2``, i.e. Brier score / c."""
    p = np.atleast_2d(np.asarray(posterior_rows, dtype=float))
    t = np.asarray(truth, dtype=np.int64)
    if p.shape[0] != t.size or t.size == 0:
        raise InvalidInputError("need one posterior row per truth label")
    if np.any(p < -1e-12) or np.any(p > 1 + 1e-12) or np.any(np.abs(p.sum(axis=1) - 1) > 1e-6):
        raise InvalidInputError("posterior rows must be probability vectors")
    if t.min() < 0 or t.max() >= p.shape[1]:
        raise InvalidInputError("truth label out of range")
    onehot = np.zeros_like(p)
    onehot[np.arange(t.size), t] = 1.0
    return float(np.mean((onehot - p) ** 2))


def _round_half_up(x: float) -> int:
    return int(math.floor(x + 0.5))


def k_for_fraction(fraction: float, n_min: int) -> int:
    return min(max(_round_half_up(fraction * n_min), 1), n_min)


@dataclass(frozen=True)
class SelectionGrid:
    k_values: tuple[int, ...]
    assumptions: tuple[Assumption, ...] = DEFAULT_ASSUMPTIONS

    @classmethod
    def from_min_count(cls, n_min: int, assumptions: Sequence[Assumption] = DEFAULT_ASSUMPTIONS) -> "SelectionGrid":
        """k in ``{1, 0.1 N_m, ..., N_m}``, rounded half up, clamped and deduplicated."""
        if n_min < 1:
            raise InvalidInputError("minimum class count must be >= 1")
        ks = sorted({1} | {k_for_fraction(f, n_min) for f in K_FRACTIONS})
        return cls(tuple(ks), tuple(assumptions))


def select_hyperparams(train: Dataset, grid: SelectionGrid, rng: Rng, folds: int = 4,
                       metric: Metric = Metric.CHEBYCHEV) -> tuple[int, Assumption]:
    """Grid cell with the most correct inner-CV predictions.

    Ties go to the smaller k, then the simpler assumption. A k larger than
    an inner split's smallest class is clamped to it.
    """
    train.check_trainable()
    correct: dict[tuple[int, int], int] = {}
    failed: set[tuple[int, int]] = set()
    splits = stratified_folds(train, folds, rng)
    for i, held in enumerate(splits):
        rest = np.concatenate([s for j, s in enumerate(splits) if j != i])
        if held.size == 0:
            continue
        inner_tr, inner_va = train.subset(rest), train.subset(held)
        try:
            table = NeighborTable(inner_tr, inner_va.features, metric)
        except InvalidInputError as exc:
            log.debug("inner split %d unusable: %s", i, exc)
            failed.update((k, a) for k in grid.k_values for a in range(len(grid.assumptions)))
            continue
        n_min = int(table.counts.min())
        cache: dict[tuple[int, int], int] = {}
        for k in grid.k_values:
            k_eff = min(k, n_min)
            for a, assumption in enumerate(grid.assumptions):
                if (k, a) in failed:
                    continue
                if (k_eff, a) not in cache:
                    try:
                        labels, _ = table.predict(NeighborhoodMode(Mode.PER_CLASS, k_eff), assumption)
                    except InvalidInputError as exc:
                        log.debug("cell k=%d %s failed: %s", k, assumption.name, exc)
                        failed.add((k, a))
                        continue
                    cache[(k_eff, a)] = int(np.sum(labels == inner_va.labels))
                correct[(k, a)] = correct.get((k, a), 0) + cache[(k_eff, a)]
    cells = [cell for cell in correct if cell not in failed]
    if not cells:
        raise InvalidInputError("no feasible grid cell in inner cross validation")
    best = min(cells, key=lambda c: (-correct[c], c[0], grid.assumptions[c[1]].rank, c[1]))
    return best[0], grid.assumptions[best[1]]


@dataclass(frozen=True)
class FoldRecord:
    repeat: int
    fold: int
    acc: float
    mse: float
    chosen_k: int
    chosen_assumption: str


@dataclass
class EvalReport:
    config: dict
    cells: list[FoldRecord] = field(default_factory=list)

    @property
    def aggregates(self) -> dict:
        if not self.cells:
            raise InvalidInputError("report has no fold records")
        acc = np.array([c.acc for c in self.cells])
        err = np.array([c.mse for c in self.cells])
        return {
            "mean_acc": float(acc.mean()),
            "mean_mse": float(err.mean()),
            "std_acc": float(acc.std()),
            "std_mse": float(err.std()),
        }

    @property
    def mean_acc(self) -> float:
        return self.aggregates["mean_acc"]

    @property
    def mean_mse(self) -> float:
        return self.aggregates["mean_mse"]

    def to_dict(self) -> dict:
        return {"config": self.config, "cells": [asdict(c) for c in self.cells], "aggregates": self.aggregates}

    @classmethod
    def from_dict(cls, obj: dict) -> "EvalReport":
        return cls(dict(obj["config"]), [FoldRecord(**c) for c in obj["cells"]])

    def csv_rows(self) -> list[list]:
        return [[c.repeat, c.fold, c.acc, c.mse, c.chosen_k, c.chosen_assumption] for c in self.cells]


CSV_HEADER = ["repeat", "fold", "acc", "mse", "chosen_k", "chosen_assumption"]


def _split(data: Dataset, folds_idx: list[np.ndarray], f: int) -> tuple[Dataset, Dataset]:
    rest = np.concatenate([s for j, s in enumerate(folds_idx) if j != f])
    tr, te = data.subset(rest), data.subset(folds_idx[f])
    scaler = fit_scaler(tr)
    return apply_scaler(scaler, tr), apply_scaler(scaler, te)


def run_fold(train: Dataset, test: Dataset, rng: Rng, assumptions: Sequence[Assumption] = DEFAULT_ASSUMPTIONS,
             metric: Metric = Metric.CHEBYCHEV, inner_folds: int = 4, fixed: tuple[float, Assumption] | None = None):
    """Select hyperparameters on ``train`` (already scaled) and score ``test``.

    Returns ``(acc, mse, k, assumption)``.
    """
    n_min = int(train.class_counts().min())
    if fixed is None:
        k, assumption = select_hyperparams(train, SelectionGrid.from_min_count(n_min, assumptions), rng,
                                           inner_folds, metric)
    else:
        k, assumption = k_for_fraction(fixed[0], n_min), fixed[1]
    table = NeighborTable(train, test.features, metric)
    labels, post = table.predict(NeighborhoodMode(Mode.PER_CLASS, k), assumption)
    return accuracy(labels, test.labels), mse(post, test.labels), k, assumption


def _describe(assumptions: Iterable[Assumption]) -> list[str]:
    out = []
    for a in assumptions:
        out.append(f"LCA/{a.bandwidth.value}" if a.kind is Kind.LCA else a.name)
    return out


def cross_test(data: Dataset, repeats: int = 8, folds: int = 5, rng: Rng | None = None, *,
               assumptions: Sequence[Assumption] = DEFAULT_ASSUMPTIONS, metric: Metric = Metric.CHEBYCHEV,
               inner_folds: int = 4, fixed: tuple[float, Assumption] | None = None) -> EvalReport:
    """Repeated stratified cross test with inner-CV model selection.

    With ``fixed=(k_fraction, assumption)`` the inner selection is skipped
    and k is that fraction of the training split's smallest class.
    """
    if repeats < 1 or folds < 2:
        raise InvalidInputError("need repeats >= 1 and folds >= 2")
    rng = rng or Rng(0)
    data.check_trainable()
    report = EvalReport(config={
        "seed": rng.seed,
        "repeats": repeats,
        "folds": folds,
        "inner_folds": inner_folds,
        "mode": Mode.PER_CLASS.value,
        "metric": Metric(metric).value,
        "assumptions": _describe(assumptions if fixed is None else [fixed[1]]),
        "fixed_k_fraction": None if fixed is None else fixed[0],
        "n": data.n,
        "d": data.d,
        "c": data.c,
    })
    for r in range(repeats):
        rep_rng = rng.spawn(r)
        folds_idx = stratified_folds(data, folds, rep_rng.spawn(0))
        for f in range(folds):
            tr, te = _split(data, folds_idx, f)
            acc, err, k, a = run_fold(tr, te, rep_rng.spawn(1 + f), assumptions, metric, inner_folds, fixed)
            log.info("repeat %d fold %d: acc=%.4f mse=%.4f k=%d %s", r, f, acc, err, k, a.name)
            report.cells.append(FoldRecord(r, f, acc, err, k, a.name))
    return report


@dataclass(frozen=True)
class SweepPoint:
    k_fraction: float
    assumption: str
    mean_acc: float
    mean_mse: float


def sweep(data: Dataset, k_fractions: Sequence[float], assumptions: Sequence[Assumption] = DEFAULT_ASSUMPTIONS,
          repeats: int = 1, folds: int = 5, rng: Rng | None = None,
          metric: Metric = Metric.CHEBYCHEV) -> list[SweepPoint]:
    """Fixed-hyperparameter cross tests over a ``(k_fraction, assumption)`` grid.

    Folds and scaling match :func:`cross_test` under the same rng, so a
    single-cell sweep equals ``cross_test(..., fixed=cell)``.
    """
    if repeats < 1 or folds < 2:
        raise InvalidInputError("need repeats >= 1 and folds >= 2")
    if not k_fractions or not assumptions:
        raise InvalidInputError("sweep needs at least one k fraction and one assumption")
    rng = rng or Rng(0)
    data.check_trainable()
    acc = np.zeros((len(k_fractions), len(assumptions)))
    err = np.zeros_like(acc)
    for r in range(repeats):
        rep_rng = rng.spawn(r)
        folds_idx = stratified_folds(data, folds, rep_rng.spawn(0))
        for f in range(folds):
            tr, te = _split(data, folds_idx, f)
            n_min = int(tr.class_counts().min())
            table = NeighborTable(tr, te.features, metric)
            for i, frac in enumerate(k_fractions):
                mode = NeighborhoodMode(Mode.PER_CLASS, k_for_fraction(frac, n_min))
                for j, assumption in enumerate(assumptions):
                    labels, post = table.predict(mode, assumption)
                    acc[i, j] += accuracy(labels, te.labels)
                    err[i, j] += mse(post, te.labels)
    cells = repeats * folds
    names = _describe(assumptions)
    return [SweepPoint(float(frac), names[j], float(acc[i, j] / cells), float(err[i, j] / cells))
            for i, frac in enumerate(k_fractions) for j in range(len(assumptions))]


__all__ = [
    "CSV_HEADER",
    "EvalReport",
    "FoldRecord",
    "SelectionGrid",
    "SweepPoint",
    "accuracy",
    "cross_test",
    "k_for_fraction",
    "mse",
    "run_fold",
    "select_hyperparams",
    "sweep",
]
