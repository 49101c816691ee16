"""Invariant suites checked against independent brute-force oracles.

Each ``check_*`` function generates seeded random instances, runs the
library on them, compares with a direct re-derivation that shares no code
with the library's scoring path, and returns a :class:`CheckResult`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import lpm
from .classifier import ClassifierConfig, NeighborTable, predict, predict_named
from .core import Dataset, Rng, apply_scaler, fit_scaler, stratified_folds
from .lpm import Assumption, Bandwidth, Kind
from .neighborhood import Mode, NeighborhoodMode, Region, build_regions

POSTERIOR_TOL = 1e-9


@dataclass
class CheckResult:
    name: str
    passed: bool
    cases: int
    failures: list[str] = field(default_factory=list)

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        extra = f" ({len(self.failures)} failing: {self.failures[0]})" if self.failures else ""
        return f"[{status}] {self.name}: {self.cases} cases{extra}"


def _result(name: str, cases: int, failures: list[str]) -> CheckResult:
    return CheckResult(name, not failures, cases, failures)


def _random_train(gen: np.random.Generator, n_per_class: int, d: int, c: int, spread: float = 1.0) -> Dataset:
    x = gen.normal(scale=spread, size=(n_per_class * c, d)) + np.repeat(gen.normal(size=(c, d)), n_per_class, axis=0)
    y = np.repeat(np.arange(c), n_per_class)
    order = gen.permutation(y.size)
    return Dataset(x[order], y[order], tuple(f"c{i}" for i in range(c)))


def _cheb(points, q):
    return np.max(np.abs(points - q), axis=1)


def _knn_indices(train: Dataset, q, k: int):
    """Indices of the k Chebychev-nearest points, or None if the k-th distance is tied."""
    dist = _cheb(train.features, q)
    order = np.argsort(dist)
    if k < dist.size and dist[order[k]] - dist[order[k - 1]] < 1e-12:
        return None
    return order[:k]


def _first_argmax(values) -> int:
    v = np.asarray(values, dtype=float)
    return int(np.flatnonzero(v == v.max())[0])


def check_voting_knn(instances: int = 200, seed: int = 11) -> CheckResult:
    """Shared region + LUA labels equal a k-nearest majority vote."""
    gen = np.random.default_rng(seed)
    failures = []
    done = 0
    while done < instances:
        c, d = int(gen.integers(2, 4)), int(gen.integers(1, 5))
        train = _random_train(gen, int(gen.integers(5, 20)), d, c)
        q = gen.normal(size=d)
        k = int(gen.integers(1, min(15, train.n) + 1))
        nearest = _knn_indices(train, q, k)
        if nearest is None:
            continue
        done += 1
        votes = np.bincount(train.labels[nearest], minlength=c)
        pred = predict_named(train, q, "voting_knn", k)
        if pred.label != _first_argmax(votes) or abs(pred.posteriors.sum() - 1) > POSTERIOR_TOL:
            failures.append(f"case {done}: got {pred.label}, votes {votes.tolist()}")
    return _result("voting kNN equivalence", instances, failures)


def check_dw_knn(instances: int = 200, seed: int = 12) -> CheckResult:
    """Shared region + unnormalized unit-bandwidth KDE equals Gaussian-weighted kNN."""
    gen = np.random.default_rng(seed)
    failures = []
    done = 0
    while done < instances:
        c, d = int(gen.integers(2, 4)), int(gen.integers(1, 5))
        train = _random_train(gen, int(gen.integers(5, 20)), d, c)
        q = gen.normal(size=d)
        k = int(gen.integers(1, min(15, train.n) + 1))
        nearest = _knn_indices(train, q, k)
        if nearest is None:
            continue
        weights = np.zeros(c)
        for i in nearest:
            diff = train.features[i] - q
            weights[train.labels[i]] += math.exp(-0.5 * float(diff @ diff)) / (2 * math.pi) ** (d / 2)
        # Exact weight ties are not meaningful label comparisons.
        top = np.sort(weights)[::-1]
        if top[0] - top[1] < 1e-12 * max(top[0], 1e-300):
            continue
        done += 1
        pred = predict_named(train, q, "dw_knn", k)
        if pred.label != int(np.argmax(weights)) or abs(pred.posteriors.sum() - 1) > POSTERIOR_TOL:
            failures.append(f"case {done}: got {pred.label}, weights {weights.tolist()}")
    return _result("distance-weighted kNN equivalence", instances, failures)


def _well_separated(gen: np.random.Generator):
    """Classes around far-apart centers; the query sits next to one of them."""
    c, d = int(gen.integers(2, 4)), int(gen.integers(1, 4))
    k = int(gen.integers(1, 8))
    n_per = k + int(gen.integers(0, 6))
    centers = np.zeros((c, d))
    centers[:, 0] = 12.0 * np.arange(c)
    x = np.vstack([centers[i] + gen.uniform(-1, 1, size=(n_per, d)) for i in range(c)])
    y = np.repeat(np.arange(c), n_per)
    owner = int(gen.integers(c))
    q = centers[owner] + gen.uniform(-0.5, 0.5, size=d)
    return Dataset(x, y, tuple(f"c{i}" for i in range(c))), q, k


def check_local_mean(instances: int = 100, seed: int = 13) -> CheckResult:
    """Per-class LGA with identity variance picks the nearest local class mean."""
    gen = np.random.default_rng(seed)
    failures = []
    config = ClassifierConfig(NeighborhoodMode(Mode.PER_CLASS, 1), Assumption(Kind.LGA, identity_variance=True))
    for case in range(instances):
        train, q, k = _well_separated(gen)
        sq = []
        for cls in range(train.c):
            pts = train.features[train.labels == cls]
            near = pts[np.argsort(_cheb(pts, q))[:k]]
            mu = near.mean(axis=0)
            sq.append(float((q - mu) @ (q - mu)))
        expected = int(np.argmin(sq))
        general = predict(train, q, ClassifierConfig(NeighborhoodMode(Mode.PER_CLASS, k), config.assumption))
        named = predict_named(train, q, "local_mean", k)
        if general.label != expected or named.label != expected:
            failures.append(f"case {case}: expected {expected}, got {general.label}/{named.label}")
        elif abs(general.posteriors.sum() - 1) > POSTERIOR_TOL:
            failures.append(f"case {case}: posteriors sum to {general.posteriors.sum()}")
    return _result("local mean equivalence", instances, failures)


def _gaussian_nb_posteriors(train: Dataset, q) -> np.ndarray:
    logp = []
    for cls in range(train.c):
        pts = train.features[train.labels == cls]
        mu = pts.mean(axis=0)
        var = np.maximum(((pts - mu) ** 2).mean(axis=0), lpm.VARIANCE_FLOOR)
        ll = sum(-0.5 * math.log(2 * math.pi * v) - (qj - m) ** 2 / (2 * v) for qj, m, v in zip(q, mu, var))
        logp.append(math.log(pts.shape[0] / train.n) + ll)
    top = max(logp)
    w = [math.exp(v - top) for v in logp]
    return np.array(w) / sum(w)


def check_gaussian_nb(instances: int = 200, seed: int = 14) -> CheckResult:
    """Whole-space LGA equals Gaussian naive Bayes, posteriors to 1e-9."""
    gen = np.random.default_rng(seed)
    failures = []
    for case in range(instances):
        c, d = int(gen.integers(2, 5)), int(gen.integers(1, 6))
        train = _random_train(gen, int(gen.integers(2, 25)), d, c, spread=float(gen.uniform(0.3, 2)))
        q = gen.normal(size=d)
        expected = _gaussian_nb_posteriors(train, q)
        pred = predict_named(train, q, "gaussian_nb")
        if pred.label != _first_argmax(expected) or np.max(np.abs(pred.posteriors - expected)) > POSTERIOR_TOL:
            failures.append(f"case {case}: {pred.posteriors.tolist()} vs {expected.tolist()}")
    return _result("global Gaussian naive Bayes equivalence", instances, failures)


def _gauss_legendre_grid(region: Region, nodes: int):
    t, w = np.polynomial.legendre.leggauss(nodes)
    axes, weights = [], []
    for lo, hi in zip(region.lower, region.upper):
        half = 0.5 * (hi - lo)
        axes.append(lo + half * (t + 1))
        weights.append(half * w)
    pts = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, region.d)
    wts = np.ones(1)
    for wa in weights:
        wts = np.multiply.outer(wts, wa)
    return pts, wts.reshape(-1)


QUADRATURE_NODES = {1: 200, 2: 80, 3: 32}


def integrate_density(model: lpm.LocalModel, mc_samples: int = 100_000, seed: int = 0):
    """Integral of ``exp(log_lpd)`` over the model's region.

    Tensor Gauss-Legendre for d <= 3, returning ``(value, 0.0)``; uniform
    Monte Carlo otherwise, returning ``(estimate, standard_error)``.
    """
    region = model.region
    if region.d <= 3:
        pts, wts = _gauss_legendre_grid(region, QUADRATURE_NODES[region.d])
        return float(np.sum(wts * np.exp(lpm.log_lpd(model, pts)))), 0.0
    gen = np.random.default_rng(seed)
    pts = gen.uniform(region.lower, region.upper, size=(mc_samples, region.d))
    vol = math.exp(region.log_volume)
    vals = vol * np.exp(lpm.log_lpd(model, pts))
    return float(vals.mean()), float(vals.std(ddof=1) / math.sqrt(mc_samples))


UNITARITY_ASSUMPTIONS = (
    Assumption(Kind.LUA),
    Assumption(Kind.LGA),
    Assumption(Kind.LCA, Bandwidth.UNIT),
    Assumption(Kind.LCA, Bandwidth.SILVERMAN),
)


def check_unitarity(fits: int = 300, seed: int = 15, quad_tol: float = 1e-4) -> CheckResult:
    """Every fitted model integrates to one over its finite region."""
    gen = np.random.default_rng(seed)
    failures = []
    for case in range(fits):
        d = int(gen.integers(1, 6))
        center = gen.normal(size=d)
        radius = float(gen.uniform(0.2, 2.0))
        region = Region(center, radius)
        k = int(gen.integers(3, 21))
        members = center + gen.uniform(-radius, radius, size=(k, d))
        assumption = UNITARITY_ASSUMPTIONS[case % len(UNITARITY_ASSUMPTIONS)]
        model = lpm.fit(assumption, region, members)
        value, se = integrate_density(model, seed=case)
        ok = abs(value - 1) <= quad_tol if d <= 3 else abs(value - 1) <= max(3 * se, 1e-12)
        if not ok:
            failures.append(f"case {case} d={d} {assumption.name}: integral {value:.8f} (se {se:.2e})")
    return _result("unitarity of fitted local densities", fits, failures)


def _random_box(gen: np.random.Generator, rows: int, cols: int, min_side: int = 1):
    r0 = int(gen.integers(0, rows - min_side + 1))
    r1 = int(gen.integers(r0 + min_side - 1, rows))
    c0 = int(gen.integers(0, cols - min_side + 1))
    c1 = int(gen.integers(c0 + min_side - 1, cols))
    return (r0, r1), (c0, c1)


def check_local_independence(products: int = 200, dependents: int = 50, seed: int = 16) -> CheckResult:
    """Product joints stay independent in every box; generic joints are rejected."""
    gen = np.random.default_rng(seed)
    failures = []
    for case in range(products):
        rows, cols = int(gen.integers(2, 9)), int(gen.integers(2, 9))
        pa = gen.uniform(0.05, 1, size=rows)
        pb = gen.uniform(0.05, 1, size=cols)
        joint = np.outer(pa / pa.sum(), pb / pb.sum())
        joint /= joint.sum()
        box = _random_box(gen, rows, cols)
        if not lpm.verify_local_independence(joint, box):
            failures.append(f"product case {case} rejected on box {box}")
    for case in range(dependents):
        rows, cols = int(gen.integers(2, 9)), int(gen.integers(2, 9))
        joint = gen.uniform(0.05, 1, size=(rows, cols))
        joint += np.diag(np.full(min(rows, cols), 3.0)) if rows == cols else 0.0
        joint /= joint.sum()
        box = _random_box(gen, rows, cols, min_side=2)
        if lpm.verify_local_independence(joint, box):
            failures.append(f"dependent case {case} accepted on box {box}")
    return _result("local independence oracle", products + dependents, failures)


def check_neighborhoods(instances: int = 100, seed: int = 17) -> CheckResult:
    """Region radii and members match a full linear scan, for both search paths."""
    gen = np.random.default_rng(seed)
    failures = []
    for case in range(instances):
        c, d = int(gen.integers(2, 4)), int(gen.integers(1, 4))
        # coarse grid values create distance ties on purpose
        x = gen.integers(-3, 4, size=(int(gen.integers(2 * c, 50)), d)).astype(float) / 2
        y = np.arange(x.shape[0]) % c
        train = Dataset(x, y, tuple(f"c{i}" for i in range(c)))
        q = gen.integers(-3, 4, size=d) / 2
        kind = [Mode.PER_CLASS, Mode.SHARED][case % 2]
        limit = int(train.class_counts().min()) if kind is Mode.PER_CLASS else train.n
        k = int(gen.integers(1, limit + 1))
        mode = NeighborhoodMode(kind, k)
        hoods = build_regions(train, q, mode)
        table = NeighborTable(train, q[None, :])
        radii = table.radii(mode)
        scan = [max(abs(a - b) for a, b in zip(row, q)) for row in x.tolist()]
        if kind is Mode.SHARED:
            r_all = max(sorted(scan)[k - 1], 1e-9)
        for cls in range(c):
            idx = [i for i in range(len(scan)) if y[i] == cls]
            r = max(sorted(scan[i] for i in idx)[k - 1], 1e-9) if kind is Mode.PER_CLASS else r_all
            members = [i for i in idx if scan[i] <= r]
            if (abs(hoods[cls].region.radius - r) > 0 or hoods[cls].members.tolist() != members
                    or abs(radii[cls][0] - r) > 0):
                failures.append(f"case {case} class {cls}: radius {hoods[cls].region.radius} vs {r}")
    return _result("neighborhood brute-force equivalence", instances, failures)


def check_batch_scores(instances: int = 60, seed: int = 18) -> CheckResult:
    """Batched scoring matches per-query scoring within 1e-9."""
    from .classifier import score

    gen = np.random.default_rng(seed)
    failures = []
    assumptions = (lpm.LUA, lpm.LGA, Assumption(Kind.LCA, Bandwidth.UNIT), lpm.LCA,
                   Assumption(Kind.LGA, identity_variance=True, normalized=False))
    for case in range(instances):
        c, d = int(gen.integers(2, 4)), int(gen.integers(1, 6))
        train = _random_train(gen, int(gen.integers(3, 15)), d, c)
        queries = gen.normal(size=(4, d))
        kind = [Mode.PER_CLASS, Mode.SHARED, Mode.GLOBAL][case % 3]
        limit = int(train.class_counts().min()) if kind is Mode.PER_CLASS else train.n
        mode = NeighborhoodMode(kind, int(gen.integers(1, limit + 1)))
        table = NeighborTable(train, queries)
        for a in assumptions:
            if kind is Mode.GLOBAL and a.kind is Kind.LUA:
                continue
            batch = table.scores(mode, a)
            ref = np.array([score(train, q, ClassifierConfig(mode, a)) for q in queries])
            fin = np.isfinite(ref)
            if not np.array_equal(fin, np.isfinite(batch)) or np.max(np.abs(batch[fin] - ref[fin]), initial=0) > 1e-9:
                failures.append(f"case {case} {kind.value} {a}: max diff {np.max(np.abs(batch - ref))}")
    return _result("batched vs per-query scores", instances, failures)


def check_scaler_and_folds(instances: int = 50, seed: int = 19) -> CheckResult:
    """Scaler round trip within 1e-12 and fold stratification within one sample per class."""
    gen = np.random.default_rng(seed)
    failures = []
    for case in range(instances):
        c = int(gen.integers(2, 5))
        train = _random_train(gen, int(gen.integers(5, 40)), int(gen.integers(1, 6)), c, spread=5.0)
        scaler = fit_scaler(train)
        back = scaler.inverse(apply_scaler(scaler, train).features)
        if np.max(np.abs(back - train.features)) > 1e-12 * max(1.0, np.max(np.abs(train.features))):
            failures.append(f"case {case}: scaler round trip")
        folds = stratified_folds(train, int(gen.integers(2, 6)), Rng(case))
        per = np.array([np.bincount(train.labels[f], minlength=c) for f in folds])
        allidx = np.sort(np.concatenate(folds))
        if not np.array_equal(allidx, np.arange(train.n)) or np.any(per.max(axis=0) - per.min(axis=0) > 1):
            failures.append(f"case {case}: folds {per.tolist()}")
    return _result("scaler round trip and stratified folds", instances, failures)


SUITES = (
    check_voting_knn,
    check_dw_knn,
    check_local_mean,
    check_gaussian_nb,
    check_unitarity,
    check_local_independence,
    check_neighborhoods,
    check_batch_scores,
    check_scaler_and_folds,
)


def run_all() -> list[CheckResult]:
    return [suite() for suite in SUITES]
