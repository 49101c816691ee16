"""Local probabilistic models: densities normalized to a hypercube region.

Three assumptions are supported, in increasing complexity:

* LUA, locally uniform: ``f_R(x) = 1 / V(R)``.
* LGA, locally Gaussian: a diagonal Gaussian fitted to the region members
  and truncated to the region.
* LCA, locally complex: a Gaussian-kernel density estimate over the region
  members, truncated to the region.

Features are modeled as independent inside a region, so every
normalization integral factorizes into per-feature normal CDF differences.
Everything is computed in log space.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np
from scipy import special

from .core import InvalidInputError, NullEventError
from .neighborhood import Region

VARIANCE_FLOOR = 1e-6
BANDWIDTH_FLOOR = 1e-3
SILVERMAN_FACTOR = 1.06
LOG_NORMALIZER_FLOOR = math.log(1e-300)
LOG_SQRT_2PI = 0.5 * math.log(2 * math.pi)


class Kind(str, enum.Enum):
    LUA = "LUA"
    LGA = "LGA"
    LCA = "LCA"

    @property
    def rank(self) -> int:
        return ("LUA", "LGA", "LCA").index(self.value)


class Bandwidth(str, enum.Enum):
    UNIT = "unit"
    SILVERMAN = "silverman"


@dataclass(frozen=True)
class Assumption:
    """Local model assumption.

    ``bandwidth`` only matters for LCA and ``identity_variance`` only for
    LGA. ``normalized=False`` drops the region normalizer; the named
    DW-kNN and local-mean rules are defined that way.
    """

    kind: Kind
    bandwidth: Bandwidth = Bandwidth.SILVERMAN
    identity_variance: bool = False
    normalized: bool = True

    def __post_init__(self):
        object.__setattr__(self, "kind", Kind(self.kind))
        object.__setattr__(self, "bandwidth", Bandwidth(self.bandwidth))

    @property
    def rank(self) -> int:
        return self.kind.rank

    @property
    def name(self) -> str:
        return self.kind.value

    @classmethod
    def parse(cls, text: str, bandwidth: str = "silverman") -> "Assumption":
        try:
            return cls(Kind(text.upper()), Bandwidth(bandwidth))
        except ValueError:
            raise InvalidInputError(f"unknown assumption {text!r} / bandwidth {bandwidth!r}") from None


LUA = Assumption(Kind.LUA)
LGA = Assumption(Kind.LGA)
LCA = Assumption(Kind.LCA)
DEFAULT_ASSUMPTIONS = (LUA, LGA, LCA)


def std_normal_cdf(z):
    """Standard normal CDF, ``0.5 * erfc(-z / sqrt(2))`` (scipy's ``ndtr``)."""
    return special.ndtr(z)


def log_std_normal_pdf(z):
    z = np.asarray(z, dtype=float)
    return -0.5 * z * z - LOG_SQRT_2PI


def log_box_mass(lo, hi):
    """``log(Phi(hi) - Phi(lo))`` elementwise, accurate in the tails.

    Intervals on the positive side are reflected to the negative side.
    Narrow intervals use a midpoint expansion
    ``w * phi(m) * (1 + (m^2 - 1) w^2 / 24)``, whose relative error is
    O(w^4), since the CDF difference cancels there.
    """
    lo, hi = np.broadcast_arrays(np.asarray(lo, dtype=float), np.asarray(hi, dtype=float))
    flip = lo > 0
    a = np.where(flip, -hi, lo)
    b = np.where(flip, -lo, hi)
    out = np.empty(a.shape)
    with np.errstate(invalid="ignore", divide="ignore", over="ignore"):
        w = b - a
        narrow = w < 1e-3
        mid = 0.5 * (a + b)
        out[narrow] = (np.log(w[narrow]) + log_std_normal_pdf(mid[narrow])
                       + np.log1p((mid[narrow] ** 2 - 1) * w[narrow] ** 2 / 24))
        wide = ~narrow
        la = special.log_ndtr(a[wide])
        lb = special.log_ndtr(b[wide])
        out[wide] = lb + np.log1p(-np.exp(la - lb))
    return out


def silverman_bandwidth(points) -> np.ndarray:
    """Per-feature ``1.06 * sigma * k**(-1/5)``, floored at 1e-3."""
    points = np.atleast_2d(np.asarray(points, dtype=float))
    k = points.shape[0]
    sigma = np.sqrt(np.maximum(points.var(axis=0), VARIANCE_FLOOR))
    return np.maximum(SILVERMAN_FACTOR * sigma * k ** -0.2, BANDWIDTH_FLOOR)


@dataclass(frozen=True)
class LocalModel:
    assumption: Assumption
    region: Region
    k_members: int
    class_index: int = -1
    mu: np.ndarray | None = None
    sigma2: np.ndarray | None = None
    points: np.ndarray | None = None
    h: np.ndarray | None = None


def fit(assumption: Assumption, region: Region, members, class_index: int = -1) -> LocalModel:
    members = np.atleast_2d(np.asarray(members, dtype=float))
    if members.shape[0] == 0 or members.size == 0:
        raise InvalidInputError("cannot fit a local model without members")
    if members.shape[1] != region.d:
        raise InvalidInputError("member dimension does not match region")
    k = members.shape[0]
    if assumption.kind is Kind.LUA:
        if region.is_global:
            raise InvalidInputError("LUA needs a finite region")
        return LocalModel(assumption, region, k, class_index)
    if assumption.kind is Kind.LGA:
        mu = members.mean(axis=0)
        if assumption.identity_variance:
            sigma2 = np.ones(region.d)
        else:
            sigma2 = np.maximum(((members - mu) ** 2).mean(axis=0), VARIANCE_FLOOR)
        return LocalModel(assumption, region, k, class_index, mu=mu, sigma2=sigma2)
    if assumption.bandwidth is Bandwidth.UNIT:
        h = np.ones(region.d)
    else:
        h = silverman_bandwidth(members)
    return LocalModel(assumption, region, k, class_index, points=members.copy(), h=h)


def log_lpd(model: LocalModel, x):
    """Log local density of ``model`` at ``x``; ``-inf`` outside the region.

    ``x`` may be a single point ``(d,)`` (returns a float) or a batch
    ``(m, d)`` (returns an array).
    """
    x = np.asarray(x, dtype=float)
    single = x.ndim <= 1
    x = x.reshape(1, -1) if single else x
    region = model.region
    if x.shape[1] != region.d:
        raise InvalidInputError(f"point has {x.shape[1]} features, model has {region.d}")
    a, b = region.lower, region.upper
    inside = np.all(np.abs(x - region.center) <= region.radius, axis=1)
    kind = model.assumption.kind
    if kind is Kind.LUA:
        log_f = np.full(x.shape[0], -region.log_volume)
        log_norm = 0.0
    elif kind is Kind.LGA:
        sd = np.sqrt(model.sigma2)
        log_f = (log_std_normal_pdf((x - model.mu) / sd) - np.log(sd)).sum(axis=1)
        log_norm = float(np.sum(log_box_mass((a - model.mu) / sd, (b - model.mu) / sd)))
    else:
        pts, h = model.points, model.h
        kern = log_std_normal_pdf((x[:, None, :] - pts) / h).sum(axis=2)
        log_f = special.logsumexp(kern, axis=1) - np.log(h).sum() - math.log(pts.shape[0])
        log_norm = float(special.logsumexp(log_box_mass((a - pts) / h, (b - pts) / h).sum(axis=1))
                         - math.log(pts.shape[0]))
    if model.assumption.normalized and kind is not Kind.LUA:
        log_f = log_f - log_norm if log_norm >= LOG_NORMALIZER_FLOOR else np.full(x.shape[0], -np.inf)
    out = np.where(inside, log_f, -np.inf)
    return float(out[0]) if single else out


def batch_log_lpd(assumption: Assumption, queries, radius, points, mask) -> np.ndarray:
    """Vectorized :func:`log_lpd` for many queries at once.

    ``points`` is ``(q, m, d)`` with ``mask`` ``(q, m)`` selecting each
    query's members; regions are centered at the queries with the given
    ``radius`` (``inf`` for the whole space). Queries with no members get
    ``-inf``.
    """
    x = np.asarray(queries, dtype=float)
    r = np.asarray(radius, dtype=float)
    pts = np.asarray(points, dtype=float)
    w = np.asarray(mask, dtype=bool)
    q, d = x.shape
    m = w.sum(axis=1)
    empty = m == 0
    m_safe = np.maximum(m, 1)
    if assumption.kind is Kind.LUA:
        if np.any(np.isinf(r)):
            raise InvalidInputError("LUA needs a finite region")
        out = -d * np.log(2.0 * r)
        return np.where(empty, -np.inf, out)
    lo = x - r[:, None]
    hi = x + r[:, None]
    wf = w[:, :, None].astype(float)
    if assumption.kind is Kind.LGA or assumption.bandwidth is Bandwidth.SILVERMAN:
        mu = (pts * wf).sum(axis=1) / m_safe[:, None]
        var = (((pts - mu[:, None, :]) ** 2) * wf).sum(axis=1) / m_safe[:, None]
        var = np.maximum(var, VARIANCE_FLOOR)
    if assumption.kind is Kind.LGA:
        sd = np.ones((q, d)) if assumption.identity_variance else np.sqrt(var)
        log_f = (log_std_normal_pdf((x - mu) / sd) - np.log(sd)).sum(axis=1)
        log_norm = log_box_mass((lo - mu) / sd, (hi - mu) / sd).sum(axis=1)
    else:
        if assumption.bandwidth is Bandwidth.UNIT:
            h = np.ones((q, d))
        else:
            h = np.maximum(SILVERMAN_FACTOR * np.sqrt(var) * m_safe[:, None] ** -0.2, BANDWIDTH_FLOOR)
        hq = h[:, None, :]
        kern = log_std_normal_pdf((x[:, None, :] - pts) / hq).sum(axis=2)
        kern = np.where(w, kern, -np.inf)
        with np.errstate(divide="ignore"):
            log_f = special.logsumexp(kern, axis=1) - np.log(h).sum(axis=1) - np.log(m_safe)
        if assumption.normalized:
            mass = log_box_mass((lo[:, None, :] - pts) / hq, (hi[:, None, :] - pts) / hq).sum(axis=2)
            mass = np.where(w, mass, -np.inf)
            with np.errstate(divide="ignore"):
                log_norm = special.logsumexp(mass, axis=1) - np.log(m_safe)
        else:
            log_norm = np.zeros(q)
    with np.errstate(invalid="ignore"):
        if assumption.normalized:
            out = np.where(log_norm < LOG_NORMALIZER_FLOOR, -np.inf, log_f - log_norm)
        else:
            out = log_f
    return np.where(empty, -np.inf, out)


def verify_local_independence(joint, box, tol: float = 1e-9) -> bool:
    """Check that a discrete 2-d joint factorizes after conditioning on a box.

    ``box`` is ``((row_lo, row_hi), (col_lo, col_hi))`` with inclusive
    bounds. The conditional table and its marginals are compared cell by
    cell over the whole grid.
    """
    p = np.asarray(joint, dtype=float)
    if p.ndim != 2 or np.any(p < 0):
        raise InvalidInputError("joint must be a nonnegative 2-d table")
    if abs(p.sum() - 1.0) > 1e-12:
        raise InvalidInputError(f"joint sums to {p.sum()!r}, expected 1")
    (r0, r1), (c0, c1) = box
    inside = np.zeros_like(p, dtype=bool)
    inside[r0:r1 + 1, c0:c1 + 1] = True
    mass = p[inside].sum()
    if mass <= 0:
        raise NullEventError("conditioning on null event")
    cond = np.where(inside, p, 0.0) / mass
    pa = cond.sum(axis=1)
    pb = cond.sum(axis=0)
    return bool(np.all(np.abs(cond - np.outer(pa, pb)) <= tol))
