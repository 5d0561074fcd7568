"""Exact conformal sets from affine nonconformity scores.

With a fixed linear smoother, the residual of every pair as a function
of the candidate label y is affine: alpha_i(y) = |a_i + b_i*y|. The set
of labels where pair i scores at least as high as the query pair is a
closed interval, a ray, their union, all of R or empty, so the conformal
set at level epsilon is assembled exactly from the pooled endpoints of
those comparisons: no label grid is involved.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .dataset import as_float_matrix, as_float_vector
from .errors import DimensionMismatch
from .intervals import IntervalSet

_POOL_TOL = 1e-12  # absolute dedup tolerance for pooled endpoints
_TIE_REL = 1e-9  # relative slack when probing exactly at an endpoint


@dataclass(frozen=True)
class AugmentedProblem:
    """Training rows plus the query row (always last) and known labels."""

    x_tilde: np.ndarray
    y_known: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "x_tilde", as_float_matrix(self.x_tilde, "x_tilde"))
        object.__setattr__(self, "y_known", as_float_vector(self.y_known, "y_known"))
        if self.x_tilde.shape[0] != self.y_known.shape[0] + 1:
            raise DimensionMismatch(
                "x_tilde must have exactly one more row than y_known has entries"
            )

    @property
    def n(self) -> int:
        return self.x_tilde.shape[0]

    @property
    def query_row_index(self) -> int:
        return self.n - 1


@dataclass(frozen=True)
class ScoreModel:
    """Linear smoother on the augmented sample: fitted = hat @ y + offset."""

    hat: np.ndarray
    offset: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "hat", as_float_matrix(self.hat, "hat"))
        object.__setattr__(self, "offset", as_float_vector(self.offset, "offset"))
        n = self.hat.shape[0]
        if self.hat.shape != (n, n):
            raise DimensionMismatch("hat must be square")
        if self.offset.shape != (n,):
            raise DimensionMismatch("offset length must match hat dimension")
        if n and float(np.abs(self.hat - self.hat.T).max()) > 1e-10:
            raise ValueError("hat matrix is not symmetric")


class AffineScore:
    """Harmonized coefficients of alpha_i(y) = |a_i + b_i*y|, b_i >= 0."""

    __slots__ = ("a", "b")

    def __init__(self, a, b):
        a = as_float_vector(a, "a")
        b = as_float_vector(b, "b")
        if a.shape != b.shape:
            raise DimensionMismatch("a and b must have equal length")
        if a.shape[0] < 1:
            raise DimensionMismatch("need at least one score row")
        flip = b < 0
        a = np.where(flip, -a, a)
        b = np.where(flip, -b, b)
        self.a = a
        self.b = b

    @property
    def n(self) -> int:
        return self.a.shape[0]

    def alpha(self, y: float) -> np.ndarray:
        return np.abs(self.a + self.b * y)

    def alpha_grid(self, ys: np.ndarray) -> np.ndarray:
        """Score matrix, one row per pair, one column per candidate label."""
        return np.abs(self.a[:, None] + self.b[:, None] * np.asarray(ys)[None, :])


def affine_scores(problem: AugmentedProblem, model: ScoreModel) -> AffineScore:
    """Decompose the augmented residual vector into |A + B*y|."""
    n = problem.n
    if model.hat.shape[0] != n:
        raise DimensionMismatch(
            f"model dimension {model.hat.shape[0]} does not match sample size {n}"
        )
    y_zero = np.append(problem.y_known, 0.0)
    resid = np.eye(n) - model.hat
    a = resid @ y_zero - model.offset
    b = resid[:, -1].copy()
    return AffineScore(a, b)


def _holds_at(a_i, b_i, a_n, b_n, y: float) -> bool:
    return abs(a_i + b_i * y) >= abs(a_n + b_n * y)


def score_interval(i: int, scores: AffineScore) -> IntervalSet:
    """Labels where pair ``i`` scores at least as high as the query pair.

    The comparison |a_i + b_i y| >= |a_n + b_n y| factors through the
    two crossing points of the affine score lines, so the result is one
    closed interval, a complementary pair of rays, a single ray, all of
    R, or empty. The shape is decided by checking the inequality at one
    test point.
    """
    a, b = scores.a, scores.b
    if not 0 <= i < scores.n:
        raise IndexError(f"pair index {i} out of range")
    a_i, b_i = float(a[i]), float(b[i])
    a_n, b_n = float(a[-1]), float(b[-1])

    if b_i == b_n:
        if b_n == 0.0:
            return IntervalSet.reals() if abs(a_i) >= abs(a_n) else IntervalSet.empty()
        if a_i == a_n:
            return IntervalSet.reals()
        split = -(a_i + a_n) / (2.0 * b_n)
        if _holds_at(a_i, b_i, a_n, b_n, split + 1.0):
            return IntervalSet.from_pairs([(split, math.inf)])
        return IntervalSet.from_pairs([(-math.inf, split)])

    lo = -(a_i - a_n) / (b_i - b_n)
    hi = -(a_i + a_n) / (b_i + b_n)
    lo, hi = (lo, hi) if lo <= hi else (hi, lo)
    if lo < hi:
        inside = _holds_at(a_i, b_i, a_n, b_n, lo + 0.5 * (hi - lo))
    else:
        inside = not _holds_at(a_i, b_i, a_n, b_n, hi + 1.0)
    if inside:
        return IntervalSet.from_pairs([(lo, hi)])
    return IntervalSet.from_pairs([(-math.inf, lo), (hi, math.inf)])


def _endpoint_pool(scores: AffineScore) -> np.ndarray:
    """Finite crossing points of every pairwise score comparison."""
    a, b = scores.a, scores.b
    a_n, b_n = a[-1], b[-1]
    vals = []
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        diff = b != b_n
        if np.any(diff):
            vals.append(-(a[diff] - a_n) / (b[diff] - b_n))
            vals.append(-(a[diff] + a_n) / (b[diff] + b_n))
        same = (~diff) & (b != 0.0) & (a != a_n)
        if np.any(same):
            vals.append(-(a[same] + a_n) / (2.0 * b_n))
    if not vals:
        return np.empty(0)
    pool = np.concatenate(vals)
    pool = pool[np.isfinite(pool)]
    if pool.size == 0:
        return pool
    pool = np.sort(pool)
    keep = np.ones(pool.size, dtype=bool)
    keep[1:] = np.diff(pool) > _POOL_TOL
    return pool[keep]


def _coverage_counts(scores: AffineScore, ys: np.ndarray, tie_slack: bool) -> np.ndarray:
    """Number of pairs scoring at least the query at each candidate label."""
    grid = scores.alpha_grid(ys)
    query = grid[-1]
    if tie_slack:
        tol = _TIE_REL * np.maximum(1.0, query)
        return (grid >= query - tol).sum(axis=0)
    return (grid >= query).sum(axis=0)


def conformal_set(scores: AffineScore, epsilon: float) -> IntervalSet:
    """Labels whose coverage count reaches n*epsilon, as an interval union.

    Every elementary interval between consecutive pooled endpoints has a
    constant count, read off at its midpoint. An endpoint flanked by two
    failing intervals can still qualify on its own (the comparisons tie
    there), so those points are probed separately with a small slack and
    kept as degenerate intervals.
    """
    if not 0.0 < epsilon < 1.0:
        raise ValueError(f"epsilon must be in (0, 1), got {epsilon}")
    n = scores.n
    need = n * epsilon
    pool = _endpoint_pool(scores)

    if pool.size == 0:
        count = _coverage_counts(scores, np.array([0.0]), tie_slack=False)[0]
        return IntervalSet.reals() if count >= need else IntervalSet.empty()

    mids = np.concatenate(
        [[pool[0] - 1.0], 0.5 * (pool[:-1] + pool[1:]), [pool[-1] + 1.0]]
    )
    ok = _coverage_counts(scores, mids, tie_slack=False) >= need
    bounds = np.concatenate([[-math.inf], pool, [math.inf]])

    pieces = []
    hit = np.flatnonzero(ok)
    if hit.size:
        run_start = hit[np.r_[True, np.diff(hit) > 1]]
        run_end = hit[np.r_[np.diff(hit) > 1, True]]
        pieces.extend(zip(bounds[run_start], bounds[run_end + 1]))

    lonely = np.flatnonzero(~ok[:-1] & ~ok[1:])
    if lonely.size:
        counts = _coverage_counts(scores, pool[lonely], tie_slack=True)
        pieces.extend((pool[j], pool[j]) for j in lonely[counts >= need])
    return IntervalSet.from_pairs(pieces)


def p_value(y: float, scores: AffineScore) -> float:
    """Fraction of pairs scoring at least as high as the query at ``y``."""
    alpha = scores.alpha(float(y))
    return float((alpha >= alpha[-1]).sum()) / scores.n
