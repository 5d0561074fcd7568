"""Piecewise-linear regularization paths for l1-penalized least squares.

The objective throughout is the unnormalized form

    sum_i (y_i - x_i'beta)^2 + lam * sum_j |beta_j|,

whose stationarity conditions read |X_j' r| <= lam/2 for every column,
with equality and sign agreement on the active set. On a segment where
the active set A and sign vector s are fixed, the minimizer is affine
in lam:

    beta(lam) = (X_A' X_A)^{-1} (X_A' y - lam/2 * s).

The path solver walks these segments from lam_max = 2*max|X'y| downward,
emitting a step at every lambda where a variable enters or leaves.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dataset import Dataset, as_float_matrix, as_float_vector
from .errors import DegenerateDesign, DimensionMismatch, InvalidPenalty, SingularGram

DEFAULT_COND_THRESHOLD = 1e10

# Relative tolerance below which two transition points are considered the
# same event and merged into one step.
_MERGE_RTOL = 1e-10
_EVENT_RTOL = 1e-12


@dataclass(frozen=True)
class PathStep:
    """State of the path at one transition point.

    ``active_set`` is ordered by entry; ``signs`` and ``beta`` align with
    it. ``beta`` is the coefficient vector at ``lam`` itself, so a
    freshly entered variable carries an exact zero here.
    """

    lam: float
    active_set: tuple[int, ...]
    signs: np.ndarray
    beta: np.ndarray

    def beta_dense(self, n_features: int) -> np.ndarray:
        out = np.zeros(n_features)
        out[list(self.active_set)] = self.beta
        return out


@dataclass(frozen=True)
class SolutionPath:
    """All transition points, ordered by strictly decreasing lambda.

    ``terminal_lambda`` is 0 once no further transition events exist:
    the final segment then extends down to the least-squares end of its
    active set. A nonzero value marks a path cut short by the event
    budget.
    """

    steps: tuple[PathStep, ...]
    terminal_lambda: float

    def __len__(self) -> int:
        return len(self.steps)

    @property
    def lambdas(self) -> np.ndarray:
        return np.array([s.lam for s in self.steps])

    def step_at(self, lam: float) -> PathStep | None:
        """The step governing the segment that contains ``lam``.

        Returns None when ``lam`` exceeds the first transition point
        (empty model). Below the last computed step the last step is
        returned; if the path stopped early at the sample-size bound
        this is an extrapolation of the final segment.
        """
        if lam < 0:
            raise ValueError("lambda must be nonnegative")
        governing = None
        for step in self.steps:
            if step.lam >= lam:
                governing = step
            else:
                break
        return governing


def _check_gram(gram: np.ndarray, cond_threshold: float, context: str) -> None:
    cond = np.linalg.cond(gram)
    if not np.isfinite(cond) or cond > cond_threshold:
        raise SingularGram(
            f"{context}: Gram matrix condition number {cond:.3e} exceeds "
            f"{cond_threshold:.1e}"
        )


def lasso_closed_form(
    x_active,
    y,
    lam: float,
    signs,
    cond_threshold: float = DEFAULT_COND_THRESHOLD,
) -> np.ndarray:
    """Minimizer of the l1 objective restricted to a fixed sign pattern.

    Evaluates (X'X)^{-1} (X'y - lam/2 * s) for the given active columns.
    """
    x_active = as_float_matrix(x_active, "x_active")
    y = as_float_vector(y)
    signs = as_float_vector(signs, "signs")
    if lam < 0:
        raise ValueError("lambda must be nonnegative")
    if x_active.shape[0] != y.shape[0]:
        raise DimensionMismatch("x_active rows must match y length")
    if x_active.shape[1] != signs.shape[0]:
        raise DimensionMismatch("signs length must match active column count")
    gram = x_active.T @ x_active
    _check_gram(gram, cond_threshold, "lasso_closed_form")
    return np.linalg.solve(gram, x_active.T @ y - 0.5 * lam * signs)


def kkt_residual(data: Dataset, lam: float, beta, active_set=None) -> float:
    """Largest violation of the stationarity conditions at ``beta``.

    ``beta`` is either a dense length-p vector (``active_set`` None) or a
    vector over ``active_set``. Zero coefficients are held to the
    inequality |X_j'r| <= lam/2; nonzero ones to the equality with sign
    agreement.
    """
    beta = as_float_vector(beta, "beta")
    if active_set is None:
        if beta.shape[0] != data.n_features:
            raise DimensionMismatch("dense beta must have one entry per column")
        dense = beta
    else:
        active_set = list(active_set)
        if beta.shape[0] != len(active_set):
            raise DimensionMismatch("beta length must match active_set length")
        dense = np.zeros(data.n_features)
        dense[active_set] = beta
    corr = data.x.T @ (data.y - data.x @ dense)
    violation = np.where(
        dense != 0.0,
        np.abs(corr - 0.5 * lam * np.sign(dense)),
        np.maximum(np.abs(corr) - 0.5 * lam, 0.0),
    )
    return float(violation.max())


def lars_lasso_path(
    data: Dataset,
    cond_threshold: float = DEFAULT_COND_THRESHOLD,
) -> SolutionPath:
    """All transition points of the l1 path by segment-wise homotopy.

    Candidate columns whose entry would push the active Gram matrix past
    ``cond_threshold`` are skipped, which keeps the path well defined on
    designs with duplicated columns. Entry ties break to the lowest
    column index. The active set never exceeds min(n_rows, n_cols); when
    it reaches that bound the walk continues through deletion and
    re-entry events, which is where the degenerate near-interpolation
    steps of the p >= n regime come from.
    """
    x, y = data.x, data.y
    n_rows, n_cols = x.shape
    sample_bound = min(n_rows, n_cols)

    corr = x.T @ y
    first = int(np.argmax(np.abs(corr)))
    lam_max = 2.0 * abs(corr[first])
    scale = max(1.0, float(np.linalg.norm(y)) * float(np.linalg.norm(x, axis=0).max()))
    if lam_max <= 1e-12 * scale:
        if float(np.linalg.norm(y)) <= 1e-12:
            return SolutionPath((), 0.0)
        raise DegenerateDesign("response is orthogonal to every column")
    tiny = 1e-12 * max(1.0, lam_max)

    active: list[int] = [first]
    signs: list[float] = [float(np.sign(corr[first]))]
    steps: list[PathStep] = []
    lam = lam_max
    just_entered: int | None = first
    just_dropped: int | None = None
    max_events = 50 * (n_cols + 1)

    for _ in range(max_events):
        xa = x[:, active]
        gram = xa.T @ xa
        _check_gram(gram, cond_threshold, "lars_lasso_path")
        sign_vec = np.array(signs)
        beta_ls = np.linalg.solve(gram, xa.T @ y)
        drift = np.linalg.solve(gram, sign_vec)  # beta(lam) = beta_ls - lam/2 * drift

        beta_here = beta_ls - 0.5 * lam * drift
        beta_here[np.abs(beta_here) < 1e-11 * max(1.0, float(np.abs(beta_here).max()))] = 0.0
        step = PathStep(lam, tuple(active), sign_vec, beta_here)
        if steps and steps[-1].lam - lam <= _MERGE_RTOL * max(1.0, lam):
            steps[-1] = step  # coincident transition points collapse into one
        else:
            steps.append(step)

        resid0 = y - xa @ beta_ls
        corr0 = x.T @ resid0  # correlation intercepts at lam = 0
        slope = x.T @ (xa @ drift)  # c_j(lam) = corr0_j + lam/2 * slope_j

        candidates: list[tuple[float, int, int, float]] = []
        merge_floor = lam * (1.0 - _MERGE_RTOL)
        upper = lam * (1.0 + _EVENT_RTOL)
        active_mask = np.zeros(n_cols, dtype=bool)
        active_mask[active] = True

        if len(active) < sample_bound:
            for j in np.flatnonzero(~active_mask):
                cap = merge_floor if j == just_dropped else upper
                for target in (1.0, -1.0):
                    den = target - slope[j]
                    if den == 0.0:
                        continue
                    lam_c = 2.0 * corr0[j] / den
                    if tiny < lam_c <= cap:
                        candidates.append((lam_c, 0, int(j), target))
        for idx, j in enumerate(active):
            if drift[idx] == 0.0:
                continue
            lam_c = 2.0 * beta_ls[idx] / drift[idx]
            cap = merge_floor if j == just_entered else upper
            if tiny < lam_c <= cap:
                candidates.append((lam_c, 1, j, 0.0))

        # Largest lambda wins; drops precede entries on exact ties, then
        # lowest column index.
        candidates.sort(key=lambda c: (-c[0], -c[1], c[2]))
        chosen = None
        for lam_c, kind, j, target in candidates:
            if kind == 0:
                trial = x[:, active + [j]]
                trial_cond = np.linalg.cond(trial.T @ trial)
                if not np.isfinite(trial_cond) or trial_cond > cond_threshold:
                    continue  # collinear candidate: never admitted
            chosen = (lam_c, kind, j, target)
            break

        if chosen is None:
            return SolutionPath(tuple(steps), 0.0)

        lam_c, kind, j, target = chosen
        just_entered = just_dropped = None
        if kind == 0:
            active.append(j)
            signs.append(target)
            just_entered = j
        else:
            idx = active.index(j)
            del active[idx]
            del signs[idx]
            just_dropped = j
        lam = min(lam_c, lam)

    # Event budget exhausted (possible only on adversarially tied data):
    # every emitted step is still a valid transition point, so the prefix
    # is returned rather than discarded.
    return SolutionPath(tuple(steps), lam)


@dataclass(frozen=True)
class PenaltyMatrixSpec:
    """Quadratic penalty added to the l1 objective: weight * beta'P beta.

    ``identity`` gives the ridge-style penalty; ``fused-difference``
    gives the tridiagonal second-difference form penalizing gaps between
    successive coefficients.
    """

    kind: str = "identity"
    weight: float = 0.0

    _KINDS = ("identity", "fused-difference")

    def __post_init__(self):
        if self.kind not in self._KINDS:
            raise InvalidPenalty(f"unknown penalty kind {self.kind!r}")
        if self.weight < 0:
            raise InvalidPenalty(f"penalty weight must be nonnegative, got {self.weight}")

    def matrix(self, dim: int) -> np.ndarray:
        if dim < 1:
            raise InvalidPenalty("penalty dimension must be positive")
        if self.kind == "identity":
            return np.eye(dim)
        if dim == 1:
            return np.array([[1.0]])
        mat = 2.0 * np.eye(dim)
        mat[0, 0] = mat[-1, -1] = 1.0
        idx = np.arange(dim - 1)
        mat[idx, idx + 1] = -1.0
        mat[idx + 1, idx] = -1.0
        return mat

    def root(self, dim: int) -> np.ndarray:
        """A matrix R with R'R equal to ``matrix(dim)``."""
        if dim < 1:
            raise InvalidPenalty("penalty dimension must be positive")
        if self.kind == "identity":
            return np.eye(dim)
        if dim == 1:
            return np.array([[1.0]])
        root = np.zeros((dim - 1, dim))
        idx = np.arange(dim - 1)
        root[idx, idx] = -1.0
        root[idx, idx + 1] = 1.0
        return root


def penalized_path(
    data: Dataset,
    penalty: PenaltyMatrixSpec,
    cond_threshold: float = DEFAULT_COND_THRESHOLD,
) -> SolutionPath:
    """l1 path of the quadratically penalized objective.

    RSS(beta) + weight * beta'P beta + lam * |beta|_1 is reduced to a
    plain l1 problem on the augmented design [X; sqrt(weight) * R] with
    zeros appended to the response, R being a root of P. The reduction
    is exact, so the transition points are those of the penalized path.
    """
    if penalty.weight == 0.0:
        return lars_lasso_path(data, cond_threshold)
    root = penalty.root(data.n_features)
    x_aug = np.vstack([data.x, np.sqrt(penalty.weight) * root])
    y_aug = np.concatenate([data.y, np.zeros(root.shape[0])])
    return lars_lasso_path(Dataset(x_aug, y_aug), cond_threshold)
