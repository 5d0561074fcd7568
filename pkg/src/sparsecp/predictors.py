"""Per-step conformal predictors for sparse linear estimators.

A run of the path solver on the training rows fixes the transition
points, active sets and sign vectors. For each transition point, the
selected variant defines a linear smoother on the augmented sample
(training rows plus query row); the conformal engine then turns the
smoother into an exact prediction set. A selection rule finally picks
one set out of the family.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .conformal import AffineScore, AugmentedProblem, ScoreModel, affine_scores, conformal_set, p_value
from .dataset import Dataset, as_float_vector
from .errors import AllUnbounded, DimensionMismatch, EmptyPath, SingularGram
from .intervals import IntervalSet
from .path import (
    DEFAULT_COND_THRESHOLD,
    PenaltyMatrixSpec,
    SolutionPath,
    lars_lasso_path,
    penalized_path,
)

VARIANT_KINDS = ("colp", "corp", "corlap", "cenep", "cosmolap")
RULES = ("smallest", "early-stop", "npn")
DEFAULT_EARLY_STOP_FACTOR = 10.0

_RULE_ALIASES = {
    "smallest": "smallest",
    "early-stop": "early-stop",
    "stopped": "early-stop",
    "npn": "npn",
    "n-previous-neighbors": "npn",
}


def canonical_rule(name: str) -> str:
    try:
        return _RULE_ALIASES[name.lower()]
    except KeyError:
        raise ValueError(f"unknown selection rule {name!r}; use one of {RULES}") from None


@dataclass(frozen=True)
class VariantSpec:
    """Which smoother family to conformalize.

    kind:
      colp     -- l1-path projection smoother with sign-vector offset
      corp     -- ridge smoother on all columns
      corlap   -- ridge smoother restricted to the l1-selected columns
      cenep    -- elastic-net smoother on the selected columns
      cosmolap -- like cenep with the fused-difference penalty matrix

    ``penalty_weight`` is the quadratic weight used by cenep/cosmolap.
    ``ridge_weight`` pins the ridge parameter of corp/corlap; left None
    it follows the transition point of each step. ``half_offset``
    switches the cenep/cosmolap offset from lam to lam/2.
    """

    kind: str = "colp"
    penalty_weight: float = 1.0
    ridge_weight: float | None = None
    half_offset: bool = False

    def __post_init__(self):
        object.__setattr__(self, "kind", self.kind.lower())
        if self.kind not in VARIANT_KINDS:
            raise ValueError(f"unknown variant {self.kind!r}; use one of {VARIANT_KINDS}")
        if self.penalty_weight < 0:
            raise ValueError("penalty_weight must be nonnegative")
        if self.ridge_weight is not None and self.ridge_weight < 0:
            raise ValueError("ridge_weight must be nonnegative")

    @property
    def uses_quadratic_penalty(self) -> bool:
        return self.kind in ("cenep", "cosmolap")


@dataclass(frozen=True)
class FamilyEntry:
    lam: float
    active_set: tuple[int, ...]
    conformal: IntervalSet
    scores: AffineScore

    @property
    def length(self) -> float:
        return self.conformal.lebesgue_length


@dataclass(frozen=True)
class PredictorFamily:
    """All per-step conformal sets, plus the outcome of a selection rule."""

    entries: tuple[FamilyEntry, ...]
    epsilon: float
    variant: VariantSpec
    rule: str | None = None
    selected: int | None = None
    stopped_at: int | None = None
    final_set: IntervalSet | None = None

    def lengths(self) -> np.ndarray:
        return np.array([e.length for e in self.entries])

    def __len__(self) -> int:
        return len(self.entries)


def _solve_spd(mat: np.ndarray, rhs: np.ndarray, cond_threshold: float, context: str):
    cond = np.linalg.cond(mat)
    if not np.isfinite(cond) or cond > cond_threshold:
        raise SingularGram(f"{context}: condition number {cond:.3e} too large")
    return np.linalg.solve(mat, rhs)


def _sign_offset(x_active: np.ndarray, signs: np.ndarray, cond_threshold: float) -> np.ndarray:
    """x_a (x_a'x_a)^{-1} s, falling back to the least-norm solution."""
    gram = x_active.T @ x_active
    cond = np.linalg.cond(gram)
    if np.isfinite(cond) and cond <= cond_threshold:
        z = np.linalg.solve(gram, signs)
    else:
        z = np.linalg.lstsq(gram, signs, rcond=None)[0]
    return x_active @ z


def _factored_model(
    variant: VariantSpec,
    lam: float,
    active_set,
    signs,
    x_tilde: np.ndarray,
    cond_threshold: float,
):
    """Smoother of a variant at one transition point, as hat = left @ right.

    The factored form keeps every downstream product at O(n * |active|)
    instead of materializing the n x n smoother.
    """
    n = x_tilde.shape[0]
    active = list(active_set)
    signs = as_float_vector(signs, "signs")
    if len(active) != signs.shape[0]:
        raise DimensionMismatch("active_set and signs must have equal length")

    if variant.kind == "cosmolap":
        # The fused-difference penalty couples successive original
        # variables, so the active columns are laid out in index order.
        order = np.argsort(active)
        active = [active[i] for i in order]
        signs = signs[order]

    x_act = x_tilde[:, active]

    if variant.kind == "colp":
        q = np.linalg.qr(x_act, mode="reduced")[0]
        offset = -0.5 * lam * _sign_offset(x_act, signs, cond_threshold)
        return q, q.T, offset

    if variant.kind in ("corp", "corlap"):
        base = x_tilde if variant.kind == "corp" else x_act
        rho = lam if variant.ridge_weight is None else variant.ridge_weight
        if rho > 0:
            middle = _solve_spd(
                base.T @ base + rho * np.eye(base.shape[1]), base.T, cond_threshold, variant.kind
            )
            return base, middle, np.zeros(n)
        q = np.linalg.qr(base, mode="reduced")[0]
        return q, q.T, np.zeros(n)

    # cenep / cosmolap
    pen_kind = "identity" if variant.kind == "cenep" else "fused-difference"
    pen = PenaltyMatrixSpec(pen_kind, max(variant.penalty_weight, 0.0)).matrix(len(active))
    middle = _solve_spd(
        x_act.T @ x_act + variant.penalty_weight * pen, x_act.T, cond_threshold, variant.kind
    )
    factor = 0.5 if variant.half_offset else 1.0
    offset = -factor * lam * _sign_offset(x_act, signs, cond_threshold)
    return x_act, middle, offset


def _factored_scores(y_known: np.ndarray, left, right, offset) -> AffineScore:
    """AffineScore of the factored smoother without building the hat matrix."""
    y_zero = np.append(y_known, 0.0)
    a = y_zero - left @ (right @ y_zero) - offset
    b = -(left @ right[:, -1])
    b[-1] += 1.0
    return AffineScore(a, b)


def score_model_for(
    variant: VariantSpec,
    lam: float,
    active_set,
    signs,
    x_tilde: np.ndarray,
    cond_threshold: float = DEFAULT_COND_THRESHOLD,
) -> ScoreModel:
    """The (smoother, offset) pair of a variant at one transition point."""
    left, right, offset = _factored_model(
        variant, lam, active_set, signs, x_tilde, cond_threshold
    )
    hat = left @ right
    hat = 0.5 * (hat + hat.T)
    return ScoreModel(hat, offset)


def path_for_variant(
    data: Dataset, variant: VariantSpec, cond_threshold: float = DEFAULT_COND_THRESHOLD
) -> SolutionPath:
    if variant.kind == "cenep":
        return penalized_path(data, PenaltyMatrixSpec("identity", variant.penalty_weight), cond_threshold)
    if variant.kind == "cosmolap":
        return penalized_path(
            data, PenaltyMatrixSpec("fused-difference", variant.penalty_weight), cond_threshold
        )
    return lars_lasso_path(data, cond_threshold)


def build_family(
    data: Dataset,
    x_new,
    epsilon: float,
    variant: VariantSpec,
    cond_threshold: float = DEFAULT_COND_THRESHOLD,
    path: SolutionPath | None = None,
) -> PredictorFamily:
    """One conformal set per transition point, none selected yet.

    The path is run on the training rows only; each step's active set
    and sign vector are then held fixed while the query row is adjoined.
    """
    if not 0.0 < epsilon < 1.0:
        raise ValueError(f"epsilon must be in (0, 1), got {epsilon}")
    x_new = as_float_vector(x_new, "x_new")
    if x_new.shape[0] != data.n_features:
        raise DimensionMismatch("x_new length must match the number of columns")
    if path is None:
        path = path_for_variant(data, variant, cond_threshold)
    if not path.steps:
        raise EmptyPath("no transition points: nothing to conformalize")

    x_tilde = np.vstack([data.x, x_new])
    entries = []
    for step in path.steps:
        left, right, offset = _factored_model(
            variant, step.lam, step.active_set, step.signs, x_tilde, cond_threshold
        )
        scores = _factored_scores(data.y, left, right, offset)
        cset = conformal_set(scores, epsilon)
        entries.append(FamilyEntry(step.lam, step.active_set, cset, scores))
    return PredictorFamily(tuple(entries), epsilon, variant)


def _argmin_length(entries) -> int:
    lengths = [e.length for e in entries]
    best = min(lengths)
    if math.isinf(best):
        raise AllUnbounded(
            "every candidate set has infinite measure; epsilon may be below 1/n"
        )
    return lengths.index(best)


def select_smallest(family: PredictorFamily) -> PredictorFamily:
    """Pick the set of least Lebesgue measure; ties go to the sparser step."""
    if not family.entries:
        raise EmptyPath("empty predictor family")
    idx = _argmin_length(family.entries)
    return replace(
        family, rule="smallest", selected=idx, stopped_at=None,
        final_set=family.entries[idx].conformal,
    )


def truncation_index(lengths, factor: float) -> int | None:
    """First index whose length blows up past factor * previous length."""
    for k in range(1, len(lengths)):
        if lengths[k] > factor * lengths[k - 1]:
            return k
    return None


def select_early_stopped(
    family: PredictorFamily, factor: float = DEFAULT_EARLY_STOP_FACTOR
) -> PredictorFamily:
    """Drop every step from the first length blow-up on, then pick smallest."""
    if factor <= 1:
        raise ValueError("early-stopping factor must exceed 1")
    if not family.entries:
        raise EmptyPath("empty predictor family")
    cut = truncation_index([e.length for e in family.entries], factor)
    retained = family.entries if cut is None else family.entries[:cut]
    idx = _argmin_length(retained)
    return replace(
        family, rule="early-stop", selected=idx, stopped_at=cut,
        final_set=family.entries[idx].conformal,
    )


def select_n_previous_neighbors(
    family: PredictorFamily,
    n_neighbors: int,
    factor: float = DEFAULT_EARLY_STOP_FACTOR,
) -> PredictorFamily:
    """Union of the early-stopped choice with its trailing neighbors."""
    if n_neighbors < 1:
        raise ValueError("n_neighbors must be at least 1")
    if family.rule != "early-stop":
        family = select_early_stopped(family, factor)
    k = family.selected
    window = family.entries[max(0, k - n_neighbors + 1): k + 1]
    final = IntervalSet.union_of(e.conformal for e in window)
    return replace(family, rule="npn", final_set=final)


@dataclass(frozen=True)
class StepDiagnostic:
    lam: float
    length: float
    stopped: bool
    p_value_true: float | None = None


@dataclass(frozen=True)
class PredictionReport:
    """Everything a caller needs to audit one prediction."""

    epsilon: float
    variant: VariantSpec
    rule: str
    final_set: IntervalSet
    selected_index: int
    selected_lambda: float
    active_variables: tuple[int, ...]
    per_step: tuple[StepDiagnostic, ...]
    stopped_at: int | None
    selected_past_early_stop: bool
    warnings: tuple[str, ...] = ()
    metadata: dict = field(default_factory=dict)

    @property
    def lebesgue_length(self) -> float:
        return self.final_set.lebesgue_length


def _apply_rule(family, rule, n_neighbors, factor):
    if rule == "smallest":
        return select_smallest(family)
    if rule == "early-stop":
        return select_early_stopped(family, factor)
    return select_n_previous_neighbors(family, n_neighbors, factor)


def predict(
    data: Dataset,
    x_new,
    epsilon: float,
    variant: VariantSpec = VariantSpec(),
    rule: str = "smallest",
    n_neighbors: int = 2,
    early_stop_factor: float = DEFAULT_EARLY_STOP_FACTOR,
    y_true: float | None = None,
    standardize: bool = False,
    cond_threshold: float = DEFAULT_COND_THRESHOLD,
    path: SolutionPath | None = None,
) -> PredictionReport:
    """Full pipeline: path, per-step conformal sets, selection, report.

    When every candidate set is unbounded the earliest step is reported
    with a warning instead of an error (the sets are all ties at
    infinite measure, which happens e.g. whenever epsilon < 1/n).
    """
    rule = canonical_rule(rule)
    x_new = as_float_vector(x_new, "x_new")
    if standardize:
        data, scales = data.standardized()
        x_new = x_new / scales
        path = None  # a path computed on the raw columns no longer applies

    family = build_family(data, x_new, epsilon, variant, cond_threshold, path)
    warnings: list[str] = []
    try:
        family = _apply_rule(family, rule, n_neighbors, early_stop_factor)
    except AllUnbounded:
        warnings.append("all candidate sets are unbounded; reporting the sparsest step")
        final = family.entries[0].conformal
        cut = truncation_index([e.length for e in family.entries], early_stop_factor)
        family = replace(family, rule=rule, selected=0, stopped_at=cut, final_set=final)

    cut_default = truncation_index([e.length for e in family.entries], early_stop_factor)
    past = cut_default is not None and family.selected >= cut_default

    per_step = tuple(
        StepDiagnostic(
            lam=e.lam,
            length=e.length,
            stopped=family.stopped_at is not None and k >= family.stopped_at,
            p_value_true=None if y_true is None else p_value(y_true, e.scores),
        )
        for k, e in enumerate(family.entries)
    )
    chosen = family.entries[family.selected]
    return PredictionReport(
        epsilon=epsilon,
        variant=variant,
        rule=rule,
        final_set=family.final_set,
        selected_index=family.selected,
        selected_lambda=chosen.lam,
        active_variables=chosen.active_set,
        per_step=per_step,
        stopped_at=family.stopped_at,
        selected_past_early_stop=past,
        warnings=tuple(warnings),
        metadata={
            "ridge_weight_policy": (
                "per-step lambda" if variant.ridge_weight is None else variant.ridge_weight
            ),
            "n_candidates": len(family.entries),
        },
    )


def fixed_lambda_set(
    data: Dataset,
    x_new,
    lam: float,
    epsilon: float,
    variant: VariantSpec = VariantSpec(),
    cond_threshold: float = DEFAULT_COND_THRESHOLD,
    path: SolutionPath | None = None,
) -> IntervalSet:
    """Conformal set at a pre-fixed penalty value (no data-driven choice).

    The active set and signs are read off the path segment containing
    ``lam``; above the first transition point the model is empty and the
    raw responses are compared directly.
    """
    if lam < 0:
        raise ValueError("lambda must be nonnegative")
    x_new = as_float_vector(x_new, "x_new")
    if path is None:
        path = path_for_variant(data, variant, cond_threshold)
    step = path.step_at(lam)
    x_tilde = np.vstack([data.x, x_new])
    if step is None:
        # Above the first transition point the model is empty: raw labels
        # are compared directly.
        scores = AffineScore(np.append(data.y, 0.0), np.append(np.zeros(data.y.shape), 1.0))
    else:
        left, right, offset = _factored_model(
            variant, lam, step.active_set, step.signs, x_tilde, cond_threshold
        )
        scores = _factored_scores(data.y, left, right, offset)
    return conformal_set(scores, epsilon)
