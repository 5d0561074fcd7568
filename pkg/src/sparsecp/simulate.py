"""Synthetic designs and replicated validity/accuracy/selection studies.

Four benchmark regression designs over p = 50 variables, each drawn as
y = x'beta + sigma*xi with standard normal noise and row covariances
chosen to stress different sparsity/correlation regimes:

  a  very sparse, one relevant variable, local correlation band
  b  sparse, two relevant groups, local correlation band
  c  sparse with three blocks of perfectly duplicated columns
  d  dense, every variable relevant, global correlation decay

Replications are seeded independently from (seed, replication index),
so results do not depend on evaluation order.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .dataset import Dataset
from .errors import NumericalError
from .predictors import (
    DEFAULT_EARLY_STOP_FACTOR,
    VariantSpec,
    canonical_rule,
    fixed_lambda_set,
    path_for_variant,
    predict,
)

EXAMPLE_IDS = ("a", "b", "c", "d")
DEFAULT_P = 50


@dataclass(frozen=True)
class ExampleSpec:
    """One synthetic design: coefficients, row covariance, sizes."""

    id: str
    n: int
    sigma: float
    beta_star: np.ndarray
    covariance: np.ndarray
    factor: np.ndarray  # F with F F' = covariance, used for sampling

    @property
    def p(self) -> int:
        return self.beta_star.shape[0]

    @property
    def true_support(self) -> tuple[int, ...]:
        return tuple(int(j) for j in np.flatnonzero(self.beta_star))


def _band_covariance(p: int, lo: int, hi: int) -> np.ndarray:
    """Identity with exp(-|j-k|) decay on the index window [lo, hi]."""
    cov = np.eye(p)
    idx = np.arange(lo, hi + 1)
    cov[np.ix_(idx, idx)] = np.exp(-np.abs(idx[:, None] - idx[None, :]))
    return cov


def example_spec(example_id: str, n: int, sigma: float, p: int = DEFAULT_P) -> ExampleSpec:
    """Construct one of the four benchmark designs (1-based coefficients)."""
    example_id = example_id.lower()
    if example_id not in EXAMPLE_IDS:
        raise ValueError(f"unknown example {example_id!r}; use one of {EXAMPLE_IDS}")
    if n < 3:
        raise ValueError("need n >= 3")
    if sigma < 0:
        raise ValueError("sigma must be nonnegative")
    j = np.arange(1, p + 1, dtype=float)
    beta = np.zeros(p)

    if example_id == "a":
        beta[0] = 5.0
        cov = _band_covariance(p, 14, 34)
        fac = np.linalg.cholesky(cov)
    elif example_id == "b":
        beta[0:5] = -5.0 + 0.2 * j[0:5]
        beta[9:25] = 4.0 + 0.2 * j[9:25]
        cov = _band_covariance(p, 14, 34)
        fac = np.linalg.cholesky(cov)
    elif example_id == "c":
        beta[0:15] = 5.0
        cov = np.eye(p)
        for lo in (0, 5, 10):
            cov[lo:lo + 5, lo:lo + 5] = 1.0
        # Rank-deficient blocks: one shared standard normal per block.
        fac = np.zeros((p, 3 + (p - 15)))
        for g, lo in enumerate((0, 5, 10)):
            fac[lo:lo + 5, g] = 1.0
        fac[15:, 3:] = np.eye(p - 15)
    else:
        beta = 3.0 + 0.2 * j
        idx = np.arange(p)
        cov = np.exp(-np.abs(idx[:, None] - idx[None, :]))
        fac = np.linalg.cholesky(cov)

    return ExampleSpec(example_id, n, float(sigma), beta, cov, fac)


def generate_example(spec: ExampleSpec, seed) -> tuple[Dataset, np.ndarray, float]:
    """Draw n rows; the last one becomes the query with its label held out."""
    rng = np.random.default_rng(seed)
    z = rng.standard_normal((spec.n, spec.factor.shape[1]))
    x = z @ spec.factor.T
    noise = rng.standard_normal(spec.n)
    y = x @ spec.beta_star + spec.sigma * noise
    return Dataset(x[:-1], y[:-1]), x[-1], float(y[-1])


def selection_metrics(selected_sets, true_support, p: int) -> dict:
    """Per-variable inclusion frequencies plus mean precision/recall."""
    true = set(int(j) for j in true_support)
    counts = np.zeros(p)
    precisions, recalls = [], []
    for sel in selected_sets:
        sel = set(int(j) for j in sel)
        for j in sel:
            counts[j] += 1
        hit = len(sel & true)
        precisions.append(hit / len(sel) if sel else 0.0)
        recalls.append(hit / len(true) if true else 1.0)
    reps = max(len(selected_sets), 1)
    return {
        "frequency": counts / reps,
        "precision": float(np.mean(precisions)) if precisions else 0.0,
        "recall": float(np.mean(recalls)) if recalls else 0.0,
    }


@dataclass(frozen=True)
class ExperimentResult:
    """Aggregated outcome of a replicated experiment.

    ``reps`` counts the replications that completed; failures are kept
    apart in ``error_count`` rather than silently dropped.
    """

    validity_freq: float
    ci_half_width: float
    median_length: float
    mean_length_finite: float
    selection_frequency: np.ndarray
    precision: float
    recall: float
    reps: int
    seed: int
    error_count: int = 0
    unbounded_count: int = 0
    lengths: np.ndarray = field(default_factory=lambda: np.empty(0), repr=False)
    lambdas: np.ndarray = field(default_factory=lambda: np.empty(0), repr=False)


def _binomial_half_width(freq: float, reps: int) -> float:
    if reps <= 0:
        return math.nan
    return 1.96 * math.sqrt(freq * (1.0 - freq) / reps)


def _one_replication(spec, epsilon, variant, rule, seed, rep,
                     n_neighbors, early_stop_factor, standardize):
    data, x_new, y_true = generate_example(spec, (seed, rep))
    report = predict(
        data, x_new, epsilon, variant, rule,
        n_neighbors=n_neighbors, early_stop_factor=early_stop_factor,
        standardize=standardize,
    )
    covered = report.final_set.contains(y_true)
    return (
        covered,
        report.lebesgue_length,
        report.active_variables,
        report.selected_lambda,
        [(s.lam, s.length) for s in report.per_step],
    )


def validity_experiment(
    spec: ExampleSpec,
    epsilon: float,
    variant: VariantSpec,
    rule: str,
    reps: int,
    seed: int,
    n_neighbors: int = 2,
    early_stop_factor: float = DEFAULT_EARLY_STOP_FACTOR,
    standardize: bool = False,
    n_jobs: int = 1,
    trace: list | None = None,
) -> ExperimentResult:
    """Replicated coverage study; deterministic given (spec, seed, reps).

    ``trace``, if a list, receives per-replication (rep, step, lambda,
    length) rows for external plotting.
    """
    if reps < 1:
        raise ValueError("need at least one replication")
    rule = canonical_rule(rule)

    def job(rep):
        try:
            return _one_replication(
                spec, epsilon, variant, rule, seed, rep,
                n_neighbors, early_stop_factor, standardize,
            )
        except NumericalError as exc:
            return exc

    if n_jobs != 1:
        from joblib import Parallel, delayed

        outcomes = Parallel(n_jobs=n_jobs)(delayed(job)(rep) for rep in range(reps))
    else:
        outcomes = [job(rep) for rep in range(reps)]

    covered_flags, lengths, selections, lambdas = [], [], [], []
    errors = 0
    for rep, out in enumerate(outcomes):
        if isinstance(out, NumericalError):
            errors += 1
            continue
        covered, length, active, lam, per_step = out
        covered_flags.append(covered)
        lengths.append(length)
        selections.append(active)
        lambdas.append(lam)
        if trace is not None:
            trace.extend((rep, k, l, ln) for k, (l, ln) in enumerate(per_step))

    done = len(covered_flags)
    if done == 0:
        raise NumericalError(f"all {reps} replications failed")
    freq = sum(covered_flags) / done
    lengths_arr = np.array(lengths)
    finite = lengths_arr[np.isfinite(lengths_arr)]
    sel = selection_metrics(selections, spec.true_support, spec.p)
    return ExperimentResult(
        validity_freq=freq,
        ci_half_width=_binomial_half_width(freq, done),
        median_length=float(np.median(lengths_arr)),
        mean_length_finite=float(finite.mean()) if finite.size else math.nan,
        selection_frequency=sel["frequency"],
        precision=sel["precision"],
        recall=sel["recall"],
        reps=done,
        seed=seed,
        error_count=errors,
        unbounded_count=int(np.sum(~np.isfinite(lengths_arr))),
        lengths=lengths_arr,
        lambdas=np.array(lambdas),
    )


def pilot_lambda(
    spec: ExampleSpec,
    epsilon: float,
    variant: VariantSpec,
    reps: int,
    seed: int,
) -> float:
    """Median selected penalty over a pilot run, for fixed-penalty studies."""
    result = validity_experiment(spec, epsilon, variant, "smallest", reps, seed)
    return float(np.median(result.lambdas))


def fixed_lambda_experiment(
    spec: ExampleSpec,
    lam: float,
    epsilon: float,
    variant: VariantSpec,
    reps: int,
    seed: int,
) -> ExperimentResult:
    """Coverage of the conformal set at one penalty fixed in advance."""
    if reps < 1:
        raise ValueError("need at least one replication")
    covered_flags, lengths = [], []
    errors = 0
    for rep in range(reps):
        data, x_new, y_true = generate_example(spec, (seed, rep))
        try:
            cset = fixed_lambda_set(data, x_new, lam, epsilon, variant)
        except NumericalError:
            errors += 1
            continue
        covered_flags.append(cset.contains(y_true))
        lengths.append(cset.lebesgue_length)
    done = len(covered_flags)
    if done == 0:
        raise NumericalError(f"all {reps} replications failed")
    freq = sum(covered_flags) / done
    lengths_arr = np.array(lengths)
    finite = lengths_arr[np.isfinite(lengths_arr)]
    return ExperimentResult(
        validity_freq=freq,
        ci_half_width=_binomial_half_width(freq, done),
        median_length=float(np.median(lengths_arr)),
        mean_length_finite=float(finite.mean()) if finite.size else math.nan,
        selection_frequency=np.zeros(spec.p),
        precision=0.0,
        recall=0.0,
        reps=done,
        seed=seed,
        error_count=errors,
        unbounded_count=int(np.sum(~np.isfinite(lengths_arr))),
        lengths=lengths_arr,
    )
