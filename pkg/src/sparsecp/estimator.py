"""Scikit-learn style wrapper around the conformal prediction pipeline."""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from .dataset import Dataset, as_float_matrix, as_float_vector
from .path import DEFAULT_COND_THRESHOLD
from .predictors import PredictionReport, VariantSpec, path_for_variant, predict


class SparseConformalRegressor(BaseEstimator):
    """Set-valued regressor with exact finite-sample conformal sets.

    ``fit`` runs the regularization path on the training sample once;
    each call to ``predict`` then adjoins a query row and assembles its
    conformal prediction set from the stored path.

    Parameters
    ----------
    epsilon : float, default=0.1
        Miscoverage level; the returned sets target coverage 1-epsilon.
    variant : str, default="colp"
        Smoother family: colp, corp, corlap, cenep or cosmolap.
    rule : str, default="smallest"
        Selection rule along the path: smallest, early-stop or npn.
    mu : float, default=1.0
        Quadratic penalty weight for cenep/cosmolap.
    n_neighbors : int, default=2
        Window size for the npn rule.
    early_stop_factor : float, default=10.0
        Length blow-up ratio that truncates the candidate family.
    ridge_weight : float or None, default=None
        Fixed ridge parameter for corp/corlap; None tracks the per-step
        penalty value.
    half_offset : bool, default=False
        Use lam/2 instead of lam in the cenep/cosmolap offset.
    standardize : bool, default=False
        Rescale columns to unit norm before fitting the path.
    """

    def __init__(
        self,
        epsilon=0.1,
        variant="colp",
        rule="smallest",
        mu=1.0,
        n_neighbors=2,
        early_stop_factor=10.0,
        ridge_weight=None,
        half_offset=False,
        standardize=False,
        cond_threshold=DEFAULT_COND_THRESHOLD,
    ):
        self.epsilon = epsilon
        self.variant = variant
        self.rule = rule
        self.mu = mu
        self.n_neighbors = n_neighbors
        self.early_stop_factor = early_stop_factor
        self.ridge_weight = ridge_weight
        self.half_offset = half_offset
        self.standardize = standardize
        self.cond_threshold = cond_threshold

    def _variant_spec(self) -> VariantSpec:
        return VariantSpec(
            kind=self.variant,
            penalty_weight=self.mu,
            ridge_weight=self.ridge_weight,
            half_offset=self.half_offset,
        )

    def fit(self, X, y):
        X = as_float_matrix(X)
        y = as_float_vector(y)
        data = Dataset(X, y)
        self.scale_ = np.ones(data.n_features)
        if self.standardize:
            data, self.scale_ = data.standardized()
        self.data_ = data
        self.n_features_in_ = data.n_features
        self.path_ = path_for_variant(data, self._variant_spec(), self.cond_threshold)
        return self

    def predict_report(self, x_new, y_true=None) -> PredictionReport:
        """Full diagnostic report for a single query row."""
        check_is_fitted(self, "path_")
        x_new = as_float_vector(x_new, "x_new") / self.scale_
        return predict(
            self.data_,
            x_new,
            self.epsilon,
            self._variant_spec(),
            rule=self.rule,
            n_neighbors=self.n_neighbors,
            early_stop_factor=self.early_stop_factor,
            y_true=y_true,
            cond_threshold=self.cond_threshold,
            path=self.path_,
        )

    def predict_set(self, X):
        """Conformal prediction set for every row of X."""
        X = as_float_matrix(X)
        return [self.predict_report(row).final_set for row in X]

    def predict(self, X):
        """Interval hull [lo, hi] of the prediction set, one row per query."""
        sets = self.predict_set(X)
        return np.array([s.hull() for s in sets])
