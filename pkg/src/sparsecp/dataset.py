"""Training data container and array validation helpers."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionMismatch


def as_float_matrix(X, name="X") -> np.ndarray:
    X = np.asarray(X, dtype=float)
    if X.ndim != 2:
        raise DimensionMismatch(f"{name} must be 2-dimensional, got ndim={X.ndim}")
    if not np.all(np.isfinite(X)):
        raise DimensionMismatch(f"{name} contains non-finite entries")
    return X


def as_float_vector(y, name="y") -> np.ndarray:
    y = np.asarray(y, dtype=float).ravel()
    if not np.all(np.isfinite(y)):
        raise DimensionMismatch(f"{name} contains non-finite entries")
    return y


@dataclass(frozen=True)
class Dataset:
    """Labeled regression sample: design matrix ``x`` and response ``y``.

    Holds the observed pairs only; the query point a conformal predictor
    is asked about is passed around separately.
    """

    x: np.ndarray
    y: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "x", as_float_matrix(self.x))
        object.__setattr__(self, "y", as_float_vector(self.y))
        if self.x.shape[0] != self.y.shape[0]:
            raise DimensionMismatch(
                f"x has {self.x.shape[0]} rows but y has {self.y.shape[0]} entries"
            )
        if self.x.shape[0] < 2:
            raise DimensionMismatch("need at least 2 observations")
        if self.x.shape[1] < 1:
            raise DimensionMismatch("need at least 1 column")

    @property
    def n_samples(self) -> int:
        return self.x.shape[0]

    @property
    def n_features(self) -> int:
        return self.x.shape[1]

    def standardized(self) -> tuple["Dataset", np.ndarray]:
        """Rescale every column to unit Euclidean norm.

        Returns the rescaled dataset and the per-column norms used, so a
        query point can be rescaled consistently. Columns that are
        exactly zero keep scale 1. No centering is done: the regression
        model carries no intercept.
        """
        norms = np.linalg.norm(self.x, axis=0)
        norms = np.where(norms > 0, norms, 1.0)
        return Dataset(self.x / norms, self.y), norms
