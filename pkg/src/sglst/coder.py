"""Estimator wrapper around the ADMM group-sparse coder."""

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from .pooling import likelihood_from_codes
from .solver import Dictionary, SolverConfig, precompute, solve_batch

__all__ = ["SGLSTCoder"]


class SGLSTCoder(BaseEstimator, TransformerMixin):
    """Group-sparse local patch coder.

    ``fit`` takes the ``d x (l*k)`` dictionary and caches its factorization;
    ``transform`` codes candidates of shape ``(n, d, l)`` (or one ``(d, l)``
    matrix) into simplex-constrained codes of shape ``(n, l*k, l)``.

    Parameters
    ----------
    n_patches : int
        Patches per template, ``l``.
    lam : float
        Weight of the block-max (l1/linf) penalty.
    mu : float
        Augmented Lagrangian parameter.
    max_iters : int
    tol : float
        Relative primal residual at which a candidate stops.

    Attributes
    ----------
    dictionary_ : Dictionary
    precomputation_ : Precomputation
    n_templates_ : int
    diagnostics_ : BatchDiagnostics
        Diagnostics of the most recent ``transform`` call.
    """

    def __init__(self, n_patches=9, lam=0.1, mu=0.1, max_iters=100, tol=1e-4):
        self.n_patches = n_patches
        self.lam = lam
        self.mu = mu
        self.max_iters = max_iters
        self.tol = tol

    def _config(self):
        return SolverConfig(lam=self.lam, mu=self.mu, max_iters=self.max_iters, tol=self.tol)

    def fit(self, D, y=None):
        D = np.asarray(D, dtype=float)
        if D.ndim != 2 or D.shape[1] % self.n_patches:
            raise ValueError(
                f"dictionary must be 2-D with a multiple of n_patches={self.n_patches} columns")
        self.dictionary_ = Dictionary(D, self.n_patches, D.shape[1] // self.n_patches)
        self.n_templates_ = self.dictionary_.k
        self.precomputation_ = precompute(self.dictionary_, self._config())
        return self

    def transform(self, X):
        check_is_fitted(self, "precomputation_")
        X = np.asarray(X, dtype=float)
        single = X.ndim == 2
        codes, self.diagnostics_ = solve_batch(X[None] if single else X,
                                               self.precomputation_, self._config())
        return codes[0] if single else codes

    def score_samples(self, X):
        """Alignment-pooled likelihood of each candidate."""
        codes = self.transform(X)
        return likelihood_from_codes(codes, self.n_patches, self.n_templates_)
