"""Euclidean projections onto the probability simplex and the nonnegative orthant."""

import numpy as np

from ._validation import check_finite_matrix, check_finite_vector

__all__ = ["project_simplex", "project_simplex_columns", "project_nonneg"]


def _simplex_rows(V):
    # Sort-and-threshold on every row of V at once; no input checks.
    n = V.shape[1]
    # sort order among equal values cannot change the sorted values
    U = np.sort(V, axis=1)[:, ::-1]
    # shift by the row max: the projection is shift-invariant and the cumsum
    # then runs over small magnitudes
    top_val = U[:, :1].copy()
    U = U - top_val
    cssv = np.cumsum(U, axis=1)
    cssv -= 1.0
    ind = np.arange(1, n + 1, dtype=float)
    # v_(j) - (sum_{i<=j} v_(i) - 1) / j > 0, multiplied through by j
    rho = np.count_nonzero(U * ind > cssv, axis=1)
    rows = np.arange(V.shape[0])
    theta = cssv[rows, rho - 1] / rho
    W = V - top_val
    W -= theta[:, None]
    np.maximum(W, 0.0, out=W)
    # push the rounding drift onto the largest entry so every row sums to 1
    drift = W.sum(axis=1) - 1.0
    top = np.argmax(W, axis=1)
    W[rows, top] -= drift
    return W


def project_simplex(v):
    """Project ``v`` onto the probability simplex {w >= 0, sum(w) = 1}.

    Parameters
    ----------
    v : array_like, shape (n,)
        Finite, non-empty vector.

    Returns
    -------
    w : ndarray, shape (n,)
        The unique minimizer of ``||w - v||_2`` over the simplex.

    Examples
    --------
    >>> project_simplex([0.5, 0.5, 1.0])
    array([0.16666667, 0.16666667, 0.66666667])
    """
    v = check_finite_vector(v, "v")
    return _simplex_rows(v[None, :])[0]


def project_simplex_columns(V):
    """Project each column of the 2-D array ``V`` onto the probability simplex."""
    V = check_finite_matrix(V, "V")
    if V.shape[0] == 0:
        raise ValueError("V must have at least one row")
    return _simplex_rows(V.T).T


def project_nonneg(v):
    """Elementwise ``max(v, 0)``; accepts arrays of any shape."""
    v = np.asarray(v, dtype=float)
    if not np.all(np.isfinite(v)):
        raise ValueError("v contains non-finite entries")
    return np.maximum(v, 0.0)
