"""Squared-exponential correlation kernel with per-dimension lengthscales.

The entry formula is exp{-sum_k (x_ik - x_jk)^2 / theta_k}: each
lengthscale divides the squared distance directly, with no factor of 1/2,
so the Gamma(3/2, 5) lengthscale prior keeps its intended meaning.
"""

import numpy as np
from scipy.spatial.distance import cdist, pdist, squareform

from .errors import InvalidLengthscale, LengthMismatch


def _check_theta(theta, p: int) -> np.ndarray:
    theta = np.atleast_1d(np.asarray(theta, dtype=float))
    if theta.shape == (1,) and p > 1:
        theta = np.full(p, theta[0])
    if theta.shape != (p,):
        raise InvalidLengthscale(f"expected {p} lengthscales, got shape {theta.shape}")
    if not np.all(np.isfinite(theta)) or np.any(theta <= 0.0):
        raise InvalidLengthscale(f"lengthscales must be positive and finite, got {theta}")
    return theta


def sq_exp_cov(X, theta) -> np.ndarray:
    """n x n correlation matrix over the rows of X.

    Unit diagonal exactly; off-diagonals computed once per unordered pair
    (so the result is bitwise symmetric).
    """
    X = np.atleast_2d(np.asarray(X, dtype=float))
    theta = _check_theta(theta, X.shape[1])
    if X.shape[0] == 1:
        return np.ones((1, 1))
    d2 = pdist(X / np.sqrt(theta), metric="sqeuclidean")
    return squareform(np.exp(-d2), checks=False) + np.eye(X.shape[0])


def sq_exp_cross(X1, X2, theta) -> np.ndarray:
    """n x m cross-correlation block between two input sets."""
    X1 = np.atleast_2d(np.asarray(X1, dtype=float))
    X2 = np.atleast_2d(np.asarray(X2, dtype=float))
    if X1.shape[1] != X2.shape[1]:
        raise LengthMismatch(
            f"input dimension mismatch: {X1.shape[1]} vs {X2.shape[1]}"
        )
    theta = _check_theta(theta, X1.shape[1])
    s = np.sqrt(theta)
    return np.exp(-cdist(X1 / s, X2 / s, metric="sqeuclidean"))
