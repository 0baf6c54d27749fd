"""Dense SPD matrix machinery: Cholesky with jitter, MVN sampling,
MVN log density, and conditional (kriging) moments.

Everything operates on plain numpy arrays.  Matrices are assumed symmetric
as constructed; no symmetry repair is attempted here.
"""

from dataclasses import dataclass

import numpy as np
from scipy.linalg import solve_triangular

from .errors import LengthMismatch, NotPositiveDefinite

# Jitter escalation, relative to the mean diagonal (falls back to an
# absolute scale of 1 when the diagonal is all zero).
JITTER_SCHEDULE = (0.0, 1e-8, 1e-6, 1e-4)

LOG_2PI = np.log(2.0 * np.pi)


@dataclass(frozen=True)
class CholFactor:
    """Lower-triangular factor of a (possibly jittered) SPD matrix."""

    lower: np.ndarray
    jitter: float

    @property
    def dim(self) -> int:
        return self.lower.shape[0]

    def log_det(self) -> float:
        """log |L L^T| = 2 sum(log diag L)."""
        return 2.0 * float(np.sum(np.log(np.diag(self.lower))))

    def solve_lower(self, b: np.ndarray) -> np.ndarray:
        """Solve L x = b."""
        return solve_triangular(self.lower, b, lower=True, check_finite=False)

    def solve(self, b: np.ndarray) -> np.ndarray:
        """Solve (L L^T) x = b via two triangular solves."""
        y = solve_triangular(self.lower, b, lower=True, check_finite=False)
        return solve_triangular(self.lower.T, y, lower=False, check_finite=False)


def cholesky(m: np.ndarray, jitter_schedule=JITTER_SCHEDULE) -> CholFactor:
    """Factor m + jI for the smallest jitter j in the schedule that works.

    Jitter levels are multiples of the mean diagonal of `m`; a zero
    diagonal falls back to absolute levels so degenerate inputs like
    [[0]] still factor with tiny jitter.

    Raises NotPositiveDefinite if every level fails.
    """
    m = np.asarray(m, dtype=float)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {m.shape}")
    scale = float(np.mean(np.diag(m)))
    if scale <= 0.0:
        scale = 1.0
    for rel in jitter_schedule:
        j = rel * scale
        try:
            if j == 0.0:
                lower = np.linalg.cholesky(m)
            else:
                lower = np.linalg.cholesky(m + j * np.eye(m.shape[0]))
        except np.linalg.LinAlgError:
            continue
        return CholFactor(lower=lower, jitter=j)
    raise NotPositiveDefinite(
        f"cholesky failed for {m.shape[0]}x{m.shape[0]} matrix at all "
        f"jitter levels {tuple(jitter_schedule)} (scale {scale:g})"
    )


def mvn_sample(chol: CholFactor, rng: np.random.Generator) -> np.ndarray:
    """One draw from N(0, L L^T): lower @ z with z iid standard normal."""
    z = rng.standard_normal(chol.dim)
    return chol.lower @ z


def mvn_logpdf(z: np.ndarray, chol: CholFactor) -> float:
    """Exact N(0, L L^T) log density at z."""
    z = np.asarray(z, dtype=float)
    if z.shape[0] != chol.dim:
        raise LengthMismatch(f"vector length {z.shape[0]} != dim {chol.dim}")
    q = chol.solve_lower(z)
    return -0.5 * (chol.dim * LOG_2PI + chol.log_det() + float(q @ q))


def mvn_conditional(train_cov, cross_cov, test_cov, train_values):
    """Kriging moments of test values given training values (zero prior mean).

    mean = cross^T train_cov^{-1} values
    cov  = test_cov - cross^T train_cov^{-1} cross, symmetrized, with
           negative round-off on the diagonal clamped to zero.

    `train_cov` may be a CholFactor to reuse an existing factorization.
    """
    chol = train_cov if isinstance(train_cov, CholFactor) else cholesky(np.asarray(train_cov, float))
    cross = np.atleast_2d(np.asarray(cross_cov, dtype=float))
    test = np.atleast_2d(np.asarray(test_cov, dtype=float))
    values = np.asarray(train_values, dtype=float)
    if cross.shape[0] != chol.dim:
        raise LengthMismatch(f"cross rows {cross.shape[0]} != train dim {chol.dim}")
    a = chol.solve_lower(cross)
    mean = a.T @ chol.solve_lower(values)
    cov = test - a.T @ a
    cov = 0.5 * (cov + cov.T)
    d = np.diag(cov).copy()
    d[d < 0.0] = 0.0
    np.fill_diagonal(cov, d)
    return mean, cov


def conditional_pointwise(chol: CholFactor, cross_cov, test_var, train_values):
    """Kriging mean and pointwise variance, skipping the n' x n' covariance.

    `test_var` is the prior variance at each test point (the diagonal of
    the would-be test covariance).  Negative round-off is clamped to zero.
    """
    cross = np.asarray(cross_cov, dtype=float)
    a = chol.solve_lower(cross)
    mean = a.T @ chol.solve_lower(np.asarray(train_values, float))
    var = np.asarray(test_var, dtype=float) - np.einsum("ij,ij->j", a, a)
    np.maximum(var, 0.0, out=var)
    return mean, var
