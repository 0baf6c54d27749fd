"""Elliptical slice sampling for latent Gaussian vectors.

One update is rejection-free: a fresh prior draw defines an ellipse
through the current state, a log threshold is drawn under the current
likelihood, and the angle bracket shrinks toward zero until a proposal
clears the threshold.

Randomness is consumed in a fixed order (prior draw, threshold, angle,
shrink angles) so a seeded chain reproduces bit-for-bit.
"""

import math
from dataclasses import dataclass

import numpy as np

from .errors import ShrinkLimitExceeded
from .linalg import CholFactor, cholesky, mvn_sample

TWO_PI = 2.0 * math.pi


@dataclass(frozen=True)
class EssConfig:
    """Cap on bracket-shrink iterations before declaring the likelihood broken."""

    max_shrinks: int = 100


@dataclass(frozen=True)
class EssMove:
    """Full record of one ESS update, including the geometry of the move."""

    z_new: np.ndarray
    shrinks: int
    angle: float
    z_prior: np.ndarray
    log_lik: float


def ess_update_detail(z_prev, prior_chol: CholFactor, loglik, rng, cfg: EssConfig = EssConfig()) -> EssMove:
    """One ESS update, returning the accepted angle and prior draw too."""
    z_prev = np.asarray(z_prev, dtype=float)
    ll_prev = float(loglik(z_prev))
    if not math.isfinite(ll_prev):
        raise ValueError(f"loglik at the current state is not finite: {ll_prev}")
    z_prior = mvn_sample(prior_chol, rng)
    # 1 - u lies in (0, 1], keeping the log finite
    log_threshold = ll_prev + math.log(1.0 - rng.uniform())
    angle = rng.uniform(0.0, TWO_PI)
    lo, hi = angle - TWO_PI, angle
    shrinks = 0
    while True:
        z_prop = z_prev * math.cos(angle) + z_prior * math.sin(angle)
        ll_prop = float(loglik(z_prop))
        if ll_prop > log_threshold:
            return EssMove(z_new=z_prop, shrinks=shrinks, angle=angle,
                           z_prior=z_prior, log_lik=ll_prop)
        shrinks += 1
        if shrinks >= cfg.max_shrinks:
            raise ShrinkLimitExceeded(
                f"no acceptable proposal after {cfg.max_shrinks} bracket shrinks"
            )
        if angle < 0.0:
            lo = angle
        else:
            hi = angle
        angle = rng.uniform(lo, hi)


def ess_update(z_prev, prior_chol: CholFactor, loglik, rng, cfg: EssConfig = EssConfig()):
    """One rejection-free ESS update; returns (z_new, shrink count)."""
    move = ess_update_detail(z_prev, prior_chol, loglik, rng, cfg)
    return move.z_new, move.shrinks


def joint_prior_draw(train_cov, cross_cov, test_cov, rng):
    """One draw from the stacked (n + n') block MVN prior, split in two.

    The train part feeds the ESS acceptance; the test part is combined
    with the accepted angle to carry predictions along the chain.
    """
    train = np.atleast_2d(np.asarray(train_cov, dtype=float))
    test = np.atleast_2d(np.asarray(test_cov, dtype=float))
    n, m = train.shape[0], test.shape[0]
    if m == 0:
        return mvn_sample(cholesky(train), rng), np.empty(0)
    cross = np.asarray(cross_cov, dtype=float).reshape(n, m)
    block = np.block([[train, cross], [cross.T, test]])
    z = mvn_sample(cholesky(block), rng)
    return z[:n], z[n:]
