"""Monotone GP regression for one or more inputs.

The model: y_i = mu + sum_j nu_j (f_j(x_ij) - 1/2) + eps, where each f_j
is a monotone image of a latent Gaussian vector on a fixed reference grid,
interpolated to the data.  (mu, sigma^2) are collapsed analytically under
the improper 1/sigma^2 prior, leaving summary statistics (mu_hat, s2) and
a marginal likelihood proportional to ((n-p) s2 / 2)^(-(n-p)/2).

Inference is Metropolis-within-Gibbs: elliptical slice updates for each
latent grid column, then uniform-on-[x/2, 2x] random-walk Metropolis for
each scale nu_j and lengthscale theta_j (Gamma priors, with the x_old/x_new
proposal Jacobian).  Single-input regression is the p = 1 special case of
the same sweep.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    DegenerateResiduals,
    DimensionMismatch,
    DofTooSmall,
    NonFiniteResponse,
    NotPositiveDefinite,
    TooFewObservations,
)
from .ess import EssConfig, ess_update_detail
from .kernel import sq_exp_cov
from .linalg import cholesky, mvn_logpdf
from .refinterp import RefGrid, fo_approx, fo_approx_init, mono_transform, mono_transform_linear


@dataclass(frozen=True)
class PriorConfig:
    """Gamma(shape, rate) hyperpriors for the scales and lengthscales."""

    alpha_nu: float = 1e-3
    beta_nu: float = 1e-3
    alpha_theta: float = 1.5
    beta_theta: float = 5.0

    def __post_init__(self):
        for name in ("alpha_nu", "beta_nu", "alpha_theta", "beta_theta"):
            if getattr(self, name) <= 0.0:
                raise ValueError(f"{name} must be positive")


@dataclass(frozen=True)
class MCMCConfig:
    total: int = 5000
    burn: int = 1000
    thin: int = 10
    n_g: int = 50
    seed: int = 0
    variant: str = "exp"

    def __post_init__(self):
        if not self.burn < self.total:
            raise ValueError(f"burn ({self.burn}) must be < total ({self.total})")
        if self.thin < 1:
            raise ValueError("thin must be >= 1")
        if self.n_g < 2:
            raise ValueError("n_g must be >= 2")
        if self.variant not in ("exp", "linear"):
            raise ValueError(f"unknown transform variant {self.variant!r}")

    @property
    def retained(self) -> int:
        return (self.total - self.burn) // self.thin


@dataclass(frozen=True)
class SummaryStats:
    """Profiled residual location and scale."""

    mu_hat: float
    s2: float


@dataclass
class MonoChain:
    """Retained draws from the mono-GP posterior."""

    grid_x: np.ndarray
    z_g: np.ndarray      # (T, n_g, p)
    nu: np.ndarray       # (T, p)
    theta: np.ndarray    # (T, p)
    mu_hat: np.ndarray   # (T,)
    s2: np.ndarray       # (T,)
    n: int
    p: int
    variant: str
    priors: "PriorConfig | None" = None
    mcmc: "MCMCConfig | None" = None
    diagnostics: dict = field(default_factory=dict)
    model: str = "mono-gp"

    @property
    def dof(self) -> int:
        return self.n - self.p

    @property
    def retained(self) -> int:
        return self.z_g.shape[0]


@dataclass
class PredictiveDraws:
    """Per-draw Student-t parameter sets at the query points."""

    location: np.ndarray  # (T, n')
    scale2: np.ndarray    # (T,)
    dof: int


@dataclass
class PredictiveSummary:
    """Moment aggregates over retained draws.

    `dof` is the Student-t degrees of freedom for chains with a collapsed
    noise scale, or None when the predictive is plug-in Gaussian.
    """

    mean: np.ndarray
    var: np.ndarray
    cov: np.ndarray | None = None
    dof: int | None = None


_TRANSFORMS = {"exp": mono_transform, "linear": mono_transform_linear}


def summary_stats(y, f_n, nu) -> SummaryStats:
    """mu_hat and s2 of the residuals y - nu (F - 1/2), divisor n - p."""
    y = np.asarray(y, dtype=float)
    f_n = np.atleast_2d(np.asarray(f_n, dtype=float))
    if f_n.shape[0] != y.shape[0]:
        f_n = f_n.T
    nu = np.atleast_1d(np.asarray(nu, dtype=float))
    n, p = f_n.shape
    if n <= p:
        raise TooFewObservations(f"need n > p, got n={n}, p={p}")
    r = y - (f_n - 0.5) @ nu
    mu_hat = float(np.mean(r))
    r -= mu_hat
    return SummaryStats(mu_hat=mu_hat, s2=float(r @ r) / (n - p))


def log_marglik(y, f_n, nu) -> float:
    """Collapsed log marginal likelihood, up to a constant shared at fixed n, p.

    log of ((n-p) s2 / 2)^(-(n-p)/2); only differences at fixed (n, p) are
    meaningful, which is how every Metropolis ratio uses it.
    """
    y = np.asarray(y, dtype=float)
    f_n = np.atleast_2d(np.asarray(f_n, dtype=float))
    if f_n.shape[0] != y.shape[0]:
        f_n = f_n.T
    st = summary_stats(y, f_n, nu)
    return _log_marglik_s2(st.s2, y.shape[0] - f_n.shape[1])


def _log_marglik_s2(s2: float, dof: int) -> float:
    if s2 < 1e-300:
        raise DegenerateResiduals("residual scale underflowed (perfect fit)")
    return -0.5 * dof * math.log(0.5 * dof * s2)


def _gamma_logpdf(x: float, shape: float, rate: float) -> float:
    # Unnormalized: ratios only.
    return (shape - 1.0) * math.log(x) - rate * x


def log_accept_scale(ll_new, ll_old, x_new, x_old, shape, rate) -> float:
    """Log Metropolis ratio for a Uniform[x/2, 2x] move on a positive scalar.

    Likelihood ratio times Gamma prior ratio times the x_old/x_new proposal
    Jacobian, all in log space.
    """
    return (
        (ll_new - ll_old)
        + _gamma_logpdf(x_new, shape, rate)
        - _gamma_logpdf(x_old, shape, rate)
        + math.log(x_old / x_new)
    )


class MonoGibbs:
    """Sampler state for one mono-GP chain.

    Holds the latent grid columns, hyperparameters, cached grid-covariance
    factors, and the chain's single rng.  One sweep updates every latent
    column (ascending j), then every nu_j, then every theta_j.
    """

    def __init__(self, X, y, priors: PriorConfig, mcmc: MCMCConfig):
        X = np.atleast_2d(np.asarray(X, dtype=float))
        y = np.asarray(y, dtype=float)
        if X.shape[0] != y.shape[0]:
            raise DimensionMismatch(f"X has {X.shape[0]} rows, y has {y.shape[0]}")
        if not np.all(np.isfinite(y)):
            raise NonFiniteResponse("response contains NaN or infinity")
        if np.any(X < 0.0) or np.any(X > 1.0):
            raise ValueError("training inputs must be coded to [0, 1]")
        n, p = X.shape
        if n <= p:
            raise TooFewObservations(f"need n > p, got n={n}, p={p}")
        self.X, self.y = X, y
        self.n, self.p = n, p
        self.priors, self.mcmc = priors, mcmc
        self.rng = np.random.default_rng(mcmc.seed)
        self.transform = _TRANSFORMS[mcmc.variant]
        self.grid = RefGrid.uniform(mcmc.n_g)
        self.plans = [fo_approx_init(self.grid, X[:, j]) for j in range(p)]
        self.grid_col = self.grid.x[:, None]
        # Documented initialization: flat latent (ramp image), unit scales,
        # lengthscale 0.1.
        self.z = np.zeros((mcmc.n_g, p))
        self.nu = np.ones(p)
        self.theta = np.full(p, 0.1)
        self.chols = [cholesky(sq_exp_cov(self.grid_col, self.theta[j])) for j in range(p)]
        self.f_n = np.column_stack(
            [fo_approx(self.plans[j], self.transform(self.z[:, j])) for j in range(p)]
        )
        self.ess_cfg = EssConfig()
        self.accept_nu = np.zeros(p, dtype=int)
        self.accept_theta = np.zeros(p, dtype=int)
        self.theta_pd_rejects = 0
        self.total_shrinks = 0

    def _loglik(self, f_n) -> float:
        r = self.y - (f_n - 0.5) @ self.nu
        mu = r.mean()
        r = r - mu
        return _log_marglik_s2(float(r @ r) / (self.n - self.p), self.n - self.p)

    def ess_latent_step(self, j: int) -> None:
        """ESS update of latent column j under N(0, C_g(theta_j))."""
        base = self.y - (np.delete(self.f_n, j, axis=1) - 0.5) @ np.delete(self.nu, j)
        nu_j, dof = self.nu[j], self.n - self.p
        plan = self.plans[j]
        transform = self.transform

        def loglik(z):
            f_j = fo_approx(plan, transform(z))
            r = base - nu_j * (f_j - 0.5)
            mu = r.mean()
            r = r - mu
            return _log_marglik_s2(float(r @ r) / dof, dof)

        move = ess_update_detail(self.z[:, j], self.chols[j], loglik, self.rng, self.ess_cfg)
        self.z[:, j] = move.z_new
        self.f_n[:, j] = fo_approx(plan, transform(move.z_new))
        self.total_shrinks += move.shrinks

    def mh_step_nu(self, j: int) -> None:
        """Metropolis move on nu_j against the collapsed marginal likelihood."""
        old = self.nu[j]
        new = self.rng.uniform(0.5 * old, 2.0 * old)
        ll_old = self._loglik(self.f_n)
        self.nu[j] = new
        ll_new = self._loglik(self.f_n)
        la = log_accept_scale(ll_new, ll_old, new, old,
                              self.priors.alpha_nu, self.priors.beta_nu)
        if math.log(1.0 - self.rng.uniform()) < la:
            self.accept_nu[j] += 1
        else:
            self.nu[j] = old

    def mh_step_theta(self, j: int) -> None:
        """Metropolis move on theta_j against the latent-column MVN prior.

        A proposal whose grid covariance fails to factor counts as a
        rejection, not an error.
        """
        old = self.theta[j]
        new = self.rng.uniform(0.5 * old, 2.0 * old)
        try:
            chol_new = cholesky(sq_exp_cov(self.grid_col, new))
        except NotPositiveDefinite:
            self.theta_pd_rejects += 1
            return
        ll_new = mvn_logpdf(self.z[:, j], chol_new)
        ll_old = mvn_logpdf(self.z[:, j], self.chols[j])
        la = log_accept_scale(ll_new, ll_old, new, old,
                              self.priors.alpha_theta, self.priors.beta_theta)
        if math.log(1.0 - self.rng.uniform()) < la:
            self.theta[j] = new
            self.chols[j] = chol_new
            self.accept_theta[j] += 1

    def sweep(self) -> None:
        for j in range(self.p):
            self.ess_latent_step(j)
        for j in range(self.p):
            self.mh_step_nu(j)
        for j in range(self.p):
            self.mh_step_theta(j)


def fit(X, y, priors: PriorConfig | None = None, mcmc: MCMCConfig | None = None) -> MonoChain:
    """Run the Metropolis-within-Gibbs sampler and keep thinned draws.

    Inputs must already be coded to [0, 1] (the CLI does this for files).
    Draw t is retained when t > burn and (t - burn) is a multiple of thin,
    so the chain holds (total - burn) // thin states.
    """
    priors = priors or PriorConfig()
    mcmc = mcmc or MCMCConfig()
    s = MonoGibbs(X, y, priors, mcmc)
    keep = mcmc.retained
    z_g = np.empty((keep, mcmc.n_g, s.p))
    nu = np.empty((keep, s.p))
    theta = np.empty((keep, s.p))
    mu_hat = np.empty(keep)
    s2 = np.empty(keep)
    k = 0
    for t in range(1, mcmc.total + 1):
        s.sweep()
        if t > mcmc.burn and (t - mcmc.burn) % mcmc.thin == 0:
            st = summary_stats(s.y, s.f_n, s.nu)
            z_g[k] = s.z
            nu[k] = s.nu
            theta[k] = s.theta
            mu_hat[k] = st.mu_hat
            s2[k] = st.s2
            k += 1
    diagnostics = {
        "accept_rate_nu": (s.accept_nu / mcmc.total).tolist(),
        "accept_rate_theta": (s.accept_theta / mcmc.total).tolist(),
        "theta_pd_rejects": int(s.theta_pd_rejects),
        "mean_ess_shrinks": s.total_shrinks / (mcmc.total * s.p),
    }
    return MonoChain(grid_x=s.grid.x, z_g=z_g, nu=nu, theta=theta,
                     mu_hat=mu_hat, s2=s2, n=s.n, p=s.p, variant=mcmc.variant,
                     priors=priors, mcmc=mcmc, diagnostics=diagnostics)


def _star_plans(chain: MonoChain, Xstar) -> tuple[np.ndarray, list]:
    Xstar = np.atleast_2d(np.asarray(Xstar, dtype=float))
    if Xstar.shape[1] != chain.p:
        raise DimensionMismatch(
            f"chain was trained on p={chain.p} inputs, queries have {Xstar.shape[1]}"
        )
    grid = RefGrid(chain.grid_x)
    return Xstar, [fo_approx_init(grid, Xstar[:, j]) for j in range(chain.p)]


def predict_locations(chain: MonoChain, Xstar) -> np.ndarray:
    """Per-draw predictive locations mu_hat + nu (F* - 1/2), shape (T, n')."""
    Xstar, plans = _star_plans(chain, Xstar)
    transform = _TRANSFORMS[chain.variant]
    loc = np.empty((chain.retained, Xstar.shape[0]))
    for t in range(chain.retained):
        acc = np.full(Xstar.shape[0], chain.mu_hat[t])
        for j in range(chain.p):
            f_star = fo_approx(plans[j], transform(chain.z_g[t][:, j]))
            acc = acc + chain.nu[t, j] * (f_star - 0.5)
        loc[t] = acc
    return loc


def predict_samples(chain: MonoChain, Xstar) -> PredictiveDraws:
    """Student-t parameter sets, one per retained draw.

    Location mu_hat + nu (F* - 1/2), squared scale (1 + 1/n) s2, and
    n - p degrees of freedom; the covariance is diagonal so everything is
    element-wise.
    """
    if chain.dof < 2:
        raise DofTooSmall(f"need n - p >= 2, got {chain.dof}")
    loc = predict_locations(chain, Xstar)
    return PredictiveDraws(location=loc, scale2=(1.0 + 1.0 / chain.n) * chain.s2,
                           dof=chain.dof)


def predict_moments(chain: MonoChain, Xstar, full_cov: bool = False) -> PredictiveSummary:
    """Moment aggregates: mean of locations, spread of locations plus the
    average Student-t noise variance s2 (n-p)/(n-p-2).

    The between-draw spread uses the population normalizer so a
    single-draw chain reports exactly the noise term.
    """
    if chain.dof <= 2:
        raise DofTooSmall(f"need n - p > 2 for predictive variance, got {chain.dof}")
    loc = predict_locations(chain, Xstar)
    noise = float(np.mean(chain.s2)) * chain.dof / (chain.dof - 2)
    mean = loc.mean(axis=0)
    var = loc.var(axis=0) + noise
    cov = None
    if full_cov:
        centered = loc - mean
        cov = centered.T @ centered / loc.shape[0]
        cov[np.diag_indices_from(cov)] += noise
    return PredictiveSummary(mean=mean, var=var, cov=cov, dof=chain.dof)
