"""Monotonic Gaussian processes and monotonically warped deep GPs.

Public surface: the reference-grid machinery (refinterp), elliptical
slice sampling (ess), the additive mono-GP (monogp), the deep GP family
(dgp), the benchmark harness (bench), and chain persistence (store).
"""

from .bench import ExperimentSpec, crps_gaussian, eval_function, lhs, rmse, run_experiment
from .dgp import fit_dgp, fit_gp, fit_mwdgp, outer_log_marglik, predict_dgp, predict_gp, predict_mwdgp
from .ess import EssConfig, ess_update, joint_prior_draw
from .kernel import sq_exp_cov, sq_exp_cross
from .linalg import CholFactor, cholesky, mvn_conditional, mvn_logpdf, mvn_sample
from .monogp import (
    MCMCConfig,
    PriorConfig,
    fit,
    log_marglik,
    predict_moments,
    predict_samples,
    summary_stats,
)
from .refinterp import (
    InterpPlan,
    RefGrid,
    fo_approx,
    fo_approx_init,
    mono_transform,
    mono_transform_linear,
    monoref,
)
from .store import load_chain, save_chain

__version__ = "0.1.0"

__all__ = [
    "CholFactor", "EssConfig", "ExperimentSpec", "InterpPlan", "MCMCConfig",
    "PriorConfig", "RefGrid", "cholesky", "crps_gaussian", "ess_update",
    "eval_function", "fit", "fit_dgp", "fit_gp", "fit_mwdgp", "fo_approx",
    "fo_approx_init", "joint_prior_draw", "lhs", "load_chain", "log_marglik",
    "mono_transform", "mono_transform_linear", "monoref", "mvn_conditional",
    "mvn_logpdf", "mvn_sample", "outer_log_marglik", "predict_dgp",
    "predict_gp", "predict_moments", "predict_mwdgp", "predict_samples",
    "rmse", "run_experiment", "save_chain", "sq_exp_cov", "sq_exp_cross",
    "summary_stats",
]
