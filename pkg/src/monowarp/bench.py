"""Synthetic test functions, Latin hypercube designs, RMSE/CRPS metrics,
and the Monte Carlo experiment runner.

Seeding scheme (documented so runs are reproducible anywhere): repetition
r of an experiment with base seed s draws its design and noise from
default_rng([s, r]) in the order train design, train noise, test design,
test noise; method k (0-based, in spec order) is fitted with the integer
seed SeedSequence([s, r, k + 1]).generate_state(1, uint64)[0].  With the
default timing policy ("zero") every number in the output table is a
deterministic function of (spec, seed); wall-clock timing is opt-in
because it breaks byte-reproducibility.
"""

import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.special import expit, ndtr
from scipy.stats import norm
from scipy.stats import t as student_t

from . import dgp, monogp
from .errors import LengthMismatch, NonPositiveVariance, SpecError, UnknownFunction
from .monogp import MCMCConfig, PredictiveSummary, PriorConfig
from .refinterp import mono_transform, mono_transform_linear

INV_SQRT_PI = 1.0 / np.sqrt(np.pi)
INV_SQRT_2PI = 1.0 / np.sqrt(2.0 * np.pi)


@dataclass(frozen=True)
class TestFunction:
    """A synthetic response surface with its native domain and noise level."""

    name: str
    dim: int
    noise_sd: float
    lower: np.ndarray
    upper: np.ndarray
    fn: object  # callable, native (n, p) -> (n,)


def _logistic1d(X):
    return 10.0 * expit(10.0 * X[:, 0] - 5.0)


def _logistic2d(X):
    return 10.0 * expit(10.0 * X[:, 0] - 7.0) + 5.0 * expit(10.0 * X[:, 1] - 3.0)


def _lopez5d(X):
    return (np.arctan(5.0 * X[:, 0]) + np.arctan(2.0 * X[:, 1]) + X[:, 2]
            + 2.0 * X[:, 3] ** 2 + 2.0 * expit(10.0 * (X[:, 4] - 0.5)))


def _arctan10(X):
    p = X.shape[1]
    return np.arctan(5.0 * (1.0 - 1.0 / (p + 1)) * X).sum(axis=1)


def _cross_in_tray(X):
    r = np.sqrt(X[:, 0] ** 2 + X[:, 1] ** 2)
    inner = np.abs(np.sin(X[:, 0]) * np.sin(X[:, 1]) * np.exp(np.abs(100.0 - r / np.pi)))
    return -0.0001 * (inner + 1.0) ** 0.1


def _michalewicz(X, m=10):
    i = np.arange(1, X.shape[1] + 1)
    return -(np.sin(X) * np.sin(i * X ** 2 / np.pi) ** (2 * m)).sum(axis=1)


def _plateau(X):
    return 2.0 * ndtr(np.sqrt(2.0) * (-4.0 - 3.0 * X.sum(axis=1))) - 1.0


def _tf(name, dim, noise_sd, lo, hi, fn):
    return TestFunction(name=name, dim=dim, noise_sd=noise_sd,
                        lower=np.full(dim, float(lo)), upper=np.full(dim, float(hi)),
                        fn=fn)


FUNCTIONS = {
    "logistic1d": _tf("logistic1d", 1, 1.0, 0.0, 1.0, _logistic1d),
    "logistic2d": _tf("logistic2d", 2, np.sqrt(0.1), 0.0, 1.0, _logistic2d),
    "lopez5d": _tf("lopez5d", 5, 0.1, 0.0, 1.0, _lopez5d),
    "arctan10": _tf("arctan10", 10, 0.1, 0.0, 1.0, _arctan10),
    "crossintray": _tf("crossintray", 2, 0.0, -2.0, 2.0, _cross_in_tray),
    "michalewicz3d": _tf("michalewicz3d", 3, 0.0, 0.0, np.pi, _michalewicz),
    "plateau2d": _tf("plateau2d", 2, 0.0, -2.0, 2.0, _plateau),
}


def get_function(name: str) -> TestFunction:
    try:
        return FUNCTIONS[name]
    except KeyError:
        raise UnknownFunction(
            f"unknown test function {name!r}; known: {sorted(FUNCTIONS)}"
        ) from None


def eval_function(f: TestFunction, X, rng) -> tuple[np.ndarray, np.ndarray]:
    """Decode coded inputs to the native domain, evaluate, add iid noise."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    if X.shape[1] != f.dim:
        raise LengthMismatch(f"{f.name} expects {f.dim} inputs, got {X.shape[1]}")
    native = f.lower + X * (f.upper - f.lower)
    y_true = np.asarray(f.fn(native), dtype=float)
    y_noisy = y_true
    if f.noise_sd > 0.0:
        y_noisy = y_true + f.noise_sd * rng.standard_normal(y_true.shape[0])
    return y_noisy, y_true


def lhs(n: int, p: int, rng) -> np.ndarray:
    """Latin hypercube in [0, 1): one point per axis stratum per coordinate."""
    X = np.empty((n, p))
    for j in range(p):
        X[:, j] = (rng.permutation(n) + rng.random(n)) / n
    return X


def grid_design(n: int, p: int) -> np.ndarray:
    """Regular grid: linspace for p = 1, a Cartesian product otherwise
    (sides chosen as the integer p-th root, so the row count may round)."""
    if p == 1:
        return np.linspace(0.0, 1.0, n)[:, None]
    side = max(2, round(n ** (1.0 / p)))
    axes = [np.linspace(0.0, 1.0, side)] * p
    mesh = np.meshgrid(*axes, indexing="ij")
    return np.column_stack([m.ravel() for m in mesh])


def rmse(pred_mean, truth) -> float:
    a = np.asarray(pred_mean, dtype=float)
    b = np.asarray(truth, dtype=float)
    if a.shape != b.shape or a.size == 0:
        raise LengthMismatch(f"shape mismatch {a.shape} vs {b.shape}")
    return float(np.sqrt(np.mean((a - b) ** 2)))


def crps_gaussian(mean, var, y) -> float:
    """Average Gaussian closed-form CRPS over the test points."""
    mean = np.asarray(mean, dtype=float)
    var = np.asarray(var, dtype=float)
    y = np.asarray(y, dtype=float)
    if np.any(var <= 0.0):
        raise NonPositiveVariance("CRPS needs strictly positive variances")
    sd = np.sqrt(var)
    z = (y - mean) / sd
    phi = INV_SQRT_2PI * np.exp(-0.5 * z ** 2)
    per_point = sd * (z * (2.0 * ndtr(z) - 1.0) + 2.0 * phi - INV_SQRT_PI)
    return float(np.mean(per_point))


def central_bounds(summary: PredictiveSummary, level: float = 0.90):
    """Central predictive interval from moment aggregates.

    Chains with a collapsed noise scale use Student-t quantiles whose scale
    is variance-matched (exact in the single-draw case); plug-in Gaussian
    chains use normal quantiles.
    """
    q = 0.5 + 0.5 * level
    if summary.dof is not None:
        scale = np.sqrt(summary.var * (summary.dof - 2.0) / summary.dof)
        hw = float(student_t.ppf(q, summary.dof)) * scale
    else:
        hw = float(norm.ppf(q)) * np.sqrt(summary.var)
    return summary.mean - hw, summary.mean + hw


METHOD_NAMES = ("mono-gp", "gp", "dgp", "mw-dgp")


@dataclass(frozen=True)
class ExperimentSpec:
    """Everything that determines a Monte Carlo comparison run."""

    function: str
    methods: tuple = ("mono-gp", "gp")
    n: int = 100
    n_test: int = 1000
    reps: int = 5
    seed: int = 0
    total: int = 5000
    burn: int = 1000
    thin: int = 10
    n_g: int = 50
    variant: str = "exp"
    train_design: str = "lhs"
    test_design: str = "lhs"
    noise_sd: float | None = None
    timing: str = "zero"


def validate_spec(spec: ExperimentSpec) -> None:
    if spec.function not in FUNCTIONS:
        raise SpecError(f"spec field 'function': unknown function {spec.function!r}")
    for m in spec.methods:
        if m not in METHOD_NAMES:
            raise SpecError(f"spec field 'methods': unknown method {m!r}")
    for fname in ("n", "n_test", "reps"):
        if getattr(spec, fname) < 1:
            raise SpecError(f"spec field {fname!r} must be >= 1")
    for fname in ("train_design", "test_design"):
        if getattr(spec, fname) not in ("lhs", "grid"):
            raise SpecError(f"spec field {fname!r} must be 'lhs' or 'grid'")
    if spec.timing not in ("zero", "wall"):
        raise SpecError("spec field 'timing' must be 'zero' or 'wall'")
    if spec.variant not in ("exp", "linear"):
        raise SpecError("spec field 'variant' must be 'exp' or 'linear'")
    if not spec.burn < spec.total:
        raise SpecError("spec field 'burn' must be < 'total'")
    if spec.thin < 1:
        raise SpecError("spec field 'thin' must be >= 1")


@dataclass
class MetricsRow:
    method: str
    rep: int
    rmse: float
    crps: float
    fit_seconds: float
    predict_seconds: float
    error: str | None = None


WARP_QUERIES = np.linspace(0.0, 1.0, 101)


@dataclass
class RepArtifacts:
    """Per-repetition prediction, sensitivity, and warping data for plotting."""

    rep: int
    X_test: np.ndarray
    y_true: np.ndarray
    predictions: dict = field(default_factory=dict)   # method -> (mean, var, lo, hi)
    sensitivity: dict = field(default_factory=dict)   # method -> (grid_x, (n_g, p))
    warpings: dict = field(default_factory=dict)      # method -> (T, n_q, p)


@dataclass
class ExperimentResult:
    spec: ExperimentSpec
    rows: list
    artifacts: list


_FIT = {
    "mono-gp": monogp.fit,
    "gp": dgp.fit_gp,
    "dgp": dgp.fit_dgp,
    "mw-dgp": dgp.fit_mwdgp,
}

_PREDICT = {
    "mono-gp": monogp.predict_moments,
    "gp": dgp.predict_gp,
    "dgp": dgp.predict_dgp,
    "mw-dgp": dgp.predict_mwdgp,
}


def mono_sensitivity(chain) -> np.ndarray:
    """Posterior mean of nu_j times the monotone image, per grid node."""
    transform = mono_transform if chain.variant == "exp" else mono_transform_linear
    out = np.zeros((chain.grid_x.shape[0], chain.p))
    for t in range(chain.retained):
        for j in range(chain.p):
            out[:, j] += chain.nu[t, j] * transform(chain.z_g[t][:, j])
    return out / chain.retained


def _method_seed(base: int, rep: int, k: int) -> int:
    return int(np.random.SeedSequence([base, rep, k + 1]).generate_state(1, np.uint64)[0])


def _run_rep(spec: ExperimentSpec, rep: int):
    f = get_function(spec.function)
    if spec.noise_sd is not None:
        f = replace(f, noise_sd=spec.noise_sd)
    rng = np.random.default_rng([spec.seed, rep])
    X = lhs(spec.n, f.dim, rng) if spec.train_design == "lhs" else grid_design(spec.n, f.dim)
    y, _ = eval_function(f, X, rng)
    Xt = lhs(spec.n_test, f.dim, rng) if spec.test_design == "lhs" else grid_design(spec.n_test, f.dim)
    yt_noisy, yt_true = eval_function(f, Xt, rng)
    art = RepArtifacts(rep=rep, X_test=Xt, y_true=yt_true)
    rows = []
    for k, method in enumerate(spec.methods):
        mcmc = MCMCConfig(total=spec.total, burn=spec.burn, thin=spec.thin,
                          n_g=spec.n_g, seed=_method_seed(spec.seed, rep, k),
                          variant=spec.variant)
        try:
            t0 = time.perf_counter()
            chain = _FIT[method](X, y, PriorConfig(), mcmc)
            t_fit = time.perf_counter() - t0
            t0 = time.perf_counter()
            summ = _PREDICT[method](chain, Xt)
            t_pred = time.perf_counter() - t0
        except Exception as exc:  # record and move on, never abort the table
            rows.append(MetricsRow(method=method, rep=rep, rmse=float("nan"),
                                   crps=float("nan"), fit_seconds=0.0,
                                   predict_seconds=0.0,
                                   error=f"{type(exc).__name__}: {exc}"))
            continue
        if spec.timing != "wall":
            t_fit = t_pred = 0.0
        lo, hi = central_bounds(summ)
        art.predictions[method] = (summ.mean, summ.var, lo, hi)
        if method == "mono-gp":
            art.sensitivity[method] = (chain.grid_x, mono_sensitivity(chain))
        elif method == "mw-dgp":
            art.warpings[method] = dgp.mwdgp_warpings(chain, WARP_QUERIES)
        rows.append(MetricsRow(method=method, rep=rep,
                               rmse=rmse(summ.mean, yt_true),
                               crps=crps_gaussian(summ.mean, summ.var, yt_noisy),
                               fit_seconds=t_fit, predict_seconds=t_pred))
    return rows, art


def run_experiment(spec: ExperimentSpec, threads: int = 1) -> ExperimentResult:
    """Fit and score every (method, repetition) pair of the spec.

    Repetitions are independent (each owns a derived seed) and may run in
    parallel; rows are always collected in (rep, method) order so the
    table does not depend on scheduling.
    """
    validate_spec(spec)
    if threads > 1 and spec.reps > 1:
        with ProcessPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(_run_rep, [spec] * spec.reps, range(spec.reps)))
    else:
        results = [_run_rep(spec, r) for r in range(spec.reps)]
    rows = [row for rep_rows, _ in results for row in rep_rows]
    artifacts = [art for _, art in results]
    return ExperimentResult(spec=spec, rows=rows, artifacts=artifacts)
