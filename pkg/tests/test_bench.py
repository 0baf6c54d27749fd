import numpy as np
import pytest
from scipy.stats import kstest, norm

from monowarp.bench import (
    ExperimentSpec,
    MetricsRow,
    crps_gaussian,
    eval_function,
    get_function,
    grid_design,
    lhs,
    mono_sensitivity,
    rmse,
    run_experiment,
    validate_spec,
)
from monowarp.errors import LengthMismatch, NonPositiveVariance, SpecError, UnknownFunction


def _value_at(name, x_coded):
    f = get_function(name)
    rng = np.random.default_rng(0)
    _, y_true = eval_function(f, np.atleast_2d(x_coded), rng)
    return y_true[0]


def test_function_anchor_values():
    assert _value_at("logistic1d", [0.5]) == pytest.approx(5.0)
    assert _value_at("logistic2d", [0.7, 0.3]) == pytest.approx(7.5)
    assert _value_at("lopez5d", [0.0] * 5) == pytest.approx(2.0 / (1.0 + np.exp(5.0)))
    assert _value_at("lopez5d", [0.0] * 5) == pytest.approx(0.013386, abs=1e-6)
    assert _value_at("arctan10", [0.0] * 10) == pytest.approx(0.0)
    # native (0, 0) is coded (0.5, 0.5) on [-2, 2]^2
    assert _value_at("crossintray", [0.5, 0.5]) == pytest.approx(-0.0001)
    assert _value_at("michalewicz3d", [0.0] * 3) == pytest.approx(0.0)
    # plateau: native sum -4/3 makes the probit argument vanish
    assert _value_at("plateau2d", [1.0 / 3.0, 1.0 / 3.0]) == pytest.approx(0.0, abs=1e-12)


def test_noise_defaults_follow_protocol():
    assert get_function("logistic1d").noise_sd == 1.0
    assert get_function("logistic2d").noise_sd == pytest.approx(np.sqrt(0.1))
    assert get_function("lopez5d").noise_sd == 0.1
    assert get_function("arctan10").noise_sd == 0.1
    assert get_function("crossintray").noise_sd == 0.0
    assert get_function("michalewicz3d").noise_sd == 0.0


def test_eval_function_noise():
    f = get_function("logistic1d")
    X = np.linspace(0, 1, 50)[:, None]
    y_noisy, y_true = eval_function(f, X, np.random.default_rng(1))
    assert not np.array_equal(y_noisy, y_true)
    assert np.std(y_noisy - y_true) == pytest.approx(1.0, rel=0.4)


def test_unknown_function():
    with pytest.raises(UnknownFunction):
        get_function("nope")


def test_lhs_single_point():
    X = lhs(1, 3, np.random.default_rng(2))
    assert X.shape == (1, 3)
    assert np.all((X >= 0) & (X < 1))


def test_lhs_stratification_exact():
    rng = np.random.default_rng(3)
    for _ in range(200):
        n = int(rng.integers(2, 30))
        X = lhs(n, 2, rng)
        for j in range(2):
            strata = np.floor(n * np.sort(X[:, j])).astype(int)
            assert np.array_equal(strata, np.arange(n))


def test_lhs_marginal_ks():
    rng = np.random.default_rng(4)
    pooled = np.concatenate([lhs(5, 2, rng)[:, 0] for _ in range(10_000)])
    assert kstest(pooled, "uniform").pvalue > 0.01


def test_rmse():
    assert rmse([1.0, 2.0], [1.0, 2.0]) == 0.0
    assert rmse([0.0, 0.0], [1.0, 1.0]) == 1.0
    rng = np.random.default_rng(5)
    a, b = rng.standard_normal(20), rng.standard_normal(20)
    assert rmse(a, b) == pytest.approx(np.sqrt(np.mean((a - b) ** 2)), abs=1e-14)
    with pytest.raises(LengthMismatch):
        rmse([1.0], [1.0, 2.0])


def test_crps_at_center():
    # 2 phi(0) - 1/sqrt(pi) of sigma per point
    want = 2.0 * norm.pdf(0.0) - 1.0 / np.sqrt(np.pi)
    for sd in (1.0, 3.0):
        got = crps_gaussian([0.0], [sd**2], [0.0])
        assert got == pytest.approx(want * sd, abs=1e-12)
        assert got == pytest.approx(0.23370 * sd, abs=1e-4 * sd)


def test_crps_degenerate_limit():
    assert crps_gaussian([1.0], [1e-24], [1.0]) == pytest.approx(0.0, abs=1e-11)
    with pytest.raises(NonPositiveVariance):
        crps_gaussian([0.0], [0.0], [0.0])


def test_crps_large_z_asymptote():
    # CRPS -> |y - mu| - sigma/sqrt(pi); the gap is visible at |z| = 6 and
    # drops below 1% relative only for much larger |z|
    got6 = crps_gaussian([0.0], [1.0], [6.0])
    assert got6 == pytest.approx(6.0 - 1.0 / np.sqrt(np.pi), abs=1e-6)
    got60 = crps_gaussian([0.0], [1.0], [60.0])
    assert abs(got60 - 60.0) / 60.0 < 0.01


def test_crps_proper_scoring_sanity():
    # scoring the data-generating distribution beats a biased one on average
    rng = np.random.default_rng(6)
    y = rng.standard_normal(4000)
    good = crps_gaussian(np.zeros(4000), np.ones(4000), y)
    biased = crps_gaussian(np.full(4000, 1.5), np.ones(4000), y)
    assert good < biased


def test_grid_design_shapes():
    assert grid_design(100, 1).shape == (100, 1)
    g = grid_design(2500, 2)
    assert g.shape == (2500, 2)
    assert g.min() == 0.0 and g.max() == 1.0


def test_validate_spec_errors():
    ok = ExperimentSpec(function="logistic1d", methods=("mono-gp",))
    validate_spec(ok)
    with pytest.raises(SpecError):
        validate_spec(ExperimentSpec(function="nope", methods=("mono-gp",)))
    with pytest.raises(SpecError):
        validate_spec(ExperimentSpec(function="logistic1d", methods=("magic",)))
    with pytest.raises(SpecError):
        validate_spec(ExperimentSpec(function="logistic1d", methods=(), reps=0))
    with pytest.raises(SpecError):
        validate_spec(ExperimentSpec(function="logistic1d", timing="maybe"))


_SMOKE = ExperimentSpec(function="logistic1d", methods=("mono-gp", "gp"), n=15,
                        n_test=40, reps=2, seed=9, total=200, burn=50, thin=10,
                        n_g=20, test_design="grid")


def test_run_experiment_no_methods_gives_empty_table():
    spec = ExperimentSpec(function="logistic1d", methods=(), n=10, n_test=10,
                          reps=2, total=100, burn=10, thin=10)
    result = run_experiment(spec)
    assert result.rows == []


def test_run_experiment_row_count_and_order():
    result = run_experiment(_SMOKE)
    assert [(r.method, r.rep) for r in result.rows] == [
        ("mono-gp", 0), ("gp", 0), ("mono-gp", 1), ("gp", 1)]
    for r in result.rows:
        assert r.error is None
        assert r.rmse >= 0.0 and r.crps >= 0.0
        assert r.fit_seconds == 0.0  # timing defaults to the deterministic zero policy


def test_run_experiment_deterministic():
    a = run_experiment(_SMOKE)
    b = run_experiment(_SMOKE)
    for ra, rb in zip(a.rows, b.rows):
        assert (ra.method, ra.rep, ra.rmse, ra.crps) == (rb.method, rb.rep, rb.rmse, rb.crps)
    for aa, ab in zip(a.artifacts, b.artifacts):
        for m in aa.predictions:
            assert np.array_equal(aa.predictions[m][0], ab.predictions[m][0])


def test_run_experiment_wall_timing_optional():
    import dataclasses
    spec = dataclasses.replace(_SMOKE, timing="wall", reps=1)
    result = run_experiment(spec)
    assert all(r.fit_seconds > 0.0 for r in result.rows)


def test_run_experiment_records_errors_without_aborting():
    # n = 1 cannot support a mono-GP fit; the row records the failure and
    # the other method still runs
    spec = ExperimentSpec(function="logistic1d", methods=("mono-gp",), n=1,
                          n_test=10, reps=1, total=100, burn=10, thin=10)
    result = run_experiment(spec)
    assert len(result.rows) == 1
    assert result.rows[0].error is not None
    assert np.isnan(result.rows[0].rmse)


def test_run_experiment_parallel_matches_serial():
    serial = run_experiment(_SMOKE)
    parallel = run_experiment(_SMOKE, threads=2)
    for ra, rb in zip(serial.rows, parallel.rows):
        assert (ra.method, ra.rep, ra.rmse, ra.crps) == (rb.method, rb.rep, rb.rmse, rb.crps)


def test_sensitivity_artifact_shape():
    result = run_experiment(_SMOKE)
    grid_x, sens = result.artifacts[0].sensitivity["mono-gp"]
    assert grid_x.shape == (20,)
    assert sens.shape == (20, 1)
    # nu > 0 and F in [0, 1] make the scaled latent nonnegative
    assert np.all(sens >= 0.0)
