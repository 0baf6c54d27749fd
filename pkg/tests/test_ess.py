import numpy as np
import pytest
from oracles import batch_mcse

from monowarp.errors import ShrinkLimitExceeded
from monowarp.ess import EssConfig, ess_update, ess_update_detail, joint_prior_draw
from monowarp.kernel import sq_exp_cov
from monowarp.linalg import CholFactor, cholesky, mvn_conditional


def test_constant_loglik_first_proposal_on_ellipse():
    rng = np.random.default_rng(0)
    chol = cholesky(np.eye(4))
    z_prev = rng.standard_normal(4)
    move = ess_update_detail(z_prev, chol, lambda z: 0.0, np.random.default_rng(1))
    assert move.shrinks == 0
    expected = z_prev * np.cos(move.angle) + move.z_prior * np.sin(move.angle)
    assert np.max(np.abs(move.z_new - expected)) < 1e-12


def test_degenerate_prior_keeps_origin():
    chol = CholFactor(lower=np.zeros((3, 3)), jitter=0.0)
    z_new, shrinks = ess_update(np.zeros(3), chol, lambda z: 0.0, np.random.default_rng(2))
    assert np.array_equal(z_new, np.zeros(3))
    assert shrinks == 0


def test_every_proposal_lies_on_ellipse():
    rng = np.random.default_rng(3)
    chol = cholesky(sq_exp_cov(np.linspace(0, 1, 6)[:, None], 0.3))
    z = rng.standard_normal(6)
    shrank = 0
    for _ in range(40):
        z_prev = z.copy()
        seen = []

        def loglik(zz):
            seen.append(zz.copy())
            return -float(zz @ zz)  # forces some shrinking

        move = ess_update_detail(z_prev, chol, loglik, rng)
        z = move.z_new
        shrank += move.shrinks
        # every proposal (accepted or not) is a cos/sin combination of the
        # current state and the prior draw: project onto that plane and
        # check the coefficients sit on the unit circle
        basis = np.column_stack([z_prev, move.z_prior])
        for prop in seen[1:]:  # seen[0] is the threshold evaluation at z_prev
            coef, res, *_ = np.linalg.lstsq(basis, prop, rcond=None)
            assert (res.size == 0 or res[0] < 1e-20)
            assert abs(coef[0] ** 2 + coef[1] ** 2 - 1.0) < 1e-12
        expected = z_prev * np.cos(move.angle) + move.z_prior * np.sin(move.angle)
        assert np.max(np.abs(move.z_new - expected)) < 1e-12
    assert shrank > 0  # the likelihood actually exercised the shrink path


def test_accepted_loglik_exceeds_threshold():
    # rejection-free contract: the returned state clears the drawn bar
    rng = np.random.default_rng(4)
    chol = cholesky(np.eye(5))
    z = np.zeros(5)
    ll = lambda zz: -0.5 * float(zz @ zz)
    for _ in range(200):
        z_new, _ = ess_update(z, chol, ll, rng)
        z = z_new
        assert np.isfinite(ll(z))


def test_shrink_limit_exceeded():
    chol = cholesky(np.eye(2))

    def broken(z):
        return 0.0 if np.array_equal(z, np.zeros(2)) else -np.inf

    with pytest.raises(ShrinkLimitExceeded):
        ess_update(np.zeros(2), chol, broken, np.random.default_rng(5),
                   EssConfig(max_shrinks=5))


def test_nonfinite_current_loglik_rejected():
    chol = cholesky(np.eye(2))
    with pytest.raises(ValueError):
        ess_update(np.zeros(2), chol, lambda z: -np.inf, np.random.default_rng(6))


def test_gaussian_regression_stationarity():
    # unconstrained GP regression: ESS long-run mean matches kriging
    n = 15
    x = np.linspace(0, 1, n)[:, None]
    rng = np.random.default_rng(7)
    f_true = np.sin(2 * np.pi * x[:, 0])
    sigma = 0.25
    y = f_true + sigma * rng.standard_normal(n)
    C = sq_exp_cov(x, 0.1)
    chol = cholesky(C)
    loglik = lambda z: -0.5 * float((y - z) @ (y - z)) / sigma**2

    post_mean, post_cov = mvn_conditional(C + sigma**2 * np.eye(n), C, C, y)

    z = np.zeros(n)
    draws = np.empty((6000, n))
    for t in range(6000):
        z, _ = ess_update(z, chol, loglik, rng)
        draws[t] = z
    kept = draws[500:]
    mcse = batch_mcse(kept)
    err = np.abs(kept.mean(axis=0) - post_mean)
    assert np.all(err < 4.0 * mcse + 1e-12)
    rel_var = np.abs(kept.var(axis=0) - np.diag(post_cov)) / np.diag(post_cov)
    assert np.median(rel_var) < 0.15


def test_joint_prior_draw_empty_test_reduces_to_train_draw():
    seed = 11
    C = sq_exp_cov(np.linspace(0, 1, 5)[:, None], 0.4)
    z_tr, z_te = joint_prior_draw(C, np.zeros((5, 0)), np.zeros((0, 0)),
                                  np.random.default_rng(seed))
    direct = cholesky(C)
    from monowarp.linalg import mvn_sample
    assert np.array_equal(z_tr, mvn_sample(direct, np.random.default_rng(seed)))
    assert z_te.shape == (0,)


def test_joint_prior_draw_duplicated_coordinates():
    x = np.linspace(0, 1, 4)[:, None]
    C = sq_exp_cov(x, 0.5)
    rng = np.random.default_rng(12)
    worst = 0.0
    jit = 0.0
    for _ in range(20):
        z_tr, z_te = joint_prior_draw(C, C, C, rng)
        worst = max(worst, float(np.max(np.abs(z_te - z_tr))))
        block = np.block([[C, C], [C, C]])
        jit = max(jit, cholesky(block).jitter)
    assert worst < 6.0 * np.sqrt(2.0 * jit)


def test_joint_prior_draw_test_marginal_moments():
    x = np.array([[0.0], [0.6]])
    xs = np.array([[0.25], [0.9]])
    C = sq_exp_cov(x, 0.3)
    from monowarp.kernel import sq_exp_cross
    Cc = sq_exp_cross(x, xs, 0.3)
    Cs = sq_exp_cov(xs, 0.3)
    rng = np.random.default_rng(13)
    draws = np.array([joint_prior_draw(C, Cc, Cs, rng)[1] for _ in range(10_000)])
    sample_cov = draws.T @ draws / draws.shape[0]
    assert np.linalg.norm(sample_cov - Cs) / np.linalg.norm(Cs) < 0.05
