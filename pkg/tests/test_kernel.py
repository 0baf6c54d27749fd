import numpy as np
import pytest

from monowarp.errors import InvalidLengthscale
from monowarp.kernel import sq_exp_cov, sq_exp_cross


def test_identical_rows_give_unit_entry():
    X = np.array([[0.3, 0.7], [0.3, 0.7]])
    cov = sq_exp_cov(X, [1.0, 1.0])
    assert cov[0, 1] == 1.0
    assert cov[1, 0] == 1.0


@pytest.mark.parametrize("theta,expected", [(1.0, np.exp(-1.0)), (2.0, np.exp(-0.5))])
def test_1d_pair_formula(theta, expected):
    cov = sq_exp_cov(np.array([[0.0], [1.0]]), theta)
    assert cov[0, 1] == pytest.approx(expected, abs=1e-12)


def test_cross_matches_cov_off_constructor_path():
    rng = np.random.default_rng(1)
    X = rng.uniform(size=(5, 3))
    theta = np.array([0.4, 1.1, 2.0])
    cov = sq_exp_cov(X, theta)
    cross = sq_exp_cross(X, X, theta)
    assert np.allclose(cross, cov, atol=1e-14)


def test_cross_decays_for_distant_points():
    cross = sq_exp_cross(np.array([[0.0]]), np.array([[10.0]]), 0.5)
    assert cross[0, 0] < 1e-12


def test_cross_elementwise_oracle():
    rng = np.random.default_rng(2)
    X1 = rng.uniform(size=(3, 2))
    X2 = rng.uniform(size=(2, 2))
    theta = np.array([0.3, 0.9])
    got = sq_exp_cross(X1, X2, theta)
    for i in range(3):
        for j in range(2):
            expected = np.exp(-np.sum((X1[i] - X2[j]) ** 2 / theta))
            assert got[i, j] == pytest.approx(expected, abs=1e-14)


def test_unit_diagonal_exact():
    rng = np.random.default_rng(3)
    cov = sq_exp_cov(rng.uniform(size=(8, 4)), [0.2, 0.5, 1.0, 3.0])
    assert np.all(np.diag(cov) == 1.0)


def test_bitwise_symmetry():
    rng = np.random.default_rng(4)
    cov = sq_exp_cov(rng.uniform(size=(15, 3)), [0.1, 0.5, 0.9])
    assert np.array_equal(cov, cov.T)


def test_monotone_decay_in_1d_distance():
    x = np.array([[0.0], [0.1], [0.35], [0.8], [1.0]])
    cov = sq_exp_cov(x, 0.7)
    d = np.abs(x[:, 0][:, None] - x[:, 0][None, :]).ravel()
    order = np.argsort(d)
    vals = cov.ravel()[order]
    assert np.all(np.diff(vals) <= 1e-15)


@pytest.mark.parametrize("theta", [0.0, -1.0, np.nan])
def test_invalid_lengthscale(theta):
    with pytest.raises(InvalidLengthscale):
        sq_exp_cov(np.array([[0.0], [1.0]]), theta)


def test_lengthscale_count_mismatch():
    with pytest.raises(InvalidLengthscale):
        sq_exp_cov(np.zeros((3, 2)), [1.0, 1.0, 1.0])
