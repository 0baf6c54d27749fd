import numpy as np
import pytest
from oracles import naive_interp

from monowarp.errors import DegenerateInput, EmptyGrid, LengthMismatch
from monowarp.kernel import sq_exp_cov
from monowarp.linalg import cholesky, mvn_sample
from monowarp.refinterp import (
    RefGrid,
    fo_approx,
    fo_approx_init,
    mono_transform,
    mono_transform_linear,
    monoref,
)


def test_grid_validation():
    with pytest.raises(EmptyGrid):
        RefGrid(np.array([0.5]))
    with pytest.raises(EmptyGrid):
        RefGrid(np.array([0.0, 0.0, 1.0]))


def test_plan_node_hits_are_exact():
    grid = RefGrid(np.array([0.0, 0.2, 0.55, 1.0]))
    f = np.array([3.0, -1.0, 7.0, 2.0])
    got = fo_approx(fo_approx_init(grid, grid.x), f)
    assert np.array_equal(got, f)


def test_plan_midpoint():
    grid = RefGrid(np.array([0.0, 1.0]))
    plan = fo_approx_init(grid, [0.5])
    assert fo_approx(plan, np.array([0.0, 10.0]))[0] == pytest.approx(5.0)


def test_plan_extrapolates_last_segment():
    grid = RefGrid(np.array([0.0, 0.5, 1.0]))
    plan = fo_approx_init(grid, [1.25])
    # last-segment slope (4-1)/0.5 = 6 extended beyond the hull
    assert fo_approx(plan, np.array([0.0, 1.0, 4.0]))[0] == pytest.approx(5.5)


def test_plan_extrapolates_first_segment():
    grid = RefGrid(np.array([0.0, 0.5, 1.0]))
    plan = fo_approx_init(grid, [-0.5])
    assert fo_approx(plan, np.array([0.0, 1.0, 4.0]))[0] == pytest.approx(-1.0)


def test_plan_identity_invariant():
    rng = np.random.default_rng(0)
    for _ in range(50):
        x_g = np.sort(rng.uniform(size=8))
        x_g[0], x_g[-1] = 0.0, 1.0
        grid = RefGrid(x_g)
        q = rng.uniform(-0.3, 1.3, size=40)
        got = fo_approx(fo_approx_init(grid, q), x_g)
        assert np.max(np.abs(got - q)) < 1e-12


def test_fo_approx_constant_ordinates():
    grid = RefGrid.uniform(10)
    plan = fo_approx_init(grid, [-0.2, 0.31, 0.77, 1.4])
    got = fo_approx(plan, np.full(10, 3.25))
    assert np.array_equal(got, np.full(4, 3.25))


def test_fo_approx_length_mismatch():
    plan = fo_approx_init(RefGrid.uniform(10), [0.5])
    with pytest.raises(LengthMismatch):
        fo_approx(plan, np.zeros(9))


def test_fo_approx_oracle_sweep():
    rng = np.random.default_rng(1)
    for _ in range(1000):
        n_g = rng.integers(2, 12)
        x_g = np.sort(rng.uniform(size=n_g))
        x_g += np.arange(n_g) * 1e-9  # ensure strict increase
        grid = RefGrid((x_g - x_g[0]) / (x_g[-1] - x_g[0]))
        f_g = rng.standard_normal(n_g)
        q = rng.uniform(-0.4, 1.4, size=17)
        got = fo_approx(fo_approx_init(grid, q), f_g)
        want = naive_interp(grid.x, f_g, q)
        inside = (q >= grid.x[0]) & (q <= grid.x[-1])
        assert np.max(np.abs(got[inside] - want[inside])) < 1e-12
        # outside the hull both use the boundary segment's line
        assert np.allclose(got[~inside], want[~inside], atol=1e-9)


def test_mono_transform_constant_gives_uniform_ramp():
    for c in (-3.0, 0.0, 11.0):
        f = mono_transform(np.full(50, c))
        assert np.allclose(f, np.arange(50) / 49.0, atol=1e-13)


def test_mono_transform_endpoints_exact():
    rng = np.random.default_rng(2)
    for _ in range(100):
        f = mono_transform(rng.standard_normal(30))
        assert f[0] == 0.0
        assert f[-1] == 1.0


def test_mono_transform_strictly_increasing_sweep():
    # 1000 draws from the grid prior across three lengthscales
    rng = np.random.default_rng(3)
    grid = RefGrid.uniform(50)
    for theta in (0.01, 0.1, 1.0):
        chol = cholesky(sq_exp_cov(grid.x[:, None], theta))
        for _ in range(333):
            f = mono_transform(mvn_sample(chol, rng))
            assert np.all(np.diff(f) > 0.0)
            assert f[0] == 0.0 and f[-1] == 1.0


def test_mono_transform_linear_two_points():
    assert np.array_equal(mono_transform_linear(np.array([0.0, 1.0])), np.array([0.0, 1.0]))
    assert np.array_equal(mono_transform_linear(np.array([0.0, 100.0])), np.array([0.0, 1.0]))


def test_mono_transform_linear_flat_where_min_repeats():
    f = mono_transform_linear(np.array([0.0, 0.0, 1.0]))
    assert f[0] == f[1] == 0.0
    assert np.all(np.diff(f) >= 0.0)


def test_mono_transform_linear_degenerate():
    with pytest.raises(DegenerateInput):
        mono_transform_linear(np.full(5, 2.5))


def test_linear_variant_curves_identity_more():
    # both transforms bend the identity map; the linear one bends it more
    x_g = np.linspace(0.0, 1.0, 50)
    dev_exp = np.max(np.abs(mono_transform(x_g) - x_g))
    dev_lin = np.max(np.abs(mono_transform_linear(x_g) - x_g))
    assert dev_lin > dev_exp > 0.0


def test_monoref_at_grid_nodes():
    grid = RefGrid.uniform(20)
    rng = np.random.default_rng(4)
    z = rng.standard_normal(20)
    got = monoref(grid.x, grid, z)
    assert np.array_equal(got, mono_transform(z))


def test_monoref_constant_latent_is_identity():
    grid = RefGrid.uniform(50)
    q = np.random.default_rng(5).uniform(size=30)
    got = monoref(q, grid, np.zeros(50))
    assert np.max(np.abs(got - q)) < 1e-12


def test_monoref_order_preserving():
    rng = np.random.default_rng(6)
    grid = RefGrid.uniform(50)
    chol = cholesky(sq_exp_cov(grid.x[:, None], 0.05))
    for _ in range(100):
        z = mvn_sample(chol, rng)
        q = np.sort(rng.uniform(-0.2, 1.2, size=60))
        out = monoref(q, grid, z)
        assert np.all(np.diff(out) >= 0.0)


def test_monoref_independent_of_companion_queries():
    # values at shared points must be bitwise equal whether computed
    # alone or inside a larger query set
    rng = np.random.default_rng(7)
    grid = RefGrid.uniform(50)
    z = rng.standard_normal(50)
    qa = rng.uniform(size=10)
    qb = rng.uniform(size=25)
    joint = monoref(np.concatenate([qa, qb]), grid, z)
    alone = monoref(qa, grid, z)
    assert np.array_equal(joint[:10], alone)


def test_monoref_linear_variant():
    grid = RefGrid.uniform(50)
    z = np.random.default_rng(8).standard_normal(50)
    got = monoref(np.array([0.0, 0.5, 1.0]), grid, z, variant="linear")
    f = mono_transform_linear(z)
    assert got[0] == f[0] and got[-1] == f[-1]
