"""Discrete energy and projected minimization tests.

Gradient correctness is checked against central finite differences of the
energy (the independent oracle), and for the quadratic generator against an
explicitly assembled stiffness/mass system.
"""

import numpy as np
import pytest

from phibump import (
    GridFunction,
    MinimizeOptions,
    NFunctionSpec,
    RadialGrid,
    clip_monotonicity_check,
    default_bump_builder,
    energy_gradient,
    energy_value,
    minimize,
    minimize_multistart,
    truncate,
)
from phibump.energy import plateau_profile
from phibump.nonlinearity import ConstantSource


@pytest.fixture(scope="module")
def tent():
    return default_bump_builder((1.0, 3.0, 5.0), (2.0, 4.0))


# ---------------------------------------------------------------------------
# grid quadrature


@pytest.mark.parametrize("N", [1, 2, 3])
@pytest.mark.parametrize("graded", [False, True])
def test_weights_sum_to_ball_measure(N, graded):
    grid = RadialGrid.graded(1.5, N, 137) if graded else RadialGrid.uniform(1.5, N, 137)
    assert np.all(grid.node_weight[1:-1] > 0)
    total = float(np.sum(grid.node_weight))
    assert total == pytest.approx(grid.omega * 1.5**N / N, rel=1e-10)


def test_grid_rejects_bad_nodes():
    with pytest.raises(ValueError):
        RadialGrid(R=1.0, N=1, r=np.array([0.0, 0.5, 0.5, 1.0]))
    with pytest.raises(ValueError):
        RadialGrid(R=1.0, N=1, r=np.array([0.1, 1.0]))


# ---------------------------------------------------------------------------
# energy values


def test_energy_linear_ramp_closed_form(tent):
    # N=1, quadratic generator, lam=0, u = 1 - r: integral of (u')^2/2 = 1/2
    grid = RadialGrid.uniform(1.0, 1, 257)
    u = GridFunction(grid, 1.0 - grid.r)
    val = energy_value(grid, NFunctionSpec.power(2.0), truncate(tent, 2), 0.0, u)
    assert val == pytest.approx(0.5, rel=1e-12)


def test_energy_zero_function(tent):
    grid = RadialGrid.uniform(1.0, 1, 65)
    u = GridFunction(grid, np.zeros(65))
    assert energy_value(grid, NFunctionSpec.power(2.0), truncate(tent, 2), 0.0, u) == 0.0


def test_energy_plateau_matches_scripted_quadrature(tent):
    # independent evaluation of both terms with explicit sums
    grid = RadialGrid.uniform(1.0, 1, 401)
    spec = NFunctionSpec.power(2.0)
    tf = truncate(tent, 2)
    lam = 7.0
    u = plateau_profile(grid, tf.cut, 0.25)
    du = np.diff(u.values) / grid.h
    grad_term = float(np.sum(grid.cell_mass * du * du / 2.0))
    bulk_term = float(np.sum(grid.node_weight * np.asarray(tf.primitive(u.values))))
    oracle = grad_term - lam * bulk_term
    assert energy_value(grid, spec, tf, lam, u) == pytest.approx(oracle, rel=1e-12)


# ---------------------------------------------------------------------------
# gradients


SPECS = [NFunctionSpec.power(2.0), NFunctionSpec.power(3.0), NFunctionSpec.exp_growth(),
         NFunctionSpec.p_log(1.0), NFunctionSpec.power_gamma(0.75),
         NFunctionSpec.two_power(1.3, 2.6)]


def _fd_gradient(grid, spec, tf, lam, values):
    g = np.zeros_like(values)
    for j in range(grid.n - 1):
        h = 1e-6 * (1.0 + abs(values[j]))
        up, dn = values.copy(), values.copy()
        up[j] += h
        dn[j] -= h
        ep = energy_value(grid, spec, tf, lam, GridFunction(grid, up))
        en = energy_value(grid, spec, tf, lam, GridFunction(grid, dn))
        g[j] = (ep - en) / (2.0 * h)
    return g


def test_gradient_zero_at_origin(tent):
    grid = RadialGrid.uniform(1.0, 1, 33)
    g = energy_gradient(grid, NFunctionSpec.power(2.0), truncate(tent, 2), 0.0,
                        GridFunction(grid, np.zeros(33)))
    assert np.all(g.values == 0.0)


def test_gradient_matches_finite_differences(tent):
    rng = np.random.default_rng(11)
    worst = 0.0
    cases = 0
    while cases < 20:
        spec = SPECS[cases % len(SPECS)]
        N = [1, 2, 3][cases % 3]
        k = 2 + cases % 2
        tf = truncate(tent, k)
        grid = RadialGrid.uniform(1.0, N, 41)
        vals = rng.uniform(0.0, tf.cut, grid.n)
        vals[-1] = 0.0
        lam = rng.uniform(0.0, 4.0)
        g = energy_gradient(grid, spec, tf, lam, GridFunction(grid, vals)).values
        fd = _fd_gradient(grid, spec, tf, lam, vals)
        denom = max(float(np.max(np.abs(g))), 1e-12)
        worst = max(worst, float(np.max(np.abs(g - fd))) / denom)
        cases += 1
    assert worst <= 1e-6


def test_gradient_matches_stiffness_oracle(tent):
    # quadratic generator on N=1: gradient = K u / h - lam * (mass .* f(u))
    grid = RadialGrid.uniform(1.0, 1, 51)
    n, h = grid.n, grid.h[0]
    spec = NFunctionSpec.power(2.0)
    tf = truncate(tent, 2)
    rng = np.random.default_rng(2)
    vals = rng.uniform(0.0, 3.0, n)
    vals[-1] = 0.0
    K = np.zeros((n, n))
    for c in range(n - 1):
        K[c, c] += 1.0
        K[c, c + 1] -= 1.0
        K[c + 1, c] -= 1.0
        K[c + 1, c + 1] += 1.0
    lam = 2.5
    oracle = K @ vals / h - lam * grid.node_weight * np.asarray(tf(vals))
    oracle[-1] = 0.0
    g = energy_gradient(grid, spec, tf, lam, GridFunction(grid, vals)).values
    assert np.max(np.abs(g - oracle)) <= 1e-12 * max(1.0, np.max(np.abs(oracle)))


# ---------------------------------------------------------------------------
# minimize


def test_minimize_lambda_zero_gives_zero(tent):
    grid = RadialGrid.uniform(1.0, 1, 101)
    rng = np.random.default_rng(0)
    u0 = GridFunction(grid, rng.uniform(0.0, 3.0, grid.n))
    res = minimize(grid, NFunctionSpec.power(2.0), truncate(tent, 2), 0.0, u0)
    assert res.converged
    assert res.u.sup_norm <= 1e-6
    assert res.energy <= 1e-12


def test_minimize_poisson_closed_form():
    # -u'' = 1 on (0,1), u'(0)=0, u(1)=0: u = (1-r^2)/2, sup 0.5
    grid = RadialGrid.uniform(1.0, 1, 201)
    src = ConstantSource(1.0, 10.0)
    u0 = GridFunction(grid, np.zeros(grid.n))
    res = minimize(grid, NFunctionSpec.power(2.0), src, 1.0, u0,
                   MinimizeOptions(tol=1e-10))
    exact = 0.5 * (1.0 - grid.r**2)
    assert res.converged
    assert np.max(np.abs(res.u.values - exact)) <= 4.0 / 201**2
    assert res.u.sup_norm == pytest.approx(0.5, abs=1e-5)


def test_minimize_box_bound_and_active_signs(tent):
    grid = RadialGrid.uniform(1.0, 1, 201)
    tf = truncate(tent, 2)
    res = minimize_multistart(grid, NFunctionSpec.power(2.0), tf, 64.0,
                              MinimizeOptions(tol=1e-8))
    assert res.box_violation <= 1e-12
    assert np.all(res.u.values >= 0.0)
    assert np.all(res.u.values <= tf.cut)
    assert res.active_sign_ok
    assert res.weak_residual <= 10.0 * 1e-8


def test_minimize_descends_into_expected_window(tent):
    grid = RadialGrid.uniform(1.0, 1, 400)
    res = minimize_multistart(grid, NFunctionSpec.power(2.0), truncate(tent, 2), 64.0,
                              MinimizeOptions(tol=1e-8))
    assert 1.0 < res.u.sup_norm <= 3.0


def test_preconditioned_minimize_matches_plain():
    # diagonal preconditioning changes the path, not the minimizer
    spec = NFunctionSpec.power(2.0)
    src = ConstantSource(1.0, 10.0)
    grid = RadialGrid.uniform(1.0, 3, 101)
    u0 = GridFunction(grid, np.zeros(grid.n))
    plain = minimize(grid, spec, src, 1.0, u0, MinimizeOptions(tol=1e-10))
    pre = minimize(grid, spec, src, 1.0, u0,
                   MinimizeOptions(tol=1e-10, precondition=True))
    assert pre.converged
    assert np.max(np.abs(pre.u.values - plain.u.values)) <= 1e-7


def test_mesh_convergence_second_order():
    # N=3 ball source problem has genuine O(h^2) error: u = (1-r^2)/6
    spec = NFunctionSpec.power(2.0)
    src = ConstantSource(1.0, 10.0)
    errs = []
    for n in (51, 101, 201):
        grid = RadialGrid.uniform(1.0, 3, n)
        res = minimize(grid, spec, src, 1.0, GridFunction(grid, np.zeros(n)),
                       MinimizeOptions(tol=1e-11))
        exact = (1.0 - grid.r**2) / 6.0
        errs.append(float(np.max(np.abs(res.u.values - exact))))
    assert errs[0] / errs[1] == pytest.approx(4.0, rel=0.4)
    assert errs[1] / errs[2] == pytest.approx(4.0, rel=0.4)


def test_minimize_energy_never_increases(tent):
    # monotone line search: spot-check by comparing against a worse start
    grid = RadialGrid.uniform(1.0, 1, 101)
    tf = truncate(tent, 2)
    spec = NFunctionSpec.power(2.0)
    u0 = plateau_profile(grid, tf.cut, 0.25)
    e0 = energy_value(grid, spec, tf, 16.0, u0)
    res = minimize(grid, spec, tf, 16.0, u0)
    assert res.energy <= e0 + 1e-10 * (1.0 + abs(e0))


def test_nonfinite_initial_energy_is_flagged(tent):
    # one-cell cliff of height 3 under the exponential generator: slope 3000,
    # Phi(3000) overflows, the energy is +inf and the solve must bail cleanly
    grid = RadialGrid.uniform(1.0, 1, 1001)
    vals = np.full(grid.n, 3.0)
    vals[-1] = 0.0
    spec = NFunctionSpec.exp_growth()
    tf = truncate(tent, 2)
    u0 = GridFunction(grid, vals)
    assert not np.isfinite(energy_value(grid, spec, tf, 1.0, u0))
    res = minimize(grid, spec, tf, 1.0, u0)
    assert not res.converged
    assert "not finite" in res.message


def test_line_search_rejects_nonfinite_trials(tent):
    # steep but finite start under the exponential generator: early spectral
    # trial steps overshoot into overflow and must be rejected, not crash
    grid = RadialGrid.uniform(1.0, 1, 1001)
    spec = NFunctionSpec.exp_growth()
    tf = truncate(tent, 2)
    u0 = plateau_profile(grid, tf.cut, 0.0625)
    assert np.isfinite(energy_value(grid, spec, tf, 200.0, u0))
    res = minimize(grid, spec, tf, 200.0, u0, MinimizeOptions(tol=1e-6, max_iter=2000))
    assert res.nonfinite_rejections >= 1
    assert np.isfinite(res.energy)


# ---------------------------------------------------------------------------
# clipping


def test_clip_monotonicity_random_profiles(tent):
    rng = np.random.default_rng(123)
    spec = NFunctionSpec.power(2.0)
    grid = RadialGrid.uniform(1.0, 1, 101)
    for k in (2, 3):
        tf = truncate(tent, k)
        for _ in range(100):
            vals = rng.uniform(-1.0, tf.cut + 2.0, grid.n)
            vals[-1] = 0.0
            assert clip_monotonicity_check(grid, spec, tf, 3.0, GridFunction(grid, vals))


def test_clip_strictly_helps_negative_dip(tent):
    grid = RadialGrid.uniform(1.0, 1, 101)
    spec = NFunctionSpec.power(2.0)
    tf = truncate(tent, 2)
    vals = np.maximum(0.2, 1.0 - grid.r) * 1.0
    vals[40:60] = -0.5
    vals[-1] = 0.0
    u = GridFunction(grid, vals)
    clipped = GridFunction(grid, np.clip(vals, 0.0, tf.cut))
    e_raw = energy_value(grid, spec, tf, 2.0, u)
    e_clip = energy_value(grid, spec, tf, 2.0, clipped.enforce_boundary())
    assert e_clip < e_raw - 1e-6


def test_clip_identity_in_box(tent):
    grid = RadialGrid.uniform(1.0, 1, 101)
    spec = NFunctionSpec.power(2.0)
    tf = truncate(tent, 2)
    vals = np.minimum(2.0, 1.5 * (1.0 - grid.r))
    vals[-1] = 0.0
    u = GridFunction(grid, vals)
    e_raw = energy_value(grid, spec, tf, 2.0, u)
    clipped = GridFunction(grid, np.clip(vals, 0.0, tf.cut))
    assert energy_value(grid, spec, tf, 2.0, clipped) == e_raw


def test_lambda_must_be_nonnegative(tent):
    grid = RadialGrid.uniform(1.0, 1, 33)
    with pytest.raises(ValueError):
        energy_value(grid, NFunctionSpec.power(2.0), truncate(tent, 2), -1.0,
                     GridFunction(grid, np.zeros(33)))
