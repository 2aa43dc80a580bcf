"""N-function toolkit tests.

Derived expectations are computed by independent oracles: scipy quadrature
for integrals, closed-form Legendre transforms, and scalar root finding for
the norm bisection cross-check.
"""

import numpy as np
import pytest
from scipy.integrate import quad
from scipy.optimize import brentq

from phibump import (
    GridFunction,
    NFunctionSpec,
    RadialGrid,
    big_phi,
    conjugate_eval,
    delta2_index,
    g_eval,
    g_inverse,
    luxemburg_norm,
)
from phibump.exceptions import RangeError
from phibump.nfunction import check_generator, g_vec, phi_big_vec

E = np.e

FAMILIES = [
    NFunctionSpec.power(1.5),
    NFunctionSpec.power(2.0),
    NFunctionSpec.power(3.0),
    NFunctionSpec.exp_growth(),
    NFunctionSpec.power_gamma(0.75),
    NFunctionSpec.power_gamma(2.0),
    NFunctionSpec.p_log(1.0),
    NFunctionSpec.p_log(2.0),
    NFunctionSpec.two_power(1.3, 4.0),
]


def _ids(specs):
    return [f"{s.kind}{s.params}" for s in specs]


# ---------------------------------------------------------------------------
# big_phi


def test_big_phi_power_closed_form():
    assert big_phi(NFunctionSpec.power(2.0), 2.0) == pytest.approx(2.0, abs=1e-14)


def test_big_phi_exp_matches_quadrature_oracle():
    # Phi(1) = integral of (e^s - 1) over [0, 1] = e - 2
    oracle, err = quad(lambda s: np.expm1(s), 0.0, 1.0, epsabs=1e-14)
    assert err < 1e-12
    assert big_phi(NFunctionSpec.exp_growth(), 1.0) == pytest.approx(oracle, rel=1e-12)
    assert big_phi(NFunctionSpec.exp_growth(), 1.0) == pytest.approx(E - 2.0, rel=1e-12)


@pytest.mark.parametrize("spec", FAMILIES, ids=_ids(FAMILIES))
def test_big_phi_zero_and_even(spec):
    assert big_phi(spec, 0.0) == 0.0
    assert big_phi(spec, -1.7) == pytest.approx(big_phi(spec, 1.7), rel=1e-15)


def test_big_phi_custom_quadrature_matches_power():
    custom = NFunctionSpec.custom(lambda t: np.ones_like(np.asarray(t, dtype=float)))
    for t in [0.3, 1.0, 7.5]:
        assert big_phi(custom, t) == pytest.approx(t * t / 2.0, rel=1e-9)


def test_big_phi_rejects_nonfinite():
    with pytest.raises(ValueError):
        big_phi(NFunctionSpec.power(2.0), np.inf)


# ---------------------------------------------------------------------------
# g_eval / g_inverse


def test_g_eval_examples():
    assert g_eval(NFunctionSpec.power(3.0), 2.0) == pytest.approx(4.0, abs=1e-14)
    assert g_eval(NFunctionSpec.power(3.0), 0.0) == 0.0
    assert g_eval(NFunctionSpec.exp_growth(), 1.0) == pytest.approx(E - 1.0, rel=1e-14)


@pytest.mark.parametrize("spec", FAMILIES, ids=_ids(FAMILIES))
def test_g_eval_odd(spec):
    for z in [0.1, 1.0, 13.7]:
        assert g_eval(spec, -z) == pytest.approx(-g_eval(spec, z), rel=1e-15)


def test_g_inverse_examples():
    assert g_inverse(NFunctionSpec.power(3.0), 4.0) == pytest.approx(2.0, rel=1e-12)
    assert g_inverse(NFunctionSpec.power(3.0), 0.0) == 0.0
    assert g_inverse(NFunctionSpec.exp_growth(), E - 1.0) == pytest.approx(1.0, rel=1e-12)


@pytest.mark.parametrize("spec", FAMILIES, ids=_ids(FAMILIES))
def test_g_round_trip(spec):
    # overflow region of the exponential family is excluded (G saturates to inf)
    for z in np.geomspace(1e-6, 1e3, 60):
        w = g_eval(spec, z)
        if not np.isfinite(w):
            continue
        assert g_inverse(spec, w) == pytest.approx(z, rel=1e-10)
        assert g_inverse(spec, -w) == pytest.approx(-z, rel=1e-10)


def test_g_inverse_range_error():
    with pytest.raises(RangeError):
        g_inverse(NFunctionSpec.power(1.1), 1e40)  # root would be 1e400
    with pytest.raises(RangeError):
        g_inverse(NFunctionSpec.p_log(1.0), 800.0)  # root would be ~ e^799


# ---------------------------------------------------------------------------
# conjugate


def test_conjugate_power_legendre_oracle():
    # conjugate of t^p/p is s^(p')/p'
    for p in [1.5, 2.0, 3.0]:
        spec = NFunctionSpec.power(p)
        pc = p / (p - 1.0)
        for s in [0.3, 1.0, 4.2]:
            assert conjugate_eval(spec, s) == pytest.approx(s**pc / pc, rel=1e-10)
    assert conjugate_eval(NFunctionSpec.power(2.0), 1.0) == pytest.approx(0.5, rel=1e-12)


def test_conjugate_exp_legendre_oracle():
    # conjugate of e^t - t - 1 is (1+s) log(1+s) - s
    spec = NFunctionSpec.exp_growth()
    for s in [0.5, E - 1.0, 10.0]:
        oracle = (1.0 + s) * np.log1p(s) - s
        assert conjugate_eval(spec, s) == pytest.approx(oracle, rel=1e-12)
    assert conjugate_eval(spec, E - 1.0) == pytest.approx(1.0, rel=1e-12)


@pytest.mark.parametrize("spec", FAMILIES, ids=_ids(FAMILIES))
def test_conjugate_zero(spec):
    assert conjugate_eval(spec, 0.0) == 0.0


# ---------------------------------------------------------------------------
# invariants: convexity, Young, derivative consistency


@pytest.mark.parametrize("spec", FAMILIES, ids=_ids(FAMILIES))
def test_midpoint_convexity(spec):
    rng = np.random.default_rng(42)
    s, t = rng.uniform(0.0, 50.0, (2, 200))
    ps, pt = phi_big_vec(spec, s), phi_big_vec(spec, t)
    mid = phi_big_vec(spec, 0.5 * (s + t))
    keep = np.isfinite(ps) & np.isfinite(pt) & np.isfinite(mid)
    slack = 1e-12 * (1.0 + ps[keep] + pt[keep])
    assert np.all(mid[keep] <= 0.5 * (ps[keep] + pt[keep]) + slack)


@pytest.mark.parametrize("spec", FAMILIES, ids=_ids(FAMILIES))
def test_young_inequality_and_equality_case(spec):
    rng = np.random.default_rng(7)
    for t, s in rng.uniform(0.01, 20.0, (200, 2)):
        ph = big_phi(spec, t)
        if not np.isfinite(ph):
            continue
        conj = conjugate_eval(spec, s)
        assert t * s <= ph + conj + 1e-9 * (1.0 + t * s)
        s_eq = g_eval(spec, t)
        if not np.isfinite(s_eq):
            continue
        gap = t * s_eq - ph - conjugate_eval(spec, s_eq)
        assert abs(gap) <= 1e-8 * (1.0 + t * s_eq)


@pytest.mark.parametrize("spec", FAMILIES, ids=_ids(FAMILIES))
def test_derivative_of_phi_matches_g(spec):
    for t in [0.1, 0.7, 3.0, 41.0]:
        h = 1e-5 * max(1.0, t)
        fd = (big_phi(spec, t + h) - big_phi(spec, t - h)) / (2.0 * h)
        g = g_eval(spec, t)
        if not (np.isfinite(fd) and np.isfinite(g)):
            continue
        assert fd == pytest.approx(g, rel=1e-5)


# ---------------------------------------------------------------------------
# Luxemburg norm


def test_luxemburg_constant_closed_form():
    # Phi = t^2/2, u = c on a domain of measure m: norm = c sqrt(m / 2)
    spec = NFunctionSpec.power(2.0)
    grid = RadialGrid.uniform(2.0, 1, 101)  # measure 2
    c = 3.0
    u = GridFunction(grid, np.full(grid.n, c))
    assert luxemburg_norm(spec, u) == pytest.approx(c * np.sqrt(2.0 / 2.0), abs=1e-8)
    grid2 = RadialGrid.uniform(1.0, 2, 101)  # disk, measure pi
    u2 = GridFunction(grid2, np.full(grid2.n, c))
    assert luxemburg_norm(spec, u2) == pytest.approx(c * np.sqrt(np.pi / 2.0), abs=1e-8)


def test_luxemburg_zero_function():
    grid = RadialGrid.uniform(1.0, 1, 11)
    assert luxemburg_norm(NFunctionSpec.power(2.0), GridFunction(grid, np.zeros(11))) == 0.0


def test_luxemburg_exp_matches_scalar_root_oracle():
    # u = 1 on unit measure: lam solves Phi(1/lam) = 1, solved independently
    spec = NFunctionSpec.exp_growth()
    grid = RadialGrid.uniform(1.0, 1, 81)
    u = GridFunction(grid, np.ones(grid.n))
    oracle = 1.0 / brentq(lambda x: np.expm1(x) - x - 1.0, 1e-8, 10.0, xtol=1e-14)
    assert luxemburg_norm(spec, u) == pytest.approx(oracle, rel=1e-8)


@pytest.mark.parametrize("spec", [NFunctionSpec.power(2.0), NFunctionSpec.exp_growth(),
                                  NFunctionSpec.p_log(1.0)], ids=["pow2", "exp", "plog1"])
def test_luxemburg_homogeneity_and_triangle(spec):
    rng = np.random.default_rng(3)
    grid = RadialGrid.uniform(1.0, 1, 64)
    for _ in range(10):
        u = GridFunction(grid, rng.uniform(0.0, 2.0, grid.n))
        v = GridFunction(grid, rng.uniform(0.0, 2.0, grid.n))
        c = rng.uniform(0.1, 5.0)
        nu = luxemburg_norm(spec, u)
        assert luxemburg_norm(spec, u.with_values(c * u.values)) == pytest.approx(
            c * nu, rel=1e-8)
        nsum = luxemburg_norm(spec, u.with_values(u.values + v.values))
        assert nsum <= nu + luxemburg_norm(spec, v) + 1e-8 * (1.0 + nsum)


def test_luxemburg_rejects_bad_tol():
    grid = RadialGrid.uniform(1.0, 1, 11)
    with pytest.raises(ValueError):
        luxemburg_norm(NFunctionSpec.power(2.0), GridFunction(grid, np.ones(11)), tol=0.0)


# ---------------------------------------------------------------------------
# Delta2 diagnostics


def test_delta2_power_exact_indices():
    for p in [1.5, 2.5, 4.0]:
        rep = delta2_index(NFunctionSpec.power(p), 1e-3, 1e3)
        assert rep.ell_estimate == pytest.approx(p, abs=1e-8)
        assert rep.m_estimate == pytest.approx(p, abs=1e-8)
        assert rep.holds_phi and rep.holds_conjugate
        assert rep.ell_estimate <= rep.m_estimate


def test_delta2_two_power_brackets():
    rep = delta2_index(NFunctionSpec.two_power(1.4, 3.7), 1e-4, 1e4)
    assert rep.ell_estimate == pytest.approx(1.4, abs=1e-3)
    assert rep.m_estimate == pytest.approx(3.7, abs=1e-3)
    assert rep.holds_phi and rep.holds_conjugate


def test_delta2_exp_growth_fails():
    rep = delta2_index(NFunctionSpec.exp_growth(), 1.0, 100.0)
    assert rep.m_estimate > 50.0
    assert not rep.holds_phi
    assert rep.holds_conjugate  # the conjugate side of this family is fine


def test_delta2_p_log1_conjugate_fails():
    rep = delta2_index(NFunctionSpec.p_log(1.0), 1.0, 1e6)
    assert 1.0 < rep.ell_estimate < 1.08
    assert not rep.holds_conjugate
    assert rep.holds_phi  # the ratio stays bounded above


def test_delta2_power_gamma_is_not_misflagged():
    rep = delta2_index(NFunctionSpec.power_gamma(2.0), 0.1, 1.0)
    assert rep.holds_phi  # increasing but saturating ratio must not look divergent
    rep = delta2_index(NFunctionSpec.power_gamma(0.75), 1.0, 100.0)
    assert rep.holds_conjugate  # decreasing toward 1.5 must not look degenerate


def test_delta2_rejects_bad_range():
    with pytest.raises(ValueError):
        delta2_index(NFunctionSpec.power(2.0), 1.0, 0.5)


# ---------------------------------------------------------------------------
# spec construction and sampled generator checks


def test_spec_parameter_validation():
    with pytest.raises(ValueError):
        NFunctionSpec.power(1.0)
    with pytest.raises(ValueError):
        NFunctionSpec.power_gamma(0.5)
    with pytest.raises(ValueError):
        NFunctionSpec.p_log(0.9)
    with pytest.raises(ValueError):
        NFunctionSpec.two_power(2.0, 2.0)
    with pytest.raises(ValueError):
        NFunctionSpec("custom")


@pytest.mark.parametrize("spec", FAMILIES, ids=_ids(FAMILIES))
def test_generator_monotone_on_samples(spec):
    assert check_generator(spec) == []
    ts = np.geomspace(1e-4, 50.0, 200)
    gv = g_vec(spec, ts)
    assert np.all(np.diff(gv) > 0)


def test_check_generator_flags_decreasing_custom():
    bad = NFunctionSpec.custom(lambda t: 1.0 / (np.asarray(t) ** 2 + 1e-12))
    issues = check_generator(bad, t_min=1e-2, t_max=1e2, samples=50)
    assert any("g-monotone" in s for s in issues)


def test_check_generator_accepts_custom_power():
    ok = NFunctionSpec.custom(lambda t: np.asarray(t, dtype=float))  # phi(t) = t, p = 3
    assert check_generator(ok, t_min=1e-6, t_max=1e6, samples=100) == []
