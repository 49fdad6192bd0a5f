import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from cvxlsi import costs, inequalities as ineq, measures, transport_map as tm, weak_ot
from cvxlsi.infconv import GridFunction as GF

H = costs.quadratic(1.0)
THETA = H.theta
LN2 = math.log(2.0)
FAM = ineq.TestFunctionFamily(seed=0, count=50)


@pytest.fixture(scope="module")
def gauss_disc():
    return measures.discretize(measures.family("gaussian", 0.0, 1.0), 10 ** 4)


@pytest.fixture(scope="module")
def tau_disc():
    return measures.discretize(tm.tau(), 10 ** 4)


def linear(s, span=10.0):
    return GF.piecewise_linear([], [s], value_at_first=-s * span, span=span)


# -- functionals -------------------------------------------------------------

def test_entropy_constant_is_zero(gauss_disc):
    assert ineq.entropy(gauss_disc, GF.constant(3.0, 5.0)) == pytest.approx(0.0, abs=1e-12)


def test_entropy_two_point():
    phi = GF.piecewise_linear([], [LN2], value_at_first=-LN2, span=1.0)  # 0 at 0, ln2 at 1
    expect = LN2 - 1.5 * math.log(1.5)
    assert ineq.entropy(measures.two_point(), phi) == pytest.approx(expect, abs=1e-14)
    assert expect == pytest.approx(0.08494, abs=1e-5)


@settings(max_examples=20, deadline=None)
@given(st.floats(-3, 3), st.floats(-2, 2))
def test_entropy_homogeneity_and_sign(logc, s):
    mu = measures.Atoms([-1.0, 0.0, 0.5, 2.0], [0.1, 0.4, 0.3, 0.2])
    phi = linear(s)
    e1 = ineq.entropy(mu, phi)
    e2 = ineq.entropy(mu, phi.plus(logc))
    assert e1 >= 0
    assert e2 == pytest.approx(math.exp(logc) * e1, rel=1e-9, abs=1e-14)


def test_relative_entropy():
    tp = measures.two_point()
    assert ineq.relative_entropy(tp, tp) == 0.0
    assert ineq.relative_entropy(measures.dirac(0.0), tp) == pytest.approx(LN2, abs=1e-15)
    assert ineq.relative_entropy(measures.dirac(0.5), tp) == math.inf


def test_variance_linear(gauss_disc):
    assert ineq.variance(gauss_disc, linear(2.0)) == pytest.approx(4 * gauss_disc.variance(), rel=1e-9)


# -- test-function family ----------------------------------------------------

def test_family_deterministic_and_convex(gauss_disc):
    a = ineq.generate_tests(FAM, gauss_disc)
    b = ineq.generate_tests(FAM, gauss_disc)
    assert [f.label for f in a] == [f.label for f in b]
    for f, g in zip(a, b):
        assert np.array_equal(f.values, g.values)
        assert np.all(np.diff(f.slopes) >= -1e-12)
        assert f.lip <= FAM.L + 1e-12
    assert any(f.label.startswith("hinge+") for f in a)


def test_family_breaks_avoid_atoms():
    mu = measures.Atoms(np.arange(5.0), np.full(5, 0.2))
    for f in ineq.generate_tests(ineq.TestFunctionFamily(seed=3, count=100), mu):
        if f.kinks.size:
            assert np.min(np.abs(f.kinks[:, None] - mu.x[None, :])) >= 0.25 - 1e-12


# -- LSI ---------------------------------------------------------------------

def test_lsi_constant_passes(gauss_disc):
    rep = ineq.lsi_test(gauss_disc, H, 1.0, [GF.constant(0.0, 5.0)])
    assert rep.passed and rep["worst_ratio"] == 0.0


def test_lsi_gaussian_linear_edge(gauss_disc):
    lin = [linear(1.0)]
    assert ineq.lsi_test(gauss_disc, H, math.sqrt(2), lin).passed
    assert not ineq.lsi_test(gauss_disc, H, 0.99 * math.sqrt(2), lin).passed
    assert ineq.lsi_test(gauss_disc, H, math.sqrt(2), lin)["worst_ratio"] == pytest.approx(1.0, abs=5e-3)


def test_lsi_gaussian_family(gauss_disc):
    assert ineq.lsi_test(gauss_disc, H, 1.5, FAM).passed


def test_lsi_tau_fails(tau_disc):
    for c in (1.0, 2.0):
        rep = ineq.lsi_test(tau_disc, H, c, FAM)
        assert not rep.passed
        assert rep.witness["function"].startswith("hinge")
    assert not ineq.lsi_test(tm.tau(), H, 5.0, FAM).passed


# -- Poincare ----------------------------------------------------------------

@pytest.mark.parametrize("u", [0.1, 0.25, 0.5, 0.75])
def test_poincare_two_point_hinge(u):
    hinge = [GF.piecewise_linear([u], [0.0, 1.0], span=2.0)]
    tp = measures.two_point()
    assert ineq.convex_poincare_test(tp, 1 / (1 - u), hinge).passed
    assert not ineq.convex_poincare_test(tp, 1.01 / (1 - u), hinge).passed
    assert ineq.convex_poincare_test(tp, 1.0, hinge)["a_max"] == pytest.approx(1 / (1 - u), rel=1e-12)


def test_poincare_linear(gauss_disc):
    rep = ineq.convex_poincare_test(gauss_disc, 0.5, [linear(0.7)])
    assert rep["a_max"] == pytest.approx(1 / math.sqrt(2 * gauss_disc.variance()), rel=1e-9)


def test_poincare_constant(gauss_disc):
    assert ineq.convex_poincare_test(gauss_disc, 100.0, [GF.constant(1.0, 5.0)]).passed


# -- dual forms and bounded support --------------------------------------------

@pytest.mark.parametrize("mode", ["minus", "plus", "two-sided"])
def test_dual_ic_constant_equality(gauss_disc, mode):
    rep = ineq.dual_ic_test(gauss_disc, THETA, 1.0, mode, [GF.constant(0.7, 5.0)])
    assert rep.passed and rep["worst_ratio"] == pytest.approx(1.0, abs=1e-12)


def test_dual_ic_uniform_theta_D():
    D = 2.0
    rep = ineq.dual_ic_test(measures.family("uniform", 0.0, D), costs.theta_D(D), 1.0, "two-sided", FAM)
    assert rep.passed


def test_dual_ic_bad_mode(gauss_disc):
    with pytest.raises(ValueError):
        ineq.dual_ic_test(gauss_disc, THETA, 1.0, "sideways", FAM)


def test_bounded_support_forward():
    assert ineq.bounded_support_ic_test(measures.family("uniform", 0.0, 2.0), 2.0, family=FAM).passed
    assert ineq.bounded_support_ic_test(measures.dirac(0.3), 1.0, family=FAM).passed
    assert not ineq.bounded_support_ic_test(measures.two_point(0.0, 3.0), 2.0, family=FAM).passed


def test_bounded_support_adversarial():
    D = 2.0
    rep = ineq.bounded_support_ic_test(measures.two_point(0.0, D + 1.0), D, adversarial=True)
    assert rep.passed and rep["found"] and math.isfinite(rep["a"])
    assert rep["log_product"] > 0
    assert not ineq.bounded_support_ic_test(measures.two_point(0.0, 1.0), D, adversarial=True).passed


# -- constants ---------------------------------------------------------------

def test_constant_chain_values():
    out = ineq.constant_chain("b_to_c", b=1.0, cost=THETA, t0=1.0)
    assert out["kappa"] == pytest.approx(1 / (210 * math.sqrt(3)), rel=1e-14)
    assert out["c"] == pytest.approx(210 * math.sqrt(3), rel=1e-14)
    assert ineq.constant_chain("c_to_a", c=7.0, cost=H)["a"] == pytest.approx(1 / 7.0, rel=1e-14)
    d = ineq.constant_chain("c_to_delta", c=3.0, h=[0.0, 2.0])
    assert d["delta_bound_sharpened"][0] == pytest.approx(16 * 3.0 / 3, rel=1e-14)
    assert d["delta_bound"][1] == pytest.approx(16 * 3.0 * (2 / 3 + 1.0), rel=1e-14)
    ab = ineq.constant_chain("a_to_b", a=1.0, cost=THETA, t0=1.0)
    assert ab["b"] == pytest.approx(1 / (8 * math.sqrt(math.log(3) + 1)), rel=1e-12)
    assert 0 < ab["b_minus"] < 1 / 16
    with pytest.raises(ValueError):
        ineq.constant_chain("c_to_z", c=1.0)


def test_classical_ot_examples(gauss_disc):
    tp = measures.two_point()
    assert ineq.classical_ot_1d(tp, tp, THETA) == 0.0
    assert ineq.classical_ot_1d(measures.dirac(1.0), measures.dirac(3.0), THETA) == pytest.approx(4.0)
    assert ineq.classical_ot_1d(tp, measures.two_point(0.5, 1.5), THETA) == pytest.approx(0.25, abs=1e-14)
    shifted = measures.Atoms(gauss_disc.x + 0.3, gauss_disc.w)
    assert ineq.classical_ot_1d(gauss_disc, shifted, THETA) == pytest.approx(0.09, rel=1e-12)


# -- cross-checks between conditions -------------------------------------------

def test_coherence_gaussian_vs_tau(gauss_disc, tau_disc):
    g = tm.criterion_check(gauss_disc, THETA)
    assert g.passed
    c = ineq.constant_chain("b_to_c", b=g["b_best"], cost=THETA)["c"]
    a = ineq.constant_chain("c_to_a", c=c, cost=H)["a"]
    assert ineq.lsi_test(gauss_disc, H, c, FAM).passed
    assert ineq.dual_ic_test(gauss_disc, costs.transform(THETA, 1.0, a), 1.0, "minus", FAM).passed
    assert ineq.convex_poincare_test(gauss_disc, a, FAM).passed
    assert not tm.criterion_check(tm.tau(), THETA).passed
    assert not ineq.lsi_test(tm.tau(), H, 5.0, FAM).passed


@pytest.mark.parametrize("name,args,c", [("gaussian", (0.0, 1.0), 1.5), ("uniform", (0.0, 1.0), 1.5)])
def test_lsi_implies_modulus_bound(name, args, c):
    mu = measures.discretize(measures.family(name, *args), 2000)
    assert ineq.lsi_test(mu, H, c, FAM).passed
    h = tm.DEFAULT_H_GRID
    delta = tm.modulus_curve(mu, h).delta
    assert np.all(delta <= ineq.delta_bound(c, h))
    assert np.all(delta <= ineq.delta_bound(c, h, sharpened=True))


def test_talagrand_relation(gauss_disc, tau_disc):
    # atomic laws never satisfy a quadratic transport inequality (moving mass eps
    # across a fixed gap costs O(eps) against O(eps^2) entropy), so the
    # Gaussian side uses exponential tilts of the closed form: N(s, 1), H = s^2/2
    g = measures.family("gaussian", 0.0, 1.0)
    for s in (-1.0, -0.3, 0.4, 1.2):
        w2 = ineq.classical_ot_1d(g, measures.family("gaussian", s, 1.0), THETA)
        assert w2 <= 2 * (s * s / 2) * (1 + 1e-6)
    g64 = measures.discretize(g, 64)
    nu = weak_ot.tilt(g64, 0.01)
    assert ineq.classical_ot_1d(g64, nu, THETA) > 2 * ineq.relative_entropy(nu, g64)
    assert ineq.convex_poincare_test(gauss_disc, 1 / math.sqrt(2), FAM).passed
    assert ineq.lsi_test(gauss_disc, H, 1.5, FAM).passed
    # tau: Poincare with constant 4 holds, quadratic LSI does not
    assert ineq.convex_poincare_test(tau_disc, 1 / (2 * math.sqrt(2)), FAM).passed
    assert not ineq.lsi_test(tau_disc, H, 2.0, FAM).passed
