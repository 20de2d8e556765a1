import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from fictitious_monopoly import (
    AdditiveSeparable, CobbDouglas, Custom, Finite, GameSpec, IsoelasticPricing,
    coestate_gamma, competition_index, derive_monopoly, fictitious_bequest,
    fictitious_dynamics, symmetric_reduce, terminal_strategy,
)
from fictitious_monopoly.errors import ParameterError, SingularPayoffError
from fictitious_monopoly.game_model import log_fn, neg_exp, quadratic
from fictitious_monopoly.symmetric_equiv import foc_defect, identification_defects


def test_fictitious_dynamics_cobb_douglas(cd_profile):
    f = fictitious_dynamics(cd_profile, 2)
    u = np.geomspace(0.1, 10, 5)
    assert np.allclose(f(u), -0.75 * u, rtol=1e-14)


def test_gamma_power_law(cd_profile):
    g = coestate_gamma(cd_profile, rho=0.05, r=0.05, C=2.0, u_ref=1.0)
    u = np.geomspace(0.1, 10, 9)
    assert np.allclose(g(u), 2.0 * u**-0.4, rtol=1e-13)
    gq = coestate_gamma(cd_profile, rho=0.05, r=0.05, C=2.0, u_ref=1.0, method="quadrature",
                        domain=(1e-2, 1e2))
    assert np.max(np.abs(gq(u) / g(u) - 1)) < 1e-10


def test_closed_form_and_quadrature_agree(cd_spec):
    a = derive_monopoly(cd_spec)
    b = derive_monopoly(cd_spec, method="quadrature")
    assert a.provenance == "closed_form" and b.provenance == "quadrature"
    u = np.geomspace(0.05, 20, 30)
    assert np.max(np.abs(a.ell(u) - b.ell(u))) < 1e-9
    assert np.max(np.abs(a.gamma(u) - b.gamma(u)) / a.gamma(u)) < 1e-9


def test_monopoly_payoff_is_increasing_and_concave(cd_spec):
    oc = derive_monopoly(cd_spec)
    assert oc.meta["ell_concave"] and oc.meta["ell_increasing"]


def test_identification_and_foc(cd_spec, cd_profile):
    oc = derive_monopoly(cd_spec)
    d = identification_defects(cd_profile, oc)
    assert d["f"] < 1e-12 and d["gamma"] < 1e-12
    assert foc_defect(oc) < 1e-8


@given(st.floats(0.55, 0.95), st.floats(0.6, 1.4), st.integers(2, 4), st.floats(0.01, 0.2))
@settings(max_examples=15, deadline=None)
def test_derive_cobb_douglas_property(alpha, beta, N, r):
    cd = CobbDouglas(alpha, beta)
    if cd.standing_gap(N) >= 0:
        return
    spec = GameSpec(N, cd, r=r)
    oc = derive_monopoly(spec)
    assert oc.meta["identification"]["f"] <= 1e-8
    assert oc.meta["foc"] <= 1e-6


def test_pricing_log_case_is_singular():
    # rho / (eta1 r) = 1 with eta1 = 2
    spec = GameSpec(2, IsoelasticPricing(0.5), r=0.1)
    with pytest.raises(SingularPayoffError):
        derive_monopoly(spec, rho=0.2)


def test_rho_zero_with_discounting_rejected(cd_spec):
    with pytest.raises(ParameterError):
        derive_monopoly(cd_spec, rho=0.0)


def test_additive_quadrature_path():
    spec = GameSpec(2, AdditiveSeparable(neg_exp(1.0), quadratic(-0.5)), r=0.05,
                    rate_domain=(1e-3, 50.0))
    oc = derive_monopoly(spec, u_range=(0.1, 5.0))
    assert oc.provenance == "quadrature"
    assert oc.meta["identification"]["gamma"] < 1e-5
    assert oc.meta["foc"] < 1e-6


def test_custom_game_matches_closed_form(cd_spec):
    a, b = 0.6, 0.8
    spec = GameSpec(2, Custom(lambda o, t, N: o ** (1 - a) / (1 - a) * t ** ((N - 1) * (1 - b))),
                    r=0.05, rate_domain=(1e-3, 1e3))
    oc = derive_monopoly(spec, u_range=(0.1, 10.0))
    ref = derive_monopoly(cd_spec)
    u = np.geomspace(0.2, 8, 12)
    assert np.max(np.abs(oc.f(u) - ref.f(u)) / np.abs(ref.f(u))) < 1e-5


def test_terminal_strategy_closed_form(cd_finite_r0):
    tm = terminal_strategy(cd_finite_r0)
    x = np.geomspace(0.05, 20, 17)
    assert np.max(np.abs(tm.phi(x) / x**2.5 - 1)) < 1e-13
    assert tm.invertible
    # phi' from the implicit function theorem
    assert np.max(np.abs(tm.phi.derivative(x) / (2.5 * x**1.5) - 1)) < 1e-12


def test_finite_horizon_bequest_r0(cd_finite_r0):
    oc = derive_monopoly(cd_finite_r0, rho=0.0, C=1.0)
    x = np.geomspace(0.05, 50, 11)
    # gamma is constant C so b is affine with slope C
    assert np.allclose(oc.bequest.derivative(x), 1.0, atol=1e-12)
    assert np.allclose(oc.bequest(x) - oc.bequest(x[0]), x - x[0], atol=1e-10)


def test_discounted_finite_bequest():
    spec = GameSpec(2, CobbDouglas(0.6, 0.8), r=0.05, horizon=Finite(2.0, log_fn(1.0)))
    oc = derive_monopoly(spec, C=1.0)
    prof = symmetric_reduce(spec)
    x = np.geomspace(0.05, 50, 9)
    # b'(x) = gamma(phi(x)) = (x**2.5)**-0.4 = 1/x
    assert np.max(np.abs(oc.bequest.derivative(x) * x - 1)) < 1e-10
    assert competition_index(prof, 2) == pytest.approx(0.625)


def test_competition_index_formula(cd_profile):
    u = np.array([0.5, 2.0])
    assert np.allclose(competition_index(cd_profile, 2, u), 0.5 * 1.25, rtol=1e-14)


def test_bequest_without_terminal_map(cd_profile):
    b = fictitious_bequest(None, cd_profile, 0.05, 0.05)
    assert b(np.array([1.0, 2.0])).tolist() == [0.0, 0.0]
