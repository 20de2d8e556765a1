import numpy as np
import pytest

from fictitious_monopoly import (
    AdditiveSpec, bequest_link_check, build_matrix_A, construct_additive_oc, eigen_pair,
    eigen_structure, rationalizability_test, theta_ode,
)
from fictitious_monopoly.additive_duopoly import (
    SHAPES, bequest_template, discriminant, left_eigenvector,
)
from fictitious_monopoly.errors import (
    ComplexEigenError, DegenerateError, HypothesisError, ParameterError,
)
from fictitious_monopoly.game_model import linear, neg_exp, quadratic, zero


def cara_spec(c1=-1.0, c2=-1.0, **kw):
    return AdditiveSpec(neg_exp(1.0), neg_exp(1.0), quadratic(c1), quadratic(c2), **kw)


def symmetric_linear_spec():
    # CARA owns without cross effects: E_i = 1, E_ij = 0, A = [[-u1-u2, 1], [1, -u1-u2]]
    return AdditiveSpec(neg_exp(1.0), neg_exp(1.0), zero(), zero(),
                        B1=neg_exp(1.0), B2=neg_exp(1.0), rate_domain=(0.01, 3.0))


def test_matrix_and_eigenpairs():
    spec = symmetric_linear_spec()
    A = build_matrix_A(spec, 1.0, 1.0)
    es = eigen_pair(spec, 1.0, 1.0)
    for lam, s in ((es.lam, es.s_lambda), (es.mu, es.s_mu)):
        assert np.max(np.abs(A @ s - lam * s)) < 1e-12
    assert es.lam > es.mu
    ev = np.sort(np.linalg.eigvals(A))
    assert np.allclose([es.mu, es.lam], ev, rtol=1e-12)


def test_eigen_structure_grid():
    spec = cara_spec()
    g = np.linspace(0.1, 3, 20)
    U1, U2 = np.meshgrid(g, g, indexing="ij")
    es = eigen_structure(spec, U1, U2)
    A = build_matrix_A(spec, U1, U2)
    for lam, s in ((es.lam, es.s_lambda), (es.mu, es.s_mu)):
        r = np.einsum("...ij,...j->...i", A, s) - lam[..., None] * s
        assert np.max(np.abs(r)) < 1e-9 * np.max(np.abs(A))
    assert np.all(es.lam > es.mu)


def test_left_eigenvector():
    spec = cara_spec()
    A = build_matrix_A(spec, 0.5, 1.5)
    es = eigen_pair(spec, 0.5, 1.5)
    w = left_eigenvector(spec, 0.5, 1.5, "lambda")
    assert np.max(np.abs(w @ A - es.lam * w)) < 1e-9 * np.max(np.abs(A))


def test_complex_and_degenerate_points():
    spec = AdditiveSpec(neg_exp(1.0), neg_exp(1.0), zero(), quadratic(1.0))
    with pytest.raises(ComplexEigenError):
        eigen_pair(spec, 2.0, 2.0)
    # E2 - E21 = 1 - 2 u1 e^{u2} vanishes at u1 = e^{-u2}/2
    with pytest.raises(DegenerateError):
        eigen_pair(spec, 0.5 * np.exp(-1.0), 1.0)


def test_verdicts():
    assert rationalizability_test(cara_spec(-1, -1)).verdict == "Rationalizable-candidate"
    # positive externality on player 2: E2 - E21 = 1 - 2 e^{u2} < 0 everywhere
    spec = AdditiveSpec(neg_exp(1.0), neg_exp(1.0), zero(), linear(2.0))
    v = rationalizability_test(spec)
    assert v.verdict == "NotRationalizable" and v.counts["negative"] == 2500
    assert v.witnesses and all(w["discriminant"] < 0 for w in v.witnesses)
    mixed = AdditiveSpec(neg_exp(1.0), neg_exp(1.0), zero(), quadratic(1.0))
    assert rationalizability_test(mixed).verdict == "Mixed"


def test_negative_externality_family_has_positive_discriminant():
    # cross2 = -d u, d alpha2 > 1: E2 - E21 = 1/alpha2 + d e^{alpha2 u2}/alpha2^2 > 0
    for d, a2 in ((2.0, 1.0), (3.0, 0.5), (5.0, 2.0)):
        spec = AdditiveSpec(neg_exp(1.0), neg_exp(a2), zero(), linear(-d))
        assert rationalizability_test(spec).verdict == "Rationalizable-candidate"


def test_degenerate_flag():
    # disc zero on the line u1 = 1/2, e^{u2} factor removed by the choice of region
    spec = AdditiveSpec(neg_exp(1.0), neg_exp(1.0), zero(), linear(1.0))
    v = rationalizability_test(spec, region=((0.0, 1.0), (0.0, 2.0)), n=51)
    assert v.degenerate and v.verdict == "Mixed"


def test_theta_symmetric_branches():
    spec = symmetric_linear_spec()
    plus = theta_ode(spec, "plus", anchor=(1.0, 1.0))
    u = np.linspace(0.2, 2.5, 15)
    assert np.max(np.abs(plus(u) - u)) < 1e-10
    minus = theta_ode(spec, "minus", anchor=(1.0, 1.0), u_range=(0.2, 1.8))
    assert np.max(np.abs(minus(u[u < 1.8]) - (2 - u[u < 1.8]))) < 1e-10


def test_bequest_link():
    spec = symmetric_linear_spec()
    theta = theta_ode(spec, "plus", anchor=(1.0, 1.0))
    x = np.linspace(0.2, 0.9, 20)
    assert bequest_link_check(spec, theta, x).passed
    bad = AdditiveSpec(spec.own1, spec.own2, spec.cross1, spec.cross2,
                       B1=neg_exp(1.0), B2=neg_exp(2.0), rate_domain=spec.rate_domain)
    assert not bequest_link_check(bad, theta, x).passed


def test_construct_monopoly_plus_branch():
    spec = symmetric_linear_spec()
    theta = theta_ode(spec, "plus", anchor=(1.0, 1.0))
    oc = construct_additive_oc(spec, theta, "plus", u_range=(0.2, 2.5))
    u = np.linspace(0.3, 2.4, 9)
    # lambda = -1 along the diagonal gives f = 1 - 2u in this normalisation
    assert np.allclose(oc.f.derivative(u), -2.0, atol=1e-6)
    assert oc.meta["ell_second_max"] < 0
    assert oc.rho == 0.0


def test_construct_monopoly_minus_branch_fails():
    spec = symmetric_linear_spec()
    theta = theta_ode(spec, "minus", anchor=(1.0, 1.0), u_range=(0.2, 1.8))
    with pytest.raises(HypothesisError):
        construct_additive_oc(spec, theta, "minus")


@pytest.mark.parametrize("shape", SHAPES)
def test_bequest_templates(shape):
    b, db, d2b = bequest_template(shape, 1.0, 2.0)
    x = np.linspace(1.0, 3.0, 21)
    inc = shape[0] == "increasing"
    assert np.all((db(x) > 0) == inc)
    assert np.all((d2b(x) > 0) == (shape[1] == "convex"))
    assert np.all((np.abs(db(x)) >= 0.5 - 1e-12) & (np.abs(db(x)) <= 2 + 1e-12))


def test_spec_validation():
    with pytest.raises(ParameterError):
        AdditiveSpec(linear(1.0), neg_exp(1.0), zero(), zero())
    assert discriminant(cara_spec(), 1.0, 1.0) > 0
