import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from fictitious_monopoly import (
    AsymParams, CobbDouglas, GameSpec, asym_fictitious, derive_monopoly, solve_delta,
)
from fictitious_monopoly.asym_duopoly import (
    fictitious_slope, mpne_slope, ratio_residual, row_proportionality, theta_residual,
)
from fictitious_monopoly.errors import ExponentError, ParameterError


def test_symmetric_delta_is_one():
    p = AsymParams(0.6, 0.6, 0.8, 0.05, 0.05)
    assert solve_delta(p) == pytest.approx(1.0, abs=1e-12)
    assert mpne_slope(p, 1.0) == pytest.approx(1 / 6, rel=1e-12)


def test_asymmetric_example():
    p = AsymParams(0.6, 0.7, 0.8, 0.05, 0.05)
    d = solve_delta(p)
    u = np.geomspace(0.1, 10, 7)
    assert abs(ratio_residual(p, d)) < 1e-12
    assert np.max(theta_residual(p, d, u)) < 1e-12
    assert np.max(row_proportionality(p, d, u)) < 1e-12


@given(st.floats(0.55, 0.95), st.floats(0.55, 0.95), st.floats(0.7, 0.95),
       st.floats(0.01, 0.2), st.floats(0.01, 0.2))
@settings(max_examples=40, deadline=None)
def test_delta_solves_stationary_system(a1, a2, b, r1, r2):
    try:
        p = AsymParams(a1, a2, b, r1, r2)
        d = solve_delta(p)
    except Exception:
        return
    u = np.array([0.3, 3.0])
    assert np.max(theta_residual(p, d, u)) < 1e-8 * max(1.0, d)


def test_matches_symmetric_pipeline():
    p = AsymParams(0.6, 0.6, 0.8, 0.05, 0.05)
    oc_a = asym_fictitious(p, solve_delta(p), rho=0.05, C=1.0, domain=(0.1, 10))
    oc_s = derive_monopoly(GameSpec(2, CobbDouglas(0.6, 0.8), r=0.05), C=1.0)
    u = np.geomspace(0.1, 10, 25)
    for name in ("f", "gamma", "ell"):
        assert np.max(np.abs(getattr(oc_a, name)(u) - getattr(oc_s, name)(u))) < 1e-10


def test_exponent_one_raises():
    p = AsymParams(0.6, 0.7, 0.8, 0.05, 0.05)
    with pytest.raises(ExponentError):
        asym_fictitious(p, solve_delta(p), rho=p.kappa)


def test_invalid_parameters():
    with pytest.raises(ParameterError):
        AsymParams(1.0, 0.6, 0.8, 0.05, 0.05)
    with pytest.raises(ParameterError):
        AsymParams(0.5, 0.5, 0.5, 0.05, 0.05)  # alpha1 alpha2 = (1 - beta)^2
