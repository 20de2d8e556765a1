import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from fictitious_monopoly.errors import NoRootError
from fictitious_monopoly.numerics import (
    Antiderivative, fd_derivative, fornberg_weights, grid_derivative, solve_monotone,
)


def test_fornberg_central_weights():
    w = fornberg_weights(0.0, np.array([-2, -1, 0, 1, 2.0]), 2)
    assert np.allclose(w[1], [1 / 12, -2 / 3, 0, 2 / 3, -1 / 12])
    assert np.allclose(w[2], [-1 / 12, 4 / 3, -5 / 2, 4 / 3, -1 / 12])


def test_fd_derivative_exp():
    x = np.linspace(0.5, 3, 11)
    assert np.max(np.abs(fd_derivative(np.exp, x) - np.exp(x)) / np.exp(x)) < 1e-10
    assert np.max(np.abs(fd_derivative(np.exp, x, order=2) - np.exp(x)) / np.exp(x)) < 1e-6


def test_fd_derivative_respects_domain():
    # one-sided stencil near the left end of the domain
    d = fd_derivative(np.sqrt, np.array([1e-3]), domain=(1e-3, 1.0))
    assert abs(d[0] - 0.5 / np.sqrt(1e-3)) / (0.5 / np.sqrt(1e-3)) < 1e-6


def test_grid_derivative_polynomial():
    x = np.linspace(0, 1, 21)
    assert np.allclose(grid_derivative(x, x**3), 3 * x**2, atol=1e-10)


@given(st.floats(0.01, 100.0), st.floats(0.01, 100.0))
@settings(max_examples=50, deadline=None)
def test_solve_monotone_power_roots(c, k):
    root = solve_monotone(lambda z: z**3 - c, 0.0, 200.0, dg=lambda z: 3 * z**2)
    assert abs(root[0] - c ** (1 / 3)) <= 1e-13 * c ** (1 / 3)
    root = solve_monotone(lambda z: np.log(z) - np.log(k), 1e-6, 1e6)
    assert abs(root[0] - k) <= 1e-12 * k


def test_solve_monotone_vectorised_and_no_root():
    targets = np.array([0.1, 1.0, 5.0])
    roots = solve_monotone(lambda z: np.tanh(z) * 10 - targets, np.zeros(3), np.full(3, 10.0))
    assert np.allclose(roots, np.arctanh(targets / 10), rtol=1e-13)
    with pytest.raises(NoRootError):
        solve_monotone(lambda z: z**2 + 1, -1.0, 1.0)


def test_antiderivative_log_and_linear_variable():
    F = Antiderivative(lambda z, y: [1.0 / z], 1e-3, 1e3, 1.0, [0.0])
    z = np.geomspace(1e-3, 1e3, 25)
    assert np.max(np.abs(F(z) - np.log(z))) < 1e-11
    G = Antiderivative(lambda z, y: [np.cos(z)], -2.0, 2.0, 0.0, [0.0], log=False)
    zz = np.linspace(-2, 2, 9)
    assert np.max(np.abs(G(zz) - np.sin(zz))) < 1e-12
