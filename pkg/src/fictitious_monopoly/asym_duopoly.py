"""Asymmetric Cobb-Douglas duopoly with the linear ansatz ``v = delta u``.

Player i has utility ``u_i^(1-alpha_i)/(1-alpha_i) * u_j^(1-beta)`` and
discount ``r_i``.  The stationary MPNE system is ``M(u, v) (u_x, v_x) = rhs``
(see :func:`system_matrix`); along ``v = delta u`` both rows collapse to the
same linear ODE and the first row's ``u_x`` coefficient gives the fictitious
dynamics ``f(u) = xi u``.
"""

from dataclasses import dataclass

import numpy as np

from .curves import Curve
from .errors import DegenerateError, ExponentError, InfeasibleError, ParameterError
from .game_model import DEFAULT_RATE_DOMAIN
from .symmetric_equiv import MonopolyProblem


@dataclass(frozen=True)
class AsymParams:
    alpha1: float
    alpha2: float
    beta: float
    r1: float
    r2: float

    def __post_init__(self):
        if min(self.alpha1, self.alpha2, self.beta) <= 0:
            raise ParameterError("alpha1, alpha2, beta must be positive")
        if min(self.r1, self.r2) < 0:
            raise ParameterError("discount rates must be nonnegative")
        if self.alpha1 == 1 or self.alpha2 == 1:
            raise ParameterError("alpha_i = 1 excluded (division by 1 - alpha_i)")
        if self.alpha1 * self.alpha2 - (1 - self.beta) ** 2 == 0:
            raise ParameterError("alpha1 alpha2 = (1 - beta)^2 makes the system singular")

    @property
    def epsilon(self):
        return 1.0 / (self.alpha1 * self.alpha2 - (1.0 - self.beta) ** 2)

    @property
    def kappa(self):
        """``epsilon (alpha2 r1 + (1-beta) r2)``: player 1's source coefficient."""
        return self.epsilon * (self.alpha2 * self.r1 + (1 - self.beta) * self.r2)

    @property
    def symmetric(self):
        return self.alpha1 == self.alpha2 and self.r1 == self.r2


def _coefficients(p):
    """Affine coefficients ``(n0, n1), (d0, d1)`` of the row factors in ``delta``.

    Along ``v = delta u`` row one's ``u_x`` coefficient is ``u Num(delta)`` and
    row two's is ``delta u D(delta)``.
    """
    a1, a2, b, e = p.alpha1, p.alpha2, 1.0 - p.beta, p.epsilon
    # Num(d) = -(1+d) + e b/(1-a2) ((1-a2) - b d) + e a2/(1-a1) ((1-a1) d - b)
    n0 = -1.0 + e * b - e * a2 * b / (1 - a1)
    n1 = -1.0 - e * b * b / (1 - a2) + e * a2
    # D(d) = e a1/(1-a2) ((1-a2) - b d) - (1+d) + e b/(1-a1) ((1-a1) d - b)
    d0 = e * a1 - 1.0 - e * b * b / (1 - a1)
    d1 = -e * a1 * b / (1 - a2) - 1.0 + e * b
    return (n0, n1), (d0, d1)


def source_ratio(p):
    """``R = (alpha2 r1 + (1-beta) r2) / (alpha1 r2 + (1-beta) r1)``."""
    b = 1.0 - p.beta
    den = p.alpha1 * p.r2 + b * p.r1
    if den == 0:
        raise DegenerateError("source ratio undefined (zero discount on player 2's row)")
    return (p.alpha2 * p.r1 + b * p.r2) / den


def row_factors(p, delta):
    (n0, n1), (d0, d1) = _coefficients(p)
    return n0 + n1 * delta, d0 + d1 * delta


def ratio_residual(p, delta):
    """``Num(delta)/D(delta) - R`` (the uncross-multiplied equation)."""
    num, den = row_factors(p, delta)
    return num / den - source_ratio(p)


def solve_delta(p):
    """Slope ``delta`` of ``theta(u) = delta u`` from ``Num = R D``.

    The cross-multiplied form is linear in ``delta``; the solution is then
    checked against the ratio form.  Raises :class:`InfeasibleError` when
    ``delta <= 0``.
    """
    (n0, n1), (d0, d1) = _coefficients(p)
    R = source_ratio(p)
    lead = n1 - R * d1
    if lead == 0:
        raise DegenerateError("linear equation for delta has zero leading coefficient")
    delta = (R * d0 - n0) / lead
    num, den = row_factors(p, delta)
    if den == 0 or num == 0:
        raise DegenerateError("row factors vanish at delta; the ratio form is 0/0")
    if not delta > 0:
        raise InfeasibleError(f"delta = {delta:.6g} is not positive")
    return float(delta)


def fictitious_slope(p, delta):
    """``xi = Num(delta)``: slope of the fictitious dynamics ``f(u) = xi u``."""
    return float(row_factors(p, delta)[0])


def mpne_slope(p, delta):
    """Stationary MPNE ``u = c x`` (player 2 plays ``delta c x``)."""
    xi = fictitious_slope(p, delta)
    if xi == 0:
        raise DegenerateError("fictitious dynamics slope vanishes")
    return -p.kappa / xi


def system_matrix(p, u, v):
    """``M(u, v)`` and right-hand side of the stationary MPNE system."""
    a1, a2, b, e = p.alpha1, p.alpha2, 1.0 - p.beta, p.epsilon
    M = np.array([
        [-u - v + e * b / (1 - a2) * ((1 - a2) * u - b * v),
         e * a2 / (1 - a1) * u / v * ((1 - a1) * v - b * u)],
        [e * a1 / (1 - a2) * v / u * ((1 - a2) * u - b * v),
         -u - v + e * b / (1 - a1) * ((1 - a1) * v - b * u)],
    ])
    rhs = np.array([-e * (a2 * p.r1 + b * p.r2) * u, -e * (a1 * p.r2 + b * p.r1) * v])
    return M, rhs


def theta_residual(p, delta, u):
    """``|delta - v_x/u_x|`` with ``(u_x, v_x)`` solved from the system at ``(u, delta u)``."""
    out = []
    for uu in np.atleast_1d(np.asarray(u, float)):
        M, rhs = system_matrix(p, uu, delta * uu)
        ux, vx = np.linalg.solve(M, rhs)
        out.append(abs(delta - vx / ux))
    return np.array(out)


def row_proportionality(p, delta, u):
    """Relative defect of ``row1 / row2 = rhs1 / rhs2`` along ``v = delta u``."""
    out = []
    for uu in np.atleast_1d(np.asarray(u, float)):
        M, rhs = system_matrix(p, uu, delta * uu)
        c1 = M[0, 0] + M[0, 1] * delta
        c2 = M[1, 0] + M[1, 1] * delta
        scale = max(abs(c1 * rhs[1]), abs(c2 * rhs[0]), 1e-300)
        out.append(abs(c1 * rhs[1] - c2 * rhs[0]) / scale)
    return np.array(out)


def asym_fictitious(p, delta, rho=None, C=1.0, u_ref=1.0, domain=DEFAULT_RATE_DOMAIN):
    """Fictitious monopoly for player 1's rate in the asymmetric duopoly.

    ``f(u) = xi u``, ``gamma(u) = C (u/u_ref)^-k`` with ``k = rho/kappa`` and
    ``ell' = -xi gamma``, anchored like the symmetric construction so that
    the two agree when the game is symmetric.
    """
    if not delta > 0:
        raise InfeasibleError("delta must be positive")
    rho = 0.5 * (p.r1 + p.r2) if rho is None else float(rho)
    if rho < 0:
        raise ParameterError("rho must be nonnegative")
    kappa = p.kappa
    if kappa == 0:
        raise DegenerateError("source coefficient vanishes (zero discounts)")
    k = rho / kappa
    if k == 1:
        raise ExponentError("rho equals the source coefficient: the power law degenerates")
    xi = fictitious_slope(p, delta)
    C, u_ref = float(C), float(u_ref)

    def gamma(u):
        return C * (u / u_ref) ** (-k)

    def ell(u):
        return -xi * C * u_ref**k * (u ** (1 - k) - k * u_ref ** (1 - k)) / (1 - k)

    f = Curve.linear(xi, domain, label="f")
    g = Curve.closed_form(gamma, domain, deriv=lambda u: -k * gamma(u) / u, label="gamma",
                          family="power", exponent=-k, m=k)
    l = Curve.closed_form(ell, domain, deriv=lambda u: -xi * gamma(u), label="ell",
                          family="hara", exponent=1 - k)
    return MonopolyProblem(ell=l, rho=rho, f=f, gamma=g, C=C, u_ref=u_ref, N=2,
                           provenance="closed_form",
                           meta={"delta": delta, "xi": xi, "kappa": kappa, "exponent": k,
                                 "epsilon": p.epsilon, "c": -kappa / xi})
