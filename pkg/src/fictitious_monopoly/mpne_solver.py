"""Symmetric MPNE feedback strategies.

Infinite horizon: the stationary ODE ``a(u) u'(x) = -r e1(u)``.
Finite horizon: backward characteristics of ``u_t + a(u) u_x = -r e1(u)``,
``a(u) = -N u + (N-1)(e1(u) - e-1(u))``.
"""

from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.integrate import solve_ivp
from scipy.interpolate import CubicSpline

from .curves import Curve
from .errors import (
    BlowUpError, DomainError, NoRootError, ParameterError, ShockError, StallError,
)
from .numerics import grid_derivative, solve_monotone
from .symmetric_equiv import fictitious_dynamics

ODE_RTOL = 1e-10
ODE_ATOL = 1e-14


@dataclass(frozen=True)
class FeedbackStrategy:
    """A feedback ``u(x)`` (stationary) or ``u(t, x)`` on a grid.

    Stationary strategies carry a Hermite curve ``u_of_x`` built from the
    ODE's own slopes; time-dependent ones hold ``values[i, j] = u(t[i], x[j])``
    (NaN where no characteristic reaches the node) and interpolate cubically
    in ``x`` within a time slice.
    """

    kind: str
    x: np.ndarray
    values: np.ndarray
    t: Optional[np.ndarray] = None
    u_of_x: Optional[Curve] = None
    provenance: str = "ode"
    meta: dict = field(default_factory=dict)

    @property
    def stationary(self):
        return self.kind == "stationary"

    def __call__(self, x, t=None):
        if self.stationary:
            if self.u_of_x is not None:
                return self.u_of_x(x)
            return np.interp(x, self.x, self.values)
        if t is None:
            raise ValueError("time-dependent strategy needs t")
        i = int(np.argmin(np.abs(self.t - t)))
        if not np.isclose(self.t[i], t, rtol=0, atol=1e-12 * max(1.0, abs(t))):
            raise DomainError(f"t = {t} is not a grid time")
        row = self.values[i]
        ok = np.isfinite(row)
        return CubicSpline(self.x[ok], row[ok])(x)

    @classmethod
    def from_function(cls, func, x, t=None, provenance="ansatz"):
        """Sample a closed-form strategy (``func(x)`` or ``func(t, x)``)."""
        x = np.asarray(x, float)
        if t is None:
            vals = np.asarray(func(x), float)
            return cls("stationary", x, vals, provenance=provenance,
                       u_of_x=Curve.closed_form(func, (x[0], x[-1]), label="u"))
        t = np.asarray(t, float)
        vals = np.asarray(func(t[:, None], x[None, :]), float)
        return cls("time_dependent", x, vals, t=t, provenance=provenance)


def _advection(profile, N):
    return fictitious_dynamics(profile, N)


def _seed_slope(rhs, x0, bracket, lo_u):
    """Initial slope ``s`` of a solution through the origin: ``s = u'(s x0)``."""
    lo, hi = bracket
    lo = max(lo, lo_u / x0)

    def gap(ls):
        s = np.exp(ls)
        return ls - np.log(np.maximum(rhs(s * x0), 1e-300))

    try:
        ls = solve_monotone(gap, np.log(lo), np.log(hi), rtol=1e-13, xtol=1e-15)
    except NoRootError as exc:
        raise NoRootError(f"no seed slope in [{lo:.3g}, {hi:.3g}]", stage="stationary_mpne") from exc
    return float(np.exp(ls[0]))


def stationary_mpne(spec, profile, x_grid=None, u0=None, rtol=ODE_RTOL,
                    slope_bracket=(1e-4, 1e4), seed_fraction=1e-2):
    """Stationary symmetric MPNE on ``x_grid`` (infinite horizon).

    Integrates ``u' = -r e1(u)/a(u)`` in ``log x`` from the seed
    ``x0 = seed_fraction * x_grid[0]``.  The seed value is the linear
    ansatz ``c x0`` when the risk indices are linear, otherwise the slope
    ``s`` solving ``s = u'(s x0)`` found by bisection over
    ``slope_bracket``.  With ``r = 0`` the constant ``u0`` is returned.
    """
    if spec.finite:
        raise ParameterError("stationary MPNE needs an infinite horizon")
    x_grid = np.geomspace(0.1, 10.0, 100) if x_grid is None else np.asarray(x_grid, float)
    if x_grid[0] <= 0 or np.any(np.diff(x_grid) <= 0):
        raise ValueError("x grid must be positive and strictly increasing")
    N, r = spec.N, spec.r
    if r == 0:
        if u0 is None:
            raise ParameterError("r = 0: the stationary equation is homogeneous; supply u0")
        vals = np.full_like(x_grid, float(u0))
        return FeedbackStrategy("stationary", x_grid, vals, provenance="ansatz",
                                u_of_x=Curve.constant(float(u0), (x_grid[0], x_grid[-1]), "u"),
                                meta={"seed": float(u0)})
    a = _advection(profile, N)
    e1 = profile.e1
    lo_u, hi_u = profile.domain

    def slope(u):
        av = a(u)
        return -r * e1(u) / av

    x0 = seed_fraction * x_grid[0]
    lin = profile.linear
    if u0 is not None:
        s = float(u0) / x0
        how = "given"
    elif lin is not None:
        k = -N + (N - 1) * (lin[0] - lin[1])
        if k == 0:
            raise StallError("advection slope vanishes identically")
        s = -r * lin[0] / k
        how = "ansatz"
    else:
        s = _seed_slope(slope, x0, slope_bracket, lo_u)
        how = "shooting"
    if not s > 0:
        raise BlowUpError(f"seed slope {s:.6g} is not positive", u=float(s * x0))
    if not lo_u <= s * x0 <= hi_u:
        raise DomainError("seed value outside the profile domain", u=float(s * x0))

    def rhs(t, y):
        x = np.exp(t)
        u = y[0]
        if not lo_u <= u <= hi_u:
            return [np.nan]
        return [x * slope(u)]

    def stall(t, y):
        return a(float(np.clip(y[0], lo_u, hi_u)))

    def exit_hi(t, y):
        return hi_u - y[0]

    def exit_lo(t, y):
        return y[0] - lo_u

    for ev in (stall, exit_hi, exit_lo):
        ev.terminal = True
    sol = solve_ivp(rhs, (np.log(x0), np.log(x_grid[-1])), [s * x0], method="DOP853",
                    rtol=rtol, atol=ODE_ATOL, dense_output=True,
                    events=(stall, exit_hi, exit_lo))
    if sol.status == 1:
        xe = float(np.exp(sol.t[-1]))
        if sol.t_events[0].size:
            raise StallError(f"advection coefficient vanishes at x = {xe:.6g}", u=float(sol.y[0, -1]))
        raise BlowUpError(f"solution leaves the rate domain at x = {xe:.6g}", u=float(sol.y[0, -1]))
    if sol.status != 0:
        raise BlowUpError(f"stationary ODE failed: {sol.message}")
    u = sol.sol(np.log(x_grid))[0]
    du = slope(u)
    curve = Curve.tabulated(x_grid, u, dydx=du, label="u")
    return FeedbackStrategy("stationary", x_grid, u, u_of_x=curve, provenance="ode",
                            meta={"seed": how, "x0": x0, "u0": s * x0, "rtol": rtol,
                                  "nfev": int(sol.nfev), "boundary": "u(0) = 0"})


def _fan_ode(a, e1, r, taus, U0, X0, domain):
    """Integrate all characteristics of the fan at once in ``tau = T - t``."""
    M = len(U0)
    lo, hi = domain

    def rhs(tau, y):
        U = y[:M]
        if np.any(U < lo) or np.any(U > hi):
            return np.full_like(y, np.nan)
        return np.concatenate([r * e1(U), -a(U)])

    sol = solve_ivp(rhs, (0.0, taus[-1]), np.concatenate([U0, X0]), method="DOP853",
                    rtol=ODE_RTOL, atol=ODE_ATOL, t_eval=taus)
    if sol.status != 0 or not np.all(np.isfinite(sol.y)):
        raise BlowUpError(f"characteristics leave the rate domain: {sol.message}")
    return sol.y[:M].T, sol.y[M:].T


def _extend_feet(phi, current, target, halvings=30):
    """Move a fan edge toward ``target`` as far as ``phi`` stays defined."""
    for _ in range(halvings):
        try:
            phi(target)
            return target
        except (NoRootError, DomainError):
            target = 0.5 * (current + target)
    return current


def _phi_slope(phi_c, z, u):
    """``phi'(z)`` reusing ``u = phi(z)`` when the curve exposes ``slope_at``."""
    slope_at = phi_c.params.get("slope_at")
    return slope_at(z, u) if slope_at is not None else phi_c.derivative(z)


def characteristics_mpne(spec, profile, phi, t_grid, x_grid, fan_factor=4, max_extend=8):
    """Finite-horizon symmetric MPNE by backward characteristics.

    A fan of characteristics leaves the terminal line at foot points
    ``xi`` with ``u = phi(xi)``; in ``tau = T - t`` they obey
    ``dX/dtau = -a(U)``, ``dU/dtau = r e1(U)``.  At each requested time the
    value at ``x`` is ``U(xi*)`` with ``X(xi*) = x``: with ``r = 0`` the
    foot point is solved exactly from ``xi - a(phi(xi)) tau = x``; otherwise
    from a cubic spline of the fan in ``xi``.  Nodes no characteristic
    reaches are NaN.  Loss of monotonicity of ``xi -> X`` is a shock.
    """
    if not spec.finite:
        raise ParameterError("characteristics need a finite horizon")
    T, N, r = spec.horizon.T, spec.N, spec.r
    t_grid = np.asarray(t_grid, float)
    x_grid = np.asarray(x_grid, float)
    if np.any(np.diff(t_grid) <= 0) or t_grid[0] < 0 or t_grid[-1] > T:
        raise ValueError("t grid must be increasing inside [0, T]")
    phi_c = phi.phi if hasattr(phi, "phi") else phi
    a = _advection(profile, N)
    e1 = profile.e1
    taus = T - t_grid[::-1]
    sdom = phi_c.domain
    xi_lo, xi_hi = x_grid[0], x_grid[-1]
    M = max(fan_factor * len(x_grid), 64)

    for attempt in range(max_extend + 1):
        xi = np.linspace(xi_lo, xi_hi, M)
        U0 = phi_c(xi)
        if r == 0:
            U = np.broadcast_to(U0, (len(taus), M))
            X = xi[None, :] - a(U0)[None, :] * taus[:, None]
        else:
            U, X = _fan_ode(a, e1, r, taus, U0, xi.copy(), profile.domain)
        cover_lo = np.max(X[:, 0])
        cover_hi = np.min(X[:, -1])
        grow = (xi_hi - xi_lo) * 0.5
        extend = False
        if cover_lo > x_grid[0] and xi_lo > sdom[0]:
            new = _extend_feet(phi_c, xi_lo, max(sdom[0], xi_lo - grow))
            extend = new != xi_lo
            xi_lo = new
        if cover_hi < x_grid[-1] and xi_hi < sdom[1]:
            new = _extend_feet(phi_c, xi_hi, min(sdom[1], xi_hi + grow))
            extend = extend or new != xi_hi
            xi_hi = new
        if not extend:
            break

    dX = np.diff(X, axis=1)
    if np.any(dX <= 0):
        i, j = np.argwhere(dX <= 0)[0]
        raise ShockError(f"characteristics cross by t = {T - taus[i]:.6g} (foot x = {xi[j]:.6g})",
                         u=float(U[i, j]))

    values = np.full((len(taus), len(x_grid)), np.nan)
    for i, tau in enumerate(taus):
        inside = (x_grid >= X[i, 0]) & (x_grid <= X[i, -1])
        if tau == 0.0:
            values[i] = phi_c(x_grid)
            continue
        if not np.any(inside):
            continue
        xs = x_grid[inside]
        k = np.clip(np.searchsorted(X[i], xs), 1, M - 1)
        lo, hi = xi[k - 1], xi[k]
        if r == 0:
            last = {}

            def phi_at(z):
                # g and dg are evaluated at the same iterate; solve phi once
                if last.get("z") is None or not np.array_equal(last["z"], z):
                    last["z"], last["u"] = np.array(z), phi_c(z)
                return last["u"]

            def g(z, xs=xs, tau=tau):
                return z - a(phi_at(z)) * tau - xs

            def dg(z, tau=tau):
                u = phi_at(z)
                return 1.0 - a.derivative(u) * _phi_slope(phi_c, z, u) * tau

            foot = solve_monotone(g, lo, hi, dg=dg)
            values[i, inside] = phi_c(foot)
        else:
            xs_spl = CubicSpline(xi, X[i])
            us_spl = CubicSpline(xi, U[i])
            dxs = xs_spl.derivative()
            foot = solve_monotone(lambda z, xs=xs: xs_spl(z) - xs, lo, hi, dg=dxs)
            values[i, inside] = us_spl(foot)
    values = values[::-1]
    if t_grid[-1] == T:
        values[-1] = phi_c(x_grid)
    uncovered = int(np.sum(~np.isfinite(values)))
    return FeedbackStrategy("time_dependent", x_grid, values, t=t_grid,
                            provenance="characteristics",
                            meta={"fan": M, "foot_range": (float(xi_lo), float(xi_hi)),
                                  "uncovered_nodes": uncovered, "exact_feet": r == 0})


@dataclass(frozen=True)
class ResidualReport:
    sup: float
    l2: float
    worst: Optional[tuple]
    n: int
    flag: Optional[str] = None

    def to_dict(self):
        return {"sup": self.sup, "l2": self.l2, "worst": self.worst, "n": self.n,
                "flag": self.flag}


def residual_report(res, coords):
    """Sup and RMS norms over the finite entries of ``res``."""
    ok = np.isfinite(res)
    if not np.any(ok):
        return ResidualReport(np.nan, np.nan, None, 0, flag="degenerate grid")
    absres = np.where(ok, np.abs(res), -np.inf)
    idx = np.unravel_index(int(np.argmax(absres)), res.shape)
    worst = tuple(float(c[i]) for c, i in zip(coords, idx))
    return ResidualReport(float(np.max(np.abs(res[ok]))), float(np.sqrt(np.mean(res[ok] ** 2))),
                          worst, int(np.sum(ok)))


def _interior(n):
    return slice(1, n - 1) if n > 2 else slice(0, 0)


def strategy_derivatives(strategy):
    """4th-order FD ``u_x`` (and ``u_t``) on the strategy grid."""
    u = np.asarray(strategy.values, float)
    x = strategy.x
    if strategy.stationary:
        return grid_derivative(x, u), None
    ux = grid_derivative(x, u, axis=1)
    ut = grid_derivative(strategy.t, u, axis=0)
    return ux, ut


def game_pde_residual(strategy, spec, profile):
    """``u_t + a(u) u_x + r e1(u)`` on interior grid nodes."""
    x = strategy.x
    if len(x) < 5 or (not strategy.stationary and len(strategy.t) < 5):
        return ResidualReport(np.nan, np.nan, None, 0, flag="grid too small for 5-point stencils")
    a = _advection(profile, spec.N)
    u = np.asarray(strategy.values, float)
    ux, ut = strategy_derivatives(strategy)
    with np.errstate(invalid="ignore"):
        ok = np.isfinite(u)
        uu = np.where(ok, u, profile.domain[0])
        res = a(uu) * ux + spec.r * profile.e1(uu)
        if ut is not None:
            res = res + ut
        res = np.where(ok, res, np.nan)
    if strategy.stationary:
        s = _interior(len(x))
        return residual_report(res[s], (x[s],))
    si, sj = _interior(len(strategy.t)), _interior(len(x))
    return residual_report(res[si, sj], (strategy.t[si], x[sj]))
