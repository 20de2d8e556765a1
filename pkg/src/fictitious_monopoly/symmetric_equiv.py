"""Fictitious monopoly for the symmetric oligopoly.

Given the diagonal risk indices of a symmetric game, the single-agent
problem ``(ell, rho, f, b)`` whose optimal feedback reproduces the
symmetric MPNE is

    f(u)     = -N u + (N-1) (e1(u) - e-1(u))
    gamma(u) = C exp(-(rho/r) int_{u_ref}^u dz / e1(z))
    ell(u)   = -f(u) gamma(u) - (rho/r) int_{u_ref}^u f(z) gamma(z) / e1(z) dz
    b'(x)    = gamma(phi(x))                      (finite horizon)

so that ``ell' = -f' gamma`` (first-order condition of the Hamiltonian
``ell + f p``) and ``rho gamma / gamma' = -r e1`` (the game's source term).
"""

from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

from .curves import Curve
from .errors import (
    DomainError, EquivalenceError, NonUniqueError, NoRootError, ParameterError,
    SingularPayoffError, ValidationError,
)
from .game_model import Finite, partials, symmetric_reduce
from .numerics import Antiderivative, fd_derivative, solve_monotone

DEFAULT_U_RANGE = (1e-2, 1e2)


@dataclass(frozen=True)
class TerminalMap:
    """``x -> phi(x)``: the symmetric MPNE at the terminal time."""

    phi: Curve
    grid: np.ndarray
    values: np.ndarray
    invertible: bool


@dataclass(frozen=True)
class MonopolyProblem:
    """The single-agent problem ``(ell, rho, f, b)``.

    ``gamma`` is the coestate along the feedback, ``-ell'/f'``.  ``r`` and
    ``N`` record the game the problem was built from (``r`` is ``None``
    for problems not derived from a symmetric game).
    """

    ell: Curve
    rho: float
    f: Curve
    gamma: Curve
    C: float
    u_ref: float
    bequest: Optional[Curve] = None
    terminal: Optional[TerminalMap] = None
    r: Optional[float] = None
    N: Optional[int] = None
    provenance: str = "closed_form"
    meta: dict = field(default_factory=dict)

    @property
    def domain(self):
        return self.f.domain


def _discount_ratio(rho, r):
    if rho < 0:
        raise ParameterError("rho must be nonnegative")
    if rho == 0:
        return 0.0
    if r <= 0:
        raise ParameterError("rho > 0 needs a positive game discount r")
    return rho / r


def _working_domain(profile, u_range):
    lo = max(profile.domain[0], u_range[0])
    hi = min(profile.domain[1], u_range[1])
    if not lo < hi:
        raise DomainError(f"empty working domain [{lo:.6g}, {hi:.6g}]")
    return float(lo), float(hi)


def fictitious_dynamics(profile, N=None, domain=None):
    """``f(u) = -N u + (N-1)(e1 - e-1)``; linear when the profile is."""
    N = profile.N if N is None else N
    domain = profile.domain if domain is None else domain
    lin = profile.linear
    if lin is not None:
        k = -N + (N - 1) * (lin[0] - lin[1])
        return Curve.linear(k, domain, label="f")
    e1, em = profile.e1, profile.e_minus_1

    def f(u):
        return -N * u + (N - 1) * (e1(u) - em(u))

    def df(u):
        return -N + (N - 1) * (e1.derivative(u) - em.derivative(u))

    return Curve.closed_form(f, domain, deriv=df, label="f")


def coestate_gamma(profile, rho, r, C=1.0, u_ref=1.0, method="auto", domain=None):
    """Coestate ``gamma(u) = C exp(-(rho/r) int_{u_ref}^u dz/e1(z))``.

    Closed form ``C (u/u_ref)^-m`` with ``m = rho/(eta1 r)`` when ``e1`` is
    linear (unless ``method="quadrature"``).
    """
    domain = profile.domain if domain is None else tuple(domain)
    ratio = _discount_ratio(rho, r)
    C, u_ref = float(C), float(u_ref)
    if ratio == 0.0:
        return Curve.constant(C, domain, label="gamma")
    lin = profile.linear
    if lin is not None and method != "quadrature":
        m = ratio / lin[0]
        return Curve.closed_form(
            lambda u: C * (u / u_ref) ** (-m), domain,
            deriv=lambda u: -m * C * (u / u_ref) ** (-m) / u,
            label="gamma", family="power", exponent=-m, m=m)
    e1 = profile.e1
    integral = Antiderivative(lambda z, y: [1.0 / e1(z)], domain[0], domain[1], u_ref, [0.0])

    def g(u):
        return C * np.exp(-ratio * integral(u))

    return Curve(func=g, domain=domain, kind="quadrature", label="gamma",
                 deriv=lambda u: -ratio * g(u) / e1(u),
                 params={"ratio": ratio})


def fictitious_payoff(profile, f, gamma, rho, r, C=1.0, u_ref=1.0, method="auto"):
    """Payoff ``ell`` with ``ell' = -f' gamma``, anchored at ``u_ref``."""
    ratio = _discount_ratio(rho, r)
    C, u_ref = float(C), float(u_ref)
    domain = f.domain
    if ratio == 0.0:
        return f.scaled(-C).with_label("ell")
    k = f.slope
    m = gamma.params.get("m")
    if k is not None and m is not None and method != "quadrature":
        if m == 1.0:
            if profile.meta.get("family") == "IsoelasticPricing":
                raise SingularPayoffError("q rho / r = 1: fictitious payoff is logarithmic")

            def ell(u):
                return -k * C * u_ref * (1.0 + np.log(u / u_ref))
        else:
            def ell(u):
                return -k * C * u_ref**m * (u ** (1.0 - m) - m * u_ref ** (1.0 - m)) / (1.0 - m)

        return Curve.closed_form(ell, domain, deriv=lambda u: -k * C * (u / u_ref) ** (-m),
                                 label="ell", family="hara", exponent=1.0 - m,
                                 coefficient=-k * C * u_ref**m / (1.0 - m) if m != 1.0 else None)
    # carry int dz/e1 alongside int f gamma/e1 so gamma is not re-integrated
    e1 = profile.e1

    def rhs(z, y):
        inv = 1.0 / e1(z)
        return [inv, f(z) * C * np.exp(-ratio * y[0]) * inv]

    integral = Antiderivative(rhs, domain[0], domain[1], u_ref, [0.0, 0.0])

    def ell(u):
        i1, j = integral(u)
        return -f(u) * C * np.exp(-ratio * i1) - ratio * j

    return Curve(func=ell, domain=domain, kind="quadrature", label="ell",
                 params={"ratio": ratio},
                 deriv=lambda u: -f.derivative(u) * gamma(u))


def _diag_marginal(spec):
    ut, N, dom = spec.utility, spec.N, spec.rate_domain

    def marg(u):
        return partials(ut, N, u, u, dom).L_own

    def dmarg(u):
        p = partials(ut, N, u, u, dom)
        return p.L_own_own + (N - 1) * p.L_own_cross

    return marg, dmarg


def terminal_strategy(spec, x_grid=None, n_check=400):
    """Solve ``L_own(phi, ..., phi) = B'(x)`` for the terminal strategy.

    The diagonal marginal utility must be strictly monotone on the rate
    domain (checked on ``n_check`` log-spaced points); roots are found in
    ``log u`` by safeguarded Newton/bisection to ~1e-14 relative.
    """
    if not isinstance(spec.horizon, Finite):
        raise ParameterError("terminal strategy needs a finite horizon")
    B = spec.horizon.bequest
    marg, dmarg = _diag_marginal(spec)
    lo, hi = spec.rate_domain
    lo = lo if lo > 0 else 1e-300
    probe = np.geomspace(lo, hi, n_check)
    slope = dmarg(probe)
    if not (np.all(slope < 0) or np.all(slope > 0)):
        raise NonUniqueError("diagonal marginal utility is not strictly monotone",
                             u=float(probe[np.argmax(np.sign(slope) != np.sign(slope[0]))]))
    tlo, thi = np.log(lo), np.log(hi)
    Bxx = B.d2 if B.d2 is not None else (lambda x: fd_derivative(B.d1, x, order=1))

    def solve(x):
        x = np.atleast_1d(np.asarray(x, float))
        target = np.asarray(B.d1(x), float) * np.ones_like(x)
        try:
            t = solve_monotone(lambda t: marg(np.exp(t)) - target,
                               np.full_like(x, tlo), np.full_like(x, thi),
                               dg=lambda t: dmarg(np.exp(t)) * np.exp(t), xtol=1e-15)
        except NoRootError as exc:
            raise NoRootError(f"terminal condition has no root in the rate domain: {exc}",
                              u=exc.u, stage="terminal_strategy") from exc
        return np.exp(t)

    def phi(x):
        arr = np.asarray(x, float)
        return solve(arr).reshape(arr.shape)

    def dphi(x):
        arr = np.asarray(x, float)
        u = solve(arr).reshape(arr.shape)
        return np.asarray(Bxx(arr), float) / dmarg(u)

    sdom = tuple(map(float, spec.stock_domain))
    if x_grid is None:
        x_grid = np.geomspace(max(sdom[0], 1e-2), min(sdom[1], 1e2), 200)
    x_grid = np.asarray(x_grid, float)
    values = phi(x_grid)
    d = np.diff(values)
    monotone = bool(np.all(d > 0) or np.all(d < 0))
    def slope_at(x, u):
        return np.asarray(Bxx(np.asarray(x, float)), float) / dmarg(u)

    curve = Curve.closed_form(phi, sdom, deriv=dphi, label="phi", family="implicit",
                              slope_at=slope_at)
    return TerminalMap(curve, x_grid, values, monotone)


def fictitious_bequest(phi, profile, rho, r, C=1.0, u_ref=1.0, gamma=None, x_ref=None,
                       domain=None):
    """Bequest ``b`` with ``b'(x) = gamma(phi(x))``, ``b(x_ref) = 0``.

    ``gamma`` is built once; the outer antiderivative is integrated in
    ``log x`` with dense output.  Without
    a terminal map (infinite horizon) the zero curve is returned.
    """
    if phi is None:
        dom = domain if domain is not None else (0.0, np.inf)
        return Curve.constant(0.0, dom, label="b")
    if gamma is None:
        gamma = coestate_gamma(profile, rho, r, C, u_ref)
    grid = phi.grid
    dom = (float(grid[0]), float(grid[-1])) if domain is None else tuple(domain)
    x_ref = dom[0] if x_ref is None else float(x_ref)
    lo, hi = gamma.domain
    if np.any((phi.values < lo) | (phi.values > hi)):
        raise DomainError("terminal strategy leaves the profile domain on the stock grid",
                          u=float(phi.values[(phi.values < lo) | (phi.values > hi)][0]))

    def b_x(x):
        return gamma(phi.phi(x))

    outer = Antiderivative(lambda x, y: [b_x(x)], dom[0], dom[1], x_ref, [0.0])
    return Curve(func=outer, domain=dom, kind="quadrature", label="b", deriv=b_x,
                 params={"x_ref": x_ref})


def competition_index(profile, N=None, u=1.0):
    """``CI = ((N-1)/N) (e1(u) - e-1(u)) / u``."""
    N = profile.N if N is None else N
    u_arr = np.asarray(u, float)
    if np.any(u_arr <= 0):
        raise DomainError("competition index needs u > 0", u=float(np.min(u_arr)))
    out = (N - 1) / N * (profile.e1(u_arr) - profile.e_minus_1(u_arr)) / u_arr
    return float(out) if np.ndim(out) == 0 else out


def identification_defects(profile, oc, N=None, n=50):
    """Sup relative defects of the two identification identities on ``n`` points."""
    N = profile.N if N is None else N
    u = oc.f.grid(n)
    f_expected = -N * u + (N - 1) * (profile.e1(u) - profile.e_minus_1(u))
    f_def = float(np.max(np.abs(oc.f(u) - f_expected) / np.maximum(np.abs(f_expected), 1.0)))
    e1 = profile.e1(u)
    if oc.rho == 0:
        g_def = float(np.max(np.abs(oc.r * e1)))
    else:
        g = oc.gamma(u)
        dg = oc.gamma.derivative(u)
        g_def = float(np.max(np.abs(oc.rho * g / dg + oc.r * e1) / np.maximum(oc.r * e1, 1.0)))
    return {"f": f_def, "gamma": g_def}


def foc_defect(oc, n=20):
    """Sup defect of ``ell' + f' gamma`` (``ell'`` by 4th-order FD), relative to sup ``|ell'|``."""
    lo, hi = oc.ell.domain
    u = np.geomspace(lo, hi, n + 2)[1:-1] if lo > 0 else np.linspace(lo, hi, n + 2)[1:-1]
    d_ell = fd_derivative(oc.ell.func, u, order=1, domain=oc.ell.domain)
    target = -oc.f.derivative(u) * oc.gamma(u)
    scale = float(np.max(np.abs(target))) or 1.0
    return float(np.max(np.abs(d_ell - target)) / scale)


def derive_monopoly(spec, rho=None, C=None, u_ref=1.0, method="auto", u_range=None,
                    x_grid=None, validate=True):
    """Construct the fictitious monopoly of a symmetric game.

    ``rho`` defaults to the game discount ``r``; ``C`` defaults to +1, with
    the sign flipped when that would make ``ell`` decreasing at the
    midpoint of the working domain.  ``method="quadrature"`` forces the
    numeric path even when closed forms exist.
    """
    stage = "symmetric_reduce"
    try:
        profile = symmetric_reduce(spec)
        rho = spec.r if rho is None else float(rho)
        if not spec.finite and not rho > 0:
            raise ParameterError("infinite horizon requires rho > 0")
        if rho == 0 and spec.r > 0:
            raise ParameterError("rho = 0 cannot reproduce a discounted game (rho gamma/gamma' = -r e1)")
        numeric = method == "quadrature" or profile.linear is None
        if u_range is None:
            u_range = DEFAULT_U_RANGE if numeric else profile.domain
        domain = _working_domain(profile, u_range)
        if not domain[0] <= u_ref <= domain[1]:
            u_ref = float(np.sqrt(domain[0] * domain[1])) if domain[0] > 0 else 0.5 * sum(domain)
        stage = "fictitious_dynamics"
        f = fictitious_dynamics(profile, spec.N, domain)
        if C is None:
            mid = 0.5 * (domain[0] + domain[1])
            C = 1.0 if -f.derivative(mid) >= 0 else -1.0
        if C == 0:
            raise ParameterError("integration constant C must be nonzero")
        stage = "coestate_gamma"
        gamma = coestate_gamma(profile, rho, spec.r, C, u_ref, method, domain)
        stage = "fictitious_payoff"
        ell = fictitious_payoff(profile, f, gamma, rho, spec.r, C, u_ref, method)
        bequest, terminal = None, None
        if spec.finite:
            stage = "terminal_strategy"
            terminal = terminal_strategy(spec, x_grid)
            stage = "fictitious_bequest"
            bequest = fictitious_bequest(terminal, profile, rho, spec.r, C, u_ref, gamma)
        oc = MonopolyProblem(ell=ell, rho=rho, f=f, gamma=gamma, C=float(C), u_ref=float(u_ref),
                             bequest=bequest, terminal=terminal, r=spec.r, N=spec.N,
                             provenance="quadrature" if gamma.kind == "quadrature"
                             or ell.kind == "quadrature" else "closed_form",
                             meta={"profile": profile.meta})
        if validate:
            stage = "validate"
            oc = _validated(profile, oc)
    except EquivalenceError as exc:
        raise exc.with_stage(stage)
    return oc


def _validated(profile, oc):
    ident = identification_defects(profile, oc, n=50)
    tol = 1e-8 if oc.provenance == "closed_form" else 1e-5
    if ident["f"] > 1e-8 or ident["gamma"] > tol:
        raise ValidationError(f"identification identities fail: {ident}")
    foc = foc_defect(oc)
    if foc > 1e-6:
        raise ValidationError(f"first-order identity ell' = -f' gamma fails ({foc:.3g})")
    u = oc.f.grid(20)
    curv = oc.ell.derivative(u, order=2)
    meta = dict(oc.meta)
    meta.update(identification=ident, foc=foc,
                ell_concave=bool(np.all(curv < 0)),
                ell_increasing=bool(np.all(-oc.f.derivative(u) * oc.gamma(u) > 0)),
                competition_index=competition_index(profile, oc.N, oc.u_ref))
    return replace(oc, meta=meta)
