"""Duopoly with additive externalities, null discount, finite horizon.

Player i's utility is ``own_i(u_i) + cross_i(u_j)``.  The MPNE system is
governed by

    A(u1, u2) = [[F, E1 - E12], [E2 - E21, F]],   F = -(u1 + u2)

with ``E_i = -own_i'(u_i)/own_i''(u_i)`` and
``E_ij = -cross_i'(u_j)/own_i''(u_i)``.  A single-agent problem can only
reproduce the MPNE when ``A`` has real eigenvectors along the equilibrium
curve ``u2 = theta(u1)``; the sign of ``(E1 - E12)(E2 - E21)`` decides.
"""

from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.integrate import solve_ivp

from .curves import Curve
from .errors import (
    BranchSingularError, ComplexEigenError, ConcavityError, DegenerateError, DomainError,
    HypothesisError, InversionError, NoRootError, ParameterError, SingularityError,
)
from .game_model import ScalarFn
from .numerics import Antiderivative, fd_derivative, solve_monotone
from .symmetric_equiv import MonopolyProblem

DEFAULT_ADDITIVE_DOMAIN = (1e-2, 10.0)
# relative size below which a discriminant sample counts as zero
_ZERO_DISC = 1e-12


@dataclass(frozen=True)
class AdditiveSpec:
    own1: ScalarFn
    own2: ScalarFn
    cross1: ScalarFn
    cross2: ScalarFn
    T: float = 1.0
    B1: Optional[ScalarFn] = None
    B2: Optional[ScalarFn] = None
    rate_domain: tuple = DEFAULT_ADDITIVE_DOMAIN
    stock_domain: tuple = (1e-6, 1e6)

    def __post_init__(self):
        if not self.T > 0:
            raise ParameterError("horizon T must be positive")
        lo, hi = self.rate_domain
        if not 0 <= lo < hi:
            raise ParameterError("rate domain must satisfy 0 <= lo < hi")
        u = np.linspace(lo, hi, 101)
        for name, fn in (("own1", self.own1), ("own2", self.own2)):
            if fn.d2 is None:
                raise ParameterError(f"{name} needs a second derivative")
            with np.errstate(all="ignore"):
                d1, d2 = np.asarray(fn.d1(u), float), np.asarray(fn.d2(u), float)
            if not (np.all(d1 > 0) and np.all(d2 < 0)):
                raise ParameterError(f"{name} must be strictly increasing and concave on the rate domain")

    def own(self, i):
        return self.own1 if i == 1 else self.own2

    def cross(self, i):
        return self.cross1 if i == 1 else self.cross2

    def bequest(self, i):
        return self.B1 if i == 1 else self.B2


def _arr(x):
    return np.asarray(x, dtype=float)


def own_index(spec, i, u):
    """``E_i(u) = -own_i'(u)/own_i''(u)``."""
    fn = spec.own(i)
    d2 = _arr(fn.d2(_arr(u)))
    if np.any(d2 == 0):
        raise SingularityError(f"own{i}'' vanishes", u=float(np.atleast_1d(u)[np.atleast_1d(d2 == 0)][0]))
    return -_arr(fn.d1(_arr(u))) / d2


def cross_index(spec, i, u_own, u_other):
    """``E_ij(u_i, u_j) = -cross_i'(u_j)/own_i''(u_i)``."""
    d2 = _arr(spec.own(i).d2(_arr(u_own)))
    if np.any(d2 == 0):
        raise SingularityError(f"own{i}'' vanishes")
    return -_arr(spec.cross(i).d1(_arr(u_other))) / d2


def off_diagonals(spec, u1, u2):
    """``(E1(u1) - E12(u1, u2), E2(u2) - E21(u2, u1))``."""
    a = own_index(spec, 1, u1) - cross_index(spec, 1, u1, u2)
    b = own_index(spec, 2, u2) - cross_index(spec, 2, u2, u1)
    return a, b


def build_matrix_A(spec, u1, u2):
    """``A(u1, u2)``; shape ``(..., 2, 2)`` for array input."""
    u1, u2 = np.broadcast_arrays(_arr(u1), _arr(u2))
    a, b = off_diagonals(spec, u1, u2)
    F = -(u1 + u2)
    A = np.empty(u1.shape + (2, 2))
    A[..., 0, 0] = F
    A[..., 0, 1] = a
    A[..., 1, 0] = b
    A[..., 1, 1] = F
    return A


def discriminant(spec, u1, u2):
    a, b = off_diagonals(spec, u1, u2)
    return a * b


@dataclass(frozen=True)
class EigenStructure:
    """Eigen-data of ``A`` at one point (or a grid, NaN where not real)."""

    lam: np.ndarray
    mu: np.ndarray
    s_lambda: np.ndarray
    s_mu: np.ndarray
    discriminant: np.ndarray
    F: np.ndarray


def eigen_structure(spec, u1, u2):
    """Vectorised eigen-pairs; entries are NaN where the discriminant is <= 0.

    The eigenvector for ``lambda = F + sqrt(disc)`` is
    ``(1, sqrt(disc)/(E1 - E12))``, which is ``(1, sqrt|E2-E21|/sqrt|E1-E12|)``
    when ``E1 - E12 > 0``.
    """
    u1, u2 = np.broadcast_arrays(_arr(u1), _arr(u2))
    a, b = off_diagonals(spec, u1, u2)
    disc = a * b
    F = -(u1 + u2)
    with np.errstate(invalid="ignore", divide="ignore"):
        root = np.where(disc > 0, np.sqrt(np.where(disc > 0, disc, 0.0)), np.nan)
        slope = root / a
    ones = np.ones_like(slope)
    return EigenStructure(F + root, F - root, np.stack([ones, slope], -1),
                          np.stack([ones, -slope], -1), disc, F)


def eigen_pair(spec, u1, u2):
    """Eigen-pair at a single point; errors when the eigenvalues are not real and distinct."""
    a, b = off_diagonals(spec, float(u1), float(u2))
    disc = float(a * b)
    scale = max(abs(float(a)), abs(float(b)), 1.0) ** 2
    if abs(disc) <= _ZERO_DISC * scale:
        raise DegenerateError("discriminant vanishes: repeated eigenvalue", u=(float(u1), float(u2)))
    if disc < 0:
        raise ComplexEigenError(f"discriminant {disc:.6g} < 0: no real eigenvectors",
                                u=(float(u1), float(u2)))
    es = eigen_structure(spec, float(u1), float(u2))
    return EigenStructure(*(np.asarray(v) for v in (es.lam, es.mu, es.s_lambda, es.s_mu,
                                                    es.discriminant, es.F)))


def left_eigenvector(spec, u1, u2, which="lambda"):
    """Row vector ``w`` with ``w A = eig w``, normalised to ``w[0] = 1``."""
    a, b = off_diagonals(spec, _arr(u1), _arr(u2))
    root = np.sqrt(a * b)
    sign = 1.0 if which == "lambda" else -1.0
    return np.stack([np.ones_like(root), sign * root / b], -1)


@dataclass
class RationalizabilityVerdict:
    verdict: str
    witnesses: list
    counts: dict
    degenerate: bool
    region: tuple
    partition: Optional[np.ndarray] = None
    grid: tuple = field(default=(), repr=False)

    def to_dict(self):
        return {"verdict": self.verdict, "witnesses": self.witnesses, "counts": self.counts,
                "degenerate": self.degenerate, "region": [list(r) for r in self.region]}


def rationalizability_test(spec, region=None, n=50, max_witnesses=5):
    """Sign of ``(E1 - E12)(E2 - E21)`` on an ``n`` x ``n`` rate grid.

    All positive: ``"Rationalizable-candidate"``; all negative:
    ``"NotRationalizable"``; anything else (including zeros, flagged as
    degenerate) is ``"Mixed"``.  Negative samples are attached as witnesses.
    """
    if region is None:
        region = (spec.rate_domain, spec.rate_domain)
    (a1, b1), (a2, b2) = region
    g1, g2 = np.linspace(a1, b1, n), np.linspace(a2, b2, n)
    U1, U2 = np.meshgrid(g1, g2, indexing="ij")
    a, b = off_diagonals(spec, U1, U2)
    disc = a * b
    scale = np.maximum(np.maximum(np.abs(a), np.abs(b)), 1.0) ** 2
    zero = np.abs(disc) <= _ZERO_DISC * scale
    pos = (disc > 0) & ~zero
    neg = (disc < 0) & ~zero
    partition = np.where(zero, 0, np.where(pos, 1, -1))
    counts = {"positive": int(pos.sum()), "negative": int(neg.sum()), "zero": int(zero.sum())}
    if pos.all():
        verdict = "Rationalizable-candidate"
    elif neg.all():
        verdict = "NotRationalizable"
    else:
        verdict = "Mixed"
    witnesses = []
    if neg.any():
        idx = np.argwhere(neg)
        order = np.argsort(disc[neg])[:max_witnesses]
        for k in order:
            i, j = idx[k]
            witnesses.append({"u1": float(U1[i, j]), "u2": float(U2[i, j]),
                              "discriminant": float(disc[i, j]),
                              "E1_minus_E12": float(a[i, j]), "E2_minus_E21": float(b[i, j])})
    return RationalizabilityVerdict(verdict, witnesses, counts, bool(zero.any()),
                                    ((a1, b1), (a2, b2)), partition, (g1, g2))


def theta_slope(spec, u1, theta, branch="plus", convention="displayed"):
    """Right-hand side of the theta ODE.

    ``"displayed"`` evaluates ``E2`` at ``u1`` and ``E21`` with ``theta`` in the
    externality slot and ``u1`` in the own slot; ``"natural"`` uses the
    eigenvector's own arguments ``E2(theta) - E21(theta, u1)``.
    """
    if convention == "displayed":
        num = own_index(spec, 2, u1) - cross_index(spec, 2, u1, theta)
    elif convention == "natural":
        num = own_index(spec, 2, theta) - cross_index(spec, 2, theta, u1)
    else:
        raise ValueError("convention must be 'displayed' or 'natural'")
    den = own_index(spec, 1, u1) - cross_index(spec, 1, u1, theta)
    sign = 1.0 if branch == "plus" else -1.0
    return sign * np.sqrt(np.abs(num)) / np.sqrt(np.abs(den)), num, den


def theta_ode(spec, branch="plus", anchor=None, u_range=None, convention="displayed", n=201,
              rtol=1e-12, atol=1e-14):
    """Equilibrium link ``u2 = theta(u1)`` through ``anchor``.

    Integrated both ways from the anchor with DOP853; the result is a cubic
    Hermite curve on ``n`` nodes using the ODE's own slopes.  Raises
    :class:`BranchSingularError` when ``E1 - E12`` vanishes on the path and
    :class:`ComplexEigenError` when the discriminant turns negative.
    """
    if branch not in ("plus", "minus"):
        raise ValueError("branch must be 'plus' or 'minus'")
    lo, hi = spec.rate_domain if u_range is None else u_range
    if anchor is None:
        anchor = (0.5 * (lo + hi),) * 2
    u0, th0 = map(float, anchor)
    if not lo <= u0 <= hi:
        raise DomainError("anchor outside the u1 range", u=u0)
    rlo, rhi = spec.rate_domain

    def rhs(u, y):
        s, num, den = theta_slope(spec, u, y[0], branch, convention)
        return [s]

    def singular(u, y):
        return float(theta_slope(spec, u, y[0], branch, convention)[2])

    slack = 1e-9 * (rhi - rlo)

    def leave(u, y):
        return min(y[0] - rlo, rhi - y[0]) + slack

    for ev in (singular, leave):
        ev.terminal = True
    nodes = np.linspace(lo, hi, n)
    values = np.empty(n)
    for direction, mask in ((hi, nodes >= u0), (lo, nodes <= u0)):
        pts = nodes[mask]
        if direction == u0 or len(pts) == 0:
            values[mask] = th0
            continue
        sol = solve_ivp(rhs, (u0, direction), [th0], method="DOP853", rtol=rtol, atol=atol,
                        dense_output=True, events=(singular, leave))
        if sol.status == 1:
            ue = float(sol.t[-1])
            if sol.t_events[0].size:
                raise BranchSingularError(f"E1 - E12 vanishes on the theta path at u1 = {ue:.6g}",
                                          u=ue, stage="theta_ode")
            raise DomainError(f"theta leaves the rate domain at u1 = {ue:.6g}", u=ue)
        if sol.status != 0:
            raise BranchSingularError(f"theta integration failed: {sol.message}")
        values[mask] = sol.sol(pts)[0]
    slopes, num, den = theta_slope(spec, nodes, values, branch, convention)
    if np.any(num * den < 0):
        k = int(np.argmax(num * den < 0))
        raise ComplexEigenError("discriminant negative along the theta path",
                                u=(float(nodes[k]), float(values[k])))
    curve = Curve.tabulated(nodes, values, dydx=slopes, label="theta")
    return Curve(curve.func, curve.domain, "tabulated", "theta",
                 {"branch": branch, "convention": convention, "anchor": (u0, th0)},
                 curve.deriv, nodes, values)


def _inverse(fn, y, bracket, what):
    """``fn.d1`` inverse at ``y``: closed form when available, else root solve."""
    y = _arr(y)
    if fn.inv_d1 is not None:
        with np.errstate(all="ignore"):
            out = _arr(fn.inv_d1(y))
        if np.all(np.isfinite(out)):
            return out
        raise InversionError(f"{what} inverse undefined at some values")
    lo, hi = bracket
    try:
        return solve_monotone(lambda z: _arr(fn.d1(z)) - y, np.full_like(y, lo),
                              np.full_like(y, hi)).reshape(y.shape)
    except NoRootError as exc:
        raise InversionError(f"{what} is not invertible on [{lo:.6g}, {hi:.6g}]") from exc


@dataclass(frozen=True)
class LinkCheck:
    passed: bool
    defect: float
    worst_x: float
    tol: float


def bequest_link_check(spec, theta, x_grid, tol=1e-8):
    """Check ``own2'^-1(B2'(x)) = theta(own1'^-1(B1'(x)))`` on ``x_grid``."""
    if spec.B1 is None or spec.B2 is None:
        raise ParameterError("bequest link needs B1 and B2")
    x = _arr(x_grid)
    u1 = _inverse(spec.own1, spec.B1.d1(x), spec.rate_domain, "own1'")
    u2 = _inverse(spec.own2, spec.B2.d1(x), spec.rate_domain, "own2'")
    rhs = theta(u1)
    d = np.abs(u2 - rhs)
    k = int(np.argmax(d))
    return LinkCheck(bool(d[k] <= tol), float(d[k]), float(x[k]), tol)


# sign table: (f' psi' > 0, f'' >= 0) etc. -> shape of b
PRINTED_CASES = (
    ("f'psi'>0, f''>=0", +1, +1, ("increasing", "convex")),
    ("f'psi'>0, f''<=0", +1, -1, ("decreasing", "convex")),
    ("f'psi'<0, f''>=0", -1, +1, ("increasing", "concave")),
    ("f'psi'<0, f''<=0", -1, -1, ("decreasing", "convex")),
)
SHAPES = (("increasing", "convex"), ("increasing", "concave"),
          ("decreasing", "convex"), ("decreasing", "concave"))


def bequest_template(shape, x0, w, scale=1.0):
    """Affine-plus-quadratic bequest of the given monotonicity/convexity on ``[x0, x0 + w]``.

    ``|b'|`` stays in ``[0.5, 2] * scale`` on the interval.
    """
    # b = s (z + k z^2), z = x - x0: s fixes monotonicity, sign(s k) convexity
    k = {("increasing", "convex"): 0.5, ("increasing", "concave"): -0.25,
         ("decreasing", "convex"): -0.25, ("decreasing", "concave"): 0.5}[tuple(shape)] / w
    s = scale if shape[0] == "increasing" else -scale

    def b(x):
        z = x - x0
        return s * (z + k * z * z)

    def db(x):
        return s * (1.0 + 2 * k * (x - x0))

    def d2b(x):
        return np.full_like(_arr(x), 2 * s * k)

    return b, db, d2b


def construct_additive_oc(spec, theta, branch=None, u_range=None, n=200, case=None):
    """Single-agent problem ``(ell, rho=0, f, b)`` reproducing the MPNE.

    ``f`` is the eigenvalue of ``A`` along ``(u, theta(u))`` whose
    eigenvector is ``(1, theta')``; ``psi = B1'^-1 o own1'``; ``b`` comes from
    the sign table (printed cases first, then any remaining shape), and
    ``ell' = -f' b'(psi)``.  The chosen case and whether it is a printed one
    are recorded in ``meta``.
    """
    if spec.B1 is None:
        raise ParameterError("construction needs the bequest B1")
    branch = branch or theta.params.get("branch", "plus")
    lo, hi = theta.domain if u_range is None else u_range
    u = np.linspace(lo, hi, n)
    sign = 1.0 if branch == "plus" else -1.0

    def f(uu):
        uu = _arr(uu)
        th = theta(uu)
        a, b = off_diagonals(spec, uu, th)
        disc = a * b
        if np.any(disc <= 0):
            raise ComplexEigenError("discriminant not positive on the theta path")
        # eigenvector (1, theta') belongs to F + sign(a) sign_branch sqrt(disc)
        return -(uu + th) + sign * np.sign(a) * np.sqrt(disc)

    fu = f(u)
    df = fd_derivative(f, u, domain=(lo, hi))
    d2f = fd_derivative(f, u, order=2, domain=(lo, hi))
    fscale = max(np.max(np.abs(fu)), 1.0)
    if not (np.all(df > 1e-9 * fscale) or np.all(df < -1e-9 * fscale)):
        raise HypothesisError("f along the theta path is not strictly monotone")
    ctol = 1e-6 * fscale
    if np.all(d2f >= -ctol):
        f_curv = +1
    elif np.all(d2f <= ctol):
        f_curv = -1
    else:
        raise HypothesisError("f along the theta path changes convexity")
    flat = bool(np.all(np.abs(d2f) <= ctol))

    L1 = spec.own1
    psi_vals = _inverse(spec.B1, L1.d1(u), spec.stock_domain, "B1'")

    def psi(uu):
        return _inverse(spec.B1, L1.d1(_arr(uu)), spec.stock_domain, "B1'")

    dpsi = fd_derivative(psi, u, domain=(lo, hi))
    if not (np.all(dpsi > 0) or np.all(dpsi < 0)):
        raise HypothesisError("psi is not strictly monotone")
    fp = int(np.sign(df[0] * dpsi[0]))
    x0, x1 = float(np.min(psi_vals)), float(np.max(psi_vals))
    w = x1 - x0
    if not w > 0:
        raise DegenerateError("psi maps the u range to a single stock level")

    candidates = []
    for name, s_fp, s_f2, shape in PRINTED_CASES:
        if s_fp == fp and (s_f2 == f_curv or flat):
            candidates.append((name, shape, True))
    for shape in SHAPES:
        if all(shape != c[1] for c in candidates):
            candidates.append(("fallback", shape, False))
    if case is not None:
        candidates = [c for c in candidates if c[1] == tuple(case)] or candidates

    tried = []
    for name, shape, printed in candidates:
        b, db, d2b = bequest_template(shape, x0, w)
        l2 = -(d2f * db(psi_vals) + df * d2b(psi_vals) * dpsi)
        if np.all(l2 < 0):
            break
        bad = u[l2 >= 0]
        tried.append({"case": name, "shape": shape, "fails_on": [float(bad[0]), float(bad[-1])]})
    else:
        raise ConcavityError(f"no sign-table case gives ell'' < 0 on [{lo:.6g}, {hi:.6g}]: {tried}",
                             stage="construct_additive_oc")

    f_curve = Curve.closed_form(f, (lo, hi), deriv=lambda uu: fd_derivative(f, uu, domain=(lo, hi)),
                                label="f")

    def ell_prime(uu):
        return -f_curve.derivative(uu) * db(psi(uu))

    acc = Antiderivative(lambda z, y: [ell_prime(z)], lo, hi, lo, [0.0], log=False)
    ell = Curve(func=acc, domain=(lo, hi), kind="quadrature", label="ell", deriv=ell_prime)
    gamma = Curve.closed_form(lambda uu: db(psi(uu)), (lo, hi), label="gamma")
    bequest = Curve.closed_form(b, (x0, x1), deriv=db, label="b", shape=shape)
    return MonopolyProblem(ell=ell, rho=0.0, f=f_curve, gamma=gamma, C=1.0, u_ref=lo,
                           bequest=bequest, r=0.0, N=2, provenance="quadrature",
                           meta={"case": name, "printed_case": printed, "shape": shape,
                                 "branch": branch, "f_curvature": f_curv,
                                 "sign_f_psi": fp, "rejected": tried,
                                 "ell_second_max": float(np.max(l2))})
