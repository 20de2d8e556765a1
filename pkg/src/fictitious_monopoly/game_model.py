"""Oligopoly specification, utility families and the diagonal risk indices.

The game is the symmetric nonrenewable-resource oligopoly: ``N`` players
extract at rates ``u^i`` from a common stock ``y`` with ``dy/dt = -sum u^j``.
Player ``i`` enjoys ``L(u^i, u_{-i})``, symmetric in the other players'
rates.  On the symmetric diagonal every quantity is a function of a single
rate ``u``:

    e1(u)  = -L_own / (L_own_own + (N-1) L_own_cross)
    e-1(u) = -L_cross / (L_own_own + (N-1) L_own_cross)

where ``L_cross`` and ``L_own_cross`` differentiate with respect to *one*
other player's rate.  ``e-1`` is identically zero when ``N = 1``.
"""

from dataclasses import dataclass, field
from typing import Callable, NamedTuple, Optional, Union

import numpy as np
from scipy.interpolate import CubicSpline

from .curves import Curve
from .errors import DomainError, ParameterError, SignError, SingularityError
from .numerics import EPS

DEFAULT_RATE_DOMAIN = (1e-6, 1e6)
DEFAULT_STOCK_DOMAIN = (1e-6, 1e6)


# --------------------------------------------------------------------------
# scalar building blocks


@dataclass(frozen=True, eq=False)
class ScalarFn:
    """A smooth scalar function with its first two derivatives.

    ``inv_d1`` (inverse of the first derivative) is optional; it is used
    when marginal utilities or marginal bequests must be inverted.
    """

    f: Callable
    d1: Callable
    d2: Optional[Callable] = None
    inv_d1: Optional[Callable] = None
    kind: str = "custom"
    params: dict = field(default_factory=dict)

    def __call__(self, u):
        return self.f(np.asarray(u, dtype=float))

    def to_dict(self):
        if self.kind == "custom":
            raise ValueError("custom scalar functions are not serialisable")
        return {"kind": self.kind, **self.params}

    @classmethod
    def from_dict(cls, d):
        d = dict(d)
        kind = d.pop("kind")
        try:
            maker = _SCALAR_KINDS[kind]
        except KeyError:
            raise ValueError(f"unknown scalar function kind {kind!r}") from None
        return maker(**d)


def neg_exp(alpha):
    """``-exp(-alpha u)``, the CARA utility; ``-L'/L'' = 1/alpha``."""
    a = float(alpha)
    if a <= 0:
        raise ParameterError("neg_exp requires alpha > 0")
    return ScalarFn(
        f=lambda u: -np.exp(-a * u),
        d1=lambda u: a * np.exp(-a * u),
        d2=lambda u: -a * a * np.exp(-a * u),
        inv_d1=lambda y: -np.log(np.asarray(y, float) / a) / a,
        kind="neg_exp", params={"alpha": a})


def linear(slope):
    s = float(slope)
    return ScalarFn(
        f=lambda u: s * u,
        d1=lambda u: np.full_like(np.asarray(u, float), s),
        d2=lambda u: np.zeros_like(np.asarray(u, float)),
        kind="linear", params={"slope": s})


def zero():
    z = linear(0.0)
    return ScalarFn(z.f, z.d1, z.d2, kind="zero", params={})


def power(coef, exponent):
    """``coef * u**exponent``."""
    c, k = float(coef), float(exponent)

    def inv(y):
        if k == 1.0 or c * k == 0.0:
            raise SingularityError("power function with constant derivative is not invertible")
        return (np.asarray(y, float) / (c * k)) ** (1.0 / (k - 1.0))

    return ScalarFn(
        f=lambda u: c * u**k,
        d1=lambda u: c * k * u ** (k - 1.0),
        d2=lambda u: c * k * (k - 1.0) * u ** (k - 2.0),
        inv_d1=inv, kind="power", params={"coef": c, "exponent": k})


def crra(alpha):
    """``u**(1-alpha) / (1-alpha)``; marginal value ``u**-alpha``."""
    a = float(alpha)
    if a == 1.0:
        return log_fn(1.0)
    fn = power(1.0 / (1.0 - a), 1.0 - a)
    return ScalarFn(fn.f, fn.d1, fn.d2, fn.inv_d1, kind="crra", params={"alpha": a})


def log_fn(coef=1.0):
    c = float(coef)
    return ScalarFn(
        f=lambda u: c * np.log(u),
        d1=lambda u: c / u,
        d2=lambda u: -c / u**2,
        inv_d1=lambda y: c / np.asarray(y, float),
        kind="log", params={"coef": c})


def quadratic(coef):
    c = float(coef)
    return ScalarFn(
        f=lambda u: c * u**2,
        d1=lambda u: 2.0 * c * u,
        d2=lambda u: np.full_like(np.asarray(u, float), 2.0 * c),
        inv_d1=lambda y: np.asarray(y, float) / (2.0 * c),
        kind="quadratic", params={"coef": c})


_SCALAR_KINDS = {
    "neg_exp": neg_exp, "linear": linear, "zero": zero, "power": power,
    "crra": crra, "log": log_fn, "quadratic": quadratic,
}


# --------------------------------------------------------------------------
# utility families


class PartialDerivatives(NamedTuple):
    L: np.ndarray
    L_own: np.ndarray
    L_cross: np.ndarray
    L_own_own: np.ndarray
    L_own_cross: np.ndarray


@dataclass(frozen=True)
class CobbDouglas:
    """``(1-alpha)^-1 u_i^(1-alpha) * prod_{j != i} u_j^(1-beta)``."""

    alpha: float
    beta: float

    def __post_init__(self):
        if not (self.alpha > 0 and self.beta > 0):
            raise ParameterError("Cobb-Douglas needs alpha > 0 and beta > 0")
        if self.alpha == 1.0:
            raise ParameterError("Cobb-Douglas closed forms divide by 1 - alpha; alpha = 1 excluded")

    def standing_gap(self, N):
        """``-alpha + (N-1)(1-beta)``; must be negative."""
        return -self.alpha + (N - 1) * (1.0 - self.beta)

    def check(self, N):
        if self.standing_gap(N) >= 0:
            raise ParameterError(
                f"Cobb-Douglas standing condition -alpha+(N-1)(1-beta) < 0 fails "
                f"({self.standing_gap(N):.6g}) for N={N}")

    def partials(self, own, other, N):
        a, b = self.alpha, self.beta
        if np.any(own <= 0) or (N > 1 and np.any(other <= 0)):
            raise SingularityError("Cobb-Douglas utility has a pole at zero consumption",
                                   u=float(np.min(own)))
        ext = other ** ((N - 1) * (1.0 - b))
        L = own ** (1.0 - a) / (1.0 - a) * ext
        L_own = own ** (-a) * ext
        L_oo = -a * own ** (-a - 1.0) * ext
        if N > 1:
            d_ext = (1.0 - b) * other ** (-b) * other ** ((N - 2) * (1.0 - b))
            L_cross = own ** (1.0 - a) / (1.0 - a) * d_ext
            L_oc = own ** (-a) * d_ext
        else:
            L_cross = np.zeros_like(own)
            L_oc = np.zeros_like(own)
        return PartialDerivatives(L, L_own, L_cross, L_oo, L_oc)

    def diagonal_slopes(self, N):
        gap = self.standing_gap(N)
        eta1 = -1.0 / gap
        eta2 = 0.0 if N == 1 else -((1.0 - self.beta) / (1.0 - self.alpha)) / gap
        return eta1, eta2


@dataclass(frozen=True)
class IsoelasticPricing:
    """Profit ``u_i p(Q) - c(u_i)`` with inverse demand ``p(Q) = A Q^-q``."""

    q: float
    A: float = 1.0
    cost: Optional[ScalarFn] = None

    def __post_init__(self):
        if not (self.A > 0 and self.q > 0):
            raise ParameterError("isoelastic pricing needs A > 0 and q > 0")

    def check(self, N):
        pass

    def partials(self, own, other, N):
        A, q = self.A, self.q
        Q = own + (N - 1) * other
        if np.any(Q <= 0):
            raise SingularityError("inverse demand has a pole at Q = 0", u=float(np.min(own)))
        p = A * Q ** (-q)
        dp = -q * A * Q ** (-q - 1.0)
        d2p = q * (q + 1.0) * A * Q ** (-q - 2.0)
        c1 = c2 = 0.0
        c0 = 0.0
        if self.cost is not None:
            c0, c1 = self.cost.f(own), self.cost.d1(own)
            c2 = self.cost.d2(own)
        L = own * p - c0
        L_own = p + own * dp - c1
        L_oo = 2.0 * dp + own * d2p - c2
        if N > 1:
            L_cross = own * dp
            L_oc = dp + own * d2p
        else:
            L_cross = np.zeros_like(own)
            L_oc = np.zeros_like(own)
        return PartialDerivatives(L, L_own, L_cross, L_oo, L_oc)

    def diagonal_slopes(self, N):
        if self.cost is not None and self.cost.kind != "zero":
            return None
        if self.q == N:
            raise SingularityError(f"risk-index denominator vanishes for q = N = {N}")
        eta2 = 0.0 if N == 1 else 1.0 / (self.q - N)
        return 1.0 / self.q, eta2


@dataclass(frozen=True)
class AdditiveSeparable:
    """``own(u_i) + sum_{j != i} cross(u_j)``."""

    own: ScalarFn
    cross: ScalarFn

    def check(self, N):
        if self.own.d2 is None:
            raise ParameterError("additive own utility needs a second derivative")

    def partials(self, own, other, N):
        L = self.own.f(own) + (N - 1) * self.cross.f(other)
        L_own = self.own.d1(own)
        L_oo = self.own.d2(own)
        L_cross = self.cross.d1(other) if N > 1 else np.zeros_like(own)
        return PartialDerivatives(L, L_own, np.asarray(L_cross, float) * np.ones_like(own),
                                  L_oo, np.zeros_like(own))

    def diagonal_slopes(self, N):
        return None


@dataclass(frozen=True, eq=False)
class Custom:
    """Arbitrary ``L(own, other, N)``, all other players at rate ``other``.

    Optional partials follow the same signature; ``L_cross``/``L_own_cross``
    differentiate with respect to a single other player's rate.  Missing
    partials are approximated by central differences.
    """

    L: Callable
    L_own: Optional[Callable] = None
    L_cross: Optional[Callable] = None
    L_own_own: Optional[Callable] = None
    L_own_cross: Optional[Callable] = None

    def check(self, N):
        pass

    @staticmethod
    def _steps(u, power):
        # relative steps keep stencils on the positive half-line
        return EPS ** power * np.where(u != 0, np.abs(u), 1.0)

    def partials(self, own, other, N):
        L = self.L
        h1o, h1v = self._steps(own, 1 / 3), self._steps(other, 1 / 3)
        h2o, h2v = self._steps(own, 1 / 4), self._steps(other, 1 / 4)
        val = np.asarray(L(own, other, N), float)
        if self.L_own is not None:
            L_own = self.L_own(own, other, N)
        else:
            L_own = (L(own + h1o, other, N) - L(own - h1o, other, N)) / (2 * h1o)
        if self.L_own_own is not None:
            L_oo = self.L_own_own(own, other, N)
        else:
            L_oo = (L(own + h2o, other, N) - 2 * val + L(own - h2o, other, N)) / h2o**2
        if N == 1:
            zeros = np.zeros_like(val)
            return PartialDerivatives(val, L_own, zeros, L_oo, zeros)
        if self.L_cross is not None:
            L_cross = self.L_cross(own, other, N)
        else:
            L_cross = (L(own, other + h1v, N) - L(own, other - h1v, N)) / (2 * h1v) / (N - 1)
        if self.L_own_cross is not None:
            L_oc = self.L_own_cross(own, other, N)
        else:
            L_oc = (L(own + h2o, other + h2v, N) - L(own + h2o, other - h2v, N)
                    - L(own - h2o, other + h2v, N) + L(own - h2o, other - h2v, N)) / (
                        4 * h2o * h2v) / (N - 1)
        return PartialDerivatives(val, *(np.asarray(x, float) for x in (L_own, L_cross, L_oo, L_oc)))

    def diagonal_slopes(self, N):
        return None


UtilityFamily = Union[CobbDouglas, IsoelasticPricing, AdditiveSeparable, Custom]


# --------------------------------------------------------------------------
# game specification


@dataclass(frozen=True)
class Infinite:
    pass


@dataclass(frozen=True)
class Finite:
    T: float
    bequest: Optional[ScalarFn]

    def __post_init__(self):
        if not self.T > 0:
            raise ParameterError("finite horizon needs T > 0")
        if self.bequest is None:
            raise ParameterError("finite horizon requires a bequest function")


@dataclass(frozen=True)
class GameSpec:
    """A symmetric oligopoly of nonrenewable resource extraction."""

    N: int
    utility: UtilityFamily
    r: float
    horizon: Union[Infinite, Finite] = Infinite()
    rate_domain: tuple = DEFAULT_RATE_DOMAIN
    stock_domain: tuple = DEFAULT_STOCK_DOMAIN

    def __post_init__(self):
        if int(self.N) != self.N or self.N < 1:
            raise ParameterError("N must be a positive integer")
        if self.r < 0:
            raise ParameterError("discount rate must be nonnegative")
        lo, hi = self.rate_domain
        if not 0 <= lo < hi:
            raise ParameterError("rate domain must satisfy 0 <= u_min < u_max")
        self.utility.check(self.N)

    @property
    def finite(self):
        return isinstance(self.horizon, Finite)


# --------------------------------------------------------------------------
# operations


def _check_domain(x, domain, what="rate"):
    lo, hi = domain
    x = np.asarray(x, dtype=float)
    if np.any((x < lo) | (x > hi)):
        bad = x[(x < lo) | (x > hi)].flat[0]
        raise DomainError(f"{what} {bad:.6g} outside [{lo:.6g}, {hi:.6g}]", u=float(bad))


def partials(utility, N, own, other, domain=DEFAULT_RATE_DOMAIN):
    """``L`` and its first/second partials with all others at ``other``."""
    own = np.asarray(own, dtype=float)
    other = np.asarray(other, dtype=float)
    _check_domain(own, domain)
    _check_domain(other, domain)
    own, other = np.broadcast_arrays(own, other)
    with np.errstate(divide="raise", invalid="raise", over="raise"):
        try:
            out = utility.partials(own, other, N)
        except FloatingPointError as exc:
            raise SingularityError(f"utility evaluation failed: {exc}") from exc
    out = PartialDerivatives(*(np.asarray(v, float) for v in out))
    if own.ndim == 0:
        out = PartialDerivatives(*(float(v) for v in out))
    return out


def _indices(utility, N, u, domain):
    p = partials(utility, N, u, u, domain)
    den = np.asarray(p.L_own_own + (N - 1) * p.L_own_cross, float)
    if np.any(den == 0):
        bad = np.atleast_1d(np.asarray(u, float))[np.atleast_1d(den == 0)][0]
        raise SingularityError("risk-index denominator vanishes", u=float(bad))
    e1 = -np.asarray(p.L_own) / den
    em = np.zeros_like(e1) if N == 1 else -np.asarray(p.L_cross) / den
    return e1, em


def risk_index_own(spec, u):
    """``e1(u)``; raises :class:`SignError` where it is not positive."""
    e1, _ = _indices(spec.utility, spec.N, u, spec.rate_domain)
    if np.any(e1 <= 0):
        bad = np.atleast_1d(np.asarray(u, float))[np.atleast_1d(e1 <= 0)][0]
        raise SignError(f"e1 = {np.min(e1):.6g} <= 0", u=float(bad))
    return float(e1) if np.ndim(e1) == 0 else e1


def risk_index_cross(spec, u):
    """``e-1(u)``; identically zero for a single player."""
    if spec.N == 1:
        return 0.0 if np.ndim(u) == 0 else np.zeros(np.shape(u))
    _, em = _indices(spec.utility, spec.N, u, spec.rate_domain)
    return float(em) if np.ndim(em) == 0 else em


@dataclass(frozen=True)
class RiskProfile:
    """Diagonal risk-index curves ``e1``, ``e-1`` on their domain."""

    e1: Curve
    e_minus_1: Curve
    N: int
    domain: tuple
    meta: dict = field(default_factory=dict)

    @property
    def linear(self):
        """``(eta1, eta2)`` when both curves are ``slope * u``, else ``None``."""
        s1, s2 = self.e1.slope, self.e_minus_1.slope
        return None if s1 is None or s2 is None else (s1, s2)


def _tabulate_log(fn, lo, hi, rtol=1e-9, n0=65, max_nodes=2**15 + 1):
    """Adaptive cubic tabulation in ``log u`` of a vector-valued ``fn``.

    Doubles the node count until cubic interpolation reproduces direct
    evaluations at the midpoints to ``rtol`` (relative to the largest
    component), or until the error stops improving (noise floor).
    """
    n = n0
    best = None
    while True:
        t = np.linspace(np.log(lo), np.log(hi), n)
        vals = np.asarray(fn(np.clip(np.exp(t), lo, hi)))
        spl = CubicSpline(t, vals, axis=-1)
        tm = 0.5 * (t[1:] + t[:-1])
        direct = np.asarray(fn(np.exp(tm)))
        scale = np.maximum(np.max(np.abs(direct), axis=0), 1e-300)
        err = float(np.max(np.abs(spl(tm) - direct) / scale))
        if best is not None and err >= 0.5 * best[0]:
            return best[1], best[2], best[0]
        best = (err, t, vals)
        if err < rtol or 2 * n - 1 > max_nodes:
            return t, vals, err
        n = 2 * n - 1


def symmetric_reduce(spec, sample=200):
    """Reduce a symmetric game to its :class:`RiskProfile`.

    Closed forms for the Cobb-Douglas, isoelastic and additive families;
    adaptive cubic tabulation for custom utilities.  ``e1 > 0`` is checked
    on ``sample`` log-spaced points (or on every tabulation node).
    """
    ut, N, dom = spec.utility, spec.N, tuple(map(float, spec.rate_domain))
    slopes = ut.diagonal_slopes(N)
    meta = {"family": type(ut).__name__}
    if slopes is not None:
        eta1, eta2 = slopes
        if eta1 <= 0:
            raise SignError(f"e1 slope {eta1:.6g} <= 0", u=dom[0])
        e1 = Curve.linear(eta1, dom, label="e1")
        em = Curve.linear(eta2, dom, label="e_minus_1")
        meta.update(eta1=eta1, eta2=eta2, representation="closed_form")
        return RiskProfile(e1, em, N, dom, meta)

    if isinstance(ut, Custom):
        lo = dom[0] if dom[0] > 0 else 1e-6
        t, vals, err = _tabulate_log(lambda u: np.vstack(_indices(ut, N, u, dom)), lo, dom[1])
        if np.any(vals[0] <= 0):
            raise SignError("e1 <= 0 on the rate domain", u=float(np.exp(t[np.argmax(vals[0] <= 0)])))
        spl = CubicSpline(t, vals, axis=-1)
        dspl = spl.derivative()
        nodes = np.exp(t)

        def curve(row, label):
            return Curve(func=lambda u: spl(np.log(u))[row],
                         domain=(float(lo), dom[1]), kind="tabulated", label=label,
                         deriv=lambda u: dspl(np.log(u))[row] / u,
                         nodes=nodes, values=vals[row])

        meta.update(representation="tabulated", nodes=len(t), interp_error=err)
        return RiskProfile(curve(0, "e1"), curve(1, "e_minus_1"), N, (float(lo), dom[1]), meta)

    grid = np.geomspace(max(dom[0], 1e-300), dom[1], sample)
    e1_grid, _ = _indices(ut, N, grid, dom)
    if np.any(e1_grid <= 0):
        raise SignError("e1 <= 0 on the rate domain", u=float(grid[np.argmax(e1_grid <= 0)]))
    e1 = Curve.closed_form(lambda u: _indices(ut, N, u, dom)[0], dom, label="e1")
    if N == 1:
        em = Curve.constant(0.0, dom, label="e_minus_1")
    else:
        em = Curve.closed_form(lambda u: _indices(ut, N, u, dom)[1], dom, label="e_minus_1")
    meta.update(representation="closed_form")
    return RiskProfile(e1, em, N, dom, meta)
