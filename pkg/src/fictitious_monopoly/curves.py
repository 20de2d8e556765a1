"""Scalar curves on a bounded interval: closed forms and tabulations."""

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy.interpolate import CubicHermiteSpline, CubicSpline

from .errors import DomainError
from .numerics import fd_derivative

# relative slack when testing domain membership, so that nodes computed by
# round-off-prone arithmetic at an endpoint are accepted
_DOMAIN_SLACK = 1e-12


@dataclass(frozen=True, eq=False)
class Curve:
    """A scalar function of one variable restricted to ``domain``.

    ``kind`` is ``"closed_form"``, ``"tabulated"`` or ``"quadrature"`` (a
    closed form whose evaluation runs adaptive quadrature).  Evaluating
    outside the domain raises :class:`DomainError`; curves never
    extrapolate.
    """

    func: Callable
    domain: tuple
    kind: str = "closed_form"
    label: str = ""
    params: dict = field(default_factory=dict)
    deriv: Optional[Callable] = None
    nodes: Optional[np.ndarray] = None
    values: Optional[np.ndarray] = None

    def _check(self, x):
        lo, hi = self.domain
        tol = _DOMAIN_SLACK * max(abs(lo), abs(hi), 1.0) if np.isfinite(hi) else 0.0
        if np.any(~((x >= lo - tol) & (x <= hi + tol))):
            bad = x[~((x >= lo - tol) & (x <= hi + tol))]
            raise DomainError(
                f"{self.label or 'curve'} evaluated at {bad.flat[0]:.6g} outside "
                f"[{lo:.6g}, {hi:.6g}]", u=float(bad.flat[0]))

    def __call__(self, x):
        arr = np.asarray(x, dtype=float)
        self._check(arr)
        out = np.asarray(self.func(arr), dtype=float)
        if out.shape != arr.shape:
            out = np.broadcast_to(out, arr.shape).copy()
        return float(out) if out.ndim == 0 else out

    def derivative(self, x, order=1):
        """Analytic first derivative when known, otherwise 5-point FD."""
        arr = np.asarray(x, dtype=float)
        self._check(arr)
        if order == 1 and self.deriv is not None:
            out = np.asarray(self.deriv(arr), dtype=float)
            if out.shape != arr.shape:
                out = np.broadcast_to(out, arr.shape).copy()
        elif self.deriv is not None and order == 2:
            out = fd_derivative(self.deriv, arr, order=1, domain=self.domain)
        else:
            out = fd_derivative(self.func, arr, order=order, domain=self.domain)
        out = np.asarray(out, dtype=float)
        return float(out) if out.ndim == 0 else out

    # constructors -------------------------------------------------------

    @classmethod
    def closed_form(cls, func, domain, deriv=None, label="", **params):
        return cls(func=func, domain=tuple(map(float, domain)), kind="closed_form",
                   label=label, params=params, deriv=deriv)

    @classmethod
    def linear(cls, slope, domain, intercept=0.0, label=""):
        slope, intercept = float(slope), float(intercept)
        return cls.closed_form(lambda x: slope * x + intercept, domain,
                               deriv=lambda x: np.full_like(x, slope),
                               label=label, family="linear", slope=slope,
                               intercept=intercept)

    @classmethod
    def constant(cls, value, domain, label=""):
        return cls.linear(0.0, domain, intercept=value, label=label)

    @classmethod
    def tabulated(cls, x, y, dydx=None, label="", domain=None):
        """Cubic interpolant through strictly increasing nodes (>= 4).

        With ``dydx`` the interpolant is the cubic Hermite spline matching
        node slopes; otherwise a not-a-knot cubic spline.
        """
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        if x.ndim != 1 or len(x) < 4:
            raise ValueError("tabulated curves need at least 4 nodes")
        if np.any(np.diff(x) <= 0):
            raise ValueError("tabulated abscissae must be strictly increasing")
        if dydx is None:
            spline = CubicSpline(x, y, extrapolate=False)
        else:
            spline = CubicHermiteSpline(x, y, np.asarray(dydx, float), extrapolate=False)
        dspline = spline.derivative()
        lo, hi = (x[0], x[-1]) if domain is None else domain

        def func(z):
            return spline(np.clip(z, x[0], x[-1]))

        def deriv(z):
            return dspline(np.clip(z, x[0], x[-1]))

        return cls(func=func, domain=(float(lo), float(hi)), kind="tabulated",
                   label=label, deriv=deriv, nodes=x, values=y)

    def with_label(self, label):
        return Curve(self.func, self.domain, self.kind, label, self.params,
                     self.deriv, self.nodes, self.values)

    def scaled(self, factor):
        """Pointwise multiple ``factor * self``."""
        factor = float(factor)
        deriv = None if self.deriv is None else (lambda x: factor * self.deriv(x))
        return Curve(lambda x: factor * self.func(x), self.domain, self.kind,
                     self.label, dict(self.params), deriv,
                     self.nodes, None if self.values is None else factor * self.values)

    @property
    def slope(self):
        """Slope of a linear closed form through the origin, else ``None``."""
        if self.params.get("family") == "linear" and self.params.get("intercept", 0.0) == 0.0:
            return self.params["slope"]
        return None

    def grid(self, n=50, log=None):
        """``n`` points spanning the domain (geometric when it is positive)."""
        lo, hi = self.domain
        if log is None:
            log = lo > 0
        return np.geomspace(lo, hi, n) if log else np.linspace(lo, hi, n)
