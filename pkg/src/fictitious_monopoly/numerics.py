"""Low-level numerics: finite-difference stencils, a vectorised safeguarded
root finder and dense antiderivatives."""

from functools import lru_cache

import numpy as np
from scipy.integrate import solve_ivp

from .errors import NoRootError, QuadratureError

EPS = np.finfo(float).eps

ODE_RTOL = 1e-12
ODE_ATOL = 1e-14


def fornberg_weights(z, x, m):
    """Finite-difference weights for derivatives 0..m at ``z`` on nodes ``x``.

    Returns an array ``c`` with ``c[k, j]`` the weight of ``f(x[j])`` in the
    k-th derivative (Fornberg 1988).
    """
    x = np.asarray(x, dtype=float)
    n = len(x)
    c = np.zeros((m + 1, n))
    c1, c4 = 1.0, x[0] - z
    c[0, 0] = 1.0
    for i in range(1, n):
        mn = min(i, m)
        c2, c5, c4 = 1.0, c4, x[i] - z
        for j in range(i):
            c3 = x[i] - x[j]
            c2 *= c3
            if j == i - 1:
                for k in range(mn, 0, -1):
                    c[k, i] = c1 * (k * c[k - 1, i - 1] - c5 * c[k, i - 1]) / c2
                c[0, i] = -c1 * c5 * c[0, i - 1] / c2
            for k in range(mn, 0, -1):
                c[k, j] = (c4 * c[k, j] - k * c[k - 1, j]) / c3
            c[0, j] = c4 * c[0, j] / c3
        c1 = c2
    return c


@lru_cache(maxsize=None)
def _shifted_weights(shift, order):
    offsets = np.arange(-2, 3) + shift
    return offsets, fornberg_weights(0.0, offsets, order)[order]


def fd_derivative(func, x, order=1, domain=None, step=None):
    """Five-point finite-difference derivative of a vectorised function.

    Central (4th order) where the stencil fits inside ``domain``; shifted
    one-sided stencils near the edges.  The step is relative to ``|x|``.
    """
    x = np.asarray(x, dtype=float)
    scalar = x.ndim == 0
    x = np.atleast_1d(x)
    if step is None:
        step = EPS ** (1.0 / (4 + order))
    h = step * np.where(x != 0.0, np.abs(x), 1.0)
    lo, hi = (-np.inf, np.inf) if domain is None else domain
    out = np.empty_like(x)
    shifts = np.zeros(x.shape, dtype=int)
    left_room = np.floor((x - lo) / h)
    right_room = np.floor((hi - x) / h)
    shifts = np.where(left_room < 2, 2 - np.minimum(left_room, 2), shifts)
    shifts = np.where(right_room < 2, -(2 - np.minimum(right_room, 2)), shifts)
    for s in np.unique(shifts):
        mask = shifts == s
        offsets, w = _shifted_weights(int(s), order)
        xs = x[mask][:, None] + offsets[None, :] * h[mask][:, None]
        vals = np.asarray(func(xs.ravel()), dtype=float).reshape(xs.shape)
        out[mask] = vals @ w / h[mask] ** order
    return out[0] if scalar else out


def grid_derivative(x, y, axis=-1, order=1):
    """Derivative of samples on a (possibly non-uniform) grid.

    Five-point Fornberg stencils: centred in the interior, one-sided at the
    two nodes nearest each edge.
    """
    x = np.asarray(x, dtype=float)
    y = np.moveaxis(np.asarray(y, dtype=float), axis, -1)
    n = len(x)
    if n < 5:
        raise ValueError("grid_derivative needs at least 5 nodes")
    out = np.empty_like(y)
    for i in range(n):
        start = min(max(i - 2, 0), n - 5)
        idx = slice(start, start + 5)
        w = fornberg_weights(x[i], x[idx], order)[order]
        out[..., i] = y[..., idx] @ w
    return np.moveaxis(out, -1, axis)


def solve_monotone(g, lo, hi, dg=None, rtol=1e-14, xtol=1e-300, maxiter=200):
    """Vectorised safeguarded Newton/bisection for ``g(x) = 0``.

    ``g`` maps an array of abscissae to an array of residuals (element-wise
    independent problems).  Each problem needs a sign change on ``[lo, hi]``.
    Newton steps (when ``dg`` is given) or regula-falsi steps are accepted
    when they stay inside the current bracket and at least halve the step
    taken two iterations earlier; otherwise the bracket is bisected.  A
    problem is converged when its bracket or its last step is below
    ``rtol * |x| + xtol``.
    """
    a = np.array(lo, dtype=float, ndmin=1)
    b = np.array(hi, dtype=float, ndmin=1)
    a, b = np.broadcast_arrays(a, b)
    a, b = a.copy(), b.copy()
    ga, gb = np.asarray(g(a), float), np.asarray(g(b), float)
    bad = np.sign(ga) * np.sign(gb) > 0
    if np.any(bad | ~np.isfinite(ga) | ~np.isfinite(gb)):
        i = int(np.argmax(bad | ~np.isfinite(ga) | ~np.isfinite(gb)))
        raise NoRootError(
            f"no sign change on bracket [{a[i]:.6g}, {b[i]:.6g}]", u=float(a[i])
        )
    x = np.where(ga == 0, a, np.where(gb == 0, b, 0.5 * (a + b)))
    done = (ga == 0) | (gb == 0)
    step_old = np.abs(b - a)
    step = step_old.copy()
    for _ in range(maxiter):
        gx = np.asarray(g(x), float)
        done |= gx == 0
        left = np.sign(gx) == np.sign(ga)
        a = np.where(left & ~done, x, a)
        ga = np.where(left & ~done, gx, ga)
        b = np.where(~left & ~done, x, b)
        gb = np.where(~left & ~done, gx, gb)
        done |= np.abs(b - a) <= rtol * np.abs(x) + xtol
        if np.all(done):
            break
        with np.errstate(divide="ignore", invalid="ignore"):
            if dg is not None:
                cand = x - gx / np.asarray(dg(x), float)
            else:
                cand = b - gb * (b - a) / (gb - ga)
        inside = np.isfinite(cand) & (cand > np.minimum(a, b)) & (cand < np.maximum(a, b))
        inside &= np.abs(cand - x) <= 0.5 * step_old
        nxt = np.where(inside, cand, 0.5 * (a + b))
        step_old, step = step, np.abs(nxt - x)
        small = inside & (step <= rtol * np.abs(x) + xtol)
        x = np.where(done, x, nxt)
        done |= small
        if np.all(done):
            break
    return x


class Antiderivative:
    """Dense solution of ``y' = rhs(z, y)``, ``y(base) = y0`` on ``[lo, hi]``.

    Integrates outward from ``base`` in both directions with DOP853 and
    keeps the dense output, so evaluation anywhere in the interval is a
    cheap vectorised polynomial lookup.  On a positive interval the
    independent variable is ``log z``, which absorbs ``1/z`` behaviour at
    the left end.  ``rhs`` takes a scalar ``z`` and the state vector.
    """

    def __init__(self, rhs, lo, hi, base, y0, log=None, rtol=ODE_RTOL, atol=ODE_ATOL):
        self.lo, self.hi, self.base = float(lo), float(hi), float(base)
        if not self.lo <= self.base <= self.hi:
            raise ValueError("base point must lie inside [lo, hi]")
        self.log = self.lo > 0 if log is None else log
        y0 = np.atleast_1d(np.asarray(y0, dtype=float))
        self.size = len(y0)
        if self.log:
            fun = lambda t, y: np.exp(t) * np.asarray(rhs(np.exp(t), y), float)
            t0, ta, tb = np.log(self.base), np.log(self.lo), np.log(self.hi)
        else:
            fun = lambda t, y: np.asarray(rhs(t, y), float)
            t0, ta, tb = self.base, self.lo, self.hi
        self.t0, self.y0 = t0, y0
        self._up = self._solve(fun, t0, tb, y0, rtol, atol)
        self._down = self._solve(fun, t0, ta, y0, rtol, atol)

    @staticmethod
    def _solve(fun, t0, t1, y0, rtol, atol):
        if t1 == t0:
            return None
        sol = solve_ivp(fun, (t0, t1), y0, method="DOP853", rtol=rtol, atol=atol,
                        dense_output=True)
        if sol.status != 0:
            raise QuadratureError(f"antiderivative integration failed: {sol.message}",
                                  u=float(np.exp(sol.t[-1]) if t0 != t1 else t0))
        return sol.sol

    def __call__(self, z):
        z = np.asarray(z, dtype=float)
        t = np.log(np.clip(z, self.lo, None)) if self.log else z
        flat = np.atleast_1d(t).ravel()
        out = np.empty((self.size, flat.size))
        out[:] = self.y0[:, None]
        up, down = flat > self.t0, flat < self.t0
        if np.any(up):
            out[:, up] = self._up(flat[up])
        if np.any(down):
            out[:, down] = self._down(flat[down])
        out = out.reshape((self.size,) + np.shape(z))
        return out[0] if self.size == 1 else out
