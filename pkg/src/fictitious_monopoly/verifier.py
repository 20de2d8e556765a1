"""Checks that a fictitious monopoly rationalizes a symmetric MPNE."""

from dataclasses import asdict, dataclass, field
from typing import Optional

import numpy as np

from .errors import SingularityError
from .game_model import CobbDouglas, GameSpec, partials, symmetric_reduce
from .mpne_solver import (
    characteristics_mpne, game_pde_residual, residual_report, stationary_mpne,
    strategy_derivatives,
)
from .numerics import fd_derivative
from .symmetric_equiv import (
    competition_index, derive_monopoly, fictitious_dynamics, foc_defect, terminal_strategy,
)

# (accept, reject) sup-norm thresholds
THRESHOLDS = {"closed_form": (1e-6, 1e-4), "numeric": (1e-4, 1e-2)}


def _coestate_ratio(oc, u):
    """``rho gamma(u) / gamma'(u)``; zero when ``rho = 0``."""
    if oc.rho == 0:
        return np.zeros_like(np.asarray(u, float))
    dg = oc.gamma.derivative(u)
    if np.any(dg == 0):
        raise SingularityError("gamma' vanishes on the strategy range",
                               u=float(np.atleast_1d(u)[np.atleast_1d(dg == 0)][0]))
    return oc.rho * oc.gamma(u) / dg


def _control_residual_array(strategy, oc, f=None):
    f = oc.f if f is None else f
    u = np.asarray(strategy.values, float)
    ok = np.isfinite(u)
    uu = np.where(ok, u, oc.f.domain[0])
    ux, ut = strategy_derivatives(strategy)
    res = f(uu) * ux - _coestate_ratio(oc, uu)
    if ut is not None:
        res = res + ut
    return np.where(ok, res, np.nan)


def _interior_report(strategy, res):
    x = strategy.x
    if strategy.stationary:
        return residual_report(res[1:-1], (x[1:-1],))
    return residual_report(res[1:-1, 1:-1], (strategy.t[1:-1], x[1:-1]))


def control_pde_residual(strategy, oc):
    """``u_t + f(u) u_x - rho gamma/gamma'`` on interior nodes (4th-order FD)."""
    if len(strategy.x) < 5 or (not strategy.stationary and len(strategy.t) < 5):
        return residual_report(np.full(1, np.nan), (np.zeros(1),))
    return _interior_report(strategy, _control_residual_array(strategy, oc))


def identification_check(profile, oc, N=None, n=50):
    """Sup defects of ``f = -Nu + (N-1)(e1 - e-1)`` and ``rho gamma/gamma' = -r e1``.

    Reports absolute (``f``, ``gamma``) and scaled (``*_rel``) defects on
    ``n`` points of the problem's domain.  Quadrature-built coestates are
    differentiated numerically so the check does not reuse the analytic
    identity they were built from.
    """
    N = profile.N if N is None else N
    u = oc.f.grid(n)
    e1, em = profile.e1(u), profile.e_minus_1(u)
    f_exp = -N * u + (N - 1) * (e1 - em)
    f_def = np.abs(oc.f(u) - f_exp)
    if oc.rho == 0:
        g_def = np.abs(oc.r * e1) if oc.r else np.zeros_like(u)
    else:
        if oc.gamma.kind == "quadrature":
            dg = fd_derivative(oc.gamma.func, u, domain=oc.gamma.domain)
        else:
            dg = oc.gamma.derivative(u)
        g_def = np.abs(oc.rho * oc.gamma(u) / dg + oc.r * e1)
    return {"f": float(np.max(f_def)), "gamma": float(np.max(g_def)),
            "f_rel": float(np.max(f_def / np.maximum(np.abs(f_exp), 1.0))),
            "gamma_rel": float(np.max(g_def / np.maximum(np.abs(oc.r * e1), 1.0))),
            "n": n}


@dataclass(frozen=True)
class ConcavitySample:
    x: Optional[float]
    u: float
    h_uu: float

    @property
    def violation(self):
        return not self.h_uu < 0


def hamiltonian_concavity_check(obj, points, strategy=None):
    """Own-control curvature of the pre-Hamiltonian at ``(x, u)`` points.

    For a :class:`MonopolyProblem`, ``h_uu = ell''(u) + f''(u) p`` with the
    costate ``p = gamma(strategy(x))`` (``gamma(u)`` without a strategy).
    For a :class:`GameSpec` the dynamics are linear in the control and
    ``h_uu = L_own_own(u, u)``.  Nonnegative samples are violations.
    """
    pts = [(None, float(p)) if np.ndim(p) == 0 else (float(p[0]), float(p[1])) for p in points]
    u = np.array([p[1] for p in pts])
    if isinstance(obj, GameSpec):
        h = np.atleast_1d(partials(obj.utility, obj.N, u, u, obj.rate_domain).L_own_own)
    else:
        if strategy is not None and all(p[0] is not None for p in pts):
            p = obj.gamma(strategy(np.array([q[0] for q in pts])))
        else:
            p = obj.gamma(u)
        h = np.atleast_1d(obj.ell.derivative(u, order=2) + obj.f.derivative(u, order=2) * p)
    return [ConcavitySample(x, uu, float(hh)) for (x, uu), hh in zip(pts, h)]


@dataclass(frozen=True)
class CobbDouglasOracle:
    alpha: float
    beta: float
    N: int
    r: float
    rho: float
    eta1: float
    eta2: float
    k_f: float
    c: float
    m: Optional[float]
    CI: float
    ci_duopoly_shortcut: Optional[float]

    def to_dict(self):
        return asdict(self)


def cobb_douglas_oracle(alpha, beta, N, r, rho=None):
    """Closed-form constants of the symmetric Cobb-Douglas game.

    ``CI`` follows the competition-index definition; the two-player
    shortcut ``(beta - alpha) / (2 (alpha + beta - 1))`` is reported
    alongside for comparison (it differs by a factor ``1 - alpha``).
    """
    cd = CobbDouglas(alpha, beta)
    cd.check(N)
    rho = r if rho is None else rho
    eta1, eta2 = cd.diagonal_slopes(N)
    k_f = -N + (N - 1) * (eta1 - eta2)
    c = -r * eta1 / k_f
    m = rho / (eta1 * r) if r > 0 else None
    ci = (N - 1) / N * (eta1 - eta2)
    short = None
    if N == 2 and alpha + beta != 1:
        short = 0.5 * (beta - alpha) / (alpha + beta - 1)
    return CobbDouglasOracle(alpha, beta, N, r, rho, eta1, eta2, k_f, c, m, ci, short)


@dataclass
class EquivalenceReport:
    verdict: str
    residual_control_pde: dict
    residual_identification: dict
    foc_residual: float
    concavity_samples: list
    competition_index: float
    residual_game_pde: dict = field(default_factory=dict)
    notes: list = field(default_factory=list)

    @property
    def concavity_violations(self):
        return [s for s in self.concavity_samples if s.violation]

    def to_dict(self):
        return {
            "verdict": self.verdict,
            "residual_control_pde": self.residual_control_pde,
            "residual_game_pde": self.residual_game_pde,
            "residual_identification": self.residual_identification,
            "foc_residual": self.foc_residual,
            "concavity": {"samples": len(self.concavity_samples),
                          "violations": [asdict(s) for s in self.concavity_violations[:10]]},
            "competition_index": self.competition_index,
            "notes": list(self.notes),
        }


def classify(metrics, thresholds, concave=True):
    """Verdict from residual metrics and the concavity spot check."""
    accept, reject = thresholds
    vals = [v for v in metrics if np.isfinite(v)]
    if any(v > reject for v in vals):
        return "NotEquivalent"
    if len(vals) < len(metrics):
        return "Inconclusive"
    if all(v <= accept for v in vals) and concave:
        return "Equivalent"
    return "Inconclusive"


def verify_equivalence(spec, oc=None, strategy=None, x_grid=None, t_grid=None,
                       thresholds=None, n_concavity=20):
    """Run the full equivalence check for a symmetric game.

    Builds whatever is not supplied (monopoly, MPNE), then evaluates the
    control-PDE residual, the identification and first-order defects, and
    a ``n_concavity`` x ``n_concavity`` concavity sample.  Time-dependent
    strategies are judged on the pointwise gap between the control and game
    residuals (same stencils), with the game residual reported as the
    discretisation floor.
    """
    profile = symmetric_reduce(spec)
    notes = ["checks run on bounded grids only"]
    if oc is None:
        oc = derive_monopoly(spec)
    if x_grid is None:
        x_grid = np.geomspace(0.1, 10.0, 200)
    if strategy is None:
        if spec.finite:
            t_grid = np.linspace(0.0, spec.horizon.T, 41) if t_grid is None else t_grid
            strategy = characteristics_mpne(spec, profile, oc.terminal or terminal_strategy(spec),
                                            t_grid, x_grid)
        else:
            strategy = stationary_mpne(spec, profile, x_grid)
    if thresholds is None:
        thresholds = THRESHOLDS["closed_form" if oc.provenance == "closed_form" else "numeric"]

    control = control_pde_residual(strategy, oc)
    game = game_pde_residual(strategy, spec, profile)
    if strategy.stationary:
        control_metric = control.sup
    else:
        gap = _control_residual_array(strategy, oc) - _game_array(strategy, spec, profile)
        control_metric = _interior_report(strategy, gap).sup
        notes.append("time-dependent strategy: control residual judged net of the game "
                     "residual on the same stencils")
    ident = identification_check(profile, oc, spec.N)
    foc = foc_defect(oc)

    xs = np.linspace(strategy.x[0], strategy.x[-1], n_concavity)
    u_all = np.asarray(strategy.values, float)
    u_all = u_all[np.isfinite(u_all)]
    lo, hi = max(np.min(u_all), oc.f.domain[0]), min(np.max(u_all), oc.f.domain[1])
    us = np.geomspace(lo, hi, n_concavity) if lo > 0 else np.linspace(lo, hi, n_concavity)
    pts = [(x, u) for x in xs for u in us]
    samples = hamiltonian_concavity_check(oc, pts, strategy if strategy.stationary else None)
    concave = not any(s.violation for s in samples)
    if not concave:
        notes.append("pre-Hamiltonian concavity fails at sampled points")

    metrics = [control_metric, ident["f_rel"], ident["gamma_rel"], foc]
    verdict = classify(metrics, thresholds, concave)
    return EquivalenceReport(
        verdict=verdict,
        residual_control_pde=dict(control.to_dict(), judged=control_metric),
        residual_identification=ident,
        foc_residual=foc,
        concavity_samples=samples,
        competition_index=competition_index(profile, spec.N, oc.u_ref),
        residual_game_pde=game.to_dict(),
        notes=notes + [f"thresholds accept={thresholds[0]:g} reject={thresholds[1]:g}"],
    )


def _game_array(strategy, spec, profile):
    a = fictitious_dynamics(profile, spec.N)
    u = np.asarray(strategy.values, float)
    ok = np.isfinite(u)
    uu = np.where(ok, u, profile.domain[0])
    ux, ut = strategy_derivatives(strategy)
    res = a(uu) * ux + spec.r * profile.e1(uu)
    if ut is not None:
        res = res + ut
    return np.where(ok, res, np.nan)
