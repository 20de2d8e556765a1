"""Fictitious monopoly construction for Markov-perfect extraction games."""

from .additive_duopoly import (
    AdditiveSpec, bequest_link_check, build_matrix_A, construct_additive_oc, eigen_pair,
    eigen_structure, rationalizability_test, theta_ode,
)
from .asym_duopoly import AsymParams, asym_fictitious, solve_delta
from .curves import Curve
from .errors import *  # noqa: F401,F403
from .game_model import (
    AdditiveSeparable, CobbDouglas, Custom, Finite, GameSpec, Infinite, IsoelasticPricing,
    RiskProfile, ScalarFn, risk_index_cross, risk_index_own, symmetric_reduce,
)
from .mpne_solver import (
    FeedbackStrategy, characteristics_mpne, game_pde_residual, stationary_mpne,
)
from .symmetric_equiv import (
    MonopolyProblem, coestate_gamma, competition_index, derive_monopoly, fictitious_bequest,
    fictitious_dynamics, fictitious_payoff, terminal_strategy,
)
from .verifier import (
    cobb_douglas_oracle, control_pde_residual, hamiltonian_concavity_check, identification_check,
    verify_equivalence,
)

__version__ = "0.1.0"
