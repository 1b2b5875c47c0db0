"""Multi-step off-policy action-value evaluation with action-dependent bootstrapping.

Subpackages: :mod:`abq.agents` (learners), :mod:`abq.envs` (test problems)
and :mod:`abq.harness` (experiments, CLI). Model types, bootstrapping
schemes and exact solvers are re-exported here.
"""

from .bootstrap import (
    BootstrapMatrix,
    BootstrapScheme,
    bootstrap_matrix,
    lambda_sa,
    nu,
    psi_from_zeta,
    psi_pivots,
    zeta_from_psi,
)
from .mdp import (
    FeatureMap,
    Mdp,
    Policy,
    ReducibleChainError,
    StateActionDist,
    exact_q_pi,
    stationary_distribution,
    target_transition_matrix,
)
from .solvers import (
    MspbeContext,
    RankDeficientError,
    SolutionMatrices,
    expected_update,
    mspbe,
    mspbe_gradient,
    solution_abq,
    solution_constant_lambda,
    trace_expectation_matrix,
    truncated_return,
)
from .trajectory import Trajectory, sample_trajectory

__version__ = "0.1.0"
