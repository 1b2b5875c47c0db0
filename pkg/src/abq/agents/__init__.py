"""Online and off-line learners for multi-step off-policy evaluation."""

from .estimators import ABQ, AGENTS, GQ, ABTrace, TreeBackup, make_agent
from .offline import offline_q_lambda_backward, offline_q_lambda_forward
from .steps import (
    DivergenceError,
    LearnerState,
    LearnerTables,
    Transition,
    abq_step,
    abtrace_step,
    gq_step,
    learner_tables,
    linear_step,
    tree_backup_step,
)

__all__ = [
    "ABQ", "ABTrace", "AGENTS", "DivergenceError", "GQ", "LearnerState", "LearnerTables",
    "Transition", "TreeBackup", "abq_step", "abtrace_step", "gq_step", "learner_tables",
    "linear_step", "make_agent", "offline_q_lambda_backward", "offline_q_lambda_forward",
    "tree_backup_step",
]
