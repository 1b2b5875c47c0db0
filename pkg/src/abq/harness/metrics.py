"""Error measures for learned action-value weights."""

import numpy as np

from .._validation import ValidationError
from ..bootstrap import BootstrapScheme
from ..mdp import exact_q_pi, stationary_distribution
from ..solvers import mspbe_quadratic


def _weights(d_weights, n):
    if d_weights is None:
        return np.ones(n)
    d = np.asarray(getattr(d_weights, "d", d_weights), dtype=float)
    if d.shape != (n,) or np.any(d < 0):
        raise ValidationError("d_weights must be a non-negative vector with one entry per row")
    return d


def nmse(w, features, q_ref, d_weights=None):
    """``||Xw - q||^2_D / ||q||^2_D``; ``d_weights=None`` means plain Euclidean."""
    X = np.asarray(getattr(features, "x", features), dtype=float)
    q = np.asarray(q_ref, dtype=float)
    w = np.asarray(w, dtype=float)
    if X.shape != (q.shape[0], w.shape[0]):
        raise ValidationError(f"shapes disagree: X {X.shape}, q {q.shape}, w {w.shape}")
    d = _weights(d_weights, q.shape[0])
    norm = float(d @ q**2)
    if norm == 0.0:
        raise ValidationError("reference values have zero norm; NMSE undefined")
    err = X @ w - q
    return float(d @ err**2) / norm


def nmse_quadratic(features, q_ref, d_weights=None):
    """``(Q, q, c0)`` with ``nmse(w) = w'Qw - 2q'w + c0`` (``c0 = 1``)."""
    X = np.asarray(getattr(features, "x", features), dtype=float)
    q = np.asarray(q_ref, dtype=float)
    d = _weights(d_weights, q.shape[0])
    norm = float(d @ q**2)
    if norm == 0.0:
        raise ValidationError("reference values have zero norm; NMSE undefined")
    XtD = X.T * d
    return XtD @ X / norm, XtD @ q / norm, 1.0


def task_metric(task, scheme, name):
    """Quadratic coefficients of ``"nmse"`` or ``"mspbe"`` for a finite task."""
    if name == "nmse":
        d = stationary_distribution(task.mdp, task.mu).d
        return nmse_quadratic(task.features, exact_q_pi(task.mdp, task.pi), d)
    if name == "mspbe":
        if not isinstance(scheme, BootstrapScheme):
            scheme = BootstrapScheme.constant(float(scheme))
        X = task.features.x
        d = stationary_distribution(task.mdp, task.mu).d
        singular = np.linalg.matrix_rank((X.T * d) @ X) < X.shape[1]
        return mspbe_quadratic(task.mdp, task.pi, task.mu, task.features, scheme, allow_singular=singular)
    raise ValidationError(f"unknown metric {name!r}")
