"""Estimator-style wrappers around the compiled learners.

Each learner is configured by constructor hyperparameters (``get_params`` /
``set_params`` come from scikit-learn's ``BaseEstimator``) and trained on a
:class:`~abq.trajectory.Trajectory` with ``fit`` / ``partial_fit``. The
learned weights live in ``coef_``; ``predict`` evaluates ``X @ coef_``.

The task context (target and behavior policies, features, discount) is
passed to ``fit`` rather than the constructor, so one configured learner
can be reused across tasks.
"""

import numpy as np
from sklearn.base import BaseEstimator

from .._validation import ValidationError, check_scalar
from ..bootstrap import BootstrapScheme
from . import _kernels
from .steps import XTILDE_FORMS, DivergenceError, learner_tables


class _TraceLearner(BaseEstimator):
    """Shared fitting logic. Subclasses define ``_scheme`` and ``_correction``."""

    _correction = True

    def _scheme(self, mu, pi):
        raise NotImplementedError

    def _check_features(self, X):
        pass

    def _validate_params(self):
        check_scalar(self.alpha, "alpha", 0.0, lo_open=True)
        check_scalar(self.beta, "beta", 0.0)
        check_scalar(self.alpha_power, "alpha_power", 0.0, 1.0)
        check_scalar(self.beta_power, "beta_power", 0.0, 1.0)
        if self.xtilde_form not in XTILDE_FORMS:
            raise ValidationError(f"xtilde_form must be one of {XTILDE_FORMS}")

    def _init_state(self, n):
        w0 = getattr(self, "w0", None)
        self.coef_ = np.zeros(n) if w0 is None else np.array(w0, dtype=float)
        if self.coef_.shape != (n,):
            raise ValidationError(f"w0 has shape {self.coef_.shape}, expected ({n},)")
        self.h_ = np.zeros(n)
        self.trace_ = np.zeros(n)
        self.n_steps_ = 0
        self.diverged_at_ = None
        self.history_ = np.empty(0)

    def fit(self, trajectory, pi, mu, features, gamma, metric=None, record_every=1):
        """Learn from ``trajectory`` starting at ``w0`` (zeros by default).

        ``metric`` is an optional quadratic ``(Q, q, c0)`` evaluated as
        ``w'Qw - 2q'w + c0`` every ``record_every`` steps into ``history_``.
        Divergence stops learning and sets ``diverged_at_``.
        """
        self._validate_params()
        X = np.asarray(getattr(features, "x", features), dtype=float)
        self._init_state(X.shape[1])
        return self.partial_fit(trajectory, pi, mu, features, gamma, metric, record_every)

    def partial_fit(self, trajectory, pi, mu, features, gamma, metric=None, record_every=1):
        """Continue learning from the current weights, trace and step count."""
        if not hasattr(self, "coef_"):
            return self.fit(trajectory, pi, mu, features, gamma, metric, record_every)
        if self.diverged_at_ is not None:
            raise DivergenceError(self.diverged_at_)
        check_scalar(gamma, "gamma", 0.0, 1.0, hi_open=True)
        X = np.asarray(getattr(features, "x", features), dtype=float)
        self._check_features(X)
        mu_taken = mu.probs[trajectory.states, trajectory.actions]
        if np.any(mu_taken <= 0):
            raise ValidationError("trajectory contains actions with zero behavior probability")
        scheme = self._scheme(mu, pi)
        tables = learner_tables(scheme, pi, mu, X, self.xtilde_form, self._correction)
        n = X.shape[1]
        if metric is None:
            Q, q, c0, every = np.zeros((n, n)), np.zeros(n), 0.0, 0
        else:
            Q, q, c0 = (np.ascontiguousarray(metric[0], float), np.ascontiguousarray(metric[1], float),
                        float(metric[2]))
            every = int(record_every)
        out = np.full(len(trajectory) // every if every else 0, np.nan)
        t = _kernels.run_dense(
            tables.X, tables.xbar, tables.xtilde, tables.decay, tables.n_actions,
            trajectory.states, trajectory.actions, trajectory.rewards.astype(float),
            trajectory.next_states, trajectory.terminals, float(gamma),
            float(self.alpha), float(self.alpha_power), float(self.beta), float(self.beta_power),
            float(self.n_steps_), bool(self._correction), self.coef_, self.h_, self.trace_,
            Q, q, c0, every, out)
        if t >= 0:
            self.diverged_at_ = self.n_steps_ + int(t)
            out = out[: t // every] if every else out
            self.n_steps_ += int(t) + 1
        else:
            self.n_steps_ += len(trajectory)
        self.history_ = np.concatenate([self.history_, out])
        return self

    def predict(self, features):
        """Action-value estimates ``X @ coef_`` for the given feature rows."""
        if not hasattr(self, "coef_"):
            raise ValidationError("estimator is not fitted")
        if self.diverged_at_ is not None:
            raise DivergenceError(self.diverged_at_)
        X = np.asarray(getattr(features, "x", features), dtype=float)
        return X @ self.coef_


class ABQ(_TraceLearner):
    """ABQ(zeta): action-dependent bootstrapping with gradient correction."""

    def __init__(self, zeta=0.5, alpha=0.01, beta=0.0, xtilde_form="lambda", w0=None,
                 alpha_power=0.0, beta_power=0.0):
        self.zeta = zeta
        self.alpha = alpha
        self.beta = beta
        self.xtilde_form = xtilde_form
        self.w0 = w0
        self.alpha_power = alpha_power
        self.beta_power = beta_power

    def _scheme(self, mu, pi):
        return BootstrapScheme.abq(self.zeta, mu, pi)


class ABTrace(_TraceLearner):
    """AB-Trace(zeta): trace decay ``zeta * min(1, rho)``, gradient corrected."""

    def __init__(self, zeta=1.0, alpha=0.01, beta=0.0, xtilde_form="lambda", w0=None,
                 alpha_power=0.0, beta_power=0.0):
        self.zeta = zeta
        self.alpha = alpha
        self.beta = beta
        self.xtilde_form = xtilde_form
        self.w0 = w0
        self.alpha_power = alpha_power
        self.beta_power = beta_power

    def _scheme(self, mu, pi):
        return BootstrapScheme.abtrace(self.zeta)


class GQ(_TraceLearner):
    """GQ(lambda): importance-sampled traces with gradient correction.

    The bootstrapping parameter is called ``lambda_`` because ``lambda`` is
    a Python keyword.
    """

    def __init__(self, lambda_=0.0, alpha=0.01, beta=0.0, w0=None, alpha_power=0.0, beta_power=0.0):
        self.lambda_ = lambda_
        self.alpha = alpha
        self.beta = beta
        self.w0 = w0
        self.alpha_power = alpha_power
        self.beta_power = beta_power

    xtilde_form = "lambda"

    def _scheme(self, mu, pi):
        return BootstrapScheme.constant(self.lambda_)


class TreeBackup(_TraceLearner):
    """Tabular Tree Backup: trace decay ``zeta * pi``, no gradient correction."""

    _correction = False
    xtilde_form = "lambda"
    beta = 0.0
    beta_power = 0.0

    def __init__(self, zeta=1.0, alpha=0.05, w0=None, alpha_power=0.0):
        self.zeta = zeta
        self.alpha = alpha
        self.w0 = w0
        self.alpha_power = alpha_power

    def _check_features(self, X):
        if X.shape[0] != X.shape[1] or not np.array_equal(X, np.eye(X.shape[0])):
            raise ValidationError("Tree Backup requires tabular (identity) features")

    def _scheme(self, mu, pi):
        return BootstrapScheme.treebackup(self.zeta)


AGENTS = {"abq": ABQ, "abtrace": ABTrace, "gq": GQ, "treebackup": TreeBackup}


def make_agent(name, alpha, beta=0.0, param=0.0, **kwargs):
    """Build a learner from harness-style settings; ``param`` is zeta or lambda."""
    name = str(name).lower()
    if name not in AGENTS:
        raise ValidationError(f"unknown agent {name!r}; expected one of {sorted(AGENTS)}")
    if name == "gq":
        return GQ(lambda_=param, alpha=alpha, beta=beta, **kwargs)
    if name == "treebackup":
        return TreeBackup(zeta=param, alpha=alpha, **kwargs)
    return AGENTS[name](zeta=param, alpha=alpha, beta=beta, **kwargs)
