"""Exact-solution curves: NMSE and MSPBE of asymptotic solutions across a grid."""

import csv
import io
from dataclasses import dataclass

import numpy as np

from ..bootstrap import BootstrapScheme
from ..envs import RandomMdpSpec, random_mdp_with_info
from ..mdp import FeatureMap, exact_q_pi, stationary_distribution
from ..solvers import mspbe, solution_abq, solution_constant_lambda
from .metrics import nmse

LAMBDA_GRID = (0.0, 0.25, 0.5, 0.75, 1.0)
SOLVER_HEADER = ("scheme", "zeta_or_lambda", "nmse", "mspbe_at_winf", "cond_A")


def _scheme(variant, value, mu, pi):
    if variant == "abq":
        return BootstrapScheme.abq(value, mu, pi)
    if variant == "abtrace":
        return BootstrapScheme.abtrace(value)
    if variant == "treebackup":
        return BootstrapScheme.treebackup(value)
    return BootstrapScheme.constant(value)


def solution_curve(mdp, pi, mu, features, variant, grid):
    """Rows ``(variant, value, nmse, mspbe_at_winf, cond_A)`` over ``grid``.

    NMSE is measured against ``q_pi`` under the behavior distribution.
    Non-invertible points report ``nan`` for NMSE and MSPBE.
    """
    q = exact_q_pi(mdp, pi)
    d = stationary_distribution(mdp, mu).d
    X = np.asarray(getattr(features, "x", features), dtype=float)
    singular = np.linalg.matrix_rank((X.T * d) @ X) < X.shape[1]
    rows = []
    for value in grid:
        scheme = _scheme(variant, float(value), mu, pi)
        sol = solution_abq(mdp, pi, mu, features, scheme)
        if sol.invertible:
            err = nmse(sol.w_inf, X, q, d)
            j = mspbe(mdp, pi, mu, features, scheme, sol.w_inf, allow_singular=singular)
        else:
            err = j = float("nan")
        rows.append((variant, float(value), err, j, sol.cond))
    return rows


def solver_csv(rows):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(SOLVER_HEADER)
    for scheme, value, err, j, cond in rows:
        w.writerow([scheme, repr(float(value)), repr(float(err)), repr(float(j)), repr(float(cond))])
    return buf.getvalue()


def is_nonincreasing(values, tol=1e-12):
    """True when each value is at most the previous one (plus ``tol`` relative slack)."""
    v = np.asarray(values, dtype=float)
    return bool(np.all(v[1:] <= v[:-1] + tol * np.maximum(1.0, np.abs(v[:-1]))))


@dataclass(frozen=True)
class BiasStudyResult:
    """Per-instance NMSE curves of constant-lambda asymptotic solutions.

    ``nmse[i, k]`` is instance ``i`` at ``lambda_grid[k]``; ``flagged[i]``
    marks instances with a non-invertible ``A`` at some grid point, which
    are excluded from ``monotone_count`` and the medians.
    """

    lambda_grid: tuple
    seeds: tuple
    resamples: tuple
    nmse: np.ndarray
    flagged: np.ndarray
    monotone: np.ndarray

    @property
    def monotone_count(self):
        return int(np.sum(self.monotone & ~self.flagged))

    @property
    def n_valid(self):
        return int(np.sum(~self.flagged))

    @property
    def medians(self):
        return np.median(self.nmse[~self.flagged], axis=0)

    def to_csv(self):
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["instance", "seed", "resamples", "flagged", "monotone"]
                   + [f"nmse_lambda_{lam!r}" for lam in self.lambda_grid])
        for i, seed in enumerate(self.seeds):
            w.writerow([i, seed, self.resamples[i], int(self.flagged[i]), int(self.monotone[i])]
                       + [repr(float(v)) for v in self.nmse[i]])
        return buf.getvalue()


def bias_study(n_instances=50, lambda_grid=LAMBDA_GRID, spec=RandomMdpSpec(), seed=0, tabular=False):
    """NMSE(lambda) of ``solution_constant_lambda`` on seeded random MDPs.

    Instance ``i`` uses seed ``seed + i``. With ``tabular=True`` the drawn
    features are replaced by the identity, a control where every lambda
    recovers ``q_pi`` exactly.
    """
    grid = tuple(float(v) for v in lambda_grid)
    seeds, resamples, curves, flagged = [], [], [], []
    for i in range(n_instances):
        s = seed + i
        inst_spec = RandomMdpSpec(spec.n_states, spec.n_actions, spec.n_features, s, spec.discount)
        (mdp, pi, mu, features), redraws = random_mdp_with_info(inst_spec)
        if tabular:
            features = FeatureMap.tabular(mdp.n_states, mdp.n_actions)
        q = exact_q_pi(mdp, pi)
        d = stationary_distribution(mdp, mu).d
        row, bad = [], False
        for lam in grid:
            sol = solution_constant_lambda(mdp, pi, mu, features, lam)
            if not sol.invertible:
                bad = True
                row.append(float("nan"))
            else:
                row.append(nmse(sol.w_inf, features, q, d))
        seeds.append(s)
        resamples.append(redraws)
        curves.append(row)
        flagged.append(bad)
    arr = np.array(curves)
    flagged = np.array(flagged, dtype=bool)
    monotone = np.array([not f and is_nonincreasing(r) for r, f in zip(arr, flagged)], dtype=bool)
    return BiasStudyResult(grid, tuple(seeds), tuple(resamples), arr, flagged, monotone)
