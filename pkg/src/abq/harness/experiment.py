"""Seeded multi-run learning experiments and their CSV summaries."""

import csv
import io
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .._validation import ValidationError
from ..agents import _kernels, make_agent
from ..bootstrap import BootstrapScheme
from ..envs import FiniteTask, make_task
from ..envs import mountain_car as mc
from ..trajectory import sample_trajectory
from .metrics import task_metric

SUMMARY_HEADER = ("task", "agent", "zeta_or_lambda", "alpha", "beta", "run_count", "diverged",
                  "metric_mean", "metric_se")
SERIES_HEADER = ("zeta_or_lambda", "alpha", "beta", "seed", "index", "metric")


@dataclass(frozen=True)
class RunResult:
    """One learning run at one sweep point.

    ``series`` holds the metric after every step (finite tasks) or at the
    end of every episode (Mountain Car). After a divergence it is cut at
    the last finite measurement, ``diverged_at`` holds the step index, and
    ``summary`` is ``inf``.
    """

    param: float
    alpha: float
    beta: float
    seed: int
    series: np.ndarray
    summary: float
    diverged_at: int = None

    @property
    def diverged(self):
        return self.diverged_at is not None


@dataclass(frozen=True)
class SummaryRow:
    task: str
    agent: str
    param: float
    alpha: float
    beta: float
    run_count: int
    diverged: int
    metric_mean: float
    metric_se: float

    def as_tuple(self):
        return (self.task, self.agent, self.param, self.alpha, self.beta, self.run_count,
                self.diverged, self.metric_mean, self.metric_se)


@dataclass
class ExperimentResult:
    config: object
    runs: list = field(default_factory=list)
    rows: list = field(default_factory=list)

    def runs_at(self, param, alpha=None, beta=None):
        return [r for r in self.runs if r.param == param and (alpha is None or r.alpha == alpha)
                and (beta is None or r.beta == beta)]


def scheme_for(agent, param, mu, pi):
    """Bootstrapping scheme used by ``agent`` at zeta/lambda value ``param``."""
    if agent == "abq":
        return BootstrapScheme.abq(param, mu, pi)
    if agent == "abtrace":
        return BootstrapScheme.abtrace(param)
    if agent == "gq":
        return BootstrapScheme.constant(param)
    if agent == "treebackup":
        return BootstrapScheme.treebackup(param)
    raise ValidationError(f"unknown agent {agent!r}")


def summarize_series(series, window, how="window_mean"):
    """Mean over the trailing ``window`` fraction, or the final value."""
    series = np.asarray(series, dtype=float)
    if series.size == 0:
        return math.inf
    if how == "final":
        return float(series[-1])
    k = max(1, int(round(window * series.size)))
    return float(np.mean(series[-k:]))


# ---------------------------------------------------------------------------
# Finite tasks


def finite_run(task, agent, param, alpha, beta, n_steps, seed, metric="nmse", xtilde_form="lambda",
               trajectory=None, metric_coefs=None):
    """One learning run on a finite task; returns ``(series, diverged_at, learner)``."""
    if agent == "treebackup" and not task.tabular:
        raise ValidationError(f"treebackup requires tabular features; task {task.name!r} is not tabular")
    scheme = scheme_for(agent, param, task.mu, task.pi)
    if metric_coefs is None:
        metric_coefs = task_metric(task, scheme, metric)
    if trajectory is None:
        trajectory = sample_trajectory(task.mdp, task.mu, n_steps, seed)
    kwargs = {"w0": task.w0}
    if agent in ("abq", "abtrace"):
        kwargs["xtilde_form"] = xtilde_form
    learner = make_agent(agent, alpha, beta, param, **kwargs)
    learner.fit(trajectory, task.pi, task.mu, task.features, task.mdp.discount, metric=metric_coefs)
    return learner.history_, learner.diverged_at_, learner


# ---------------------------------------------------------------------------
# Mountain Car


@dataclass(frozen=True)
class MountainCarRunData:
    """A behavior stream together with its tile slots and policy modes."""

    stream: object
    cur_slots: np.ndarray
    next_slots: np.ndarray
    modes: np.ndarray
    next_modes: np.ndarray

    @classmethod
    def sample(cls, seed, n_episodes, step_cap=mc.STEP_CAP):
        stream = mc.behavior_stream(seed, n_episodes=n_episodes, step_cap=step_cap)
        return cls(stream, *mc.stream_arrays(stream))


def mountain_car_metric(truth):
    """Euclidean NMSE over the evaluation pairs as quadratic coefficients."""
    F = truth.features()
    norm = float(truth.q_hat @ truth.q_hat)
    if norm == 0.0:
        raise ValidationError("ground-truth values have zero norm")
    return F.T @ F / norm, F.T @ truth.q_hat / norm, 1.0


def mountain_car_run(data, metric_coefs, agent, param, alpha, beta, gamma=mc.GAMMA, xtilde_form="lambda"):
    """Per-episode NMSE of one learner over a behavior stream.

    Returns ``(series, diverged_at, weights)``.
    """
    if agent == "treebackup":
        raise ValidationError("treebackup requires tabular features; mountain_car is tile coded")
    mu, pi = mc.mode_policies()
    scheme = scheme_for(agent, param, mu, pi)
    decay = scheme.decay_table(mu, pi)
    form_weights = scheme.nu_table(mu, pi) if xtilde_form == "nu" else scheme.lambda_table(mu, pi)
    xt_weight = np.where(np.isfinite(form_weights), form_weights, 0.0) * pi.probs
    n = mc.N_FEATURES
    w, h, e = np.zeros(n), np.zeros(n), np.zeros(n)
    n_episodes = int(data.stream.terminals.sum())
    out = np.full(n_episodes, np.nan)
    Q, q, c0 = metric_coefs
    t = _kernels.run_tiled(data.cur_slots, data.next_slots, data.modes, data.next_modes,
                           data.stream.actions, data.stream.rewards, data.stream.terminals,
                           mc.SLOTS_PER_ACTION, np.ascontiguousarray(pi.probs), np.ascontiguousarray(decay),
                           np.ascontiguousarray(xt_weight), float(gamma), float(alpha), float(beta), True,
                           w, h, e, Q, q, float(c0), out)
    if t >= 0:
        done = int(np.searchsorted(data.stream.episode_ends, t))
        return out[:done], int(t), w
    return out, None, w


# ---------------------------------------------------------------------------
# Sweeps


def _sweep(config):
    return [(p, a, b) for p in config.params for a in config.alphas for b in config.betas]


def _finite_runs(config, task):
    metric_cache = {}
    runs = []
    for i in range(config.n_runs):
        seed = config.seed + i
        traj = sample_trajectory(task.mdp, task.mu, config.n_steps, seed)
        for p, a, b in _sweep(config):
            if p not in metric_cache:
                scheme = scheme_for(config.agent, p, task.mu, task.pi)
                metric_cache[p] = task_metric(task, scheme, config.metric_name)
            series, div, _ = finite_run(task, config.agent, p, a, b, config.n_steps, seed,
                                        config.metric_name, config.xtilde_form, traj, metric_cache[p])
            runs.append(_result(config, p, a, b, seed, series, div))
    return runs


def _mountain_car_runs(config, task):
    truth = mc.ground_truth_pairs(task, config.truth_seed)
    coefs = mountain_car_metric(truth)
    runs = []
    for i in range(config.n_runs):
        seed = config.seed + i
        data = MountainCarRunData.sample(seed, config.n_episodes, task.step_cap)
        for p, a, b in _sweep(config):
            series, div, _ = mountain_car_run(data, coefs, config.agent, p, a, b, task.gamma,
                                              config.xtilde_form)
            runs.append(_result(config, p, a, b, seed, series, div))
    return runs


def _result(config, p, a, b, seed, series, div):
    summary = math.inf if div is not None else summarize_series(series, config.window, config.summary)
    return RunResult(p, a, b, seed, np.asarray(series), summary, div)


def summarize(config, runs):
    """One row per sweep point; mean and standard error over non-diverged runs."""
    rows = []
    for p, a, b in _sweep(config):
        group = sorted((r for r in runs if (r.param, r.alpha, r.beta) == (p, a, b)), key=lambda r: r.seed)
        ok = np.array([r.summary for r in group if not r.diverged])
        mean = float(ok.mean()) if ok.size else math.nan
        se = float(ok.std(ddof=1) / math.sqrt(ok.size)) if ok.size > 1 else math.nan
        rows.append(SummaryRow(config.task, config.agent, p, a, b, len(group),
                               sum(r.diverged for r in group), mean, se))
    return rows


def _fmt(v):
    if isinstance(v, (bool, np.bool_)):
        return str(int(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def summary_csv(rows):
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(SUMMARY_HEADER)
    for row in rows:
        writer.writerow([_fmt(v) for v in row.as_tuple()])
    return buf.getvalue()


def series_csv(runs):
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(SERIES_HEADER)
    for r in sorted(runs, key=lambda r: (r.param, r.alpha, r.beta, r.seed)):
        for k, v in enumerate(r.series):
            writer.writerow([_fmt(r.param), _fmt(r.alpha), _fmt(r.beta), r.seed, k, _fmt(v)])
    return buf.getvalue()


def run_experiment(config):
    """Run every sweep point for ``n_runs`` seeds; write CSVs if paths are set."""
    task = make_task(config.task, **config.task_options)
    if isinstance(task, FiniteTask):
        runs = _finite_runs(config, task)
    else:
        runs = _mountain_car_runs(config, task)
    runs.sort(key=lambda r: (r.param, r.alpha, r.beta, r.seed))
    result = ExperimentResult(config, runs, summarize(config, runs))
    if config.out:
        Path(config.out).write_text(summary_csv(result.rows))
    if config.series_out:
        Path(config.series_out).write_text(series_csv(result.runs))
    return result
