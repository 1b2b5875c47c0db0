"""Experiment configuration: parsing and validation.

A config is a JSON or TOML document. Agent keys follow the learner
interface (``agent``, ``alpha``, ``beta``, ``zeta`` or ``lambda``); each of
``alpha``, ``beta`` and ``zeta``/``lambda`` may be a scalar or a list, and
the experiment sweeps their Cartesian product.
"""

import json
from dataclasses import dataclass, field, replace
from pathlib import Path

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from .._validation import ValidationError
from ..agents import AGENTS
from ..envs import TASKS

SUMMARIES = ("window_mean", "final")
METRICS = ("nmse", "mspbe")


def _as_tuple(value, name):
    vals = value if isinstance(value, (list, tuple)) else [value]
    out = []
    for v in vals:
        if isinstance(v, bool) or not isinstance(v, (int, float)):
            raise ValidationError(f"{name} entries must be numbers, got {v!r}")
        out.append(float(v))
    if not out:
        raise ValidationError(f"{name} sweep is empty")
    return tuple(out)


@dataclass(frozen=True)
class ExperimentConfig:
    """One sweep over ``params x alphas x betas`` with ``n_runs`` seeds each.

    ``params`` holds zeta values (ABQ, AB-Trace, Tree Backup) or lambda
    values (GQ). Run ``i`` uses seed ``seed + i`` at every sweep point.
    ``window`` is the trailing fraction of the metric series averaged by
    the ``"window_mean"`` summary.
    """

    task: str
    agent: str
    params: tuple
    alphas: tuple
    betas: tuple = (0.0,)
    n_runs: int = 1
    n_steps: int = None
    n_episodes: int = None
    seed: int = 0
    out: str = None
    series_out: str = None
    window: float = 0.5
    summary: str = "window_mean"
    metric: str = None
    xtilde_form: str = "lambda"
    task_options: dict = field(default_factory=dict)
    truth_seed: int = 0

    def __post_init__(self):
        if self.task not in TASKS:
            raise ValidationError(f"unknown task {self.task!r}; expected one of {TASKS}")
        if self.agent not in AGENTS:
            raise ValidationError(f"unknown agent {self.agent!r}; expected one of {sorted(AGENTS)}")
        for p in self.params:
            if not 0.0 <= p <= 1.0:
                raise ValidationError(f"zeta/lambda values must lie in [0, 1], got {p}")
        for a in self.alphas:
            if a <= 0:
                raise ValidationError(f"alpha must be positive, got {a}")
        for b in self.betas:
            if b < 0:
                raise ValidationError(f"beta must be non-negative, got {b}")
        if self.n_runs < 1:
            raise ValidationError("n_runs must be at least 1")
        if self.task == "mountain_car":
            if self.n_episodes is None or self.n_episodes < 1:
                raise ValidationError("mountain_car needs a positive n_episodes")
        elif self.n_steps is None or self.n_steps < 1:
            raise ValidationError(f"task {self.task!r} needs a positive n_steps")
        if not 0.0 < self.window <= 1.0:
            raise ValidationError("window must be a fraction in (0, 1]")
        if self.summary not in SUMMARIES:
            raise ValidationError(f"summary must be one of {SUMMARIES}")
        if self.metric is not None and self.metric not in METRICS:
            raise ValidationError(f"metric must be one of {METRICS}")
        if self.agent == "treebackup" and self.task == "mountain_car":
            raise ValidationError("treebackup requires tabular features; mountain_car is tile coded")

    @property
    def metric_name(self):
        if self.metric is not None:
            return self.metric
        return "mspbe" if self.task == "baird" else "nmse"

    def with_overrides(self, seed=None, out=None):
        changes = {}
        if seed is not None:
            changes["seed"] = int(seed)
        if out is not None:
            changes["out"] = str(out)
        return replace(self, **changes)

    @classmethod
    def from_dict(cls, doc):
        doc = dict(doc)
        if "zeta" in doc and "lambda" in doc:
            raise ValidationError("give either zeta or lambda, not both")
        key = "lambda" if "lambda" in doc else "zeta"
        if key not in doc:
            raise ValidationError("config needs a zeta or lambda value (or list)")
        for required in ("task", "agent", "alpha"):
            if required not in doc:
                raise ValidationError(f"config is missing {required!r}")
        known = {"task", "agent", "alpha", "beta", "zeta", "lambda", "n_runs", "n_steps", "n_episodes",
                 "seed", "out", "series_out", "window", "summary", "metric", "xtilde_form",
                 "task_options", "truth_seed"}
        unknown = set(doc) - known
        if unknown:
            raise ValidationError(f"unknown config keys {sorted(unknown)}")

        def _int(name, default=None):
            v = doc.get(name, default)
            return None if v is None else int(v)

        return cls(
            task=str(doc["task"]),
            agent=str(doc["agent"]).lower(),
            params=_as_tuple(doc[key], key),
            alphas=_as_tuple(doc["alpha"], "alpha"),
            betas=_as_tuple(doc.get("beta", 0.0), "beta"),
            n_runs=_int("n_runs", 1),
            n_steps=_int("n_steps"),
            n_episodes=_int("n_episodes"),
            seed=_int("seed", 0),
            out=doc.get("out"),
            series_out=doc.get("series_out"),
            window=float(doc.get("window", 0.5)),
            summary=str(doc.get("summary", "window_mean")),
            metric=doc.get("metric"),
            xtilde_form=str(doc.get("xtilde_form", "lambda")),
            task_options=dict(doc.get("task_options", {})),
            truth_seed=_int("truth_seed", 0),
        )


def read_document(path):
    """Parse a JSON (``.json``) or TOML (``.toml``) file into a dict."""
    path = Path(path)
    text = path.read_text()
    if path.suffix.lower() == ".toml":
        return tomllib.loads(text)
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise ValidationError(f"{path}: invalid JSON ({exc})") from exc


def load_config(path):
    return ExperimentConfig.from_dict(read_document(path))
