"""Test problems, addressable by name.

Finite tasks (``two_state``, ``baird``, ``random_mdp``) resolve to a
:class:`FiniteTask`; ``mountain_car`` resolves to a
:class:`~abq.envs.mountain_car.MountainCarTask` sample generator.
"""

from dataclasses import dataclass

import numpy as np

from .._validation import ValidationError
from ..mdp import FeatureMap, Mdp, Policy
from .baird import baird
from .mountain_car import MountainCarTask, ground_truth_pairs, mountain_car_policies, \
    mountain_car_step, tile_code
from .random_mdp import RandomMdpSpec, random_mdp, random_mdp_with_info
from .two_state import two_state

TASKS = ("two_state", "mountain_car", "baird", "random_mdp")


@dataclass(frozen=True)
class FiniteTask:
    """A finite MDP with its policy pair, features and initial weights."""

    name: str
    mdp: Mdp
    pi: Policy
    mu: Policy
    features: FeatureMap
    w0: np.ndarray = None

    @property
    def tabular(self):
        return self.features.is_tabular()


def _finish(name, mdp, pi, mu, features, w0=None, tabular=False, on_policy=False):
    if tabular:
        features = FeatureMap.tabular(mdp.n_states, mdp.n_actions)
        w0 = None
    if on_policy:
        mu = pi
    return FiniteTask(name, mdp, pi, mu, features, w0)


def make_task(name, **options):
    """Build a task by name.

    Finite tasks accept ``tabular`` (replace features by the identity) and
    ``on_policy`` (behave with the target policy). ``random_mdp`` also
    accepts ``seed``, ``n_states``, ``n_actions``, ``n_features`` and
    ``discount``; ``mountain_car`` accepts the fields of
    :class:`MountainCarTask`.
    """
    opts = dict(options)
    flags = {k: bool(opts.pop(k)) for k in ("tabular", "on_policy") if k in opts}
    if name == "two_state":
        task = _finish(name, *two_state(), **flags)
    elif name == "baird":
        mdp, pi, mu, features, w0 = baird()
        task = _finish(name, mdp, pi, mu, features, w0, **flags)
    elif name == "random_mdp":
        fields = RandomMdpSpec.__dataclass_fields__
        unknown = set(opts) - set(fields)
        if unknown:
            raise ValidationError(f"unknown random_mdp options {sorted(unknown)}")
        spec = RandomMdpSpec(**{k: (float(v) if k == "discount" else int(v)) for k, v in opts.items()})
        return _finish(name, *random_mdp(spec), **flags)
    elif name == "mountain_car":
        if flags:
            raise ValidationError("mountain_car does not support tabular/on_policy options")
        return MountainCarTask(**opts)
    else:
        raise ValidationError(f"unknown task {name!r}; expected one of {TASKS}")
    if opts:
        raise ValidationError(f"task {name!r} takes no options {sorted(opts)}")
    return task


__all__ = [
    "TASKS", "FiniteTask", "MountainCarTask", "RandomMdpSpec", "baird", "ground_truth_pairs",
    "make_task", "mountain_car_policies", "mountain_car_step", "random_mdp", "random_mdp_with_info",
    "tile_code", "two_state",
]
