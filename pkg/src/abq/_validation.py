"""Input validation helpers shared by models, schemes and learners."""

import numbers

import numpy as np

PROB_TOL = 1e-12


class ValidationError(ValueError):
    """Raised when an input violates a model invariant."""


def check_array(a, ndim=None, name="array", dtype=float):
    """Convert ``a`` to a finite float array, optionally checking ``ndim``."""
    arr = np.array(a, dtype=dtype, copy=True)
    if ndim is not None and arr.ndim != ndim:
        raise ValidationError(f"{name} must be {ndim}-dimensional, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValidationError(f"{name} contains non-finite entries")
    return arr


def check_stochastic(p, axis=-1, name="probabilities", tol=PROB_TOL):
    """Validate that ``p`` is non-negative and sums to one along ``axis``.

    Rows within ``tol`` of one are renormalized; anything further off is
    rejected rather than silently repaired.
    """
    p = check_array(p, name=name)
    if np.any(p < 0):
        raise ValidationError(f"{name} has negative entries")
    sums = p.sum(axis=axis, keepdims=True)
    err = np.max(np.abs(sums - 1.0)) if sums.size else 0.0
    if err > tol:
        raise ValidationError(f"{name} rows must sum to 1 (max deviation {err:.3g})")
    # Rows already equal to one up to rounding are left untouched so that
    # validation is idempotent (e.g. across a JSON round trip).
    rounding = 4 * np.finfo(float).eps * max(p.shape[axis], 1)
    return np.where(np.abs(sums - 1.0) > rounding, p / sums, p)


def check_scalar(x, name, lo=None, hi=None, lo_open=False, hi_open=False):
    if not isinstance(x, numbers.Real) or isinstance(x, bool):
        raise ValidationError(f"{name} must be a real number, got {x!r}")
    x = float(x)
    if not np.isfinite(x):
        raise ValidationError(f"{name} must be finite")
    if lo is not None and (x < lo or (lo_open and x == lo)):
        raise ValidationError(f"{name}={x} below allowed range")
    if hi is not None and (x > hi or (hi_open and x == hi)):
        raise ValidationError(f"{name}={x} above allowed range")
    return x


def check_random_state(seed):
    """Return a ``numpy.random.Generator`` for ``seed`` (int, None or Generator)."""
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)
