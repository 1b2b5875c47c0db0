"""Action-dependent bootstrapping schemes.

A scheme assigns each state-action pair a factor ``nu(s, a)`` and a
bootstrapping parameter ``lambda(s, a) = nu(s, a) * mu(a|s)``. Learners only
ever see the trace-decay product ``nu(s, a) * pi(a|s)``, which equals
``lambda(s, a) * rho(s, a)`` without forming the ratio explicitly.

Variants
--------
abq
    ``nu = min(psi(zeta), 1 / max(mu, pi))``.
abtrace
    ``nu = zeta * min(1 / pi, 1 / mu)`` so that ``nu * pi = zeta * min(1, rho)``.
constant
    ``nu = lambda / mu``; recovers constant-lambda importance sampling.
treebackup
    ``nu = zeta`` for every pair.

Divisions by zero follow the conventions ``1/0 = inf`` and ``0 * inf = 0``.
"""

from dataclasses import dataclass

import numpy as np

from ._validation import ValidationError, check_scalar

VARIANTS = ("abq", "abtrace", "constant", "treebackup")
_ALIASES = {"constantlambda": "constant", "constant_lambda": "constant", "tree_backup": "treebackup",
            "ab-trace": "abtrace", "ab_trace": "abtrace", "gq": "constant"}


def _inv(p):
    with np.errstate(divide="ignore"):
        return np.where(p > 0, 1.0 / np.where(p > 0, p, 1.0), np.inf)


def _mul(a, b):
    """Elementwise product with ``0 * inf = 0``."""
    a, b = np.broadcast_arrays(np.asarray(a, float), np.asarray(b, float))
    out = np.zeros(a.shape)
    nz = (a != 0) & (b != 0)
    out[nz] = a[nz] * b[nz]
    return out


def psi_pivots(mu, pi):
    """Return ``(psi0, psi_max)`` for a behavior/target pair.

    ``psi0`` is where the first cap in ``nu`` engages and ``psi_max`` where
    all caps have engaged.
    """
    m, p = _probs(mu), _probs(pi)
    if m.shape != p.shape:
        raise ValidationError(f"policy shapes differ: {m.shape} vs {p.shape}")
    top = np.maximum(m, p)
    if np.any(top == 0):
        raise ValidationError("some action has zero probability under both policies; psi_max is infinite")
    return 1.0 / top.max(), 1.0 / top.min()


def psi_from_zeta(zeta, psi0, psi_max):
    """Piecewise-linear map with ``psi(0)=0``, ``psi(0.5)=psi0``, ``psi(1)=psi_max``."""
    zeta = check_scalar(zeta, "zeta", 0.0, 1.0)
    return 2 * zeta * psi0 + max(0.0, 2 * zeta - 1) * (psi_max - 2 * psi0)


def zeta_from_psi(psi, psi0, psi_max):
    """Inverse of :func:`psi_from_zeta` on ``[0, psi_max]``.

    When ``psi0 == psi_max`` the forward map is flat on ``[0.5, 1]`` and
    ``psi0`` maps back to 0.5.
    """
    psi = check_scalar(psi, "psi", 0.0, psi_max * (1 + 1e-12))
    if psi <= psi0:
        return psi / (2 * psi0)
    if psi_max <= psi0:
        return 0.5
    return (psi - psi0) * (2 * psi0 - psi_max) / (2 * (psi_max - psi0) * psi0) + psi / (2 * psi0)


def _probs(policy):
    return np.asarray(getattr(policy, "probs", policy), dtype=float)


@dataclass(frozen=True)
class BootstrapScheme:
    """Configuration of one bootstrapping variant.

    Build ABQ schemes through :meth:`abq` (or :meth:`from_config`) so the
    psi pivots are computed from the policies they will be used with.
    """

    variant: str
    zeta: float = 0.0
    lam: float = 0.0
    psi0: float = None
    psi_max: float = None

    def __post_init__(self):
        variant = _ALIASES.get(self.variant.lower(), self.variant.lower())
        if variant not in VARIANTS:
            raise ValidationError(f"unknown bootstrap variant {self.variant!r}")
        object.__setattr__(self, "variant", variant)
        check_scalar(self.zeta, "zeta", 0.0, 1.0)
        check_scalar(self.lam, "lambda", 0.0, 1.0)
        if variant == "abq":
            if self.psi0 is None or self.psi_max is None:
                raise ValidationError("abq scheme needs psi pivots; use BootstrapScheme.abq(zeta, mu, pi)")
            if not 0 < self.psi0 <= self.psi_max:
                raise ValidationError("psi pivots must satisfy 0 < psi0 <= psi_max")

    @classmethod
    def abq(cls, zeta, mu, pi):
        psi0, psi_max = psi_pivots(mu, pi)
        return cls("abq", zeta=zeta, psi0=psi0, psi_max=psi_max)

    @classmethod
    def abtrace(cls, zeta):
        return cls("abtrace", zeta=zeta)

    @classmethod
    def constant(cls, lam):
        return cls("constant", lam=lam)

    @classmethod
    def treebackup(cls, zeta):
        return cls("treebackup", zeta=zeta)

    @classmethod
    def from_config(cls, cfg, mu=None, pi=None):
        """Build from ``{"variant": ..., "zeta": ..., "lambda": ...}``."""
        variant = _ALIASES.get(str(cfg["variant"]).lower(), str(cfg["variant"]).lower())
        if variant == "abq":
            return cls.abq(cfg.get("zeta", 0.0), mu, pi)
        if variant == "constant":
            return cls.constant(cfg.get("lambda", cfg.get("lam", 0.0)))
        return cls(variant, zeta=cfg.get("zeta", 0.0))

    @property
    def psi(self):
        if self.variant != "abq":
            return None
        return psi_from_zeta(self.zeta, self.psi0, self.psi_max)

    @property
    def parameter(self):
        """The tunable scalar: lambda for constant schemes, zeta otherwise."""
        return self.lam if self.variant == "constant" else self.zeta

    def nu_table(self, mu, pi):
        """``nu(s, a)`` for every pair, shape ``(n_states, n_actions)``; may hold inf."""
        m, p = _probs(mu), _probs(pi)
        if m.shape != p.shape:
            raise ValidationError("policy shapes differ")
        if self.variant == "abq":
            return np.minimum(self.psi, _inv(np.maximum(m, p)))
        if self.variant == "abtrace":
            return _mul(self.zeta, np.minimum(_inv(p), _inv(m)))
        if self.variant == "constant":
            return _mul(self.lam, _inv(m))
        return np.full(m.shape, self.zeta)

    def lambda_table(self, mu, pi):
        """``lambda(s, a)``, always within ``[0, 1]``."""
        m = _probs(mu)
        if self.variant == "constant":
            lam = np.full(m.shape, self.lam)
        else:
            lam = _mul(self.nu_table(mu, pi), m)
        assert np.all((lam >= 0) & (lam <= 1 + 1e-12)), "bootstrapping parameter left [0, 1]"
        return np.minimum(lam, 1.0)

    def decay_table(self, mu, pi):
        """Trace-decay product ``nu(s, a) * pi(a|s)`` (equals ``lambda * rho``)."""
        return _mul(self.nu_table(mu, pi), _probs(pi))


def nu(scheme, mu, pi, s, a):
    return float(scheme.nu_table(mu, pi)[s, a])


def lambda_sa(scheme, mu, pi, s, a):
    return float(scheme.lambda_table(mu, pi)[s, a])


@dataclass(frozen=True)
class BootstrapMatrix:
    """Diagonal of ``Lambda`` over pairs in canonical order."""

    diag: np.ndarray

    def __post_init__(self):
        d = np.asarray(self.diag, dtype=float)
        if np.any((d < 0) | (d > 1)):
            raise ValidationError("bootstrap matrix entries must lie in [0, 1]")
        d = d.copy()
        d.setflags(write=False)
        object.__setattr__(self, "diag", d)

    def toarray(self):
        return np.diag(self.diag)


def bootstrap_matrix(scheme, mu, pi):
    return BootstrapMatrix(scheme.lambda_table(mu, pi).reshape(-1))
