"""Uplink network instances with finitely many mobiles.

Each mobile associates with exactly one base station (BS).  At the Pareto
optimal power vector every mobile meets its SINR target with equality, and its
cost is its transmit power.  Mobiles and BSs are 0-based here; the CLI and
scenario files use 1-based labels.
"""

from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .errors import DomainError, ValidationError

__all__ = [
    "NetworkInstance",
    "load_factor",
    "as_profile",
    "bs_load",
    "bs_loads",
    "is_feasible",
    "pareto_powers",
    "mobile_cost",
    "mobile_costs",
    "hypothetical_cost",
    "hypothetical_costs",
    "system_cost",
    "achieved_sinr",
]


def load_factor(gamma):
    """Map an SINR target to its load factor ``gamma / (1 + gamma)``.

    Parameters
    ----------
    gamma : float or array_like
        Non-negative SINR target(s).

    Returns
    -------
    float or ndarray
        Load factor(s) in ``[0, 1)``.
    """
    g = np.asarray(gamma, dtype=float)
    if np.any(~np.isfinite(g)) or np.any(g < 0):
        raise DomainError("SINR target must be finite and non-negative")
    out = g / (1.0 + g)
    return float(out) if out.ndim == 0 else out


def _readonly(a):
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class NetworkInstance:
    """A discrete uplink instance.

    Parameters
    ----------
    gains : array_like, shape (M, N)
        Channel gains ``h[i, j] > 0`` from mobile ``i`` to BS ``j``.
    noise_power : float
        Receiver noise power, shared by all BSs.
    target_sinr : array_like, shape (M,)
        SINR target of each mobile.
    tie_tol : float, optional
        Absolute tolerance used when comparing costs (best responses, Nash
        checks, Pareto dominance).  Zero means exact comparison.
    """

    gains: np.ndarray
    noise_power: float
    target_sinr: np.ndarray
    tie_tol: float = 0.0
    beta: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        gains = np.array(self.gains, dtype=float)
        if gains.ndim != 2:
            raise ValidationError("gains-shape", "gains must be a 2-D array (mobiles x BSs)")
        m, n = gains.shape
        if m < 1:
            raise ValidationError("nonempty-mobiles", "an instance needs at least one mobile")
        if n < 1:
            raise ValidationError("nonempty-bs", "an instance needs at least one BS")
        if not np.all(np.isfinite(gains)) or np.any(gains <= 0):
            raise ValidationError("positive-gains", "all channel gains must be finite and > 0")
        if not (np.isfinite(self.noise_power) and self.noise_power > 0):
            raise ValidationError("positive-noise", "noise power must be finite and > 0")
        target = np.array(self.target_sinr, dtype=float).reshape(-1)
        if target.shape != (m,):
            raise ValidationError("target-shape", f"expected {m} SINR targets, got {target.size}")
        if not np.all(np.isfinite(target)) or np.any(target <= 0):
            raise ValidationError("positive-targets", "SINR targets must be finite and > 0")
        if not (np.isfinite(self.tie_tol) and self.tie_tol >= 0):
            raise ValidationError("tie-tolerance", "tie tolerance must be finite and >= 0")
        object.__setattr__(self, "gains", _readonly(gains))
        object.__setattr__(self, "target_sinr", _readonly(target))
        object.__setattr__(self, "noise_power", float(self.noise_power))
        object.__setattr__(self, "tie_tol", float(self.tie_tol))
        object.__setattr__(self, "beta", _readonly(target / (1.0 + target)))

    @classmethod
    def from_load_factors(cls, gains, noise_power, beta, tie_tol=0.0):
        """Build an instance from load factors instead of SINR targets."""
        b = np.asarray(beta, dtype=float)
        if np.any(b <= 0) or np.any(b >= 1):
            raise ValidationError("load-factor-range", "load factors must lie in (0, 1)")
        return cls(gains, noise_power, b / (1.0 - b), tie_tol)

    @property
    def num_mobiles(self):
        return self.gains.shape[0]

    @property
    def num_bs(self):
        return self.gains.shape[1]


def as_profile(instance, profile):
    """Validate an association profile and return it as an int64 array."""
    a = np.asarray(profile)
    if a.shape != (instance.num_mobiles,):
        raise DomainError(f"profile must have length {instance.num_mobiles}")
    if not np.issubdtype(a.dtype, np.integer):
        if not np.all(np.equal(np.mod(a, 1), 0)):
            raise DomainError("profile entries must be integers")
    a = a.astype(np.int64)
    if np.any(a < 0) or np.any(a >= instance.num_bs):
        raise DomainError(f"profile entries must lie in 0..{instance.num_bs - 1}")
    return a


def _check_bs(instance, bs):
    if not 0 <= bs < instance.num_bs:
        raise IndexError(f"BS index {bs} out of range 0..{instance.num_bs - 1}")


def _check_mobile(instance, mobile):
    if not 0 <= mobile < instance.num_mobiles:
        raise IndexError(f"mobile index {mobile} out of range 0..{instance.num_mobiles - 1}")


def bs_loads(instance, profile):
    """Load ``sum of beta`` on every BS, summed in mobile index order."""
    a = as_profile(instance, profile)
    return np.bincount(a, weights=instance.beta, minlength=instance.num_bs)


def bs_load(instance, profile, bs):
    """Load of a single BS."""
    _check_bs(instance, bs)
    return float(bs_loads(instance, profile)[bs])


def is_feasible(instance, profile):
    """True when every BS carries load strictly below one."""
    return bool(np.all(bs_loads(instance, profile) < 1.0))


def mobile_costs(instance, profile):
    """Pareto-optimal powers of all mobiles; ``inf`` on infeasible BSs."""
    a = as_profile(instance, profile)
    return kernels.profile_costs(instance.gains, instance.beta, instance.noise_power, a)


def pareto_powers(instance, profile):
    """Componentwise minimal power vector meeting all SINR targets.

    Mobile ``i`` on BS ``j`` transmits ``sigma2 / h[i, j] * beta_i / (1 - L_j)``.
    On a BS with load at least one the powers are ``inf``.
    """
    return mobile_costs(instance, profile)


def mobile_cost(instance, profile, mobile):
    """Cost (transmit power) of one mobile."""
    _check_mobile(instance, mobile)
    return float(mobile_costs(instance, profile)[mobile])


def hypothetical_costs(instance, profile, mobile):
    """Costs ``mobile`` would pay at each BS, everyone else fixed.

    Returns
    -------
    costs : ndarray, shape (N,)
    loads : ndarray, shape (N,)
        Load each BS would carry including ``mobile``.
    """
    _check_mobile(instance, mobile)
    a = as_profile(instance, profile)
    costs, loads = kernels.deviation_costs(instance.gains, instance.beta, instance.noise_power, a, mobile)
    return np.asarray(costs), np.asarray(loads)


def hypothetical_cost(instance, profile, mobile, bs):
    """Cost ``mobile`` would pay after moving to ``bs``."""
    _check_bs(instance, bs)
    return float(hypothetical_costs(instance, profile, mobile)[0][bs])


def system_cost(instance, profile):
    """Sum of all mobile costs (sequential sum in index order)."""
    return float(np.cumsum(mobile_costs(instance, profile))[-1])


def achieved_sinr(instance, profile, powers, mobile):
    """SINR of ``mobile`` at its BS under an arbitrary power vector."""
    _check_mobile(instance, mobile)
    a = as_profile(instance, profile)
    p = np.asarray(powers, dtype=float)
    if p.shape != (instance.num_mobiles,) or np.any(p < 0):
        raise DomainError("powers must be a non-negative vector, one entry per mobile")
    j = a[mobile]
    same = a == j
    received = p[same] * instance.gains[same, j]
    own = p[mobile] * instance.gains[mobile, j]
    return float(own / (instance.noise_power + received.sum() - own))
