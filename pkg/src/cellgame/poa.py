"""Price of anarchy for a single class of infinitesimal mobiles.

With gains sorted as ``h_1 >= ... >= h_N`` the equilibrium fills BSs in order:
BS ``j`` starts to carry load once the mass passes its spill-over mass
``Delta_j``.  Used BSs equalise ``h_k (1 - gamma m_k)`` at equilibrium and
``sqrt(h_k) (1 - gamma m_k)`` at the optimum, so both costs have closed forms
in the partial sums ``e_j = sum_{k<=j} 1/h_k`` and ``e*_j = sum_{k<=j} 1/sqrt(h_k)``.
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError, ValidationError

__all__ = [
    "SingleClassInstance",
    "PoAReport",
    "spillover_masses",
    "ne_loads",
    "ne_cost",
    "opt_loads",
    "opt_cost",
    "poa",
    "poa_large_mass",
    "poa_two_bs",
    "poa_two_bs_max",
    "anarchy_bound",
    "mass_grid",
    "sweep",
    "summarize_sweep",
]


@dataclass(frozen=True)
class SingleClassInstance:
    """One class of mobiles; gains are stored sorted in decreasing order.

    Parameters
    ----------
    gains : array_like, shape (N,)
        Positive gain to each BS, any order.
    gamma : float
        SINR density.
    sigma2 : float
        Noise power.
    """

    gains: np.ndarray
    gamma: float
    sigma2: float = 1.0
    e: np.ndarray = field(init=False, repr=False, compare=False)
    e_star: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        h = np.array(self.gains, dtype=float).reshape(-1)
        if h.size < 1 or not np.all(np.isfinite(h)) or np.any(h <= 0):
            raise ValidationError("positive-gains", "gains must be a non-empty vector of positive numbers")
        if not (np.isfinite(self.gamma) and self.gamma > 0):
            raise ValidationError("positive-sinr-density", "gamma must be positive")
        if not (np.isfinite(self.sigma2) and self.sigma2 > 0):
            raise ValidationError("positive-noise", "noise power must be positive")
        h = np.sort(h)[::-1].copy()
        for name, val in (("gains", h), ("e", np.cumsum(1.0 / h)), ("e_star", np.cumsum(1.0 / np.sqrt(h)))):
            val.setflags(write=False)
            object.__setattr__(self, name, val)
        object.__setattr__(self, "gamma", float(self.gamma))
        object.__setattr__(self, "sigma2", float(self.sigma2))

    @property
    def num_bs(self):
        return self.gains.size

    @property
    def max_mass(self):
        """Supremum of feasible masses, ``N / gamma``."""
        return self.num_bs / self.gamma


@dataclass(frozen=True)
class PoAReport:
    mass: float
    ne_cost: float
    opt_cost: float
    poa: float
    spillovers: tuple = ()
    argmax_mass: float = None


def _thresholds(inst, weights, partial):
    # mass at which BS j (0-based) joins: ((j) - w_j * partial_{j-1}) / gamma
    j = np.arange(inst.num_bs)
    prev = np.concatenate(([0.0], partial[:-1]))
    return (j - weights * prev) / inst.gamma


def _all_spillovers(inst):
    return _thresholds(inst, inst.gains, inst.e)


def spillover_masses(instance):
    """Spill-over masses ``Delta_2 .. Delta_N`` (nondecreasing)."""
    return _all_spillovers(instance)[1:].copy()


def _check_mass(inst, mass):
    if not np.isfinite(mass) or mass <= 0:
        raise DomainError("mass must be positive")
    if not inst.gamma * mass < inst.num_bs:
        raise DomainError(f"mass {mass} is infeasible; it must stay below {inst.max_mass}")


def _used(thresholds, mass):
    return int(np.count_nonzero(thresholds < mass))


def ne_loads(instance, mass):
    """Equilibrium mass on each BS (in sorted gain order)."""
    _check_mass(instance, mass)
    n = _used(_all_spillovers(instance), mass)
    k = (n - instance.gamma * mass) / instance.e[n - 1]
    out = np.zeros(instance.num_bs)
    out[:n] = (1.0 - k / instance.gains[:n]) / instance.gamma
    return out


def ne_cost(instance, mass):
    """Total equilibrium power ``M gamma sigma2 / K`` with ``K = (n - gamma M) / e_n``."""
    _check_mass(instance, mass)
    n = _used(_all_spillovers(instance), mass)
    x = instance.gamma * mass
    return float(instance.sigma2 * x * instance.e[n - 1] / (n - x))


def _opt_count(instance, mass):
    sq = np.sqrt(instance.gains)
    return _used(_thresholds(instance, sq, instance.e_star), mass)


def opt_loads(instance, mass):
    """Socially optimal mass on each BS (in sorted gain order)."""
    _check_mass(instance, mass)
    n = _opt_count(instance, mass)
    k = (n - instance.gamma * mass) / instance.e_star[n - 1]
    out = np.zeros(instance.num_bs)
    out[:n] = (1.0 - k / np.sqrt(instance.gains[:n])) / instance.gamma
    return out


def _sqrt_gap(instance, n):
    # n e_n - e*_n^2 written as a spread of 1/sqrt(h), free of cancellation
    a = 1.0 / np.sqrt(instance.gains[:n])
    return float(n * np.sum((a - a.mean()) ** 2))


def opt_cost(instance, mass):
    """Minimal total power ``sigma2 (e*_n^2 / (n - gamma M) - e_n)``.

    Evaluated as ``sigma2 (e_n gamma M - (n e_n - e*_n^2)) / (n - gamma M)``,
    which stays accurate for small masses.
    """
    _check_mass(instance, mass)
    n = _opt_count(instance, mass)
    x = instance.gamma * mass
    return float(instance.sigma2 * (instance.e[n - 1] * x - _sqrt_gap(instance, n)) / (n - x))


def poa(instance, mass):
    """Ratio of equilibrium to optimal total power."""
    return ne_cost(instance, mass) / opt_cost(instance, mass)


def poa_large_mass(instance, mass):
    """Closed form of the PoA once every BS is used at equilibrium."""
    _check_mass(instance, mass)
    if mass < _all_spillovers(instance)[-1]:
        raise DomainError("the large-mass form needs mass >= the last spill-over mass")
    e, n = instance.e[-1], instance.num_bs
    gap = _sqrt_gap(instance, n)
    return float(1.0 + gap / (e * mass * instance.gamma - gap))


def poa_two_bs(lam, gamma, mass):
    """Piecewise closed-form PoA for two BSs with gain ratio ``lam = h2 / h1``."""
    if not 0.0 < lam <= 1.0:
        raise DomainError("lambda must lie in (0, 1]")
    if gamma <= 0 or mass <= 0 or not gamma * mass < 2.0:
        raise DomainError("need gamma > 0, mass > 0 and gamma * mass < 2")
    x = gamma * mass
    r = np.sqrt(lam)
    if x <= 1.0 - r:
        return 1.0
    denom = 2.0 * r - (1.0 - x) * (1.0 + lam)
    if x <= 1.0 - lam:
        return float(lam * (2.0 - x) * x / ((1.0 - x) * denom))
    return float(x * (1.0 + lam) / denom)


def poa_two_bs_max(lam):
    """Largest two-BS PoA, attained at mass ``(1 - lam) / gamma``."""
    if not 0.0 < lam <= 1.0:
        raise DomainError("lambda must lie in (0, 1]")
    return float((1.0 - lam * lam) / (2.0 * np.sqrt(lam) - lam * (1.0 + lam)))


def anarchy_bound(h_min, h_max):
    """Upper bound ``(1 + sqrt(h_max / h_min)) / 2`` on the PoA.

    It is the anarchy value of the worst cost ``g / (1 - z)`` in the class,
    whose load is capped at ``(1 - h_min / h) / gamma`` by equilibrium.
    """
    if not 0 < h_min <= h_max:
        raise DomainError("need 0 < h_min <= h_max")
    return float(0.5 * (1.0 + np.sqrt(h_max / h_min)))


def mass_grid(instance, points=400, max_mass=None, include_spillovers=True):
    """Evenly spaced masses up to ``max_mass`` merged with the spill-over masses.

    ``max_mass`` defaults to ``0.999 N / gamma``.
    """
    top = 0.999 * instance.max_mass if max_mass is None else float(max_mass)
    if not 0 < top < instance.max_mass:
        raise DomainError("max_mass must be positive and feasible")
    grid = np.linspace(top / points, top, points)
    if include_spillovers:
        d = spillover_masses(instance)
        grid = np.concatenate((grid, d[(d > 0) & (d <= top)]))
    return np.unique(grid)


def sweep(instance, masses):
    """PoA at every mass of a grid.

    Every report carries the spill-over masses and the grid argmax.
    """
    masses = np.asarray(masses, dtype=float)
    rows = [(m, ne_cost(instance, m), opt_cost(instance, m)) for m in masses]
    values = [ne / opt for _, ne, opt in rows]
    spill = tuple(float(d) for d in spillover_masses(instance))
    best = float(masses[int(np.argmax(values))]) if rows else None
    return [PoAReport(float(m), ne, opt, p, spill, best) for (m, ne, opt), p in zip(rows, values)]


def summarize_sweep(reports):
    """Argmax of a sweep and its distance to the nearest spill-over mass."""
    best = max(reports, key=lambda r: r.poa)
    first = next(r for r in reports if r.poa == best.poa)
    spill = np.asarray(first.spillovers)
    dist = float(np.min(np.abs(spill - first.mass))) if spill.size else float("inf")
    return {
        "argmax_mass": first.mass,
        "max_poa": first.poa,
        "spillovers": list(first.spillovers),
        "distance_to_spillover": dist,
        "at_spillover": bool(spill.size and np.any(spill == first.mass)),
    }
