"""Continuum-of-mobiles association game.

Class ``l`` has mass ``M_l`` and SINR density ``gamma_l``; a congestion profile
``m[l, j]`` says how much of class ``l`` uses BS ``j``.  The aggregate load of
BS ``j`` is ``m_j = sum_l gamma_l m[l, j]`` and class ``l`` pays
``g[l, j] / (1 - m_j)`` there, with ``g[l, j] = gamma_l sigma2 / h[l, j]``.

Equilibria minimise the convex potential ``V``; system optima minimise ``C``.
Both solvers use exact pairwise line searches: mass of one class moves from
its most expensive used BS to its cheapest BS, by the step that equalises
the two (marginal) costs.  Iterates stay feasible throughout.
"""

import itertools
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .errors import ConvergenceError, DomainError, ValidationError

__all__ = [
    "NonatomicInstance",
    "CongestionProfile",
    "congestion_cost",
    "congestion_cost_marginal",
    "aggregate_loads",
    "cost_density",
    "cost_densities",
    "potential",
    "system_cost",
    "ne_residual",
    "tolled_residual",
    "toll_density",
    "toll_densities",
    "tolled_cost_densities",
    "solve_ne",
    "solve_system_optimal",
    "solve_tolled_ne",
    "two_bs_ne_fraction",
    "two_bs_opt_fraction",
    "single_cell_feasible",
    "single_cell_power_density",
    "pareto_dominates",
    "uniform_profile",
]

MASS_THRESHOLD = 1e-9
DEFAULT_TOL = 1e-7
DEFAULT_MAX_ITERS = 100_000
DEFAULT_STARTS = 8


def _readonly(a):
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class NonatomicInstance:
    """Classes of infinitesimal mobiles sharing ``N`` BSs.

    Parameters
    ----------
    gains : array_like, shape (L, N)
        Gain ``h[l, j] > 0`` from class ``l`` to BS ``j``.
    sinr_density : array_like, shape (L,)
        Per-class SINR density ``gamma_l > 0``.
    masses : array_like, shape (L,)
        Per-class mass ``M_l > 0``.
    noise_power : float
    """

    gains: np.ndarray
    sinr_density: np.ndarray
    masses: np.ndarray
    noise_power: float = 1.0
    g: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        h = np.array(self.gains, dtype=float)
        if h.ndim == 1:
            h = h[None, :]
        if h.ndim != 2 or h.shape[0] < 1 or h.shape[1] < 1:
            raise ValidationError("gains-shape", "gains must be a non-empty (classes x BSs) array")
        nl, n = h.shape
        gamma = np.array(self.sinr_density, dtype=float).reshape(-1)
        mass = np.array(self.masses, dtype=float).reshape(-1)
        if gamma.shape != (nl,) or mass.shape != (nl,):
            raise ValidationError("class-shape", f"expected {nl} SINR densities and masses")
        if not np.all(np.isfinite(h)) or np.any(h <= 0):
            raise ValidationError("positive-gains", "gains must be finite and > 0")
        if not np.all(np.isfinite(gamma)) or np.any(gamma <= 0):
            raise ValidationError("positive-sinr-density", "SINR densities must be finite and > 0")
        if not np.all(np.isfinite(mass)) or np.any(mass <= 0):
            raise ValidationError("positive-mass", "class masses must be finite and > 0")
        if not (np.isfinite(self.noise_power) and self.noise_power > 0):
            raise ValidationError("positive-noise", "noise power must be finite and > 0")
        if not float(gamma @ mass) < n:
            raise ValidationError(
                "global-feasibility",
                f"total SINR mass {float(gamma @ mass)} must be below the number of BSs {n}",
            )
        object.__setattr__(self, "gains", _readonly(h))
        object.__setattr__(self, "sinr_density", _readonly(gamma))
        object.__setattr__(self, "masses", _readonly(mass))
        object.__setattr__(self, "noise_power", float(self.noise_power))
        object.__setattr__(self, "g", _readonly(gamma[:, None] * self.noise_power / h))

    @property
    def num_classes(self):
        return self.gains.shape[0]

    @property
    def num_bs(self):
        return self.gains.shape[1]

    @property
    def collocated_mobiles(self):
        """True when every class sees the same gain to each BS."""
        return bool(np.all(self.gains == self.gains[0:1, :]))


@dataclass
class CongestionProfile:
    """Class-by-BS mass matrix plus solver diagnostics."""

    masses: np.ndarray
    diagnostics: dict = field(default_factory=dict)

    def aggregate(self, instance):
        return aggregate_loads(instance, self)


def _m(profile):
    return np.asarray(profile.masses if isinstance(profile, CongestionProfile) else profile, dtype=float)


def _check_profile(instance, profile, rtol=1e-9, validate=True):
    m = _m(profile)
    if not validate:
        return m
    if m.shape != instance.gains.shape:
        raise DomainError(f"profile must have shape {instance.gains.shape}")
    if np.any(m < 0) or not np.all(np.isfinite(m)):
        raise DomainError("profile masses must be finite and non-negative")
    if not np.allclose(m.sum(axis=1), instance.masses, rtol=rtol, atol=0.0):
        raise DomainError("each class must distribute exactly its mass")
    return m


def congestion_cost(z):
    """``1 / (1 - z)``, or ``inf`` once ``z >= 1``."""
    z = np.asarray(z, dtype=float)
    if np.any(z < 0):
        raise DomainError("load must be non-negative")
    with np.errstate(divide="ignore"):
        out = np.where(z < 1.0, 1.0 / np.where(z < 1.0, 1.0 - z, 1.0), np.inf)
    return float(out) if out.ndim == 0 else out


def congestion_cost_marginal(z):
    """``1 / (1 - z)**2``, or ``inf`` once ``z >= 1``."""
    c = congestion_cost(z)
    return c * c


def aggregate_loads(instance, profile, validate=True):
    """Aggregate loads ``m_j = sum_l gamma_l m[l, j]``."""
    return instance.sinr_density @ _check_profile(instance, profile, validate=validate)


def cost_densities(instance, profile, validate=True):
    """Matrix of cost densities ``g[l, j] c(m_j)``."""
    return instance.g * congestion_cost(aggregate_loads(instance, profile, validate))[None, :]


def cost_density(instance, profile, cls, bs):
    return float(cost_densities(instance, profile)[cls, bs])


def _entropy_term(y):
    # I(m) = m + (1 - m) log(1 - m), the antiderivative of log c
    y = np.asarray(y, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        out = y + (1.0 - y) * np.log1p(-y)
    return np.where(y == 0.0, 0.0, out)


def potential(instance, profile, validate=True):
    """Convex potential whose minimisers are the Nash equilibria.

    ``V = sum_j (sum_l gamma_l m[l, j] log g[l, j] + I(m_j))`` with
    ``I(m) = m + (1 - m) log(1 - m)``.  ``validate=False`` skips the
    per-class mass check, e.g. for finite differences off the simplex.
    """
    m = _check_profile(instance, profile, validate=validate)
    y = instance.sinr_density @ m
    if np.any(y >= 1.0):
        return np.inf
    linear = np.sum(instance.sinr_density[:, None] * m * np.log(instance.g))
    return float(linear + np.sum(_entropy_term(y)))


def system_cost(instance, profile, validate=True):
    """Total power ``sum_j sum_l m[l, j] g[l, j] c(m_j)``."""
    m = _check_profile(instance, profile, validate=validate)
    c = congestion_cost(instance.sinr_density @ m)
    s = np.einsum("lj,lj->j", m, instance.g)
    with np.errstate(invalid="ignore"):
        terms = np.where(s > 0, s * c, 0.0)
    return float(np.sum(terms))


def toll_densities(instance, profile, validate=True):
    """Marginal-cost tolls ``gamma_l S_j c'(m_j)`` with ``S_j = sum_i m[i, j] g[i, j]``."""
    m = _check_profile(instance, profile, validate=validate)
    y = instance.sinr_density @ m
    s = np.einsum("lj,lj->j", m, instance.g)
    cp = congestion_cost_marginal(y)
    with np.errstate(invalid="ignore"):
        per_bs = np.where(s > 0, s * cp, 0.0)
    return instance.sinr_density[:, None] * per_bs[None, :]


def toll_density(instance, profile, cls, bs):
    return float(toll_densities(instance, profile)[cls, bs])


def tolled_cost_densities(instance, profile, validate=True):
    """Cost plus toll, equal to the partial derivatives of ``C``."""
    return cost_densities(instance, profile, validate) + toll_densities(instance, profile, validate)


def _residual(instance, m, tolled):
    return float(
        kernels.residual(instance.g, instance.sinr_density, m, instance.masses, tolled, MASS_THRESHOLD)
    )


def ne_residual(instance, profile):
    """Largest relative cost gap between a used BS and the class optimum.

    Pairs with mass at most ``1e-9 * M_l`` count as unused.
    """
    return _residual(instance, _check_profile(instance, profile), False)


def tolled_residual(instance, profile):
    """Same as :func:`ne_residual` for tolled costs."""
    return _residual(instance, _check_profile(instance, profile), True)


def uniform_profile(instance):
    """Every class split evenly over all BSs."""
    return np.repeat(instance.masses[:, None] / instance.num_bs, instance.num_bs, axis=1)


def _random_start(instance, rng):
    # blend a random split into the uniform one until every BS is feasible
    base = uniform_profile(instance)
    w = rng.dirichlet(np.ones(instance.num_bs), size=instance.num_classes) * instance.masses[:, None]
    mix = 1.0
    while mix > 1e-6:
        m = (1.0 - mix) * base + mix * w
        if np.all(instance.sinr_density @ m < 1.0):
            return m
        mix *= 0.5
    return base


def _descend(instance, m0, tolled, tolerance, max_iters):
    m, iters, res = kernels.pairwise_descent(
        instance.g, instance.sinr_density, np.ascontiguousarray(m0, dtype=float),
        tolled, tolerance, max_iters, MASS_THRESHOLD,
    )
    return np.asarray(m), int(iters), float(res)


def _starts(instance, starts, seed):
    rng = np.random.default_rng(seed)
    out = [uniform_profile(instance)]
    for _ in range(max(starts, 1) - 1):
        out.append(_random_start(instance, rng))
    return out


def _fail(what, res, iters, tolerance):
    raise ConvergenceError(
        f"{what} stopped at residual {res:.3e} after {iters} iterations (tolerance {tolerance:.1e})",
        {"residual": res, "iterations": iters, "tolerance": tolerance},
    )


def solve_ne(instance, tolerance=DEFAULT_TOL, max_iters=DEFAULT_MAX_ITERS, starts=DEFAULT_STARTS, seed=0):
    """Nash equilibrium as the minimiser of the potential.

    Every start is driven to residual ``<= tolerance``; the profile with the
    smallest potential is returned.  ``diagnostics`` holds the per-start
    aggregate loads, residuals and iteration counts.

    Raises
    ------
    ConvergenceError
        When a start misses the tolerance within ``max_iters`` sweeps.
    """
    results = []
    for m0 in _starts(instance, starts, seed):
        m, iters, res = _descend(instance, m0, False, tolerance, max_iters)
        if not res <= tolerance:
            _fail("equilibrium solver", res, iters, tolerance)
        results.append((potential(instance, m), m, iters, res))
    best = min(range(len(results)), key=lambda k: results[k][0])
    _, m, iters, res = results[best]
    diag = {
        "residual": res,
        "iterations": iters,
        "starts": len(results),
        "start_loads": [list(instance.sinr_density @ r[1]) for r in results],
        "start_residuals": [r[3] for r in results],
        "potential": results[best][0],
    }
    return CongestionProfile(m, diag)


def _vertex_starts(instance, limit=4096):
    # each class entirely on one BS; only strictly feasible ones are kept
    nl, n = instance.gains.shape
    if n**nl > limit:
        return []
    out = []
    for combo in itertools.product(range(n), repeat=nl):
        m = np.zeros((nl, n))
        m[np.arange(nl), combo] = instance.masses
        if np.all(instance.sinr_density @ m < 1.0):
            out.append(m)
    return out


def solve_system_optimal(
    instance, tolerance=DEFAULT_TOL, max_iters=DEFAULT_MAX_ITERS, starts=DEFAULT_STARTS, seed=0
):
    """Minimiser of the system cost ``C``.

    When gains depend on the BS only, ``C`` is convex and a stationary point
    is the certified optimum.  Otherwise stationary points are collected from
    seeded random starts and from every feasible class-to-BS vertex, and the
    cheapest one is returned with ``diagnostics['certified'] = False``.
    """
    certified = instance.collocated_mobiles
    if certified:
        candidates = [uniform_profile(instance)]
    else:
        candidates = _starts(instance, starts, seed) + _vertex_starts(instance)
    best = None
    for m0 in candidates:
        m, iters, res = _descend(instance, m0, True, tolerance, max_iters)
        if not res <= tolerance:
            _fail("system-optimum solver", res, iters, tolerance)
        cost = system_cost(instance, m)
        if best is None or cost < best[0]:
            best = (cost, m, iters, res)
    cost, m, iters, res = best
    diag = {
        "residual": res,
        "iterations": iters,
        "starts": len(candidates),
        "certified": certified,
        "system_cost": cost,
    }
    return CongestionProfile(m, diag)


def solve_tolled_ne(instance, tolerance=DEFAULT_TOL, max_iters=DEFAULT_MAX_ITERS, initial=None):
    """Equilibrium of the tolled game, a stationary point of ``C``.

    Starts from the uniform split unless ``initial`` is given.
    """
    m0 = uniform_profile(instance) if initial is None else _check_profile(instance, initial)
    m, iters, res = _descend(instance, m0, True, tolerance, max_iters)
    if not res <= tolerance:
        _fail("tolled equilibrium solver", res, iters, tolerance)
    return CongestionProfile(m, {"residual": res, "iterations": iters, "certified": instance.collocated_mobiles})


def _two_bs_fraction(r, load):
    # share on BS 1 equalising r (1 - load a) = (1 - load (1 - a)), clipped
    if load >= 2.0:
        raise DomainError("total SINR mass must stay below 2 for two BSs")
    if load <= 0.0:
        raise DomainError("mass and SINR density must be positive")
    if 1.0 / r <= 1.0 - load:
        return 0.0
    if r <= 1.0 - load:
        return 1.0
    return (1.0 - r + load * r) / ((1.0 + r) * load)


def two_bs_ne_fraction(h1, h2, gamma, mass):
    """Equilibrium share of the mass on BS 1 for a single class and two BSs."""
    if h1 <= 0 or h2 <= 0:
        raise DomainError("gains must be positive")
    return _two_bs_fraction(h2 / h1, gamma * mass)


def two_bs_opt_fraction(h1, h2, gamma, mass):
    """Socially optimal share on BS 1; the equilibrium formula with square-root gains."""
    if h1 <= 0 or h2 <= 0:
        raise DomainError("gains must be positive")
    return _two_bs_fraction(np.sqrt(h2 / h1), gamma * mass)


def single_cell_feasible(sinr_density, masses):
    """A lone BS can serve the classes iff ``sum_l gamma_l M_l < 1``."""
    return bool(np.dot(np.asarray(sinr_density, float), np.asarray(masses, float)) < 1.0)


def single_cell_power_density(sinr_density, masses, gains, noise_power=1.0):
    """Pareto power density ``gamma_l sigma2 / (h_l (1 - load))`` of each class on one BS.

    Returns ``inf`` for every class when the cell is overloaded.
    """
    gamma = np.asarray(sinr_density, float)
    h = np.asarray(gains, float)
    load = float(np.dot(gamma, np.asarray(masses, float)))
    if load >= 1.0:
        return np.full(np.broadcast(gamma, h).shape, np.inf)
    return gamma * noise_power / (h * (1.0 - load))


def pareto_dominates(instance, profile_b, profile_a, tol=0.0):
    """Class-level dominance between congestion profiles.

    A class's cost is the largest cost density over the BSs it uses.  ``b``
    dominates ``a`` when no class is worse off and one is strictly better.
    """
    def class_costs(p):
        m = _check_profile(instance, p)
        c = cost_densities(instance, m)
        used = m > MASS_THRESHOLD * instance.masses[:, None]
        return np.max(np.where(used, c, -np.inf), axis=1)

    cb, ca = class_costs(profile_b), class_costs(profile_a)
    return bool(np.all(cb <= ca + tol) and np.any(cb < ca - tol))
