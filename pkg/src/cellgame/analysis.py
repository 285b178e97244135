"""Brute-force oracles and potential functions for the discrete game.

Exhaustive routines walk all ``N**M`` profiles in lexicographic order of the
assignment vector (mobile 0 most significant) and refuse to start when that
count exceeds ``cap``.
"""

import numpy as np

from . import kernels
from .discrete_model import as_profile, bs_loads, mobile_costs
from .errors import DomainError, PreconditionError, SizeError

__all__ = [
    "DEFAULT_CAP",
    "special_cases",
    "profile_from_index",
    "enumerate_profiles",
    "enumerate_nash",
    "pareto_dominates",
    "is_pareto_efficient",
    "system_optimal_profiles",
    "potential_v1",
    "potential_v2",
    "potential_v3",
    "check_ordinal_potential",
    "merge_reports",
    "best_match_bs",
]

DEFAULT_CAP = 10**7


def special_cases(instance):
    """Special-case tags that apply to an instance.

    Returns
    -------
    set of str
        Subset of ``{'single_class', 'collocated_mobiles', 'collocated_bs',
        'collocated_bs_symmetric'}``, or ``{'general'}`` when none applies.
    """
    h = instance.gains
    tags = set()
    if np.all(instance.beta == instance.beta[0]):
        tags.add("single_class")
    if np.all(h == h[0:1, :]):
        tags.add("collocated_mobiles")
    if np.all(h == h[:, 0:1]):
        tags.add("collocated_bs")
        if np.all(h == h[0, 0]):
            tags.add("collocated_bs_symmetric")
    return tags or {"general"}


def _check_cap(instance, cap):
    total = instance.num_bs**instance.num_mobiles
    if total > cap:
        raise SizeError(f"{total} profiles exceed the enumeration cap {cap}")
    return total


def profile_from_index(instance, index):
    """Profile at position ``index`` of the lexicographic enumeration."""
    m, n = instance.num_mobiles, instance.num_bs
    out = [0] * m
    for i in range(m - 1, -1, -1):
        index, out[i] = divmod(index, n)
    return tuple(out)


def enumerate_profiles(instance, cap=DEFAULT_CAP, tolled=False):
    """System cost and Nash flag of every profile.

    Returns
    -------
    system_cost : ndarray, shape (N**M,)
    is_nash : ndarray of bool, shape (N**M,)
        Nash flag in the plain game, or in the tolled game if ``tolled``.
    """
    _check_cap(instance, cap)
    sys_cost, ne = kernels.enumerate_profiles(
        instance.gains, instance.beta, instance.noise_power, tolled, instance.tie_tol
    )
    return np.asarray(sys_cost), np.asarray(ne, dtype=bool)


def enumerate_nash(instance, cap=DEFAULT_CAP, tolled=False):
    """All Nash equilibria in lexicographic order."""
    _, ne = enumerate_profiles(instance, cap, tolled)
    return [profile_from_index(instance, int(p)) for p in np.flatnonzero(ne)]


def pareto_dominates(instance, profile_b, profile_a):
    """True when ``b`` is no worse for every mobile and better for one."""
    cb = mobile_costs(instance, profile_b)
    ca = mobile_costs(instance, profile_a)
    tol = instance.tie_tol
    return bool(np.all(cb <= ca + tol) and np.any(cb < ca - tol))


def is_pareto_efficient(instance, profile, cap=DEFAULT_CAP):
    """True when no profile Pareto-dominates ``profile`` (exhaustive)."""
    _check_cap(instance, cap)
    target = np.asarray(mobile_costs(instance, profile))
    hit = kernels.find_dominator(instance.gains, instance.beta, instance.noise_power, target, instance.tie_tol)
    return hit < 0


def system_optimal_profiles(instance, cap=DEFAULT_CAP):
    """All minimisers of the system cost, in lexicographic order."""
    sys_cost, _ = enumerate_profiles(instance, cap)
    best = sys_cost.min()
    idx = np.flatnonzero(sys_cost <= best + instance.tie_tol)
    return [profile_from_index(instance, int(p)) for p in idx]


def _require(instance, tag):
    if tag not in special_cases(instance):
        raise PreconditionError(f"this potential needs a {tag} instance")


def potential_v1(instance, profile):
    """Ordinal potential for a single traffic class (all targets equal).

    ``-prod_l h[l, a_l] * prod_k prod_{t<=|M_k|} [1 - t beta]^+ / (sigma2 beta)``
    """
    _require(instance, "single_class")
    a = as_profile(instance, profile)
    beta = instance.beta[0]
    val = np.prod(instance.gains[np.arange(a.size), a])
    counts = np.bincount(a, minlength=instance.num_bs)
    for c in counts:
        for t in range(1, c + 1):
            val *= max(1.0 - t * beta, 0.0)
    return float(-val / (instance.noise_power * beta))


def potential_v2(instance, profile):
    """Ordinal potential when gains depend on the BS only."""
    _require(instance, "collocated_mobiles")
    a = as_profile(instance, profile)
    beta = instance.beta
    slack = np.maximum(1.0 - bs_loads(instance, a)[a], 0.0)
    h = instance.gains[0, a]
    return float(-np.sum(h / instance.noise_power * beta * (slack + 1.0 - beta)))


def potential_v3(instance, profile):
    """Ordinal potential when gains depend on the mobile only."""
    _require(instance, "collocated_bs")
    a = as_profile(instance, profile)
    slack = np.maximum(1.0 - bs_loads(instance, a)[a], 0.0)
    return float(-np.sum(instance.beta * slack) / instance.noise_power)


def _deviations(instance, rng, samples):
    m, n = instance.num_mobiles, instance.num_bs
    if samples is None:
        for p in range(n**m):
            a = profile_from_index(instance, p)
            for i in range(m):
                for j in range(n):
                    if j != a[i]:
                        yield a, i, j
        return
    if n < 2:
        return
    for _ in range(samples):
        a = tuple(int(x) for x in rng.integers(n, size=m))
        i = int(rng.integers(m))
        j = int(rng.integers(n - 1))
        yield a, i, j + (j >= a[i])


def check_ordinal_potential(
    instance, potential, samples=None, seed=0, domain="feasible", max_report=20, costs=None
):
    """Test ``c_i(b) < c_i(a)  <=>  V(b) < V(a)`` on unilateral deviations.

    Parameters
    ----------
    instance : NetworkInstance
    potential : callable
        ``potential(instance, profile) -> float``.
    samples : int, optional
        Number of random (profile, mobile, target) triples.  ``None`` checks
        every unilateral deviation exhaustively.
    seed : int
    domain : {'feasible', 'all'}
        ``'feasible'`` skips deviations whose origin or destination profile
        overloads a BS, where the closed-form potentials saturate at zero.
    max_report : int
        At most this many violations are listed in the report.
    costs : callable, optional
        ``costs(instance, profile) -> array`` of per-mobile costs; defaults
        to the Pareto powers.

    Returns
    -------
    dict
        ``{'instances', 'deviations', 'skipped', 'violation_count',
        'violations'}``; each violation records the profile, mobile, target
        BS, cost change and potential change.
    """
    if domain not in ("feasible", "all"):
        raise DomainError("domain must be 'feasible' or 'all'")
    cost_fn = mobile_costs if costs is None else costs
    rng = np.random.default_rng(seed)
    checked = skipped = 0
    violations = []
    count = 0
    cache = {}

    def evaluate(a):
        if a not in cache:
            cache[a] = (cost_fn(instance, a), potential(instance, a))
        return cache[a]

    for a, i, j in _deviations(instance, rng, samples):
        b = list(a)
        b[i] = j
        b = tuple(b)
        ca, va = evaluate(a)
        cb, vb = evaluate(b)
        if domain == "feasible" and not (np.all(np.isfinite(ca)) and np.all(np.isfinite(cb))):
            skipped += 1
            continue
        checked += 1
        if (cb[i] < ca[i]) != (vb < va):
            count += 1
            if len(violations) < max_report:
                violations.append(
                    {
                        "profile": list(a),
                        "mobile": i,
                        "to_bs": j,
                        "cost_change": float(cb[i] - ca[i]),
                        "potential_change": float(vb - va),
                    }
                )
    return {
        "instances": 1,
        "deviations": checked,
        "skipped": skipped,
        "violation_count": count,
        "violations": violations,
    }


def merge_reports(reports):
    """Combine several ``check_ordinal_potential`` reports into one."""
    out = {"instances": 0, "deviations": 0, "skipped": 0, "violation_count": 0, "violations": []}
    for r in reports:
        for key in ("instances", "deviations", "skipped", "violation_count"):
            out[key] += r[key]
        out["violations"].extend(r["violations"])
    return out


def best_match_bs(instance, mobile):
    """BSs with the largest gain for ``mobile`` (cheapest when alone)."""
    if not 0 <= mobile < instance.num_mobiles:
        raise IndexError(f"mobile index {mobile} out of range")
    h = instance.gains[mobile]
    return [int(j) for j in np.flatnonzero(h == h.max())]
