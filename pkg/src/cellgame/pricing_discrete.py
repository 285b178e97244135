"""Marginal-cost tolls for the discrete game.

A mobile's toll is the total power increase its presence forces on the other
mobiles of its BS.  With tolls, a mobile's cost equals the change of its BS's
total power, and the system cost becomes an exact potential.
"""

from dataclasses import dataclass

import numpy as np

from . import kernels
from .discrete_model import as_profile, bs_loads
from .dynamics import Scheduler, run

__all__ = [
    "TolledCostView",
    "toll",
    "tolled_cost",
    "tolled_view",
    "toll_table",
    "toll_potential",
    "broadcast_quantity",
    "run_tolled",
]


@dataclass(frozen=True)
class TolledCostView:
    base_cost: float
    toll: float
    total: float


def _bs_power(instance, members, bs):
    # total Pareto power on one BS for a set of mobiles, or inf if overloaded
    if len(members) == 0:
        return 0.0
    load = 0.0
    for l in members:
        load += instance.beta[l]
    d = 1.0 - load
    if d <= 0.0:
        return np.inf
    total = 0.0
    for l in members:
        total += (instance.noise_power / instance.gains[l, bs]) * (instance.beta[l] / d)
    return total


def _members(a, bs):
    return [int(l) for l in np.flatnonzero(a == bs)]


def toll(instance, profile, mobile):
    """Toll of ``mobile`` at its current BS, summed over the other members.

    When both the loaded and the unloaded BS are infeasible the difference is
    taken as ``+inf``.
    """
    a = as_profile(instance, profile)
    j = int(a[mobile])
    members = _members(a, j)
    others = [l for l in members if l != mobile]
    if not others:
        return 0.0
    d_with = 1.0 - sum(instance.beta[l] for l in members)
    d_without = 1.0 - sum(instance.beta[l] for l in others)
    if d_with <= 0.0:
        return np.inf
    t = 0.0
    for l in others:
        w = instance.noise_power / instance.gains[l, j]
        t += w * (instance.beta[l] / d_with - instance.beta[l] / d_without)
    return float(t)


def tolled_cost(instance, profile, mobile, form="sum"):
    """Cost plus toll of ``mobile``.

    Parameters
    ----------
    form : {'sum', 'telescoped'}
        ``'sum'`` adds :func:`toll` to the base cost; ``'telescoped'``
        subtracts the BS's total power without the mobile from the total
        power with it.
    """
    a = as_profile(instance, profile)
    if form == "telescoped":
        j = int(a[mobile])
        members = _members(a, j)
        with_i = _bs_power(instance, members, j)
        if not np.isfinite(with_i):
            return np.inf
        return float(with_i - _bs_power(instance, [l for l in members if l != mobile], j))
    if form != "sum":
        raise ValueError("form must be 'sum' or 'telescoped'")
    base = kernels.profile_costs(instance.gains, instance.beta, instance.noise_power, a)[mobile]
    return float(base + toll(instance, a, mobile))


def tolled_view(instance, profile, mobile):
    """Base cost, toll and their sum for one mobile."""
    a = as_profile(instance, profile)
    base = float(kernels.profile_costs(instance.gains, instance.beta, instance.noise_power, a)[mobile])
    t = toll(instance, a, mobile)
    return TolledCostView(base, t, base + t)


def toll_table(instance, profile):
    """Rows ``(mobile, bs, base_cost, toll, total)`` for every mobile."""
    a = as_profile(instance, profile)
    rows = []
    for i in range(instance.num_mobiles):
        v = tolled_view(instance, a, i)
        rows.append((i, int(a[i]), v.base_cost, v.toll, v.total))
    return rows


def toll_potential(instance, profile):
    """Exact potential of the tolled game, the sum of all mobile powers."""
    a = as_profile(instance, profile)
    loads = bs_loads(instance, a)
    total = 0.0
    for i in range(instance.num_mobiles):
        d = 1.0 - loads[a[i]]
        if d > 0.0:
            total += (instance.noise_power / instance.gains[i, a[i]]) * (instance.beta[i] / d)
        else:
            total += np.inf
    return float(total)


def broadcast_quantity(instance, profile, bs):
    """Total power on ``bs``, the aggregate a BS announces for local toll computation."""
    if not 0 <= bs < instance.num_bs:
        raise IndexError(f"BS index {bs} out of range")
    a = as_profile(instance, profile)
    return float(_bs_power(instance, _members(a, bs), bs))


def run_tolled(instance, initial_profile, scheduler=None, max_steps=None, rule="mapc"):
    """Best-response dynamics on tolled costs; see :func:`cellgame.dynamics.run`."""
    return run(instance, initial_profile, scheduler or Scheduler(), max_steps, rule=rule, tolled=True)
