"""Best-response association dynamics.

A run advances in epochs.  In every epoch a scheduler picks the mobiles that
may update; each of them, in index order, moves to a best-response BS unless
its current BS is already one.  ``mapc`` compares cost only, ``mapc_star``
breaks cost ties by the load the BS would carry.
"""

from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .discrete_model import as_profile
from .errors import DomainError

__all__ = [
    "Scheduler",
    "Switch",
    "Cycle",
    "RunResult",
    "run",
    "best_response_set",
    "detect_cycle",
    "default_max_steps",
    "is_nash",
    "mapc_step",
    "mapc_star_step",
]

RULES = ("mapc", "mapc_star")
SCHEDULES = ("round_robin", "random_single", "independent_prob")
STATUSES = ("converged_ne", "cycle_detected", "iteration_cap")


@dataclass(frozen=True)
class Scheduler:
    """Which mobiles update in each epoch.

    Parameters
    ----------
    kind : {'round_robin', 'random_single', 'independent_prob'}
        ``round_robin`` visits mobile ``t mod M`` at epoch ``t``;
        ``random_single`` picks one mobile uniformly; ``independent_prob``
        lets mobile ``i`` update with probability ``probabilities[i]``.
    probabilities : sequence of float, optional
        Per-mobile update probabilities, strictly inside ``(0, 1)``.
    seed : int
        Seed of the scheduler's random stream.
    tie_break : {'lowest', 'random'}
        How a moving mobile picks among several best-response BSs.
    quiet_window : int, optional
        Epochs without a switch after which a run checks for equilibrium.
        Defaults to the number of mobiles.
    """

    kind: str = "round_robin"
    probabilities: tuple = None
    seed: int = 0
    tie_break: str = "lowest"
    quiet_window: int = None

    def __post_init__(self):
        if self.kind not in SCHEDULES:
            raise DomainError(f"unknown schedule {self.kind!r}; expected one of {SCHEDULES}")
        if self.tie_break not in ("lowest", "random"):
            raise DomainError("tie_break must be 'lowest' or 'random'")
        if self.probabilities is not None:
            p = tuple(float(x) for x in self.probabilities)
            if any(not (0.0 < x < 1.0) for x in p):
                raise DomainError("update probabilities must lie strictly inside (0, 1)")
            object.__setattr__(self, "probabilities", p)
        elif self.kind == "independent_prob":
            raise DomainError("independent_prob needs per-mobile probabilities")
        if self.quiet_window is not None and self.quiet_window < 1:
            raise DomainError("quiet_window must be positive")


@dataclass(frozen=True)
class Switch:
    """One association change; BS indices are 0-based."""

    step: int
    mobile: int
    old_bs: int
    new_bs: int
    cost_before: float
    cost_after: float


@dataclass(frozen=True)
class Cycle:
    """A recurrence of a profile along a best-response path.

    ``start`` and ``end`` index the trace: the profile right before switch
    ``start`` equals the profile right after switch ``end``.
    """

    start: int
    end: int
    profile: tuple

    @property
    def length(self):
        return self.end - self.start + 1


@dataclass
class RunResult:
    final_profile: tuple
    steps: int
    status: str
    trace: list = field(default_factory=list)
    initial_profile: tuple = None
    cycle: Cycle = None


def default_max_steps(num_mobiles, num_bs):
    """Default epoch cap ``1000 * M`` used when none is given."""
    return 1000 * num_mobiles


def best_response_set(instance, profile, mobile, rule="mapc", tolled=False):
    """Indices of the BSs that are best responses for ``mobile``.

    Under ``mapc`` these are the cost minimisers within the instance's tie
    tolerance; ``mapc_star`` keeps the least loaded of them.
    """
    if rule not in RULES:
        raise DomainError(f"unknown rule {rule!r}")
    a = as_profile(instance, profile)
    if not 0 <= mobile < instance.num_mobiles:
        raise IndexError(f"mobile index {mobile} out of range")
    dev = kernels.deviation_tolled_costs if tolled else kernels.deviation_costs
    costs, loads = dev(instance.gains, instance.beta, instance.noise_power, a, mobile)
    tol = instance.tie_tol
    cand = costs <= costs.min() + tol
    if rule == "mapc_star":
        cand &= loads <= loads[cand].min() + tol
    return [int(k) for k in np.flatnonzero(cand)]


def is_nash(instance, profile, tolled=False):
    """True when every mobile already sits at one of its best responses."""
    a = as_profile(instance, profile)
    return bool(kernels.is_nash(instance.gains, instance.beta, instance.noise_power, a, tolled, instance.tie_tol))


def _step(instance, profile, mobile, lexicographic, tolled, rng):
    a = as_profile(instance, profile).copy()
    if not 0 <= mobile < instance.num_mobiles:
        raise IndexError(f"mobile index {mobile} out of range")
    u = -1.0 if rng is None else float(rng.random())
    target, _, _ = kernels.choose_move(
        instance.gains, instance.beta, instance.noise_power, a, mobile, lexicographic, tolled, instance.tie_tol, u
    )
    a[mobile] = target
    return tuple(int(x) for x in a)


def mapc_step(instance, profile, mobile, rng=None, tolled=False):
    """One cost-only best-response update of ``mobile``.

    The mobile stays when its current BS is a best response; otherwise it
    moves to the lowest-index best response, or a uniformly drawn one when a
    ``numpy.random.Generator`` is passed.
    """
    return _step(instance, profile, mobile, False, tolled, rng)


def mapc_star_step(instance, profile, mobile, rng=None, tolled=False):
    """Like :func:`mapc_step` but ties in cost go to the least loaded BS."""
    return _step(instance, profile, mobile, True, tolled, rng)


def _replay(trace):
    # profiles along a trace; mobiles that never move are held at -1
    movers = {}
    for sw in trace:
        movers.setdefault(sw.mobile, sw.old_bs)
    size = max(movers) + 1 if movers else 0
    cur = [-1] * size
    for i, bs in movers.items():
        cur[i] = bs
    profiles = [tuple(cur)]
    for sw in trace:
        cur[sw.mobile] = sw.new_bs
        profiles.append(tuple(cur))
    return profiles


def detect_cycle(trace, tol=0.0):
    """First recurring profile along a trace of switches.

    The profiles are rebuilt from the switches alone.  A recurrence counts as
    a best-response cycle only when at least one switch inside it strictly
    lowered the mover's cost.

    Returns
    -------
    Cycle or None
    """
    profiles = _replay(trace)
    seen = {}
    for idx, prof in enumerate(profiles):
        if prof in seen:
            start = seen[prof]
            inner = trace[start:idx]
            if any(sw.cost_after < sw.cost_before - tol for sw in inner):
                return Cycle(start, idx - 1, prof)
        seen[prof] = idx
    return None


def run(instance, initial_profile, scheduler=None, max_steps=None, rule="mapc", tolled=False):
    """Run best-response dynamics until equilibrium, cycle or step cap.

    Parameters
    ----------
    instance : NetworkInstance
    initial_profile : sequence of int
        Starting association (0-based); infeasible starts are allowed.
    scheduler : Scheduler, optional
        Defaults to round robin.
    max_steps : int, optional
        Epoch cap, default ``1000 * M``.
    rule : {'mapc', 'mapc_star'}
    tolled : bool
        Play the tolled game, where the cost is the marginal change of the
        BS's total power.

    Returns
    -------
    RunResult
        ``status`` is ``converged_ne`` only after a quiet window followed by a
        successful Nash check of the final profile.
    """
    if rule not in RULES:
        raise DomainError(f"unknown rule {rule!r}; expected one of {RULES}")
    scheduler = scheduler or Scheduler()
    m, n = instance.num_mobiles, instance.num_bs
    if scheduler.probabilities is not None and len(scheduler.probabilities) != m:
        raise DomainError("one update probability per mobile is required")
    if max_steps is None:
        max_steps = default_max_steps(m, n)
    if max_steps < 1:
        raise DomainError("max_steps must be at least 1")
    a = as_profile(instance, initial_profile).copy()
    start = tuple(int(x) for x in a)
    rng = np.random.default_rng(scheduler.seed)
    window = scheduler.quiet_window or m
    lexi = rule == "mapc_star"
    random_ties = scheduler.tie_break == "random"
    probs = np.asarray(scheduler.probabilities) if scheduler.probabilities is not None else None
    gains, beta, sigma2 = instance.gains, instance.beta, instance.noise_power
    tol = instance.tie_tol
    choose = kernels.choose_move

    trace = []
    seen = {start: 0}
    quiet = 0
    status = "iteration_cap"
    cycle = None
    steps = 0
    while steps < max_steps:
        t = steps
        steps += 1
        if scheduler.kind == "round_robin":
            movers = (t % m,)
        elif scheduler.kind == "random_single":
            movers = (int(rng.integers(m)),)
        else:
            movers = np.flatnonzero(rng.random(m) < probs)
        switched = False
        for i in movers:
            u = float(rng.random()) if random_ties else -1.0
            target, before, after = choose(gains, beta, sigma2, a, int(i), lexi, tolled, tol, u)
            if target == a[i]:
                continue
            trace.append(Switch(t, int(i), int(a[i]), int(target), float(before), float(after)))
            a[i] = target
            switched = True
            prof = tuple(int(x) for x in a)
            if prof in seen:
                first = seen[prof]
                inner = trace[first:]
                if any(sw.cost_after < sw.cost_before - tol for sw in inner):
                    cycle = Cycle(first, len(trace) - 1, prof)
                    status = "cycle_detected"
                    break
            seen[prof] = len(trace)
        if cycle is not None:
            break
        quiet = 0 if switched else quiet + 1
        if quiet >= window:
            if kernels.is_nash(gains, beta, sigma2, a, tolled, tol):
                status = "converged_ne"
                break
            quiet = 0
    return RunResult(tuple(int(x) for x in a), steps, status, trace, start, cycle)
