"""Named example instances with concrete parameters.

Where only inequalities constrain an example, the docstring of each builder
states the inequality its numbers satisfy.  Profiles are 0-based.
"""

import numpy as np

from ..discrete_model import NetworkInstance
from ..nonatomic import NonatomicInstance
from ..poa import SingleClassInstance
from .instances import generate_random_instance

__all__ = [
    "example1",
    "example2",
    "example3",
    "example4",
    "example5",
    "example6",
    "example7",
    "SWEEP_SEED",
    "payload_of",
]

SWEEP_SEED = 7


def example1():
    """Two mobiles, two BSs, common target 0.5, each mobile prefers the other's BS weakly.

    ``h12 < h11 < h12 / (1 - gamma)`` reads ``0.6 < 1 < 1.2``; mobile 2 is the
    mirror image.  Profile (1, 0) is a Nash trap Pareto-dominated by (0, 1).
    """
    return NetworkInstance([[1.0, 0.6], [0.6, 1.0]], 1.0, [0.5, 0.5])


def example2():
    """Four collocated mobiles with load factor 0.2 and BS gains (1.5, 1).

    ``h1 (1 - 3 beta) = h2 (1 - 2 beta)`` (0.6 = 0.6) and
    ``h1 (1 - 2 beta) > h2 (1 - beta)`` (0.9 > 0.8).  The equality is an exact
    tie in real arithmetic only, so the fixture compares costs with an
    absolute tolerance of 1e-12.
    """
    gains = np.tile([1.5, 1.0], (4, 1))
    return NetworkInstance.from_load_factors(gains, 1.0, [0.2] * 4, tie_tol=1e-12)


def example3():
    """Two collocated BSs with unit gain; load factors 2b, 2b, 3b, 3b with b = 0.1.

    Both (0, 0, 1, 1) and (0, 1, 0, 1) are Pareto-efficient equilibria; the
    second has the lower system cost.
    """
    return NetworkInstance.from_load_factors(np.ones((4, 2)), 1.0, [0.2, 0.2, 0.3, 0.3])


def example4():
    """Five mobiles, two collocated BSs, ``h_i = i``, common load factor 0.3 in (1/4, 1/3)."""
    gains = np.arange(1, 6, dtype=float)[:, None] * np.ones((1, 2))
    return NetworkInstance.from_load_factors(gains, 1.0, [0.3] * 5)


def example5():
    """One class of mass 60, density 0.01, BS gains (1, 0.5)."""
    return NonatomicInstance([[1.0, 0.5]], [0.01], [60.0], 1.0)


def example6(m1=20.0):
    """Two classes of mass ``m1`` and ``3 m1`` on two collocated BSs.

    Class gains are 0.1 and 0.9, so ``h1 < h2 / 3``; the density is 0.01 and
    ``3 m1 gamma < 1``.  Segregating the classes beats the equilibrium when
    ``m1 < (h2 / 3 - h1) / (gamma (h2 - h1)) = 25``.
    """
    return NonatomicInstance([[0.1, 0.1], [0.9, 0.9]], [0.01, 0.01], [m1, 3.0 * m1], 1.0)


def example7(seed=SWEEP_SEED):
    """Five BSs, density 0.01, gains drawn uniformly from (0, 1] under ``seed``."""
    payload = generate_random_instance("single_class_poa", {"num_bs": 5}, seed)
    return SingleClassInstance(payload["gains"], payload["gamma"], payload["noise_power"])


def payload_of(instance):
    """JSON payload of a fixture instance."""
    if isinstance(instance, NetworkInstance):
        return {
            "gains": instance.gains.tolist(),
            "noise_power": instance.noise_power,
            "target_sinr": instance.target_sinr.tolist(),
            "tie_tolerance": instance.tie_tol,
        }
    if isinstance(instance, NonatomicInstance):
        return {
            "gains": instance.gains.tolist(),
            "sinr_density": instance.sinr_density.tolist(),
            "masses": instance.masses.tolist(),
            "noise_power": instance.noise_power,
        }
    return {"gains": instance.gains.tolist(), "gamma": instance.gamma, "noise_power": instance.sigma2}
