"""Instance payloads: conversion to model objects and seeded generation.

Payloads are plain JSON-compatible dicts with 1-based labels wherever a
mobile or BS index appears.
"""

import numpy as np

from ..discrete_model import NetworkInstance
from ..errors import ValidationError
from ..nonatomic import NonatomicInstance
from ..poa import SingleClassInstance

__all__ = ["KINDS", "build_instance", "generate_random_instance", "DEFAULT_GAMMAS"]

KINDS = ("discrete", "nonatomic", "single_class_poa")

DEFAULT_GAMMAS = {
    "discrete": (0.1, 0.25, 0.5, 1.0),
    "nonatomic": (0.01, 0.02, 0.05),
    "single_class_poa": (0.01,),
}

MAX_DIM = 64


def build_instance(kind, payload):
    """Model object for a validated payload."""
    if kind == "discrete":
        return NetworkInstance(
            payload["gains"], payload["noise_power"], payload["target_sinr"], payload.get("tie_tolerance", 0.0)
        )
    if kind == "nonatomic":
        return NonatomicInstance(
            payload["gains"], payload["sinr_density"], payload["masses"], payload["noise_power"]
        )
    if kind == "single_class_poa":
        return SingleClassInstance(payload["gains"], payload["gamma"], payload["noise_power"])
    raise ValidationError("scenario-kind", f"unknown kind {kind!r}")


def _uniform_gains(rng, shape):
    # uniform on (0, 1]: 1 - U[0, 1)
    return 1.0 - rng.random(shape)


def _first_fit_feasible(beta, num_bs):
    # first-fit decreasing packing as a certificate that some association is feasible
    bins = np.zeros(num_bs)
    for b in np.sort(beta)[::-1]:
        slot = np.flatnonzero(bins + b < 1.0)
        if slot.size == 0:
            return False
        bins[slot[0]] += b
    return True


def _dim(dims, key):
    v = dims.get(key)
    if v is None or int(v) != v:
        raise ValidationError("dims", f"{key} must be an integer")
    v = int(v)
    if v < 1:
        raise ValidationError(f"nonempty-{key}", f"{key} must be at least 1")
    if v > MAX_DIM:
        raise ValidationError("dims-cap", f"{key} must not exceed {MAX_DIM}")
    return v


def generate_random_instance(kind, dims, seed, gamma_choices=None, attempts=1000):
    """Seeded random instance payload with gains i.i.d. uniform on (0, 1].

    Parameters
    ----------
    kind : {'discrete', 'nonatomic', 'single_class_poa'}
    dims : dict
        ``num_bs`` plus ``num_mobiles`` (discrete) or ``num_classes``
        (nonatomic).
    seed : int
    gamma_choices : sequence of float, optional
        SINR targets (or densities) to draw from; see ``DEFAULT_GAMMAS``.

    Returns
    -------
    dict
        A payload accepted by :func:`build_instance`.  Discrete payloads are
        redrawn until some association is feasible; nonatomic masses are
        scaled so the total SINR mass is a random fraction of ``N``.
    """
    if kind not in KINDS:
        raise ValidationError("scenario-kind", f"unknown kind {kind!r}")
    choices = tuple(gamma_choices or DEFAULT_GAMMAS[kind])
    if not choices or any(not (g > 0) for g in choices):
        raise ValidationError("positive-targets", "gamma choices must be positive")
    rng = np.random.default_rng(seed)
    n = _dim(dims, "num_bs")
    if kind == "discrete":
        m = _dim(dims, "num_mobiles")
        for _ in range(attempts):
            gains = _uniform_gains(rng, (m, n))
            target = rng.choice(choices, size=m)
            if _first_fit_feasible(target / (1.0 + target), n):
                return {"gains": gains.tolist(), "noise_power": 1.0, "target_sinr": target.tolist()}
        raise ValidationError("feasible-association", "could not draw an instance with a feasible association")
    if kind == "nonatomic":
        nl = _dim(dims, "num_classes")
        gains = _uniform_gains(rng, (nl, n))
        gamma = rng.choice(choices, size=nl)
        masses = rng.uniform(0.1, 1.0, size=nl)
        masses *= rng.uniform(0.2, 0.9) * n / float(gamma @ masses)
        return {
            "gains": gains.tolist(),
            "sinr_density": gamma.tolist(),
            "masses": masses.tolist(),
            "noise_power": 1.0,
        }
    gains = _uniform_gains(rng, n)
    return {"gains": gains.tolist(), "gamma": float(choices[0]), "noise_power": 1.0}
