"""Scenario files: parsing, default filling and validation.

A scenario is a JSON object::

    {
      "kind": "discrete" | "nonatomic" | "single_class_poa",
      "experiment": "simulate" | "enumerate" | "tolls" | "solve_ne" | "solve_opt"
                    | "poa_sweep" | "reproduce_fig1" | "example",
      "example": 1..7,                 # only with experiment "example"
      "seed": 0,
      "instance": {...},               # or "random": {"dims": {...}, "gamma_choices": [...]}
      "units": {...},
      "params": {...},
      "output": {"dir": null}
    }

Profiles and BS labels inside ``params`` are 1-based.
"""

import copy
import json
import math
from dataclasses import dataclass, field

from ..errors import ScenarioParseError, ValidationError
from .instances import KINDS, build_instance, generate_random_instance

__all__ = ["Scenario", "EXPERIMENTS", "parse_scenario", "scenario_from_dict", "DEFAULT_PARAMS"]

EXPERIMENTS = {
    "discrete": ("simulate", "enumerate", "tolls"),
    "nonatomic": ("solve_ne", "solve_opt"),
    "single_class_poa": ("poa_sweep", "reproduce_fig1"),
}

DEFAULT_PARAMS = {
    "simulate": {
        "initial_profile": None,
        "rule": "mapc",
        "scheduler": {"kind": "round_robin", "probabilities": None, "tie_break": "lowest", "quiet_window": None},
        "max_steps": None,
        "tolled": False,
    },
    "enumerate": {"cap": 10**7, "tolled": False},
    "tolls": {"profile": None, "run_dynamics": False, "max_steps": None},
    "solve_ne": {"tolerance": 1e-7, "max_iters": 100_000, "starts": 8},
    "solve_opt": {"tolerance": 1e-7, "max_iters": 100_000, "starts": 8, "target": "optimum"},
    "poa_sweep": {"grid_points": 400, "max_mass": None},
    "reproduce_fig1": {"grid_points": 2000, "num_bs": 5, "gamma": 0.01},
    "example": {},
}

DEFAULT_UNITS = {
    "discrete": {"noise_power": "W", "gains": "linear", "target_sinr": "linear"},
    "nonatomic": {"noise_power": "W", "gains": "linear", "sinr_density": "linear", "masses": "mobiles"},
    "single_class_poa": {"noise_power": "W", "gains": "linear", "gamma": "linear", "mass": "mobiles"},
}

INSTANCE_FIELDS = {
    "discrete": {"gains": None, "noise_power": 1.0, "target_sinr": None, "tie_tolerance": 0.0},
    "nonatomic": {"gains": None, "sinr_density": None, "masses": None, "noise_power": 1.0},
    "single_class_poa": {"gains": None, "gamma": None, "noise_power": 1.0},
}


@dataclass
class Scenario:
    kind: str
    experiment: str
    seed: int
    payload: dict
    params: dict
    units: dict
    example: int = None
    output_dir: str = None
    source: str = None
    instance: object = field(default=None, repr=False)

    def normalized(self):
        """The scenario with every default filled in, as written to metadata."""
        out = {
            "kind": self.kind,
            "experiment": self.experiment,
            "seed": self.seed,
            "instance": self.payload,
            "params": self.params,
            "units": self.units,
        }
        if self.example is not None:
            out["example"] = self.example
        return out


def _fail(msg, field_name=None):
    raise ScenarioParseError(msg, field=field_name)


def _merge(defaults, given, where):
    out = copy.deepcopy(defaults)
    if given is None:
        return out
    if not isinstance(given, dict):
        _fail("expected an object", where)
    for key, val in given.items():
        if key not in defaults:
            _fail(f"unknown key {key!r}", f"{where}.{key}")
        if isinstance(defaults[key], dict) and val is not None:
            out[key] = _merge(defaults[key], val, f"{where}.{key}")
        else:
            out[key] = val
    return out


def _number(val, where, integer=False, allow_none=False):
    if val is None and allow_none:
        return None
    if isinstance(val, bool) or not isinstance(val, (int, float)):
        _fail("expected a number", where)
    if not math.isfinite(val):
        _fail("expected a finite number", where)
    if integer:
        if int(val) != val:
            _fail("expected an integer", where)
        return int(val)
    return float(val)


def _matrix(val, where):
    if not isinstance(val, list) or not val:
        _fail("expected a non-empty list", where)
    if all(isinstance(r, list) for r in val):
        width = len(val[0])
        if any(len(r) != width for r in val):
            _fail("rows must have equal length", where)
        return [[_number(x, f"{where}[{i}][{j}]") for j, x in enumerate(r)] for i, r in enumerate(val)]
    return [_number(x, f"{where}[{i}]") for i, x in enumerate(val)]


def _payload(kind, raw, seed):
    if "random" in raw:
        rand = raw["random"]
        if not isinstance(rand, dict) or "dims" not in rand:
            _fail("random instance needs 'dims'", "random")
        rseed = _number(rand.get("seed", seed), "random.seed", integer=True)
        return generate_random_instance(kind, rand["dims"], rseed, rand.get("gamma_choices"))
    given = raw.get("instance")
    if given is None:
        _fail("missing instance (or random)", "instance")
    merged = _merge(INSTANCE_FIELDS[kind], given, "instance")
    for key, val in merged.items():
        if val is None:
            _fail("required field missing", f"instance.{key}")
        if isinstance(val, list):
            merged[key] = _matrix(val, f"instance.{key}")
        else:
            merged[key] = _number(val, f"instance.{key}")
    return merged


def _check_units(kind, units):
    for key, val in units.items():
        if key in ("gains", "target_sinr", "sinr_density", "gamma") and val != "linear":
            raise ValidationError("linear-units", f"{key} must be given in linear units, got {val!r}")


def _profile_param(params, key, instance, where):
    val = params.get(key)
    if val is None:
        return
    if not isinstance(val, list):
        _fail("expected a list of 1-based BS labels", where)
    labels = [_number(x, f"{where}[{i}]", integer=True) for i, x in enumerate(val)]
    if len(labels) != instance.num_mobiles:
        raise ValidationError("profile-length", f"{where} needs {instance.num_mobiles} entries")
    if any(not 1 <= x <= instance.num_bs for x in labels):
        raise ValidationError("profile-range", f"{where} entries must lie in 1..{instance.num_bs}")
    params[key] = labels


def _check_params(exp, params, instance):
    if exp == "simulate":
        _profile_param(params, "initial_profile", instance, "params.initial_profile")
        if params["rule"] not in ("mapc", "mapc_star"):
            raise ValidationError("dynamics-rule", "rule must be 'mapc' or 'mapc_star'")
        sched = params["scheduler"]
        if sched["kind"] not in ("round_robin", "random_single", "independent_prob"):
            raise ValidationError("scheduler-kind", f"unknown scheduler {sched['kind']!r}")
        if sched["probabilities"] is not None:
            probs = [_number(p, "params.scheduler.probabilities") for p in sched["probabilities"]]
            if len(probs) != instance.num_mobiles or any(not 0 < p < 1 for p in probs):
                raise ValidationError("update-probabilities", "one probability in (0, 1) per mobile")
        elif sched["kind"] == "independent_prob":
            raise ValidationError("update-probabilities", "independent_prob needs probabilities")
        _number(params["max_steps"], "params.max_steps", integer=True, allow_none=True)
        if params["max_steps"] is not None and params["max_steps"] < 1:
            raise ValidationError("max-steps", "max_steps must be at least 1")
    elif exp == "tolls":
        _profile_param(params, "profile", instance, "params.profile")
    elif exp in ("solve_ne", "solve_opt"):
        if not _number(params["tolerance"], "params.tolerance") > 0:
            raise ValidationError("solver-tolerance", "tolerance must be positive")
        if _number(params["max_iters"], "params.max_iters", integer=True) < 1:
            raise ValidationError("solver-iterations", "max_iters must be positive")
        if _number(params["starts"], "params.starts", integer=True) < 1:
            raise ValidationError("solver-starts", "starts must be positive")
        if exp == "solve_opt" and params["target"] not in ("optimum", "tolled_ne"):
            raise ValidationError("solver-target", "target must be 'optimum' or 'tolled_ne'")
    elif exp == "poa_sweep":
        if _number(params["grid_points"], "params.grid_points", integer=True) < 2:
            raise ValidationError("grid-points", "grid_points must be at least 2")
        top = _number(params["max_mass"], "params.max_mass", allow_none=True)
        if top is not None and not 0 < top < instance.max_mass:
            raise ValidationError("feasible-mass", f"max_mass must lie in (0, {instance.max_mass})")
    elif exp == "reproduce_fig1":
        if _number(params["grid_points"], "params.grid_points", integer=True) < 2:
            raise ValidationError("grid-points", "grid_points must be at least 2")
        _number(params["num_bs"], "params.num_bs", integer=True)
        _number(params["gamma"], "params.gamma")


def scenario_from_dict(raw, source=None, seed=None):
    """Validate a scenario mapping; ``seed`` overrides the file's seed."""
    if not isinstance(raw, dict):
        _fail("top level must be a JSON object")
    allowed = {"kind", "experiment", "example", "seed", "instance", "random", "units", "params", "output", "description"}
    for key in raw:
        if key not in allowed:
            _fail(f"unknown key {key!r}", key)
    exp = raw.get("experiment")
    if not isinstance(exp, str):
        _fail("missing experiment", "experiment")
    file_seed = _number(raw.get("seed", 0), "seed", integer=True)
    seed = file_seed if seed is None else int(seed)
    if seed < 0 or seed >= 2**64:
        raise ValidationError("seed-range", "seed must be an unsigned 64-bit integer")
    out = raw.get("output") or {}
    if not isinstance(out, dict):
        _fail("expected an object", "output")
    out_dir = out.get("dir")
    if exp == "example":
        k = _number(raw.get("example"), "example", integer=True)
        if not 1 <= k <= 7:
            raise ValidationError("example-number", "example must be between 1 and 7")
        return Scenario("example", exp, seed, {}, {}, {}, k, out_dir, source)
    kind = raw.get("kind")
    if kind not in KINDS:
        _fail(f"kind must be one of {KINDS}", "kind")
    if exp not in EXPERIMENTS[kind]:
        _fail(f"experiment {exp!r} is not available for kind {kind!r}", "experiment")
    units = _merge(DEFAULT_UNITS[kind], raw.get("units"), "units")
    _check_units(kind, units)
    params = _merge(DEFAULT_PARAMS[exp], raw.get("params"), "params")
    if exp == "reproduce_fig1" and "instance" not in raw and "random" not in raw:
        num_bs = _number(params["num_bs"], "params.num_bs", integer=True)
        gamma = _number(params["gamma"], "params.gamma")
        payload = generate_random_instance(kind, {"num_bs": num_bs}, seed, (gamma,))
    else:
        payload = _payload(kind, raw, seed)
    instance = build_instance(kind, payload)
    _check_params(exp, params, instance)
    return Scenario(kind, exp, seed, payload, params, units, None, out_dir, source, instance)


def parse_scenario(path, seed=None):
    """Read and validate a scenario file.

    Raises
    ------
    ScenarioParseError
        Malformed JSON (with line number) or a bad field (with its path).
    ValidationError
        A model invariant fails; the message names the invariant.
    """
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ScenarioParseError(f"cannot read {path}: {exc.strerror}") from exc
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ScenarioParseError(exc.msg, line=exc.lineno) from exc
    return scenario_from_dict(raw, source=str(path), seed=seed)
