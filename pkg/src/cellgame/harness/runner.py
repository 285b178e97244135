"""Experiment execution and artifact emission.

Every run writes ``metadata.json`` (version, seed, experiment and the
scenario with defaults filled in) next to its CSV/JSON results.  Wall time
goes to ``run.log`` so that the CSV/JSON artifacts stay byte-identical
across reruns with the same seed.
"""

import os
import time

import numpy as np

from .. import __version__
from .. import analysis, dynamics, nonatomic, poa, pricing_discrete
from .._backend import BACKEND
from ..discrete_model import is_feasible, mobile_costs, system_cost
from ..errors import ConvergenceError, ScenarioParseError, ValidationError
from . import fixtures
from .artifacts import ensure_dir, one_based, write_csv, write_json

__all__ = ["run_scenario", "run_example", "default_output_dir", "EXIT_OK", "EXIT_CONVERGENCE", "EXIT_VALIDATION"]

EXIT_OK = 0
EXIT_CONVERGENCE = 2
EXIT_VALIDATION = 3

OUTPUT_ENV = "CELLGAME_OUTPUT_DIR"


def default_output_dir():
    """``$CELLGAME_OUTPUT_DIR`` if set, else ``./cellgame-output``."""
    return os.environ.get(OUTPUT_ENV) or os.path.join(os.getcwd(), "cellgame-output")


def _metadata(out, scenario_dict, seed, experiment):
    write_json(
        os.path.join(out, "metadata.json"),
        {"tool": "cellgame", "version": __version__, "seed": seed, "experiment": experiment, "scenario": scenario_dict},
    )


# ---------------------------------------------------------------------------
# discrete experiments
# ---------------------------------------------------------------------------


def _trace_rows(trace):
    return [(s.step, s.mobile + 1, s.old_bs + 1, s.new_bs + 1, s.cost_before, s.cost_after) for s in trace]


TRACE_HEADER = ("step", "mobile", "from_bs", "to_bs", "cost_before", "cost_after")


def _run_summary(instance, result, tolled=False):
    final = result.final_profile
    out = {
        "status": result.status,
        "steps": result.steps,
        "switches": len(result.trace),
        "initial_profile": one_based(result.initial_profile),
        "final_profile": one_based(final),
        "is_nash": dynamics.is_nash(instance, final, tolled=tolled),
        "feasible": is_feasible(instance, final),
        "system_cost": system_cost(instance, final),
        "powers": mobile_costs(instance, final),
    }
    if result.cycle is not None:
        out["cycle"] = {"start": result.cycle.start, "end": result.cycle.end, "length": result.cycle.length}
    return out


def _simulate(instance, params, seed, out, prefix=""):
    sched = params["scheduler"]
    scheduler = dynamics.Scheduler(
        kind=sched["kind"],
        probabilities=sched["probabilities"],
        seed=seed,
        tie_break=sched["tie_break"],
        quiet_window=sched["quiet_window"],
    )
    init = params["initial_profile"]
    start = [x - 1 for x in init] if init is not None else [0] * instance.num_mobiles
    result = dynamics.run(instance, start, scheduler, params["max_steps"], params["rule"], params["tolled"])
    write_csv(os.path.join(out, f"{prefix}trace.csv"), TRACE_HEADER, _trace_rows(result.trace))
    summary = _run_summary(instance, result, params["tolled"])
    write_json(os.path.join(out, f"{prefix}result.json"), summary)
    return summary, (EXIT_OK if result.status == "converged_ne" else EXIT_CONVERGENCE)


def _enumerate(instance, params, out, prefix=""):
    cap = params["cap"]
    sys_cost, ne = analysis.enumerate_profiles(instance, cap)
    best = sys_cost.min()
    optimal = sys_cost <= best + instance.tie_tol
    tolled_ne = analysis.enumerate_profiles(instance, cap, tolled=True)[1] if params["tolled"] else None
    rows = []
    for p in np.flatnonzero(ne | (tolled_ne if tolled_ne is not None else False)):
        prof = analysis.profile_from_index(instance, int(p))
        row = [one_based(prof), sys_cost[p], bool(ne[p]), analysis.is_pareto_efficient(instance, prof, cap), bool(optimal[p])]
        if tolled_ne is not None:
            row.append(bool(tolled_ne[p]))
        rows.append(row)
    header = ["profile", "system_cost", "nash", "pareto_efficient", "system_optimal"]
    if tolled_ne is not None:
        header.append("tolled_nash")
    write_csv(os.path.join(out, f"{prefix}equilibria.csv"), header, rows)
    summary = {
        "profiles": int(sys_cost.size),
        "nash_count": int(ne.sum()),
        "nash": [one_based(analysis.profile_from_index(instance, int(p))) for p in np.flatnonzero(ne)],
        "optimal_cost": float(best),
        "system_optimal": [one_based(analysis.profile_from_index(instance, int(p))) for p in np.flatnonzero(optimal)],
    }
    if tolled_ne is not None:
        summary["tolled_nash"] = [
            one_based(analysis.profile_from_index(instance, int(p))) for p in np.flatnonzero(tolled_ne)
        ]
    write_json(os.path.join(out, f"{prefix}enumeration.json"), summary)
    return summary


def _tolls(instance, params, seed, out):
    prof = params["profile"]
    a = [x - 1 for x in prof] if prof is not None else [0] * instance.num_mobiles
    rows = [(i + 1, j + 1, b, t, tot) for i, j, b, t, tot in pricing_discrete.toll_table(instance, a)]
    write_csv(os.path.join(out, "tolls.csv"), ("mobile", "bs", "base_cost", "toll", "total"), rows)
    bq = [(j + 1, pricing_discrete.broadcast_quantity(instance, a, j)) for j in range(instance.num_bs)]
    write_csv(os.path.join(out, "broadcast.csv"), ("bs", "broadcast_quantity"), bq)
    summary = {
        "profile": one_based(a),
        "toll_potential": pricing_discrete.toll_potential(instance, a),
        "system_cost": system_cost(instance, a),
        "tolled_nash": dynamics.is_nash(instance, a, tolled=True),
    }
    code = EXIT_OK
    if params["run_dynamics"]:
        res = pricing_discrete.run_tolled(instance, a, dynamics.Scheduler(seed=seed), params["max_steps"])
        write_csv(os.path.join(out, "tolled_trace.csv"), TRACE_HEADER, _trace_rows(res.trace))
        summary["tolled_run"] = _run_summary(instance, res, tolled=True)
        code = EXIT_OK if res.status == "converged_ne" else EXIT_CONVERGENCE
    write_json(os.path.join(out, "tolls.json"), summary)
    return summary, code


# ---------------------------------------------------------------------------
# nonatomic experiments
# ---------------------------------------------------------------------------


def _write_congestion(instance, profile, out, name):
    m = profile.masses
    rows = [(l + 1, j + 1, m[l, j]) for l in range(m.shape[0]) for j in range(m.shape[1])]
    write_csv(os.path.join(out, f"{name}.csv"), ("class", "bs", "mass"), rows)
    y = instance.sinr_density @ m
    costs = nonatomic.cost_densities(instance, m)
    load_rows = [(j + 1, y[j]) + tuple(costs[:, j]) for j in range(instance.num_bs)]
    header = ("bs", "aggregate_load") + tuple(f"cost_class_{l + 1}" for l in range(instance.num_classes))
    write_csv(os.path.join(out, f"{name}_loads.csv"), header, load_rows)


def _congestion_summary(instance, profile):
    m = profile.masses
    return {
        "masses": m,
        "aggregate_loads": instance.sinr_density @ m,
        "system_cost": nonatomic.system_cost(instance, m),
        "potential": nonatomic.potential(instance, m),
        "ne_residual": nonatomic.ne_residual(instance, m),
        "tolled_residual": nonatomic.tolled_residual(instance, m),
        "diagnostics": profile.diagnostics,
    }


def _solve(instance, exp, params, seed, out):
    kw = {"tolerance": params["tolerance"], "max_iters": params["max_iters"]}
    if exp == "solve_ne":
        prof = nonatomic.solve_ne(instance, starts=params["starts"], seed=seed, **kw)
        name = "ne"
    elif params["target"] == "tolled_ne":
        prof = nonatomic.solve_tolled_ne(instance, **kw)
        name = "tolled_ne"
    else:
        prof = nonatomic.solve_system_optimal(instance, starts=params["starts"], seed=seed, **kw)
        name = "optimum"
    _write_congestion(instance, prof, out, name)
    summary = _congestion_summary(instance, prof)
    write_json(os.path.join(out, f"{name}.json"), summary)
    return summary


# ---------------------------------------------------------------------------
# price of anarchy
# ---------------------------------------------------------------------------


def _sweep(instance, masses, out, name):
    reports = poa.sweep(instance, masses)
    write_csv(
        os.path.join(out, f"{name}.csv"),
        ("mass", "ne_cost", "opt_cost", "poa"),
        [(r.mass, r.ne_cost, r.opt_cost, r.poa) for r in reports],
    )
    summary = poa.summarize_sweep(reports)
    summary["gains"] = instance.gains
    summary["gamma"] = instance.gamma
    summary["anarchy_bound"] = poa.anarchy_bound(instance.gains.min(), instance.gains.max())
    summary["grid_points"] = len(reports)
    write_json(os.path.join(out, f"{name}_summary.json"), summary)
    return summary


def _poa_sweep(instance, params, out):
    grid = poa.mass_grid(instance, params["grid_points"], params["max_mass"])
    return _sweep(instance, grid, out, "poa")


def _seeded_sweep(instance, params, out):
    grid = poa.mass_grid(instance, params["grid_points"])
    return _sweep(instance, grid, out, "seeded_sweep")


# ---------------------------------------------------------------------------
# named examples
# ---------------------------------------------------------------------------


def _simulate_params(initial, rule="mapc"):
    return {
        "initial_profile": initial,
        "rule": rule,
        "scheduler": {"kind": "round_robin", "probabilities": None, "tie_break": "lowest", "quiet_window": None},
        "max_steps": None,
        "tolled": False,
    }


def _example_discrete(k, inst, seed, out):
    summary = {"instance": fixtures.payload_of(inst)}
    runs = {1: [(2, 1), (2, 2)], 2: [(1, 1, 1, 2)], 3: [(1, 1, 2, 2), (2, 2, 2, 2)], 4: [(1, 1, 1, 1, 1)]}[k]
    code = EXIT_OK
    for init in runs:
        tag = "_".join(str(x) for x in init)
        rules = ("mapc", "mapc_star") if k == 2 else ("mapc",)
        for rule in rules:
            res, c = _simulate(inst, _simulate_params(list(init), rule), seed, out, prefix=f"{rule}_from_{tag}_")
            summary[f"{rule}_from_{tag}"] = res
            code = max(code, c)
    summary["enumeration"] = _enumerate(inst, {"cap": 10**7, "tolled": True}, out)
    if k == 1:
        summary["dominates"] = analysis.pareto_dominates(inst, (0, 1), (1, 0))
    if k == 2:
        summary["dominates"] = analysis.pareto_dominates(inst, (1, 1, 0, 0), (0, 0, 0, 1))
    if k == 4:
        trap = (0, 1, 0, 1, 1)
        summary["tolled_trap"] = {
            "profile": one_based(trap),
            "tolled_nash": dynamics.is_nash(inst, trap, tolled=True),
            "system_cost": system_cost(inst, trap),
            "optimal_cost": summary["enumeration"]["optimal_cost"],
        }
        _tolls(inst, {"profile": one_based(trap), "run_dynamics": False, "max_steps": None}, seed, out)
    return summary, code


def _example5(seed, out):
    inst = fixtures.example5()
    h1, h2 = inst.gains[0]
    gamma, mass = inst.sinr_density[0], inst.masses[0]
    ne = nonatomic.solve_ne(inst, seed=seed)
    opt = nonatomic.solve_system_optimal(inst, seed=seed)
    _write_congestion(inst, ne, out, "ne")
    _write_congestion(inst, opt, out, "optimum")
    return {
        "instance": fixtures.payload_of(inst),
        "ne_fraction_closed_form": nonatomic.two_bs_ne_fraction(h1, h2, gamma, mass),
        "opt_fraction_closed_form": nonatomic.two_bs_opt_fraction(h1, h2, gamma, mass),
        "ne_fraction_solver": ne.masses[0, 0] / mass,
        "opt_fraction_solver": opt.masses[0, 0] / mass,
        "ne_cost": nonatomic.system_cost(inst, ne),
        "opt_cost": nonatomic.system_cost(inst, opt),
    }


def _example6(seed, out):
    inst = fixtures.example6()
    uniform = nonatomic.uniform_profile(inst)
    segregated = np.diag(inst.masses)
    ne = nonatomic.solve_ne(inst, seed=seed)
    tolled = nonatomic.solve_tolled_ne(inst)
    opt = nonatomic.solve_system_optimal(inst, seed=seed)
    for name, prof in (("ne", ne), ("tolled_ne", tolled), ("optimum", opt)):
        _write_congestion(inst, prof, out, name)
    return {
        "instance": fixtures.payload_of(inst),
        "ne_cost": nonatomic.system_cost(inst, ne),
        "uniform_split_cost": nonatomic.system_cost(inst, uniform),
        "segregated_cost": nonatomic.system_cost(inst, segregated),
        "tolled_ne_cost": nonatomic.system_cost(inst, tolled),
        "tolled_ne_is_uniform": bool(np.allclose(tolled.masses, uniform, rtol=0, atol=1e-12)),
        "optimum_cost": nonatomic.system_cost(inst, opt),
        "optimum_certified": opt.diagnostics["certified"],
        "segregation_threshold": float(
            (inst.gains[1, 0] / 3 - inst.gains[0, 0]) / (inst.sinr_density[0] * (inst.gains[1, 0] - inst.gains[0, 0]))
        ),
    }


def run_example(k, seed, out):
    """Run named example ``k`` (1..7) and write its artifacts into ``out``."""
    if k in (1, 2, 3, 4):
        inst = getattr(fixtures, f"example{k}")()
        summary, code = _example_discrete(k, inst, seed, out)
    elif k == 5:
        summary, code = _example5(seed, out), EXIT_OK
    elif k == 6:
        summary, code = _example6(seed, out), EXIT_OK
    elif k == 7:
        inst = fixtures.example7()
        summary = _seeded_sweep(inst, {"grid_points": 2000}, out)
        code = EXIT_OK
    else:
        raise ValidationError("example-number", "example must be between 1 and 7")
    write_json(os.path.join(out, "summary.json"), summary)
    return summary, code


# ---------------------------------------------------------------------------
# dispatch
# ---------------------------------------------------------------------------


def _dispatch(scenario, out):
    exp, inst, params, seed = scenario.experiment, scenario.instance, scenario.params, scenario.seed
    if exp == "example":
        return run_example(scenario.example, seed, out)[1]
    if exp == "simulate":
        return _simulate(inst, params, seed, out)[1]
    if exp == "enumerate":
        _enumerate(inst, params, out)
        return EXIT_OK
    if exp == "tolls":
        return _tolls(inst, params, seed, out)[1]
    if exp in ("solve_ne", "solve_opt"):
        _solve(inst, exp, params, seed, out)
        return EXIT_OK
    if exp == "poa_sweep":
        _poa_sweep(inst, params, out)
        return EXIT_OK
    if exp == "reproduce_fig1":
        _seeded_sweep(inst, params, out)
        return EXIT_OK
    raise ValidationError("experiment", f"unknown experiment {exp!r}")


def run_scenario(scenario, out_dir=None, log=None):
    """Execute a parsed scenario and write its artifacts.

    Returns
    -------
    int
        0 on success, 2 when a solver or dynamics run fails to converge,
        3 on a validation error.
    """
    out = ensure_dir(out_dir or scenario.output_dir or default_output_dir())
    _metadata(out, scenario.normalized(), scenario.seed, scenario.experiment)
    t0 = time.perf_counter()
    try:
        code = _dispatch(scenario, out)
        err = None
    except ConvergenceError as exc:
        code, err = EXIT_CONVERGENCE, exc
        write_json(os.path.join(out, "error.json"), {"error": "convergence", "message": str(exc), **exc.diagnostics})
    except (ValidationError, ScenarioParseError) as exc:
        code, err = EXIT_VALIDATION, exc
        write_json(os.path.join(out, "error.json"), {"error": "validation", "message": str(exc)})
    elapsed = time.perf_counter() - t0
    with open(os.path.join(out, "run.log"), "w", encoding="utf-8") as fh:
        fh.write(f"backend={BACKEND}\nwall_time_s={elapsed:.6f}\nexit_code={code}\n")
        if err is not None:
            fh.write(f"error={err}\n")
    if log is not None and err is not None:
        log(str(err))
    return code
