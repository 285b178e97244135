import numpy as np
import pytest

from cellgame import analysis
from cellgame.discrete_model import NetworkInstance, hypothetical_cost, mobile_cost, system_cost
from cellgame.dynamics import Scheduler, run
from cellgame.errors import PreconditionError, SizeError
from cellgame.harness.fixtures import example1, example2, example3, example4

from conftest import prof


def test_enumerate_nash_examples():
    assert analysis.enumerate_nash(example1()) == [prof(1, 2), prof(2, 1)]
    single = NetworkInstance([[0.2, 0.9, 0.9]], 1.0, [1.0])
    assert analysis.enumerate_nash(single) == [(1,), (2,)]
    ne4 = analysis.enumerate_nash(example4())
    assert len(ne4) == 20
    assert all(sorted(np.bincount(a, minlength=2)) == [2, 3] for a in ne4)


def test_enumeration_cap():
    inst = NetworkInstance(np.ones((5, 3)), 1.0, [0.1] * 5)
    with pytest.raises(SizeError):
        analysis.enumerate_nash(inst, cap=100)
    with pytest.raises(SizeError):
        analysis.is_pareto_efficient(inst, (0,) * 5, cap=100)


def test_lexicographic_order():
    inst = NetworkInstance(np.ones((3, 2)), 1.0, [0.1] * 3)
    profs = [analysis.profile_from_index(inst, p) for p in range(8)]
    assert profs == sorted(profs)


def test_pareto_examples():
    inst = example1()
    assert not analysis.pareto_dominates(inst, prof(1, 2), prof(1, 2))
    assert analysis.pareto_dominates(inst, prof(1, 2), prof(2, 1))
    assert analysis.pareto_dominates(example2(), prof(2, 2, 1, 1), prof(1, 1, 1, 2))
    assert analysis.is_pareto_efficient(inst, prof(1, 2))
    assert not analysis.is_pareto_efficient(inst, prof(2, 1))


def test_system_optimal_examples():
    assert analysis.system_optimal_profiles(example1()) == [prof(1, 2)]
    assert analysis.system_optimal_profiles(example4()) == [prof(1, 1, 2, 2, 2), prof(2, 2, 1, 1, 1)]
    sym = NetworkInstance.from_load_factors(np.ones((4, 2)), 1.0, [0.2] * 4, tie_tol=1e-12)
    opt = analysis.system_optimal_profiles(sym)
    assert len(opt) == 6 and all(sum(a) == 2 for a in opt)


def test_example3_both_equilibria_efficient_but_costs_differ():
    inst = example3()
    ne = analysis.enumerate_nash(inst)
    assert prof(1, 1, 2, 2) in ne and prof(1, 2, 1, 2) in ne
    assert system_cost(inst, prof(1, 1, 2, 2)) == pytest.approx(2 / 3 + 1.5)
    assert system_cost(inst, prof(1, 2, 1, 2)) == pytest.approx(2.0)
    assert analysis.is_pareto_efficient(inst, prof(1, 1, 2, 2))


def test_best_match_examples():
    assert analysis.best_match_bs(example1(), 0) == [0]
    assert analysis.best_match_bs(NetworkInstance(np.ones((1, 3)), 1.0, [1.0]), 0) == [0, 1, 2]
    assert analysis.best_match_bs(NetworkInstance([[0.2, 0.9, 0.9]], 1.0, [1.0]), 0) == [1, 2]


def test_special_cases():
    assert analysis.special_cases(example1()) == {"single_class"}
    assert analysis.special_cases(example2()) == {"single_class", "collocated_mobiles"}
    assert "collocated_bs" in analysis.special_cases(example4())
    with pytest.raises(PreconditionError):
        analysis.potential_v2(example1(), (0, 1))


def test_potential_examples():
    inst = example4()
    a = prof(1, 2, 1, 2, 2)
    assert analysis.potential_v3(inst, a) - analysis.potential_v3(inst, a) == 0.0
    ex2 = example2()
    b = list(prof(1, 1, 1, 2))
    for i in range(4):
        for j in range(2):
            c = b.copy()
            c[i] = j
            dv = analysis.potential_v2(ex2, c) - analysis.potential_v2(ex2, b)
            beta = ex2.beta[i]
            rhs = -2 * (beta**2 / hypothetical_cost(ex2, b, i, j) - beta**2 / mobile_cost(ex2, b, i))
            assert dv == pytest.approx(rhs, abs=1e-12)
    eq = NetworkInstance([[1.0, 0.6], [0.6, 1.0]], 1.0, [0.5, 0.5])
    rep = analysis.check_ordinal_potential(eq, analysis.potential_v1, domain="all")
    assert rep["violation_count"] == 0 and rep["deviations"] == 8


def test_ordinal_checker_finds_wrong_potential():
    found = 0
    for seed in range(20):
        rng = np.random.default_rng(seed)
        inst = NetworkInstance.from_load_factors(1.0 - rng.random((4, 3)), 1.0, rng.uniform(0.05, 0.3, 4))
        rep = analysis.check_ordinal_potential(inst, system_cost, samples=200, seed=seed)
        found += rep["violation_count"]
    assert found > 0


def test_collocated_bs_equilibria_are_pareto_efficient():
    for seed in range(15):
        rng = np.random.default_rng(seed)
        m, n = int(rng.integers(2, 6)), int(rng.integers(2, 4))
        h = np.repeat((1.0 - rng.random(m))[:, None], n, axis=1)
        inst = NetworkInstance.from_load_factors(h, 1.0, rng.uniform(0.05, 0.5, m))
        for a in analysis.enumerate_nash(inst):
            assert analysis.is_pareto_efficient(inst, a)


def test_symmetric_equilibria_are_balanced_and_optimal():
    for m in range(2, 7):
        for n in (2, 3):
            inst = NetworkInstance.from_load_factors(np.ones((m, n)), 1.0, [0.9 / (m / n + 1)] * m, tie_tol=1e-12)
            opt = set(analysis.system_optimal_profiles(inst))
            q, r = divmod(m, n)
            for a in analysis.enumerate_nash(inst):
                counts = sorted(np.bincount(a, minlength=n), reverse=True)
                assert counts == [q + 1] * r + [q] * (n - r)
                assert a in opt


def test_several_pareto_efficient_profiles_when_crowded():
    for seed in range(10):
        rng = np.random.default_rng(seed)
        m, n = int(rng.integers(3, 5)), 2
        inst = NetworkInstance.from_load_factors(1.0 - rng.random((m, n)), 1.0, rng.uniform(0.05, 0.3, m))
        count = sum(
            analysis.is_pareto_efficient(inst, analysis.profile_from_index(inst, p)) for p in range(n**m)
        )
        assert count >= 2


def test_converged_runs_are_enumerated_equilibria():
    for seed in range(30):
        rng = np.random.default_rng(seed)
        m, n = int(rng.integers(2, 6)), int(rng.integers(2, 4))
        inst = NetworkInstance.from_load_factors(1.0 - rng.random((m, n)), 1.0, rng.uniform(0.05, 0.5, m))
        ne = set(analysis.enumerate_nash(inst))
        r = run(inst, tuple(int(x) for x in rng.integers(n, size=m)), Scheduler(seed=seed))
        if r.status == "converged_ne":
            assert r.final_profile in ne


def test_report_merging():
    inst = example1()
    reps = [analysis.check_ordinal_potential(inst, analysis.potential_v1, samples=10, seed=s) for s in range(3)]
    merged = analysis.merge_reports(reps)
    assert merged["instances"] == 3
    assert merged["deviations"] + merged["skipped"] == 30
