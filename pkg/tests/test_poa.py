import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from cellgame import nonatomic as na
from cellgame import poa
from cellgame.errors import DomainError, ValidationError
from cellgame.harness.fixtures import example7

TWO = poa.SingleClassInstance([1.0, 0.5], 0.01)


def test_instance_sorted_and_validated():
    inst = poa.SingleClassInstance([0.25, 1.0, 0.5], 0.01)
    assert list(inst.gains) == [1.0, 0.5, 0.25]
    np.testing.assert_allclose(inst.e, [1, 3, 7])
    assert np.all(np.diff(inst.e_star) > 0)
    with pytest.raises(ValidationError):
        poa.SingleClassInstance([1.0, 0.0], 0.01)
    with pytest.raises(ValidationError):
        poa.SingleClassInstance([1.0], -0.01)


def test_spillover_examples():
    assert poa.spillover_masses(TWO)[0] == pytest.approx(50.0)
    assert poa.spillover_masses(poa.SingleClassInstance([1.0, 1.0], 0.01))[0] == 0.0
    np.testing.assert_allclose(poa.spillover_masses(poa.SingleClassInstance([1.0, 0.5, 0.25], 0.01)), [50, 125])


def test_ne_cost_examples():
    assert poa.ne_cost(TWO, 30) == pytest.approx(30 * 0.01 / (1 - 0.3))
    assert poa.ne_cost(TWO, 50) == pytest.approx(1.0)
    np.testing.assert_allclose(poa.ne_loads(TWO, 30), [30, 0])
    assert poa.ne_loads(TWO, 60)[0] / 60 == pytest.approx(8 / 9)


def test_opt_cost_examples():
    # sigma2 (e*_2^2 / (2 - gamma M) - e_2) at M = 50
    assert poa.opt_cost(TWO, 50) == pytest.approx((1 + np.sqrt(2)) ** 2 / 1.5 - 3, abs=1e-12)
    assert poa.opt_cost(TWO, 50) == pytest.approx(0.88562, abs=1e-5)
    sym = poa.SingleClassInstance([0.7, 0.7, 0.7], 0.02)
    for m in (10, 60, 140):
        assert poa.opt_cost(sym, m) == pytest.approx(poa.ne_cost(sym, m), rel=1e-13)
    assert poa.opt_loads(TWO, 60)[0] / 60 == pytest.approx(na.two_bs_opt_fraction(1, 0.5, 0.01, 60))


def test_poa_examples():
    assert poa.poa(TWO, 50) == pytest.approx(1.12915, abs=1e-5)
    assert poa.poa_large_mass(TWO, 50) == pytest.approx(poa.poa(TWO, 50), rel=1e-12)
    assert poa.poa(TWO, 20) == pytest.approx(1.0, abs=1e-10)
    with pytest.raises(DomainError):
        poa.poa_large_mass(TWO, 40)
    with pytest.raises(DomainError):
        poa.poa(TWO, 0.0)
    with pytest.raises(DomainError):
        poa.poa(TWO, 200.0)


def test_two_bs_formula():
    for m in (1.0, 50.0, 120.0, 199.0):
        assert poa.poa_two_bs(1.0, 0.01, m) == pytest.approx(1.0, abs=1e-12)
    assert poa.poa_two_bs_max(0.25) == pytest.approx(0.9375 / 0.6875)
    with pytest.raises(DomainError):
        poa.poa_two_bs(0.0, 0.01, 10)
    with pytest.raises(DomainError):
        poa.poa_two_bs(1.5, 0.01, 10)
    for lam in (0.1, 0.25, 0.5, 0.9):
        inst = poa.SingleClassInstance([1.0, lam], 0.01)
        for m in np.linspace(1.0, 199.0, 60):
            assert poa.poa_two_bs(lam, 0.01, m) == pytest.approx(poa.poa(inst, m), rel=1e-9)
        junction = (1 - lam) / 0.01
        left = poa.poa_two_bs(lam, 0.01, junction * (1 - 1e-12))
        right = poa.poa_two_bs(lam, 0.01, junction * (1 + 1e-12))
        assert abs(left - right) <= 1e-9
        assert poa.poa_two_bs(lam, 0.01, junction) == pytest.approx(poa.poa_two_bs_max(lam), rel=1e-12)


def test_anarchy_bound_examples():
    assert poa.anarchy_bound(1, 1) == 1.0
    assert poa.anarchy_bound(1, 2) == pytest.approx(1.20711, abs=1e-5)
    assert poa.anarchy_bound(1, 4) == 1.5
    with pytest.raises(DomainError):
        poa.anarchy_bound(2, 1)


@given(st.integers(0, 10**6))
def test_poa_bounds_and_monotone_tail(seed):
    rng = np.random.default_rng(seed)
    inst = poa.SingleClassInstance(1.0 - rng.random(int(rng.integers(1, 7))), float(rng.choice([0.01, 0.05])))
    bound = poa.anarchy_bound(inst.gains.min(), inst.gains.max())
    for m in rng.uniform(0, inst.max_mass, 20):
        if m <= 0:
            continue
        p = poa.poa(inst, m)
        assert p >= 1 - 1e-12
        assert p <= bound + 1e-9
    tail_start = max(poa.spillover_masses(inst).max(initial=0.0), 1e-9)
    tail = np.linspace(tail_start, 0.99 * inst.max_mass, 30)
    values = [poa.poa(inst, m) for m in tail]
    if inst.gains.max() > inst.gains.min() * (1 + 1e-9):
        assert np.all(np.diff(values) < 0)
    np.testing.assert_allclose(values, [poa.poa_large_mass(inst, m) for m in tail], rtol=1e-10)


def test_closed_forms_match_solvers():
    for seed in range(10):
        rng = np.random.default_rng(seed)
        inst = poa.SingleClassInstance(1.0 - rng.random(int(rng.integers(2, 5))), 0.01)
        mass = rng.uniform(0.1, 0.9) * inst.max_mass
        nai = na.NonatomicInstance(inst.gains[None, :], [inst.gamma], [mass])
        c_ne = na.system_cost(nai, na.solve_ne(nai, tolerance=1e-10))
        c_opt = na.system_cost(nai, na.solve_system_optimal(nai, tolerance=1e-10))
        assert c_ne == pytest.approx(poa.ne_cost(inst, mass), rel=1e-7)
        assert c_opt == pytest.approx(poa.opt_cost(inst, mass), rel=1e-7)


def test_grid_and_sweep():
    grid = poa.mass_grid(TWO, points=50)
    assert 50.0 in grid and np.all(np.diff(grid) > 0)
    reports = poa.sweep(TWO, grid)
    summary = poa.summarize_sweep(reports)
    assert summary["argmax_mass"] == 50.0 and summary["at_spillover"]
    assert summary["max_poa"] == pytest.approx(1.12915, abs=1e-5)
    for r in reports:
        assert r.poa == pytest.approx(poa.poa_two_bs(0.5, 0.01, r.mass), rel=1e-9)
    with pytest.raises(DomainError):
        poa.mass_grid(TWO, max_mass=300.0)


def test_five_bs_instance_argmax_at_spillover():
    inst = example7()
    summary = poa.summarize_sweep(poa.sweep(inst, poa.mass_grid(inst)))
    assert summary["at_spillover"]
