import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.integrate import quad

from cellgame import nonatomic as na
from cellgame.errors import DomainError, ValidationError
from cellgame.harness.artifacts import read_csv, write_csv
from cellgame.harness.fixtures import example5, example6


def _random(seed, max_l=4, max_n=4):
    rng = np.random.default_rng(seed)
    nl, n = int(rng.integers(1, max_l + 1)), int(rng.integers(1, max_n + 1))
    gamma = rng.choice([0.01, 0.02, 0.05], nl)
    raw = rng.random(nl) + 0.1
    masses = raw * rng.uniform(0.2, 0.9) * n / (gamma @ raw)
    return na.NonatomicInstance(1.0 - rng.random((nl, n)), gamma, masses), rng


def _interior(inst, rng):
    # random strictly positive split, pulled toward the uniform split until feasible
    w = rng.random(inst.gains.shape) + 0.05
    m = w / w.sum(axis=1, keepdims=True) * inst.masses[:, None]
    u = na.uniform_profile(inst)
    for s in np.linspace(0.0, 1.0, 11):
        mix = (1.0 - s) * m + s * u
        if np.all(inst.sinr_density @ mix < 0.95):
            return mix
    return u


def test_congestion_cost_examples():
    assert na.congestion_cost(0.0) == 1.0 and na.congestion_cost_marginal(0.0) == 1.0
    assert na.congestion_cost(0.5) == 2.0 and na.congestion_cost_marginal(0.5) == 4.0
    assert na.congestion_cost(1.0) == np.inf
    with pytest.raises(DomainError):
        na.congestion_cost(-0.1)


def test_entropy_term_matches_quadrature():
    val, _ = quad(lambda x: np.log(1.0 / (1.0 - x)), 0.0, 0.5)
    assert 0.5 + 0.5 * np.log(0.5) == pytest.approx(val, abs=1e-12)
    one = na.NonatomicInstance([[1.0]], [1.0], [0.5])
    assert na.potential(one, [[0.5]]) == pytest.approx(val, abs=1e-12)


def test_cost_density_examples():
    inst = na.NonatomicInstance([[1.0, 1.0]], [0.01], [100.0])
    assert na.cost_density(inst, [[50.0, 50.0]], 0, 0) == pytest.approx(0.02)
    assert na.cost_density(inst, [[100.0, 0.0]], 0, 1) == pytest.approx(0.01)
    i_half = 0.5 + 0.5 * np.log(0.5)
    assert na.potential(inst, [[50.0, 50.0]]) == pytest.approx(2 * (0.5 * np.log(0.01) + i_half))
    assert na.potential(inst, [[100.0, 0.0]]) == np.inf
    zero = na.NonatomicInstance([[1.0, 0.5]], [0.01], [1e-300])
    assert na.system_cost(zero, [[0.0, 1e-300]]) == pytest.approx(0.0)


def test_instance_validation():
    with pytest.raises(ValidationError, match="global-feasibility"):
        na.NonatomicInstance([[1.0, 1.0]], [0.01], [200.0])
    with pytest.raises(ValidationError):
        na.NonatomicInstance([[1.0, 1.0]], [0.01], [10.0], noise_power=0.0)
    with pytest.raises(DomainError):
        na.system_cost(example5(), [[10.0, 10.0]])


@given(st.integers(0, 10**6))
def test_gradient_identities(seed):
    inst, rng = _random(seed)
    m = _interior(inst, rng)
    step = 1e-6
    grad_v = inst.sinr_density[:, None] * np.log(na.cost_densities(inst, m))
    grad_c = na.tolled_cost_densities(inst, m)
    for l in range(m.shape[0]):
        for j in range(m.shape[1]):
            e = np.zeros_like(m)
            e[l, j] = step
            fd_v = (na.potential(inst, m + e, False) - na.potential(inst, m - e, False)) / (2 * step)
            fd_c = (na.system_cost(inst, m + e, False) - na.system_cost(inst, m - e, False)) / (2 * step)
            # log c can vanish, so the relative scale is floored by gamma_l
            scale_v = max(abs(grad_v[l, j]), inst.sinr_density[l])
            assert abs(fd_v - grad_v[l, j]) <= 1e-5 * scale_v
            assert abs(fd_c - grad_c[l, j]) <= 1e-5 * abs(grad_c[l, j])


def _hessian(f, x, step=1e-4):
    n = x.size
    h = np.zeros((n, n))
    for a in range(n):
        for b in range(n):
            ea, eb = np.zeros(n), np.zeros(n)
            ea[a], eb[b] = step, step
            h[a, b] = (f(x + ea + eb) - f(x + ea - eb) - f(x - ea + eb) + f(x - ea - eb)) / (4 * step * step)
    return 0.5 * (h + h.T)


def test_hessians_are_psd():
    for seed in range(10):
        inst, rng = _random(seed, 3, 3)
        m = _interior(inst, rng)
        hv = _hessian(lambda x: na.potential(inst, x.reshape(m.shape), False), m.ravel())
        assert np.linalg.eigvalsh(hv).min() >= -1e-5 * max(1.0, np.abs(hv).max())
        h = np.tile(inst.gains[0], (m.shape[0], 1))
        col = na.NonatomicInstance(h, inst.sinr_density, inst.masses)
        hc = _hessian(lambda x: na.system_cost(col, x.reshape(m.shape), False), m.ravel())
        assert np.linalg.eigvalsh(hc).min() >= -1e-5 * max(1.0, np.abs(hc).max())


def test_normalized_tolls_class_independent():
    inst, rng = _random(3, 4, 3)
    m = _interior(inst, rng)
    t = na.toll_densities(inst, m) / inst.sinr_density[:, None]
    np.testing.assert_allclose(t, np.broadcast_to(t[0], t.shape), rtol=1e-14)
    empty = m.copy()
    empty[:, 0] += empty[:, -1]
    empty[:, -1] = 0.0
    if m.shape[1] > 1:
        assert na.toll_density(inst, empty, 0, m.shape[1] - 1) == 0.0


def test_two_bs_solver_examples():
    inst = example5()
    ne = na.solve_ne(inst)
    assert ne.masses[0, 0] / 60 == pytest.approx(8 / 9, abs=1e-6)
    opt = na.solve_system_optimal(inst)
    assert opt.masses[0, 0] / 60 == pytest.approx(0.70017, abs=1e-5)
    assert opt.diagnostics["certified"]
    tolled = na.solve_tolled_ne(inst)
    assert tolled.masses[0, 0] / 60 == pytest.approx(na.two_bs_opt_fraction(1, 0.5, 0.01, 60), abs=1e-6)


def test_closed_form_fractions():
    assert na.two_bs_ne_fraction(1, 0.5, 0.01, 20) == 1.0
    assert na.two_bs_ne_fraction(1, 0.5, 0.01, 60) == pytest.approx(8 / 9, abs=1e-14)
    assert na.two_bs_opt_fraction(1, 0.5, 0.01, 60) == pytest.approx(0.70017, abs=1e-5)
    assert na.two_bs_ne_fraction(1, 1, 0.01, 60) == 0.5 == na.two_bs_opt_fraction(1, 1, 0.01, 60)
    assert na.two_bs_ne_fraction(0.5, 1, 0.01, 20) == 0.0
    with pytest.raises(DomainError):
        na.two_bs_ne_fraction(1, 0.5, 0.01, 200)


def test_symmetric_gains_equal_loads():
    inst = na.NonatomicInstance(np.ones((2, 3)), [0.01, 0.02], [40.0, 30.0])
    ne = na.solve_ne(inst)
    np.testing.assert_allclose(ne.aggregate(inst), np.full(3, 1.0 / 3), atol=1e-7)
    opt = na.solve_system_optimal(inst)
    np.testing.assert_allclose(opt.aggregate(inst), np.full(3, 1.0 / 3), atol=1e-7)


def test_collocated_bs_ne_matches_optimum():
    for seed in range(10):
        rng = np.random.default_rng(seed)
        nl, n = int(rng.integers(1, 4)), int(rng.integers(2, 4))
        h = np.full((nl, n), 1.0 - rng.random())
        gamma = rng.choice([0.01, 0.02], nl)
        masses = rng.uniform(5, 20, nl)
        inst = na.NonatomicInstance(h, gamma, masses)
        c_ne = na.system_cost(inst, na.solve_ne(inst, tolerance=1e-10))
        c_opt = na.system_cost(inst, na.solve_system_optimal(inst, tolerance=1e-10))
        assert abs(c_ne - c_opt) <= 1e-8 * c_opt
        # the uniform split is a tolled equilibrium here
        assert na.tolled_residual(inst, na.uniform_profile(inst)) <= 1e-12


def test_residual_positive_off_equilibrium():
    inst = example5()
    assert na.ne_residual(inst, [[0.0, 60.0]]) > 0.0
    assert na.ne_residual(inst, na.solve_ne(inst)) <= 1e-7
    exact = 60 * 8 / 9
    assert na.ne_residual(inst, [[exact, 60 - exact]]) <= 1e-12


def test_example6_costs():
    m1 = 20.0
    inst = example6(m1)
    ne = na.solve_ne(inst, tolerance=1e-10)
    c_star = 0.01 * m1 / (0.1 * (1 - 2 * 0.01 * m1)) + 3 * 0.01 * m1 / (0.9 * (1 - 2 * 0.01 * m1))
    assert na.system_cost(inst, ne) == pytest.approx(c_star, rel=1e-8)
    seg = np.array([[0.0, m1], [3 * m1, 0.0]])
    assert na.system_cost(inst, seg) < c_star
    tolled = na.solve_tolled_ne(inst)
    np.testing.assert_allclose(tolled.masses, na.uniform_profile(inst), rtol=1e-12)
    opt = na.solve_system_optimal(inst)
    assert not opt.diagnostics["certified"]
    assert na.system_cost(inst, opt) <= na.system_cost(inst, seg)
    big = example6(24.0)
    seg = np.array([[0.0, 24.0], [72.0, 0.0]])
    assert na.system_cost(big, seg) < na.system_cost(big, na.uniform_profile(big))


def test_single_cell_examples():
    assert na.single_cell_feasible([0.999], [1.0])
    assert not na.single_cell_feasible([1.0], [1.0])
    assert na.single_cell_power_density([0.01], [50.0], [1.0])[0] == pytest.approx(0.02)
    assert np.all(na.single_cell_power_density([0.01], [100.0], [1.0]) == np.inf)


def test_solver_aggregate_uniqueness_and_pareto_sampling():
    for seed in range(8):
        inst, rng = _random(seed)
        ne = na.solve_ne(inst)
        loads = np.array(ne.diagnostics["start_loads"])
        assert np.ptp(loads, axis=0).max() <= 1e-6
        costs = na.cost_densities(inst, ne)
        used = ne.masses > 1e-9 * inst.masses[:, None]
        mins = costs.min(axis=1)
        assert np.all(np.where(used, costs, mins[:, None]) <= mins[:, None] * (1 + 1e-7))
        for _ in range(200):
            alt = _interior(inst, rng)
            if np.all(inst.sinr_density @ alt < 1.0):
                assert not na.pareto_dominates(inst, alt, ne)


def test_solver_convergence_error():
    inst, _ = _random(1)
    from cellgame.errors import ConvergenceError
    with pytest.raises(ConvergenceError) as exc:
        na.solve_ne(inst, tolerance=0.0, max_iters=1)
    assert "residual" in exc.value.diagnostics


def test_profile_csv_roundtrip(tmp_path):
    inst, _ = _random(5)
    ne = na.solve_ne(inst)
    path = tmp_path / "ne.csv"
    rows = [[l + 1, j + 1, repr(float(ne.masses[l, j]))] for l in range(ne.masses.shape[0]) for j in range(ne.masses.shape[1])]
    write_csv(path, ["class", "bs", "mass"], rows)
    back = np.zeros_like(ne.masses)
    for r in read_csv(path):
        back[int(r["class"]) - 1, int(r["bs"]) - 1] = float(r["mass"])
    assert np.array_equal(back, ne.masses)
    assert na.ne_residual(inst, back) <= 1e-7
