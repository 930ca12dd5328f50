import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from uavfas import _kernels
from uavfas.baselines import dula_layout, sula_layout
from uavfas.crb import reciprocal_matrix
from uavfas.certificates import small_pso_setup
from uavfas.oracles import LayoutProblem, grid_cells, oracle_layout_grid, MAX_GRID_CELLS
from uavfas.pso import (ArrayLayout, Particle, SlotContext, fitness, inertia, optimize_positions_slot,
                        random_layout, step_position, step_velocity, violation_count)
from uavfas.scenario import PsoParams
from uavfas.trajectory import straight_path

LAM = 0.0107


def _ctx(s, n=None, fixed_rx=None, seed=0):
    n = s.N // 2 if n is None else n
    q = straight_path(s).q[n]
    rng = np.random.default_rng(seed)
    u = rng.standard_normal(s.M_t) + 1j * rng.standard_normal(s.M_t)
    R = s.P_max * np.outer(u, u.conj()) / np.vdot(u, u).real
    return SlotContext.build(s, q, R, fixed_rx=fixed_rx), q, R


def test_violation_examples():
    D, Dm = 20 * LAM, 0.5 * LAM
    x = np.arange(12) * Dm
    assert violation_count(np.concatenate([x, x]), 12, D, Dm) == 0
    y = x.copy()
    y[1] = y[0]
    assert violation_count(np.concatenate([y, x]), 12, D, Dm) >= 1
    z = x.copy()
    z[0] = -0.1
    assert violation_count(np.concatenate([x, z]), 12, D, Dm) >= 1


def test_fitness_is_mean_reciprocal(scenario):
    s = scenario
    c, q, R = _ctx(s)
    x, y = sula_layout(12, s.D), dula_layout(12, s.wavelength)
    want = reciprocal_matrix(s, q[None], R[None], x[None], y[None])[0].mean()
    assert fitness(np.concatenate([x, y]), c, 1e6) == pytest.approx(want, rel=1e-10)


def test_penalty_linear_in_count(scenario):
    s = scenario
    c, _, _ = _ctx(s)
    x = dula_layout(12, s.wavelength)
    y = sula_layout(12, s.D)
    good = np.concatenate([x, y])
    bad = good.copy()
    bad[3] = bad[2]  # one spacing violation, fitness otherwise changes slightly
    f_bad = fitness(bad, c, 1e6)
    assert f_bad == pytest.approx(fitness(bad, c, 0.0) - 1e6 * violation_count(bad, 12, s.D, s.D_min), rel=1e-12)


def test_zero_aperture_fitness(scenario):
    s = scenario
    c, _, _ = _ctx(s)
    x = dula_layout(12, s.wavelength)
    p = np.concatenate([x, np.zeros(12)])
    assert fitness(p, c, 1.0) == pytest.approx(-violation_count(p, 12, s.D, s.D_min))


@given(st.integers(0, 2**31))
def test_fitness_permutation_invariant(seed):
    from uavfas.scenario import default_scenario

    s = default_scenario(0)
    c, _, _ = _ctx(s)
    rng = np.random.default_rng(seed)
    p = np.concatenate([random_layout(12, s.D, s.D_min, rng), random_layout(12, s.D, s.D_min, rng)])
    perm = np.concatenate([rng.permutation(p[:12]), rng.permutation(p[12:])])
    assert fitness(perm, c, 1e6) == pytest.approx(fitness(p, c, 1e6), rel=1e-10)


def test_inertia():
    assert inertia(0, 50, 0.9, 0.4) == 0.9
    assert inertia(50, 50, 0.9, 0.4) == pytest.approx(0.4)
    assert inertia(25, 50, 0.9, 0.4) == pytest.approx(0.65)


def test_step_velocity_examples():
    p = Particle(np.array([1.0, 2.0]), np.zeros(2))
    rng = np.random.default_rng(0)
    np.testing.assert_array_equal(step_velocity(p, p.position, 0.7, 1.5, 1.5, rng), 0)
    p2 = Particle(np.array([1.0, 2.0]), np.array([0.3, -0.2]), best_position=np.array([5.0, 5.0]))
    np.testing.assert_allclose(step_velocity(p2, np.zeros(2), 0.5, 0.0, 0.0, rng), [0.15, -0.1])
    a = step_velocity(p2, np.zeros(2), 0.5, 1.5, 1.5, np.random.default_rng(4))
    b = step_velocity(p2, np.zeros(2), 0.5, 1.5, 1.5, np.random.default_rng(4))
    assert np.array_equal(a, b)


def test_step_position_examples():
    p = Particle(np.array([0.1, 0.3, 0.05, 0.2]), np.zeros(4))
    np.testing.assert_allclose(step_position(p, np.array([0.0, 0.0, 0.0, 0.0]), 1.0, n_tx=2), [0.1, 0.3, 0.05, 0.2])
    np.testing.assert_allclose(step_position(p, np.array([0.3, 0.0, 0.0, 0.0]), 1.0, n_tx=2), [0.3, 0.4, 0.05, 0.2])
    q = step_position(p, np.array([1.4, 0, 0, 0]), 1.0, n_tx=2)
    assert q[1] == 1.0


def test_random_layout_feasible(rng):
    for _ in range(100):
        x = random_layout(12, 20 * LAM, 0.5 * LAM, rng)
        assert violation_count(x, 12, 20 * LAM, 0.5 * LAM) == 0


def test_frozen_swarm_returns_start(scenario):
    s = scenario.with_updates(pso=PsoParams(T_max=10, particles=6, c1=0.0, c2=0.0))
    c, _, _ = _ctx(s)
    start = np.concatenate([dula_layout(12, s.wavelength), sula_layout(12, s.D)])
    res = optimize_positions_slot(c, s, init_positions=np.tile(start, (6, 1)))
    np.testing.assert_allclose(res.layout.as_vector(), start)


def test_result_feasible_and_history_monotone(scenario):
    s = scenario.with_updates(pso=PsoParams(T_max=20, particles=20))
    c, _, _ = _ctx(s)
    res = optimize_positions_slot(c, s, key=(0, 1, 2), warm=ArrayLayout(dula_layout(12, s.wavelength),
                                                                        dula_layout(12, s.wavelength)))
    assert violation_count(res.layout.as_vector(), 12, s.D, s.D_min) == 0
    assert np.all(np.diff(res.history) >= 0)
    assert res.eta >= 10 * (1 + res.history[0]) or res.eta == s.pso.eta


def test_warm_start_never_loses(scenario):
    s = scenario.with_updates(pso=PsoParams(T_max=5, particles=5))
    c, _, _ = _ctx(s)
    warm = ArrayLayout(dula_layout(12, s.wavelength), dula_layout(12, s.wavelength))
    res = optimize_positions_slot(c, s, key=(1,), warm=warm)
    assert res.fitness >= fitness(warm.as_vector(), c, 0.0)


def test_tfao_dimension(scenario):
    s = scenario.with_updates(pso=PsoParams(T_max=5, particles=5))
    rx = dula_layout(12, s.wavelength)
    c, _, _ = _ctx(s, fixed_rx=rx)
    assert c.dim == 12
    res = optimize_positions_slot(c, s, key=(1,))
    np.testing.assert_array_equal(res.layout.y, rx)


def test_deterministic_per_key(scenario):
    s = scenario.with_updates(pso=PsoParams(T_max=10, particles=10))
    c, _, _ = _ctx(s)
    a = optimize_positions_slot(c, s, key=(3, 1, 4))
    b = optimize_positions_slot(c, s, key=(3, 1, 4))
    assert a.layout.same_as(b.layout) and a.fitness == b.fitness


def test_pso_reaches_grid_optimum():
    s, n, q, R = small_pso_setup(0)
    res = optimize_positions_slot(SlotContext.build(s, q, R), s, key=(s.seed, 0, n))
    prob = LayoutProblem.from_scenario(s, q, R)
    gx, gy, best = oracle_layout_grid(prob, s.wavelength / 50)
    assert res.fitness >= 0.98 * best
    assert prob.fitness(gx, gy) == pytest.approx(best, rel=1e-12)
    assert res.fitness == pytest.approx(prob.fitness(res.layout.x, res.layout.y), rel=1e-9)


def test_grid_oracle_properties():
    s, n, q, R = small_pso_setup(0)
    prob = LayoutProblem.from_scenario(s, q, R)
    coarse = oracle_layout_grid(prob, s.wavelength / 10)
    fine = oracle_layout_grid(prob, s.wavelength / 20)  # refines the coarse grid
    assert fine[2] >= coarse[2]
    for v in coarse[:2]:
        assert v[1] - v[0] >= s.D_min - 1e-12 and 0 <= v[0] and v[1] <= s.D + 1e-12
    assert grid_cells(s.D, s.D_min, s.wavelength / 50) <= MAX_GRID_CELLS
    with pytest.raises(ValueError, match="too fine"):
        oracle_layout_grid(prob, s.wavelength / 100)


def test_low_rank_factor(rng):
    Z = rng.standard_normal((6, 2)) + 1j * rng.standard_normal((6, 2))
    R = Z @ Z.conj().T
    F = _kernels.psd_factor(R)
    assert F.shape == (6, 2)
    np.testing.assert_allclose(F @ F.conj().T, R, atol=1e-12)
