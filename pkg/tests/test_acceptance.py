"""Acceptance criteria 1-11 at their stated tolerances.

Each test records a one-line verdict that is printed in the terminal summary.
Full pipeline runs are memoised so criteria sharing the default scenario
reuse the same solutions.
"""
import time

import numpy as np
import pytest

from conftest import ACCEPTANCE
from uavfas.baselines import SchemeId, run_scheme
from uavfas.beamform import optimize_beamforming_slot, slot_objective
from uavfas.certificates import random_beam_instance, random_crb_case, small_pso_setup
from uavfas.cli import main
from uavfas.crb import crb_full, crb_reduced
from uavfas.experiments import DEFAULT_GRIDS
from uavfas.feasibility import check_solution
from uavfas.geometry import steering, steering_derivative
from uavfas.oracles import LayoutProblem, oracle_beamforming, oracle_layout_grid
from uavfas.pipeline import check_monotone
from uavfas.pso import SlotContext, optimize_positions_slot
from uavfas.scenario import default_scenario
from uavfas.signal import sample_covariance, sample_waveform

SEEDS = (0, 1, 2, 3, 4)
_RUNS = {}


def record(num, ok, detail):
    ACCEPTANCE[num] = (bool(ok), detail)
    print(f"criterion {num}: {'PASS' if ok else 'FAIL'}  {detail}")


def solve(scheme, seed, P_dBm=30.0, D_wl=20.0, K=6):
    key = (SchemeId.parse(scheme), seed, P_dBm, D_wl, K)
    if key not in _RUNS:
        s = default_scenario(seed, K=K, P_max_dBm=P_dBm)
        if D_wl != 20.0:
            s = s.with_updates(D_wavelengths=D_wl)
        t0 = time.perf_counter()
        sol = run_scheme(scheme, s)
        _RUNS[key] = (s, sol, time.perf_counter() - t0)
    return _RUNS[key]


def median_avg(scheme, **kw):
    return float(np.median([solve(scheme, sd, **kw)[1].report.avg_crb for sd in SEEDS]))


def test_c01_crb_equivalence():
    rng = np.random.default_rng(2024)
    t0 = time.perf_counter()
    worst = 0.0
    for _ in range(1000):
        ctx, y, R, d = random_crb_case(rng)  # full-rank PSD R, trace <= 1 W, cos(theta) >= 0.05
        full = crb_full(ctx, R, 1.0, d, 200, 1e-12)
        red = crb_reduced(ctx.a, y, ctx.theta, R, 1.0, d, 200, 1e-12, 0.0107)
        worst = max(worst, abs(full - red) / max(full, red))
    dt = time.perf_counter() - t0
    ok = worst < 1e-8 and dt < 10
    record(1, ok, f"max rel diff full vs reduced = {worst:.3e} (need < 1e-8), {dt:.2f}s")
    assert ok


def test_c02_beamforming_optimality():
    rng = np.random.default_rng(7)
    t0 = time.perf_counter()
    margin, shape_ok = np.inf, True
    for _ in range(100):
        a, c = random_beam_instance(rng)
        R = optimize_beamforming_slot(a, c, 1.0).R
        ev = np.linalg.eigvalsh(R)
        shape_ok &= bool(np.max(np.abs(R - R.conj().T)) <= 1e-12 and ev.min() >= -1e-10 and ev[-2] <= 1e-9
                         and abs(np.trace(R).real - 1.0) <= 1e-9)
        margin = min(margin, slot_objective(a, c, R) - oracle_beamforming(a, c, 1.0, 10_000, rng))
    dt = time.perf_counter() - t0
    ok = margin >= -1e-9 and shape_ok and dt < 30
    record(2, ok, f"min(analytic - best sampled) = {margin:.3e}, hermitian/psd/rank1/trace ok={shape_ok}, {dt:.1f}s")
    assert ok


def test_c03_monotone_feasible_runtime():
    worst_drop, worst_time, bad = 0.0, 0.0, []
    for sd in SEEDS:
        s, sol, dt = solve("proposed", sd)
        ok, idx = check_monotone(sol.trace, 1e-9)
        if not ok:
            bad.append((sd, idx))
        obj = sol.objectives
        worst_drop = max(worst_drop, float(np.max(obj[:-1] - obj[1:], initial=0.0)))
        check_solution(s, sol.path.q, [b.R for b in sol.R], sol.layouts)
        worst_time = max(worst_time, dt)
    ok = not bad and worst_time < 300
    record(3, ok, f"largest objective drop {worst_drop:.3e}, violations {bad}, slowest run {worst_time:.1f}s")
    assert ok


def test_c04_pso_vs_grid():
    t0 = time.perf_counter()
    s, n, q, R = small_pso_setup(0)
    res = optimize_positions_slot(SlotContext.build(s, q, R), s, key=(s.seed, 0, n))
    _, _, best = oracle_layout_grid(LayoutProblem.from_scenario(s, q, R), s.wavelength / 50)
    dt = time.perf_counter() - t0
    ratio = res.fitness / best
    ok = ratio >= 0.98 and dt < 60
    record(4, ok, f"PSO / grid optimum = {ratio:.6f} (need >= 0.98), {dt:.1f}s")
    assert ok


@pytest.mark.slow
def test_c05_scheme_ordering():
    m = {sc.value: median_avg(sc) for sc in SchemeId}
    ok = m["proposed"] <= m["tfao"] <= min(m["sula"], m["dula"])
    record(5, ok, "median avg CRB " + ", ".join(f"{k}={v:.3e}" for k, v in m.items()))
    assert ok


@pytest.mark.slow
def test_c06_power_sweep():
    grid = DEFAULT_GRIDS["P_max_dBm"]
    fails, parts = [], []
    for sc in SchemeId:
        med = [median_avg(sc, P_dBm=p) for p in grid]
        parts.append(f"{sc.value}: " + " ".join(f"{v:.2e}" for v in med))
        if not all(b < a for a, b in zip(med, med[1:])):
            fails.append(sc.value)
    ok = not fails
    record(6, ok, f"strictly decreasing over {list(grid)} dBm; failing: {fails}; " + "; ".join(parts))
    assert ok


@pytest.mark.slow
def test_c07_region_sweep():
    grid = DEFAULT_GRIDS["region_size_multiple_of_lambda"]
    med = [median_avg("proposed", D_wl=d) for d in grid]
    ok = all(b <= a * 1.02 for a, b in zip(med, med[1:]))
    record(7, ok, f"proposed median avg CRB over D/lambda {list(grid)}: " + " ".join(f"{v:.3e}" for v in med))
    assert ok


@pytest.mark.slow
def test_c08_target_sweep():
    grid = DEFAULT_GRIDS["K_targets"]
    med = [median_avg("proposed", K=k) for k in grid]
    ok = all(b >= a * 0.98 for a, b in zip(med, med[1:]))
    record(8, ok, f"proposed median avg CRB over K {list(grid)}: " + " ".join(f"{v:.3e}" for v in med))
    assert ok


def test_c09_derivative_finite_difference():
    rng = np.random.default_rng(99)
    lam, h, worst = 0.0107, 1e-6, 0.0
    for _ in range(1000):
        pos = rng.uniform(0, 20 * lam, rng.integers(1, 13))
        th = rng.uniform(0.05, np.pi / 2 - 0.05)
        fd = (steering(pos, th + h, lam) - steering(pos, th - h, lam)) / (2 * h)
        worst = max(worst, np.linalg.norm(steering_derivative(pos, th, lam) - fd) / np.linalg.norm(fd))
    ok = worst < 1e-6
    record(9, ok, f"max rel error vs central difference = {worst:.3e} (need < 1e-6)")
    assert ok


def test_c10_sample_covariance_statistics():
    wins = 0
    for trial in range(10):
        rng = np.random.default_rng([trial, 10])
        Z = rng.standard_normal((12, 12)) + 1j * rng.standard_normal((12, 12))
        R = Z @ Z.conj().T
        R /= np.trace(R).real
        e100 = np.linalg.norm(sample_covariance(sample_waveform(R, 100, rng)) - R)
        e10k = np.linalg.norm(sample_covariance(sample_waveform(R, 10_000, rng)) - R)
        wins += e10k < e100
    ok = wins >= 9
    record(10, ok, f"N_bar=10000 beats N_bar=100 in {wins}/10 trials (need >= 9)")
    assert ok


def test_c11_determinism(tmp_path):
    outs = []
    for i, workers in enumerate((1, 1, 4)):
        d = tmp_path / f"run{i}"
        assert main(["run", "--seed", "42", "--out-dir", str(d), "--workers", str(workers)]) == 0
        outs.append({f: (d / f).read_bytes() for f in ("crb_per_target.csv", "convergence.csv")})
    ok = outs[0] == outs[1] == outs[2]
    record(11, ok, "run --seed 42 CSVs byte-identical across repeats and worker counts 1/4" if ok
           else "CSV outputs differ")
    assert ok
