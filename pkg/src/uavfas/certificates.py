"""Solver-versus-oracle certificates behind the ``oracle`` CLI subcommand."""
from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np

from . import oracles
from .baselines import dula_layout
from .beamform import optimize_beamforming_slot, slot_objective, slot_weight
from .crb import crb_full, crb_reduced, trace_identities
from .geometry import SteeringContext, aod, distance, steering, steering_derivative
from .pipeline import complexity_estimate
from .pso import SlotContext, optimize_positions_slot
from .scenario import default_scenario
from .trajectory import straight_path


@dataclass(frozen=True)
class Certificate:
    name: str
    passed: bool
    value: float
    threshold: float
    seconds: float
    note: str = ""

    def line(self) -> str:
        tag = "PASS" if self.passed else "FAIL"
        extra = f"  ({self.note})" if self.note else ""
        return f"{tag}  {self.name}: value={self.value:.3e} threshold={self.threshold:.3e} [{self.seconds:.2f}s]{extra}"


def _timed(fn):
    t0 = time.perf_counter()
    out = fn()
    return out, time.perf_counter() - t0


def random_crb_case(rng, rank=None, wavelength=0.0107, cos_floor=0.05):
    """Random feasible single-target configuration: ``(ctx, y, R, d)``."""
    D, D_min = 20 * wavelength, 0.5 * wavelength
    while True:
        theta = rng.uniform(0.05, np.pi / 2 - 0.05)
        if np.cos(theta) >= cos_floor:
            break
    Mt, Mr = (int(m) for m in rng.integers(2, 13, size=2))
    x = np.arange(Mt) * D_min + np.sort(rng.uniform(0, D - (Mt - 1) * D_min, Mt))
    y = np.arange(Mr) * D_min + np.sort(rng.uniform(0, D - (Mr - 1) * D_min, Mr))
    r = Mt if rank is None else min(rank, Mt)
    Z = rng.standard_normal((Mt, r)) + 1j * rng.standard_normal((Mt, r))
    R = Z @ Z.conj().T
    R *= rng.uniform(0.1, 1.0) / np.real(np.trace(R))
    d = rng.uniform(100.0, 1200.0)
    ctx = SteeringContext(theta, d, steering(x, theta, wavelength), steering(y, theta, wavelength),
                          steering_derivative(x, theta, wavelength), steering_derivative(y, theta, wavelength))
    return ctx, y, R, d


def crb_equivalence_gap(rng, n_cases, rank=None, wavelength=0.0107):
    """Worst relative gap between the package's full and reduced CRB."""
    worst = 0.0
    for _ in range(n_cases):
        ctx, y, R, d = random_crb_case(rng, rank, wavelength)
        full = crb_full(ctx, R, 1.0, d, 200, 1e-12)
        red = crb_reduced(ctx.a, y, ctx.theta, R, 1.0, d, 200, 1e-12, wavelength)
        worst = max(worst, abs(full - red) / max(full, red))
    return worst


def cert_crb_equivalence(cfg: oracles.OracleConfig, rank=None) -> Certificate:
    label = "full-rank R" if rank is None else f"rank-{rank} R"
    rng = np.random.default_rng([cfg.seed, 1])
    gap, dt = _timed(lambda: crb_equivalence_gap(rng, cfg.crb_cases, rank))
    ref = oracles.oracle_crb_equivalence(np.random.default_rng([cfg.seed, 1]), cfg.crb_cases, rank=rank,
                                         cos_floor=cfg.cos_floor)
    note = f"{label}; independent oracle gap {ref:.3e}"
    return Certificate(f"crb full vs reduced, {label}", gap < cfg.crb_rtol and dt < 10, gap, cfg.crb_rtol, dt, note)


def cert_trace_identities(cfg: oracles.OracleConfig) -> Certificate:
    rng = np.random.default_rng([cfg.seed, 2])

    def run():
        worst = 0.0
        for _ in range(cfg.crb_cases):
            ctx, y, R, _ = random_crb_case(rng)
            direct, closed = trace_identities(ctx.a, ctx.b, ctx.a_dot, ctx.b_dot, R, y=y, theta=ctx.theta,
                                              wavelength=0.0107, rtol=np.inf)
            for u, v in zip(direct, closed):
                s = max(abs(u), abs(v))
                worst = max(worst, abs(u - v) / s if s else 0.0)
        return worst

    gap, dt = _timed(run)
    return Certificate("trace identities direct vs closed", gap < cfg.crb_rtol, gap, cfg.crb_rtol, dt)


def random_beam_instance(rng, M=12, K=6, wavelength=0.0107):
    x = np.arange(M) * 0.5 * wavelength + np.sort(rng.uniform(0, 20 * wavelength - (M - 1) * 0.5 * wavelength, M))
    theta = rng.uniform(0.05, np.pi / 2, K)
    a = steering(x, theta, wavelength)
    c = rng.uniform(0.1, 1.0, K)
    return a, c


def cert_beamforming(cfg: oracles.OracleConfig, P_max=1.0) -> Certificate:
    rng = np.random.default_rng([cfg.seed, 3])

    def run():
        worst, shape_ok = np.inf, True
        for _ in range(cfg.beam_instances):
            a, c = random_beam_instance(rng)
            bc = optimize_beamforming_slot(a, c, P_max)
            R = bc.R
            ev = np.linalg.eigvalsh(R)
            shape_ok &= bool(np.allclose(R, R.conj().T, atol=1e-12) and ev.min() >= -1e-10 * P_max
                             and ev[-2] <= 1e-9 * P_max and abs(np.trace(R).real - P_max) <= 1e-9)
            best = oracles.oracle_beamforming(a, c, P_max, cfg.beam_samples, rng)
            worst = min(worst, slot_objective(a, c, R) - best)
        return worst, shape_ok

    (margin, shape_ok), dt = _timed(run)
    return Certificate("beamforming vs random covariances", margin >= -cfg.beam_margin and shape_ok and dt < 30,
                       margin, -cfg.beam_margin, dt, "value = min(analytic - sampled best)")


def small_pso_setup(seed=0):
    """Two-plus-two element slot: aperture 2 wavelengths, mid-mission UAV position, beam at DULA."""
    s = default_scenario(seed).with_updates(M_t=2, M_r=2, D_wavelengths=2.0)
    n = s.N // 2
    q = straight_path(s).q[n]
    th = aod(q[None, :], s.target_array, s.H)
    d = distance(q[None, :], s.target_array, s.H)
    x = dula_layout(2, s.wavelength)
    c = slot_weight(th, d, x, s.rcs_array, s.N_bar, s.sigma2_r, s.wavelength)
    R = optimize_beamforming_slot(steering(x, th, s.wavelength), c, s.P_max).R
    return s, n, q, R


def cert_pso_grid(cfg: oracles.OracleConfig) -> Certificate:
    def run():
        s, n, q, R = small_pso_setup(cfg.seed)
        res = optimize_positions_slot(SlotContext.build(s, q, R), s, key=(s.seed, 0, n))
        prob = oracles.LayoutProblem.from_scenario(s, q, R)
        _, _, grid_best = oracles.oracle_layout_grid(prob, cfg.grid_step_wavelengths * s.wavelength)
        return res.fitness / grid_best

    ratio, dt = _timed(run)
    return Certificate("PSO vs exhaustive grid (2+2 elements)", ratio >= cfg.pso_ratio and dt < 60, ratio,
                       cfg.pso_ratio, dt, "value = PSO / grid best")


def cert_steering_derivative(cfg: oracles.OracleConfig) -> Certificate:
    rng = np.random.default_rng([cfg.seed, 4])
    err, dt = _timed(lambda: oracles.oracle_steering_fd(rng, cfg.fd_cases, steering_derivative, cfg.fd_step))
    return Certificate("steering derivative vs central differences", err < cfg.fd_rtol, err, cfg.fd_rtol, dt)


def cert_complexity(cfg: oracles.OracleConfig) -> Certificate:
    s = default_scenario(cfg.seed)
    s = s.with_updates(ao=type(s.ao)(l_max=10, epsilon=1e-3))
    got, dt = _timed(lambda: complexity_estimate(s))
    ref = oracles.complexity_formula(10, s.N, s.M_t, s.M_r, 1e-3, s.pso.T_max, s.pso.particles)
    rel = abs(got - ref) / ref
    return Certificate("complexity estimate vs reference formula", rel < 1e-12, rel, 1e-12, dt)


def run_suite(cfg: oracles.OracleConfig | None = None, progress=None) -> list[Certificate]:
    cfg = oracles.OracleConfig() if cfg is None else cfg
    steps = [
        lambda: cert_crb_equivalence(cfg),
        lambda: cert_crb_equivalence(cfg, rank=1),
        lambda: cert_trace_identities(cfg),
        lambda: cert_beamforming(cfg),
        lambda: cert_pso_grid(cfg),
        lambda: cert_steering_derivative(cfg),
        lambda: cert_complexity(cfg),
    ]
    out = []
    for step in steps:
        c = step()
        out.append(c)
        if progress is not None:
            progress(c)
    return out
