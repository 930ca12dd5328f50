"""Penalty PSO over the transmit/receive antenna coordinates of one slot."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .feasibility import layout_violations
from .geometry import aod, aperture_term, cos_aod, distance


@dataclass(frozen=True, eq=False)
class ArrayLayout:
    x: np.ndarray
    y: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "x", np.asarray(self.x, dtype=float))
        object.__setattr__(self, "y", np.asarray(self.y, dtype=float))

    def as_vector(self) -> np.ndarray:
        return np.concatenate([self.x, self.y])

    def same_as(self, other: "ArrayLayout") -> bool:
        return np.array_equal(self.x, other.x) and np.array_equal(self.y, other.y)


@dataclass(eq=False)
class Particle:
    position: np.ndarray
    velocity: np.ndarray
    best_position: np.ndarray = None
    best_fitness: float = -np.inf

    def __post_init__(self):
        if self.best_position is None:
            self.best_position = np.array(self.position, dtype=float, copy=True)


@dataclass(frozen=True, eq=False)
class SlotContext:
    """Everything the fitness needs for one slot: frozen UAV position and covariance."""

    R: np.ndarray
    sin_t: np.ndarray  # per target
    gain: np.ndarray  # per target, includes 1/K
    kwave: float
    n_tx: int
    n_rx: int
    D: float
    D_min: float
    fixed_rx: np.ndarray | None = None
    q: np.ndarray = field(default=None)

    @classmethod
    def build(cls, scenario, q_n, R_n, fixed_rx=None) -> "SlotContext":
        s = scenario
        tg = s.target_array
        th = aod(np.asarray(q_n, dtype=float)[None, :], tg, s.H)
        d = distance(np.asarray(q_n, dtype=float)[None, :], tg, s.H)
        kwave = 2.0 * np.pi / s.wavelength
        kc = kwave * cos_aod(th)
        gain = s.rcs_array * s.N_bar * kc * kc / (2.0 * d * d * s.sigma2_r) / s.K
        return cls(
            R=np.ascontiguousarray(R_n, dtype=np.complex128),
            sin_t=np.ascontiguousarray(np.sin(th)),
            gain=np.ascontiguousarray(gain),
            kwave=kwave,
            n_tx=s.M_t,
            n_rx=s.M_r,
            D=s.D,
            D_min=s.D_min,
            fixed_rx=None if fixed_rx is None else np.asarray(fixed_rx, dtype=float),
            q=np.asarray(q_n, dtype=float),
        )

    @property
    def F(self) -> np.ndarray:
        f = self.__dict__.get("_F")
        if f is None:
            f = _kernels.psd_factor(self.R)
            object.__setattr__(self, "_F", f)
        return f

    @property
    def ap_fixed(self) -> float:
        return -1.0 if self.fixed_rx is None else float(aperture_term(self.fixed_rx))

    @property
    def dim(self) -> int:
        return self.n_tx if self.fixed_rx is not None else self.n_tx + self.n_rx

    def split(self, position):
        position = np.asarray(position, dtype=float)
        y = self.fixed_rx if self.fixed_rx is not None else position[self.n_tx:]
        return position[: self.n_tx], y


def violation_count(position, n_tx, D, D_min) -> int:
    """Violations of region and spacing constraints, counted per sub-array and summed."""
    p = np.asarray(position, dtype=float)
    total = layout_violations(p[:n_tx], D, D_min)
    if p.size > n_tx:
        total += layout_violations(p[n_tx:], D, D_min)
    return total


def fitness(position, ctx: SlotContext, eta: float) -> float:
    """Mean reciprocal CRB of the slot at a candidate layout, minus ``eta`` per violation.

    Coordinates are taken in ascending order within each sub-array, so the
    result does not depend on how they are listed.
    """
    f, _ = _kernels.swarm_fitness_np(
        np.asarray(position, dtype=float)[None, :], ctx.n_tx, ctx.F, ctx.sin_t, ctx.gain,
        ctx.kwave, ctx.D, ctx.D_min, float(eta), ctx.ap_fixed,
    )
    return float(f[0])


def inertia(t, T_max, omega_max, omega_min) -> float:
    if T_max == 0:
        return omega_max
    return omega_max - (omega_max - omega_min) * t / T_max


def step_velocity(particle: Particle, global_best, omega, c1, c2, rng, v_clamp=None, per_coordinate=False):
    p = particle.position
    shape = p.shape if per_coordinate else ()
    r1, r2 = rng.random(shape), rng.random(shape)
    v = omega * particle.velocity + c1 * r1 * (particle.best_position - p) + c2 * r2 * (np.asarray(global_best) - p)
    if v_clamp is not None:
        v = np.clip(v, -v_clamp, v_clamp)
    return v


def step_position(particle: Particle, velocity, D, n_tx=None):
    """Clamp ``p + v`` into ``[0, D]`` and re-sort each sub-array."""
    z = np.clip(np.asarray(particle.position, dtype=float) + velocity, 0.0, D)
    if n_tx is None or n_tx >= z.size:
        return np.sort(z)
    return np.concatenate([np.sort(z[:n_tx]), np.sort(z[n_tx:])])


def random_layout(M, D, D_min, rng) -> np.ndarray:
    """Random feasible layout: ``D_min`` grid plus sorted uniform offsets sharing the slack."""
    slack = max(D - (M - 1) * D_min, 0.0)
    return np.arange(M) * D_min + np.sort(rng.uniform(0.0, slack, M))


def _stream(key, particle):
    return np.random.default_rng(np.random.SeedSequence([*key, particle]))


@dataclass(frozen=True, eq=False)
class PsoResult:
    layout: ArrayLayout
    fitness: float
    history: np.ndarray
    eta: float


def optimize_positions_slot(ctx: SlotContext, scenario, key=(0,), warm: ArrayLayout | None = None,
                            init_positions=None, init_velocities=None) -> PsoResult:
    """Run the swarm for one slot and return the best feasible layout found.

    ``key`` seeds the per-particle random streams (e.g. ``(seed, ao_iter, slot)``),
    so results do not depend on how slots are scheduled across workers.
    ``init_positions`` overrides the default swarm seeding.
    """
    from .baselines import sula_layout

    s = scenario
    pso = s.pso
    P, T, dim = pso.particles, pso.T_max, ctx.dim
    streams = [_stream(key, p) for p in range(P)]
    if init_positions is None:
        pos = np.empty((P, dim))
        for p in range(P):
            if p == 0 and warm is not None:
                pos[p] = warm.x if ctx.fixed_rx is not None else warm.as_vector()
            elif p <= 1:
                sx = sula_layout(ctx.n_tx, ctx.D)
                pos[p] = sx if ctx.fixed_rx is not None else np.concatenate([sx, sula_layout(ctx.n_rx, ctx.D)])
            else:
                xs = random_layout(ctx.n_tx, ctx.D, ctx.D_min, streams[p])
                if ctx.fixed_rx is None:
                    xs = np.concatenate([xs, random_layout(ctx.n_rx, ctx.D, ctx.D_min, streams[p])])
                pos[p] = xs
    else:
        pos = np.array(init_positions, dtype=float).reshape(P, dim)
    vel = np.zeros((P, dim)) if init_velocities is None else np.array(init_velocities, dtype=float).reshape(P, dim)

    rand = np.empty((T, P, 2, dim))
    for p in range(P):
        if pso.per_coordinate_r:
            rand[:, p] = streams[p].random((T, 2, dim))
        else:
            rand[:, p] = streams[p].random((T, 2, 1))

    # the penalty must dominate every feasible fitness, whatever the physical scale
    f0, v0 = _kernels.swarm_fitness(pos, ctx.n_tx, ctx.F, ctx.sin_t, ctx.gain, ctx.kwave, ctx.D, ctx.D_min, 0.0,
                                    ctx.ap_fixed)
    feas0 = f0[v0 == 0]
    best0 = float(feas0.max()) if feas0.size else 0.0
    eta = max(pso.eta, 10.0 * (1.0 + abs(best0)))

    gbest, gfit, hist = _kernels.pso_run(
        pos, vel, rand, ctx.n_tx, ctx.F, ctx.sin_t, ctx.gain, ctx.kwave, ctx.D, ctx.D_min, eta,
        pso.c1, pso.c2, pso.omega_max, pso.omega_min, ctx.ap_fixed,
    )
    if not np.isfinite(gfit):
        raise RuntimeError("no feasible particle in the swarm")
    x, y = ctx.split(gbest)
    return PsoResult(ArrayLayout(x.copy(), np.array(y, copy=True)), float(gfit), np.asarray(hist), eta)
