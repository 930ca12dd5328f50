"""Time the numba kernels against their numpy counterparts.

    python benchmarks/bench_kernels.py [--repeat 5] [--e2e]

``--e2e`` also times one full default run in a subprocess per backend
(``UAVFAS_NO_NUMBA=1`` selects numpy).
"""
from __future__ import annotations

import argparse
import os
import subprocess
import sys
import time

import numpy as np

from uavfas import _kernels as k
from uavfas._accel import NUMBA_AVAILABLE
from uavfas.pso import SlotContext, random_layout
from uavfas.scenario import default_scenario
from uavfas.trajectory import straight_path


def _best(fn, repeat):
    fn()  # warm-up / JIT
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def _setup(seed=0):
    s = default_scenario(seed)
    q = straight_path(s).q
    rng = np.random.default_rng(seed)
    u = rng.standard_normal(s.M_t) + 1j * rng.standard_normal(s.M_t)
    R = s.P_max * np.outer(u, u.conj()) / np.vdot(u, u).real
    ctx = SlotContext.build(s, q[s.N // 2], R)
    P, T, dim = s.pso.particles, s.pso.T_max, ctx.dim
    pos = np.stack([np.concatenate([random_layout(s.M_t, s.D, s.D_min, rng), random_layout(s.M_r, s.D, s.D_min, rng)])
                    for _ in range(P)])
    vel = np.zeros_like(pos)
    rand = rng.random((T, P, 2, 1)) * np.ones((1, 1, 1, dim))
    raw = q + rng.normal(0, 30, q.shape)
    return s, ctx, pos, vel, rand, raw


def main(argv=None):
    ap = argparse.ArgumentParser()
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--e2e", action="store_true")
    args = ap.parse_args(argv)
    if not NUMBA_AVAILABLE:
        print("numba not installed; nothing to compare")
        return 1
    s, c, pos, vel, rand, raw = _setup()
    ps = s.pso
    fit_args = (pos, c.n_tx, c.F, c.sin_t, c.gain, c.kwave, c.D, c.D_min, 1e20, -1.0)
    run_args = (pos, vel, rand, c.n_tx, c.F, c.sin_t, c.gain, c.kwave, c.D, c.D_min, 1e20,
                ps.c1, ps.c2, ps.omega_max, ps.omega_min, -1.0)
    proj_args = (raw, s.step_max, 1e-9, 500)
    cases = [
        ("swarm_fitness (50 particles)", k.swarm_fitness_nb, k.swarm_fitness_np, fit_args),
        ("pso_run (50 particles x 50 iters)", k.pso_run_nb, k.pso_run_np, run_args),
        ("project_path (N=20)", k.project_path_nb, k.project_path_np, proj_args),
    ]
    print(f"{'kernel':<36}{'numba [ms]':>12}{'numpy [ms]':>12}{'speedup':>10}")
    for name, fnb, fnp, a in cases:
        tn = _best(lambda: fnb(*a), args.repeat)
        tp = _best(lambda: fnp(*a), args.repeat)
        print(f"{name:<36}{tn * 1e3:>12.3f}{tp * 1e3:>12.3f}{tp / tn:>10.1f}")
        np.testing.assert_allclose(np.asarray(fnb(*a)[0]), np.asarray(fnp(*a)[0]), rtol=1e-9, atol=1e-12)
    if args.e2e:
        for label, flag in (("numba", "0"), ("numpy", "1")):
            env = dict(os.environ, UAVFAS_NO_NUMBA=flag)
            t0 = time.perf_counter()
            subprocess.run([sys.executable, "-m", "uavfas", "run", "--seed", "0", "--out-dir",
                            f"/tmp/bench_{label}"], env=env, check=True, stdout=subprocess.DEVNULL)
            print(f"full default run, {label}: {time.perf_counter() - t0:.1f} s")
    return 0


if __name__ == "__main__":
    sys.exit(main())
