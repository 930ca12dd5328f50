"""Seeded batch experiments and their CSV / JSON outputs."""
from __future__ import annotations

import csv
import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .baselines import SchemeId, run_scheme
from .beamform import beampattern_gain
from .geometry import aod
from .scenario import draw_targets

SWEEP_VARIABLES = ("P_max_dBm", "region_size_multiple_of_lambda", "K_targets")
DEFAULT_GRIDS = {
    "P_max_dBm": (20.0, 25.0, 30.0, 35.0, 40.0),
    # 5 wavelengths cannot hold 12 elements at half-wavelength spacing; the grid starts at 5.5
    "region_size_multiple_of_lambda": (5.5, 10.0, 15.0, 20.0, 25.0),
    "K_targets": (2, 4, 6, 8),
}


def fmt(x) -> str:
    """Stable text form of a number: shortest round-trip repr, ``inf`` for infinity."""
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    x = float(x)
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return repr(x)


def write_csv(path, header, rows) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for r in rows:
            w.writerow([v if isinstance(v, str) else fmt(v) for v in r])
    return path


def for_seed(base, seed, redraw_targets=True, K=None):
    """Copy of ``base`` with a new seed; targets are redrawn from the seed unless disabled."""
    K = base.K if K is None else K
    if not redraw_targets and K == base.K:
        return base.with_updates(seed=seed)
    if not redraw_targets:
        raise ValueError("changing K needs redrawn targets")
    return base.with_updates(seed=seed, targets=draw_targets(K, base.region_size, seed), rcs=(base.rcs[0],) * K)


# ------------------------------------------------------------ solution dump


def solution_dict(solution, scenario) -> dict:
    return {
        "scheme": solution.scheme.value,
        "seed": scenario.seed,
        "iterations_used": solution.iterations_used,
        "converged": solution.converged,
        "path": [[float(x), float(y)] for x, y in solution.path.q],
        "layouts": [{"x": lay.x.tolist(), "y": lay.y.tolist()} for lay in solution.layouts],
        "covariances": [
            {"real": np.real(b.R).tolist(), "imag": np.imag(b.R).tolist()} for b in solution.R
        ],
        "avg_crb": solution.report.avg_crb,
        "n_infinite": solution.report.n_infinite,
        "objective": solution.report.reciprocal_objective,
        "scenario": scenario.to_dict(),
    }


def crb_rows(solution, target_ids=None):
    C = solution.report.per_slot_per_target
    ids = range(C.shape[1]) if target_ids is None else target_ids
    return [(n, k, C[n, k]) for n in range(C.shape[0]) for k in ids]


def convergence_rows(solution):
    return [(it, obj, avg) for it, obj, avg in solution.trace]


def save_results(solution, scenario, out_dir) -> dict:
    """Write ``solution.json``, ``crb_per_target.csv`` and ``convergence.csv``; return their paths."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    sol = out / "solution.json"
    sol.write_text(json.dumps(solution_dict(solution, scenario), indent=1, allow_nan=True) + "\n")
    return {
        "solution": sol,
        "crb": write_csv(out / "crb_per_target.csv", ("slot", "target", "crb_rad2"), crb_rows(solution)),
        "convergence": write_csv(out / "convergence.csv", ("iteration", "objective", "avg_crb"),
                                 convergence_rows(solution)),
    }


# ------------------------------------------------------------- experiments


def _run_cells(cells, fn, workers):
    if workers and workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(fn, cells))
    return [fn(c) for c in cells]


def exp_convergence(base, schemes, seeds, workers=1, redraw_targets=True, tfao_rx="dula"):
    """Rows ``(scheme, seed, iteration, objective, avg_crb)`` for every scheme and seed."""
    cells = [(SchemeId.parse(sc), sd) for sc in schemes for sd in seeds]

    def one(cell):
        sc, sd = cell
        return run_scheme(sc, for_seed(base, sd, redraw_targets), tfao_rx=tfao_rx)

    rows = []
    for (sc, sd), sol in zip(cells, _run_cells(cells, one, workers)):
        rows.extend((sc.value, sd, it, obj, avg) for it, obj, avg in sol.trace)
    return rows


CONVERGENCE_HEADER = ("scheme", "seed", "iteration", "objective", "avg_crb")


def angle_grid(n=721):
    return np.linspace(0.0, np.pi / 2, n)


def exp_beampattern(solution, scenario, slot_index, angles=None):
    """``(rows, markers)``: transmit gain over ``angles`` at one slot and each target's angle there."""
    N = len(solution.R)
    if not 0 <= slot_index < N:
        raise IndexError(f"slot {slot_index} out of range 0..{N - 1}")
    th = angle_grid() if angles is None else np.asarray(angles, dtype=float)
    R = solution.R[slot_index].R
    x = solution.layouts[slot_index].x
    gain = beampattern_gain(R, x, th, scenario.wavelength)
    q = solution.path.q[slot_index]
    markers = aod(q[None, :], scenario.target_array, scenario.H)
    return list(zip(th, gain)), [(k, float(t)) for k, t in enumerate(markers)]


def exp_target_crb(solution, target_ids=None):
    return crb_rows(solution, target_ids)


@dataclass(frozen=True)
class SweepSpec:
    variable: str
    values: tuple
    schemes: tuple = (SchemeId.PROPOSED,)
    seeds: tuple = (0, 1, 2, 3, 4)
    aggregation: str = "median"

    def __post_init__(self):
        if self.variable not in SWEEP_VARIABLES:
            raise ValueError(f"unknown sweep variable {self.variable!r}; choose from {SWEEP_VARIABLES}")
        vals = tuple(self.values)
        if not vals:
            raise ValueError("sweep values must be non-empty")
        if any(b <= a for a, b in zip(vals, vals[1:])):
            raise ValueError("sweep values must be strictly increasing")
        if not self.seeds:
            raise ValueError("need at least one seed")
        if self.aggregation != "median":
            raise ValueError("only median aggregation is supported")
        object.__setattr__(self, "values", vals)
        object.__setattr__(self, "schemes", tuple(SchemeId.parse(s) for s in self.schemes))
        object.__setattr__(self, "seeds", tuple(int(s) for s in self.seeds))

    def scenario(self, base, value, seed, redraw_targets=True):
        if self.variable == "K_targets":
            return for_seed(base, seed, True, K=int(value))
        s = for_seed(base, seed, redraw_targets)
        if self.variable == "P_max_dBm":
            return s.with_updates(P_max_dBm=float(value))
        return s.with_updates(D_wavelengths=float(value))


@dataclass
class SweepResult:
    spec: SweepSpec
    cells: list = field(default_factory=list)  # (value, scheme, seed, avg_crb, objective)
    medians: list = field(default_factory=list)  # (value, scheme, median_avg_crb)

    def series(self, scheme) -> np.ndarray:
        sc = SchemeId.parse(scheme)
        return np.array([m for _, s, m in self.medians if s == sc.value])


SWEEP_HEADER = ("value", "scheme", "median_avg_crb")
SWEEP_CELL_HEADER = ("value", "scheme", "seed", "avg_crb", "objective")


def exp_sweep(spec: SweepSpec, base, workers=1, redraw_targets=True, tfao_rx="dula", runner=None) -> SweepResult:
    """Full pipeline for every (value, scheme, seed); medians over seeds per (value, scheme)."""
    runner = run_scheme if runner is None else runner
    cells = [(v, sc, sd) for v in spec.values for sc in spec.schemes for sd in spec.seeds]

    def one(cell):
        v, sc, sd = cell
        sol = runner(sc, spec.scenario(base, v, sd, redraw_targets), tfao_rx=tfao_rx)
        return sol.report.avg_crb, sol.report.reciprocal_objective

    out = _run_cells(cells, one, workers)
    res = SweepResult(spec)
    for (v, sc, sd), (avg, obj) in zip(cells, out):
        res.cells.append((v, sc.value, sd, avg, obj))
    for v in spec.values:
        for sc in spec.schemes:
            vals = [c[3] for c in res.cells if c[0] == v and c[1] == sc.value]
            res.medians.append((v, sc.value, float(np.median(vals))))
    return res


def save_sweep(result: SweepResult, out_dir, stem) -> tuple[Path, Path]:
    out = Path(out_dir)
    return (
        write_csv(out / f"{stem}.csv", SWEEP_HEADER, result.medians),
        write_csv(out / f"{stem}_cells.csv", SWEEP_CELL_HEADER, result.cells),
    )


# ------------------------------------------------------------------- plots


def plot_lines(path, series, xlabel, ylabel, logy=False, markers=None):
    """Static SVG line chart; ``series`` maps label to ``(x, y)``."""
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    fig, ax = plt.subplots(figsize=(6, 4))
    for label, (x, y) in series.items():
        ax.plot(x, y, marker="o" if len(x) < 30 else None, label=label)
    for m in markers or ():
        ax.axvline(m, color="grey", lw=0.8, ls="--")
    if logy:
        ax.set_yscale("log")
    ax.set_xlabel(xlabel)
    ax.set_ylabel(ylabel)
    if len(series) > 1:
        ax.legend()
    fig.tight_layout()
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)
    return Path(path)
