"""Command-line entry point: ``uavfas <subcommand> [options]``."""
from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

import numpy as np

from . import experiments as ex
from .baselines import SchemeId, run_scheme
from .feasibility import InfeasibleError
from .scenario import ScenarioError, default_scenario, load_scenario

log = logging.getLogger("uavfas")

EXIT_USAGE = 2
EXIT_SCENARIO = 3
EXIT_INFEASIBLE = 4
EXIT_IO = 5
EXIT_NUMERIC = 6
EXIT_CERT = 7


def _common(p):
    p.add_argument("--config", type=Path, help="scenario YAML file (default: built-in scenario)")
    p.add_argument("--seed", type=int, default=0, help="RNG seed (unsigned 64-bit)")
    p.add_argument("--seeds", type=int, default=1, help="number of consecutive seeds starting at --seed")
    p.add_argument("--scheme", default="proposed", choices=[s.value for s in SchemeId])
    p.add_argument("--out-dir", type=Path, default=Path("out"))
    p.add_argument("--plot", action="store_true", help="also write SVG line charts")
    p.add_argument("--workers", type=int, default=1, help="thread pool size")
    p.add_argument("--tfao-rx", choices=("dula", "sula"), default="dula",
                   help="frozen receive geometry of the transmit-only scheme")
    p.add_argument("-v", "--verbose", action="store_true")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="uavfas", description="UAV fluid-antenna multi-target sensing optimiser")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="solve one scheme and write solution.json and CSVs")
    _common(p)

    p = sub.add_parser("convergence", help="objective and avg CRB per iteration for several schemes")
    _common(p)
    p.add_argument("--schemes", nargs="+", default=[s.value for s in SchemeId])

    p = sub.add_parser("beampattern", help="transmit beampattern at one slot of a solved run")
    _common(p)
    p.add_argument("--slot", type=int, default=9, help="0-based slot index")
    p.add_argument("--points", type=int, default=721)

    p = sub.add_parser("target-crb", help="per-slot CRB of selected targets")
    _common(p)
    p.add_argument("--targets", type=int, nargs="+", default=None, help="0-based target ids (default: all)")

    for name, var in (("sweep-power", "P_max_dBm"), ("sweep-region", "region_size_multiple_of_lambda"),
                      ("sweep-targets", "K_targets")):
        p = sub.add_parser(name, help=f"median avg CRB versus {var}")
        _common(p)
        p.add_argument("--values", type=float, nargs="+", default=None)
        p.add_argument("--schemes", nargs="+", default=None)
        p.set_defaults(sweep_var=var)

    p = sub.add_parser("oracle", help="run the solver-versus-oracle certificate suite")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out-dir", type=Path, default=Path("out"))
    p.add_argument("--strict", action="store_true", help="exit nonzero when any certificate fails")
    p.add_argument("-v", "--verbose", action="store_true")
    return ap


def _scenario(args):
    if args.seed < 0 or args.seed >= 2**64:
        raise ValueError("--seed must be an unsigned 64-bit integer")
    if args.seeds < 1:
        raise ValueError("--seeds must be >= 1")
    if args.config is not None:
        base = load_scenario(args.config)
        return base.with_updates(seed=args.seed), False
    return default_scenario(args.seed), True


def _seeds(args):
    return [args.seed + i for i in range(args.seeds)]


def _progress(args):
    if not args.verbose:
        return None
    return lambda l, obj, avg: log.info("iteration %d objective %.6e avg_crb %.6e", l, obj, avg)


def cmd_run(args):
    s, _ = _scenario(args)
    sol = run_scheme(args.scheme, s, workers=args.workers, tfao_rx=args.tfao_rx, progress=_progress(args))
    paths = ex.save_results(sol, s, args.out_dir)
    if args.plot:
        it = [t[0] for t in sol.trace]
        ex.plot_lines(args.out_dir / "convergence.svg", {args.scheme: (it, [t[2] for t in sol.trace])},
                      "iteration", "average CRB (rad^2)", logy=True)
    print(f"{args.scheme}: avg_crb={sol.report.avg_crb:.6e} objective={sol.report.reciprocal_objective:.6e} "
          f"iterations={sol.iterations_used} -> {paths['solution'].parent}")


def cmd_convergence(args):
    s, redraw = _scenario(args)
    rows = ex.exp_convergence(s, args.schemes, _seeds(args), workers=args.workers, redraw_targets=redraw,
                              tfao_rx=args.tfao_rx)
    path = ex.write_csv(args.out_dir / "convergence_schemes.csv", ex.CONVERGENCE_HEADER, rows)
    if args.plot:
        series = {}
        for sc in args.schemes:
            sub = [r for r in rows if r[0] == SchemeId.parse(sc).value and r[1] == args.seed]
            series[sc] = ([r[2] for r in sub], [r[4] for r in sub])
        ex.plot_lines(args.out_dir / "convergence_schemes.svg", series, "iteration", "average CRB (rad^2)",
                      logy=True)
    print(f"wrote {path}")


def _solve(args):
    s, _ = _scenario(args)
    return s, run_scheme(args.scheme, s, workers=args.workers, tfao_rx=args.tfao_rx, progress=_progress(args))


def cmd_beampattern(args):
    s, sol = _solve(args)
    rows, markers = ex.exp_beampattern(sol, s, args.slot, ex.angle_grid(args.points))
    p1 = ex.write_csv(args.out_dir / "beampattern.csv", ("theta_rad", "gain_W"), rows)
    ex.write_csv(args.out_dir / "beampattern_targets.csv", ("target", "theta_rad"), markers)
    if args.plot:
        ex.plot_lines(args.out_dir / "beampattern.svg", {f"slot {args.slot}": ([r[0] for r in rows],
                                                                              [r[1] for r in rows])},
                      "theta (rad)", "gain (W)", markers=[m[1] for m in markers])
    print(f"wrote {p1}")


def cmd_target_crb(args):
    s, sol = _solve(args)
    ids = args.targets
    if ids is not None and any(not 0 <= k < s.K for k in ids):
        raise ValueError(f"target ids must lie in 0..{s.K - 1}")
    rows = ex.exp_target_crb(sol, ids)
    p = ex.write_csv(args.out_dir / "target_crb.csv", ("slot", "target", "crb_rad2"), rows)
    if args.plot:
        series = {}
        for k in (range(s.K) if ids is None else ids):
            sub = [r for r in rows if r[1] == k]
            series[f"target {k}"] = ([r[0] for r in sub], [r[2] for r in sub])
        ex.plot_lines(args.out_dir / "target_crb.svg", series, "slot", "CRB (rad^2)", logy=True)
    print(f"wrote {p}")


def cmd_sweep(args):
    s, redraw = _scenario(args)
    var = args.sweep_var
    values = args.values if args.values is not None else ex.DEFAULT_GRIDS[var]
    if var == "K_targets":
        values = [int(v) for v in values]
    schemes = args.schemes if args.schemes is not None else [args.scheme]
    spec = ex.SweepSpec(var, tuple(values), tuple(schemes), tuple(_seeds(args)))
    res = ex.exp_sweep(spec, s, workers=args.workers, redraw_targets=redraw, tfao_rx=args.tfao_rx)
    stem = f"sweep_{var}"
    p, _ = ex.save_sweep(res, args.out_dir, stem)
    if args.plot:
        series = {sc.value: (list(spec.values), res.series(sc)) for sc in spec.schemes}
        ex.plot_lines(args.out_dir / f"{stem}.svg", series, var, "median average CRB (rad^2)", logy=True)
    print(f"wrote {p}")


def cmd_oracle(args):
    from .certificates import run_suite
    from .oracles import OracleConfig

    lines = []

    def show(c):
        lines.append(c.line())
        print(c.line(), flush=True)

    certs = run_suite(OracleConfig(seed=args.seed), progress=show)
    args.out_dir.mkdir(parents=True, exist_ok=True)
    (args.out_dir / "oracle_report.txt").write_text("\n".join(lines) + "\n")
    failed = [c.name for c in certs if not c.passed]
    print(f"{len(certs) - len(failed)}/{len(certs)} certificates passed")
    if failed and args.strict:
        return EXIT_CERT
    return 0


COMMANDS = {
    "run": cmd_run,
    "convergence": cmd_convergence,
    "beampattern": cmd_beampattern,
    "target-crb": cmd_target_crb,
    "sweep-power": cmd_sweep,
    "sweep-region": cmd_sweep,
    "sweep-targets": cmd_sweep,
    "oracle": cmd_oracle,
}


def _fail(kind, msg, code):
    print(f"error: {kind}: {msg}", file=sys.stderr)
    return code


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if getattr(args, "verbose", False) else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        rc = COMMANDS[args.command](args)
    except ScenarioError as e:
        return _fail("ScenarioError", e, EXIT_SCENARIO)
    except InfeasibleError as e:
        return _fail("InfeasibleError", e, EXIT_INFEASIBLE)
    except OSError as e:
        return _fail("IOError", e, EXIT_IO)
    except (ValueError, IndexError) as e:
        return _fail(type(e).__name__, e, EXIT_USAGE)
    except (FloatingPointError, np.linalg.LinAlgError) as e:
        return _fail("NumericError", e, EXIT_NUMERIC)
    return int(rc or 0)


if __name__ == "__main__":
    sys.exit(main())
