"""Command-line front end.

Subcommands:
    build-model   assemble the grid, learn R, and cache it to disk
    forward       power CSV -> steady-state thermal CSV (+ heatmap)
    invert        thermal CSV -> reconstructed power CSV + residual report
    evaluate      run the DVFS x scheduling evaluator (one workload or all)

Exit codes: 0 success; 2 configuration/parse errors (also argparse usage);
3 solver or inversion failures; 4 thermal runaway; 1 anything unexpected.
Outputs are deterministic for identical configuration files.
"""

import argparse
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .config import load_run_config
from .electrothermal import Device
from .errors import (
    ApuThermError,
    ConfigError,
    FloorplanSyntaxError,
    FloorplanValidationError,
    InversionError,
    ResolutionError,
    SolverError,
    ThermalRunawayError,
)
from .inverse import reconstruct
from .reports import (
    eval_results_csv,
    parse_power_csv,
    parse_thermal_csv,
    power_map_csv,
    render_heatmap,
    thermal_map_csv,
)
from .schedule import (
    ModelContext,
    Objective,
    affinity_sweep,
    enumerate_decisions,
    evaluate,
    rank,
    summary_table,
)
from .thermal import (
    ThermalMap,
    build_grid,
    build_response_matrix,
    load_response_matrix,
    save_response_matrix,
    solve_steady,
)

CACHE_FILENAME = "response_matrix.txt"

EXIT_CONFIG = 2
EXIT_SOLVER = 3
EXIT_RUNAWAY = 4


def _resolution(text):
    try:
        nx, ny = text.lower().split("x")
        return (int(nx), int(ny))
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected NxN, got {text!r}") from exc


def _build_parser():
    ap = argparse.ArgumentParser(
        prog="aputherm",
        description="Floorplan-level electro-thermal modeling of CPU-GPU dies.",
    )
    ap.add_argument("--version", action="version", version=f"aputherm {__version__}")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, default=None, help="run-config TOML")
    common.add_argument("--resolution", type=_resolution, default=None, metavar="NxN")
    common.add_argument("--out", type=Path, default=None, help="output directory")
    common.add_argument("--seed", type=int, default=0,
                        help="seed for any randomized option (noise injection)")

    sub = ap.add_subparsers(dest="command", required=True)
    sub.add_parser("build-model", parents=[common],
                   help="learn the response matrix and cache it")

    fwd = sub.add_parser("forward", parents=[common],
                         help="steady-state thermal map for a power CSV")
    fwd.add_argument("power_csv", type=Path)
    fwd.add_argument("--heatmaps", action="store_true")
    fwd.add_argument("--noise-sigma", type=float, default=0.0, metavar="K",
                     help="add seeded Gaussian noise to the output map")

    inv = sub.add_parser("invert", parents=[common],
                         help="reconstruct the power map from a thermal CSV")
    inv.add_argument("thermal_csv", type=Path)

    ev = sub.add_parser("evaluate", parents=[common],
                        help="evaluate scheduling decisions for a workload or 'all'")
    ev.add_argument("workload", help="workload name or 'all'")
    ev.add_argument("--objective", choices=[o.value for o in Objective], default=None)
    ev.add_argument("--affinity-sweep", action="store_true")
    ev.add_argument("--heatmaps", action="store_true")
    return ap


def _load_cfg(args):
    return load_run_config(args.config, resolution=args.resolution, output_dir=args.out)


def _grid(cfg):
    return build_grid(cfg.floorplan, cfg.nx, cfg.ny, cfg.bc, cfg.stack)


def _cached_response(cfg, grid, quiet=False):
    """Load R from the cache when the metadata hash matches, else rebuild
    (and refresh the cache)."""
    cfg.output_dir.mkdir(parents=True, exist_ok=True)
    cache = cfg.output_dir / CACHE_FILENAME
    expected = grid.metadata_hash()
    if cache.exists():
        rm = load_response_matrix(cache, expected_hash=expected)
        if rm is not None:
            if not quiet:
                print(f"cache hit: {cache}")
            return rm, True
        print(f"warning: cache at {cache} is stale or corrupt; rebuilding", file=sys.stderr)
    rm = build_response_matrix(grid)
    save_response_matrix(rm, cache)
    return rm, False


def cmd_build_model(args):
    cfg = _load_cfg(args)
    grid = _grid(cfg)
    rm, hit = _cached_response(cfg, grid)
    if not hit:
        print(f"built response matrix ({rm.n_blocks}x{rm.n_blocks}) "
              f"-> {cfg.output_dir / CACHE_FILENAME}")
    return 0


def cmd_forward(args):
    cfg = _load_cfg(args)
    grid = _grid(cfg)
    pmap = parse_power_csv(args.power_csv.read_text(encoding="utf-8"), cfg.floorplan)
    tmap = solve_steady(grid, pmap)
    if args.noise_sigma > 0.0:
        rng = np.random.default_rng(args.seed)
        tmap = ThermalMap(
            tmap.values + rng.normal(0.0, args.noise_sigma, size=tmap.values.shape),
            kind="celsius",
            provenance=tmap.provenance,
        )
    cfg.output_dir.mkdir(parents=True, exist_ok=True)
    out = cfg.output_dir / "thermal_map.csv"
    out.write_text(thermal_map_csv(cfg.floorplan, tmap), encoding="utf-8")
    print(f"wrote {out} (peak {tmap.values.max():.2f} C)")
    if args.heatmaps:
        img = cfg.output_dir / "thermal_map.pgm"
        render_heatmap(grid, tmap, img)
        print(f"wrote {img}")
    return 0


def cmd_invert(args):
    cfg = _load_cfg(args)
    grid = _grid(cfg)
    rm, _ = _cached_response(cfg, grid, quiet=True)
    tmap = parse_thermal_csv(args.thermal_csv.read_text(encoding="utf-8"), cfg.floorplan)
    result = reconstruct(rm, tmap)
    cfg.output_dir.mkdir(parents=True, exist_ok=True)
    out = cfg.output_dir / "power_map.csv"
    out.write_text(power_map_csv(cfg.floorplan, result.p_star), encoding="utf-8")
    print(f"wrote {out}")
    print(f"total power: {result.p_star.total:.6g} W")
    print(f"residual norm: {result.residual_norm:.6g} K")
    print(f"KKT certificate: {'pass' if result.kkt_ok else 'FAIL'}; "
          f"iterations: {result.iterations}; "
          f"clamped blocks: {sorted(result.active_set) or 'none'}")
    if not result.converged:
        print("warning: iteration limit reached; result not converged", file=sys.stderr)
        return EXIT_SOLVER
    return 0


def _decision_slug(d):
    dev = "cpu" if d.device is Device.CPU else "gpu"
    return f"{dev}_{d.dvfs.cpu_freq_ghz:g}ghz_host{d.host_core}"


def cmd_evaluate(args):
    cfg = _load_cfg(args)
    grid = _grid(cfg)
    rm, _ = _cached_response(cfg, grid, quiet=True)
    ctx = ModelContext(cfg.floorplan, rm, cfg.calibration)
    cfg.output_dir.mkdir(parents=True, exist_ok=True)

    names = list(cfg.workloads)
    if args.workload != "all":
        if args.workload not in cfg.workloads:
            raise ConfigError(
                f"unknown workload {args.workload!r}; available: {', '.join(names)}"
            )
        names = [args.workload]

    objective = Objective(args.objective) if args.objective else None

    if args.affinity_sweep:
        results_by_wl = {}
        for name in names:
            cores = cfg.floorplan.host_capable_indices
            sweep = affinity_sweep(cfg.workloads[name], cores, ctx)
            results_by_wl[name] = sweep
            out = cfg.output_dir / f"affinity_{name}.csv"
            out.write_text(eval_results_csv(name, sweep), encoding="utf-8")
            print(f"wrote {out}")
        _maybe_heatmaps(args, cfg, grid, ctx, results_by_wl)
        return 0

    results_by_wl = {}
    for name in names:
        results = [evaluate(cfg.workloads[name], d, ctx)
                   for d in enumerate_decisions(ctx, host_affinity=False)]
        results_by_wl[name] = results
        out = cfg.output_dir / f"decisions_{name}.csv"
        out.write_text(eval_results_csv(name, results), encoding="utf-8")
        print(f"wrote {out}")
        if objective is not None:
            best = rank(results, objective)[0]
            print(f"{name}: minimum {objective.value} -> {best.decision.label()}")

    if args.workload == "all":
        table = summary_table(
            [cfg.workloads[n] for n in names],
            [Objective.MIN_POWER, Objective.MIN_RUNTIME, Objective.MIN_ENERGY],
            ctx,
        )
        out = cfg.output_dir / "summary_table.csv"
        out.write_text(table.to_csv(), encoding="utf-8")
        print(f"wrote {out}")
        print(table.to_text(), end="")

    _maybe_heatmaps(args, cfg, grid, ctx, results_by_wl)
    return 0


def _maybe_heatmaps(args, cfg, grid, ctx, results_by_wl):
    if not args.heatmaps:
        return
    for name, results in results_by_wl.items():
        for r in results:
            slug = _decision_slug(r.decision)
            img = cfg.output_dir / f"heatmap_{name}_{slug}.pgm"
            t = ThermalMap(
                ctx.inlet_c + ctx.response.r @ r.power_breakdown.values,
                kind="celsius",
            )
            render_heatmap(grid, t, img)
        print(f"wrote {len(results)} heatmaps for {name}")


def main(argv=None):
    ap = _build_parser()
    args = ap.parse_args(argv)
    handlers = {
        "build-model": cmd_build_model,
        "forward": cmd_forward,
        "invert": cmd_invert,
        "evaluate": cmd_evaluate,
    }
    try:
        return handlers[args.command](args)
    except ThermalRunawayError as exc:
        print(f"error: thermal runaway: {exc}", file=sys.stderr)
        return EXIT_RUNAWAY
    except (SolverError, InversionError) as exc:
        print(f"error: solver: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    except (ConfigError, FloorplanSyntaxError, FloorplanValidationError,
            ResolutionError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ApuThermError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
