"""``gridsched`` command-line front end.

Exit codes: 0 success, 2 invalid input, 3 infeasible scenario, 4 solver failure.

Settings precedence is flags > config file > built-in defaults.  Scenario
files may carry a ``solver`` section with ``tol_feas``, ``tol_opt`` and
``refactor_interval``; the matching flags override it.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys
from importlib import resources
from pathlib import Path

from gridsched import __version__, io
from gridsched.generator import generate
from gridsched.lp import SolverError
from gridsched.lp.lpformat import write_lp
from gridsched.metrics import UndefinedMetricError, build_report
from gridsched.model import CapPolicy, ConfigError, DirectionMode, GridschedError, ScenarioConfig, validate
from gridsched.report import write_run
from gridsched.schedule import (InfeasibleScenario, NonconvexPriceError, ValidationError, build_model,
                                solve_scenario)

EXIT_OK, EXIT_INVALID, EXIT_INFEASIBLE, EXIT_SOLVER = 0, 2, 3, 4
SEED_ENV = "GRIDSCHED_SEED"
SOLVER_KEYS = ("tol_feas", "tol_opt", "refactor_interval")

log = logging.getLogger("gridsched")


def data_path(name: str) -> Path:
    """Path to a bundled config (``demo_generator.json`` etc.)."""
    return Path(str(resources.files("gridsched") / "data" / name))


def _input(path: str) -> Path:
    # bundled configs can be named without a path, e.g. ``demo_generator``
    p = Path(path)
    if p.exists():
        return p
    for cand in (path, path + ".json"):
        bundled = data_path(cand)
        if bundled.exists():
            return bundled
    raise ConfigError(path, "no such file")


def _load_any(path: Path) -> tuple[ScenarioConfig, dict]:
    doc = io.load_json(path)
    if io.is_scenario_doc(doc):
        return io.scenario_from_dict(doc, path.parent), doc
    return generate(io.generator_from_dict(doc)).scenario, doc


def _apply_flags(config: ScenarioConfig, args) -> ScenarioConfig:
    if getattr(args, "mode", None):
        config = config.replace(direction_mode=DirectionMode.parse(args.mode))
    if getattr(args, "price", None):
        config = config.with_price_profile(args.price)
    eta_flag = getattr(args, "eta", None)
    constrain = getattr(args, "constrain", None)
    if eta_flag is not None or constrain is not None:
        eta = config.cap_policy.eta
        if eta_flag is not None:
            eta = None if eta_flag.lower() in ("none", "inf") else float(eta_flag)
        zones = config.cap_policy.constrained_zones
        if constrain is not None:
            zones = constrain if constrain in ("all", "none") else tuple(z for z in constrain.split(",") if z)
        config = config.with_cap_policy(CapPolicy(eta, zones))
    if getattr(args, "currency", None):
        config = config.replace(currency=args.currency)
    return config


def _solver_options(doc: dict, args) -> dict:
    opts = {k: v for k, v in doc.get("solver", {}).items() if k in SOLVER_KEYS}
    for key in SOLVER_KEYS:
        val = getattr(args, key, None)
        if val is not None:
            opts[key] = val
    return opts


def cmd_generate(args) -> int:
    doc = io.load_json(_input(args.config))
    gen = io.generator_from_dict(doc)
    seed = args.seed
    if seed is None and os.environ.get(SEED_ENV):
        try:
            seed = int(os.environ[SEED_ENV])
        except ValueError:
            raise ConfigError(SEED_ENV, f"not an integer: {os.environ[SEED_ENV]!r}") from None
    if seed is not None:
        import dataclasses

        gen = dataclasses.replace(gen, rng_seed=seed)
    fleet = generate(gen)
    out = Path(args.output)
    out.parent.mkdir(parents=True, exist_ok=True)
    io.save_scenario(fleet.scenario, out)
    if args.dump_presence:
        io.write_presence_csv(fleet.scenario, args.dump_presence)
    s = fleet.summary()
    print(f"wrote {out} ({s['fleet_size']} EVs, seed {gen.rng_seed})")
    print("user types: " + ", ".join(f"{k}={v}" for k, v in s["user_types"].items()))
    print("residential by zone: " + ", ".join(f"{k}={v}" for k, v in s["residential_by_zone"].items()))
    return EXIT_OK


def cmd_validate(args) -> int:
    config, _ = _load_any(_input(args.scenario))
    config = _apply_flags(config, args)
    report = validate(config)
    for w in report.warnings:
        print(f"warning: {w}")
    for v in report.violations:
        print(f"error: {v}")
    if not report.ok:
        return EXIT_INVALID
    print(f"ok: {len(config.fleet)} EVs, {len(config.zones)} zones, {config.grid.interval_count} intervals")
    return EXIT_OK


def _export(config: ScenarioConfig, path) -> None:
    lp, _ = build_model(config)
    write_lp(lp, path, comment=f"gridsched {__version__} scenario {config.name} "
                              f"({config.direction_mode.value}, {config.prices.profile_kind.value})")


def cmd_export_lp(args) -> int:
    config, _ = _load_any(_input(args.scenario))
    config = _apply_flags(config, args)
    _export(config, args.output)
    print(f"wrote {args.output}")
    return EXIT_OK


def cmd_solve(args) -> int:
    path = _input(args.scenario)
    config, doc = _load_any(path)
    config = _apply_flags(config, args)
    opts = _solver_options(doc, args)
    if args.export_lp:
        _export(config, args.export_lp)
    schedule = solve_scenario(config, **opts)
    report = build_report(schedule, config)
    out = Path(args.output or f"{path.stem}-out")
    write_run(schedule, report, config, out)
    for w in schedule.warnings:
        print(f"warning: {w}", file=sys.stderr)
    print(f"{'zone':<10}{'peak %':>10}{'energy %':>10}")
    for z, mu, xi in zip(report.zone_ids, report.peak_ratio, report.energy_ratio):
        print(f"{z:<10}{mu:>10.1f}{xi:>10.1f}")
    print(f"total cost: {report.total_cost:.2f} {report.currency} ({schedule.iterations} simplex iterations)")
    print(f"wrote {out}")
    return EXIT_OK


def cmd_sweep(args) -> int:
    from gridsched.sweep import SweepSpec, read_summary, run_sweep

    spec = SweepSpec.load(_input(args.spec))
    if args.output_dir:
        spec.output_dir = Path(args.output_dir)
    summary = run_sweep(spec, jobs=args.jobs, force=args.force)
    rows = read_summary(summary)
    failed = [r for r in rows if r["status"] != "ok"]
    print(f"{len(rows)} runs, {len(failed)} not ok; summary in {summary}")
    for r in failed:
        print(f"  {r['run_id'] or '-'}: {r['status']}: {r['message']}")
    return EXIT_OK


def _scenario_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--mode", choices=["uni", "v2g"], help="charging direction (default: from scenario)")
    p.add_argument("--price", choices=["rt", "nd", "re"], help="price profile (default: from scenario)")
    p.add_argument("--eta", help="cap headroom over local peak, e.g. 0.3, or 'none' to lift caps")
    p.add_argument("--constrain", help="zones to cap: all, none, or comma-separated zone ids")
    p.add_argument("--currency", help="currency label in reports (default: scenario, else AUD)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="gridsched", description="Fleet charge scheduling with zone power caps.")
    parser.add_argument("--version", action="version", version=f"gridsched {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate", help="generate a scenario from a generator config")
    p.add_argument("config")
    p.add_argument("-o", "--output", required=True, help="scenario JSON to write")
    p.add_argument("--seed", type=int, help=f"override rng_seed (also via {SEED_ENV})")
    p.add_argument("--dump-presence", metavar="DIR", help="also write presence/driving CSVs")
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("validate", help="check a scenario without solving")
    p.add_argument("scenario")
    _scenario_flags(p)
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("solve", help="solve a scenario and write schedule and report files")
    p.add_argument("scenario")
    p.add_argument("-o", "--output", help="output directory (default: <scenario>-out)")
    _scenario_flags(p)
    p.add_argument("--tol-feas", dest="tol_feas", type=float)
    p.add_argument("--tol-opt", dest="tol_opt", type=float)
    p.add_argument("--refactor-interval", dest="refactor_interval", type=int)
    p.add_argument("--export-lp", metavar="PATH", help="also write the LP in text format")
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("sweep", help="run a parameter sweep")
    p.add_argument("spec")
    p.add_argument("--jobs", type=int, default=None, help="parallel runs (default: CPU count)")
    p.add_argument("--force", action="store_true", help="re-solve runs already on disk")
    p.add_argument("-o", "--output-dir", help="override the spec's output_dir")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("export-lp", help="write a scenario's LP in text format")
    p.add_argument("scenario")
    p.add_argument("output")
    _scenario_flags(p)
    p.set_defaults(func=cmd_export_lp)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"invalid config: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except ValidationError as exc:
        print("invalid scenario:", file=sys.stderr)
        for v in exc.report.violations:
            print(f"  {v}", file=sys.stderr)
        return EXIT_INVALID
    except (NonconvexPriceError, UndefinedMetricError) as exc:
        print(f"invalid scenario: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except InfeasibleScenario as exc:
        print(f"infeasible: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except SolverError as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    except GridschedError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
