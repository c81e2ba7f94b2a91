"""
Command-line interface.

    levichain physics [--radius-m R ...]
    levichain simulate --scenario P --seed N [--out DIR] [--sweep seeds=a..b]
    levichain plan --scenario P [--out DIR]
    levichain poc --seed N [--out DIR] [--sweep seeds=a..b]
    levichain report --in DIR --format csv|json

Exit codes: 0 success, 1 validation or usage error, 2 runtime error.
"""

from __future__ import annotations

import argparse
import logging
import re
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path
from typing import Optional, Sequence

from levichain import artifacts
from levichain.engine import plan_scenario, run, run_poc_trials, with_plan
from levichain.physics import (
    Environment,
    OilType,
    acoustic_intensity,
    arp_from_intensity,
    buoyant_arf,
    oil_spill_rate_effective,
    oil_spill_rate_paper,
    required_trapping_pressure,
)
from levichain.scenario import ScenarioError, bundled_scenario_path, load_scenario

log = logging.getLogger("levichain")

EXIT_OK, EXIT_VALIDATION, EXIT_RUNTIME = 0, 1, 2

# rounded values printed in the bench write-up, for side-by-side display
BENCH_REFERENCE = {"arp_pa": 0.815, "arf_n": 1.23e-5, "required_arp_pa": 3.91}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.format_usage()}{self.prog}: error: {message}")


def _parse_sweep(text: str) -> list[int]:
    m = re.fullmatch(r"seeds=(-?\d+)\.\.(-?\d+)", text.strip())
    if not m:
        raise UsageError(f"--sweep expects seeds=a..b, got {text!r}")
    a, b = int(m.group(1)), int(m.group(2))
    if b < a:
        raise UsageError("--sweep range is empty")
    return list(range(a, b + 1))


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="levichain", description="Acoustic-levitation oil-spill containment simulator")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    ph = sub.add_parser("physics", help="print spill rate, ARP, ARF and trapping threshold")
    ph.add_argument("--radius-m", type=float, default=0.001)
    ph.add_argument("--oil-density", type=float, default=700.0)
    ph.add_argument("--water-density", type=float, default=1000.0)
    ph.add_argument("--viscosity", type=float, default=0.05)
    ph.add_argument("--gravity", type=float, default=9.81)
    ph.add_argument("--wind-speed", type=float, default=0.0)
    ph.add_argument("--spreading-constant", type=float, default=1.0)
    ph.add_argument("--num-transducers", type=int, default=14)
    ph.add_argument("--power-per-transducer", type=float, default=1.0)
    ph.add_argument("--area", type=float, default=0.1)
    ph.add_argument("--sound-speed", type=float, default=343.0)

    sim = sub.add_parser("simulate", help="run one scenario")
    sim.add_argument("--scenario", required=True)
    sim.add_argument("--seed", type=int)
    sim.add_argument("--out")
    sim.add_argument("--sweep")
    sim.add_argument("--workers", type=int, default=None)

    pl = sub.add_parser("plan", help="place a levitator chain around the forecast slick")
    pl.add_argument("--scenario", required=True)
    pl.add_argument("--out")

    poc = sub.add_parser("poc", help="replicate the four chained bench trials")
    poc.add_argument("--seed", type=int)
    poc.add_argument("--scenario", default=None, help="defaults to the bundled poc_bench.json")
    poc.add_argument("--out")
    poc.add_argument("--sweep")
    poc.add_argument("--workers", type=int, default=None)

    rep = sub.add_parser("report", help="print a run's report")
    rep.add_argument("--in", dest="indir", required=True)
    rep.add_argument("--format", choices=("csv", "json"), default="json")
    return p


def _out_dir(arg: Optional[str]) -> Path:
    return Path(arg) if arg else artifacts.default_out_dir()


def _seeds(args) -> list[int]:
    if args.sweep:
        return _parse_sweep(args.sweep)
    if args.seed is None:
        raise UsageError("--seed is required (or --sweep seeds=a..b)")
    return [args.seed]


def cmd_physics(args) -> int:
    env = Environment(
        wind_speed=args.wind_speed,
        water_density=args.water_density,
        sound_speed=args.sound_speed,
        gravity=args.gravity,
        spreading_constant=args.spreading_constant,
    )
    oil = OilType("cli", density=args.oil_density, viscosity=args.viscosity)
    total = args.num_transducers * args.power_per_transducer
    intensity = acoustic_intensity(total, args.area)
    values = {
        "osr_paper": oil_spill_rate_paper(env, oil),
        "osr_effective_per_s": oil_spill_rate_effective(env, oil),
        "total_power_w": total,
        "intensity_wm2": intensity,
        "arp_pa": arp_from_intensity(intensity, env.sound_speed),
        "arf_n": buoyant_arf(args.radius_m, oil, env),
        "required_arp_pa": required_trapping_pressure(args.radius_m, oil, env),
    }
    for key, v in values.items():
        print(f"{key}: {v + 0.0:.5g}")
    for key, ref in BENCH_REFERENCE.items():
        rel = (values[key] - ref) / ref
        print(f"# {key} vs bench rounded value {ref:g}: {rel:+.2%} (bench figures are rounded)")
    return EXIT_OK


def _simulate_one(scenario_path: str, seed: int, out: str) -> str:
    scenario = load_scenario(scenario_path)
    report = run(scenario, seed)
    artifacts.write_run(Path(out), scenario, report)
    fc = report.final_counts
    return f"seed {seed}: trapped={fc['trapped']} escaped={fc['escaped']} free={fc['free']} -> {out}"


def _poc_one(scenario_path: str, seed: int, out: str) -> str:
    scenario = load_scenario(scenario_path)
    records, reports = run_poc_trials(scenario, seed)
    artifacts.write_poc(Path(out), scenario, seed, records, reports)
    lines = [f"seed {seed} -> {out}"]
    for i, r in enumerate(records, start=1):
        lines.append(f"  trial {i} {r.pressure_level:<6} initial {r.initial_trapped_pct:6.2f}% "
                     f"final {r.final_trapped_pct:6.2f}% duration {r.duration_min:g} min")
    return "\n".join(lines)


def _fan_out(fn, scenario_path: str, seeds: list[int], out: Path, sweep: bool, workers) -> None:
    load_scenario(scenario_path)  # fail fast with validation errors
    if not sweep:
        print(fn(scenario_path, seeds[0], str(out)))
        return
    dirs = [str(out / f"seed_{s}") for s in seeds]
    with ProcessPoolExecutor(max_workers=workers) as ex:
        for line in ex.map(fn, [scenario_path] * len(seeds), seeds, dirs):
            print(line)


def cmd_simulate(args) -> int:
    seeds = _seeds(args)
    _fan_out(_simulate_one, args.scenario, seeds, _out_dir(args.out), bool(args.sweep), args.workers)
    return EXIT_OK


def cmd_poc(args) -> int:
    seeds = _seeds(args)
    path = args.scenario or str(bundled_scenario_path("poc_bench.json"))
    _fan_out(_poc_one, path, seeds, _out_dir(args.out), bool(args.sweep), args.workers)
    return EXIT_OK


def cmd_plan(args) -> int:
    scenario = load_scenario(args.scenario)
    result = plan_scenario(scenario)
    planned = with_plan(scenario, result.plan)
    out = _out_dir(args.out)
    artifacts.write_plan(out, scenario, planned, result)
    print(f"{len(result.plan.placements)} units, spacing {result.plan.spacing:.4g} m, "
          f"coverage {result.plan.coverage:.4f} -> {out}")
    return EXIT_OK


def cmd_report(args) -> int:
    d = Path(args.indir)
    name = "report.json" if args.format == "json" else "timeseries.csv"
    path = d / name
    if not path.exists():
        print(f"levichain: no {name} in {d}", file=sys.stderr)
        return EXIT_RUNTIME
    sys.stdout.write(path.read_text(encoding="utf-8"))
    return EXIT_OK


COMMANDS = {
    "physics": cmd_physics,
    "simulate": cmd_simulate,
    "plan": cmd_plan,
    "poc": cmd_poc,
    "report": cmd_report,
}


def cli(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                            format="%(levelname)s %(name)s: %(message)s")
        return COMMANDS[args.command](args)
    except SystemExit as e:  # --help
        return int(e.code or 0)
    except UsageError as e:
        print(e, file=sys.stderr)
        return EXIT_VALIDATION
    except ScenarioError as e:
        print(f"levichain: {e}", file=sys.stderr)
        return EXIT_VALIDATION
    except (ValueError, OSError, RuntimeError) as e:
        print(f"levichain: {e}", file=sys.stderr)
        return EXIT_RUNTIME


def main() -> None:
    sys.exit(cli())


if __name__ == "__main__":
    main()
