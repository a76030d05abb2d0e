"""``jumps`` command line: generate, run, sweep, energy."""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
import time
from pathlib import Path

from . import energy as energy_mod
from .harness import ExperimentPlan, run_plan
from .protocol import run_full_protocol
from .topology import ConnectivityExhausted, Topology, TopologyConfig, generate_topology
from .zones import network_zone_summary, partition_zones, zone_report_csv

log = logging.getLogger("jumps")

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_CONNECTIVITY = 3
EXIT_IO = 4
EXIT_UNRELIABLE = 5


class CliError(Exception):
    def __init__(self, message: str, code: int):
        super().__init__(message)
        self.code = code


def _read_json(path) -> dict:
    try:
        with open(path) as fh:
            return json.load(fh)
    except OSError as exc:
        raise CliError(f"cannot read {path}: {exc}", EXIT_IO) from exc
    except json.JSONDecodeError as exc:
        raise CliError(f"{path} is not valid JSON: {exc}", EXIT_VALIDATION) from exc


def _resolve_seed(args, config_seed=None) -> int:
    if args.seed is not None:
        return args.seed
    env = os.environ.get("JUMPS_SEED")
    if env:
        try:
            return int(env)
        except ValueError as exc:
            raise CliError(f"JUMPS_SEED={env!r} is not an integer", EXIT_VALIDATION) from exc
    return config_seed if config_seed is not None else 0


def _default_out(kind: str) -> Path:
    return Path(f"jumps-{kind}-{time.strftime('%Y%m%d-%H%M%S')}")


def _prepare_dir(path: Path, force: bool) -> Path:
    if path.exists() and not path.is_dir():
        raise CliError(f"{path} exists and is not a directory", EXIT_IO)
    if path.exists() and any(path.iterdir()) and not force:
        raise CliError(f"{path} is not empty; use --force to overwrite", EXIT_IO)
    try:
        path.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise CliError(f"cannot create {path}: {exc}", EXIT_IO) from exc
    return path


def _write(path: Path, text: str):
    try:
        path.write_text(text)
    except OSError as exc:
        raise CliError(f"cannot write {path}: {exc}", EXIT_IO) from exc


def _topology_config(args) -> TopologyConfig:
    data = _read_json(args.config) if args.config else {}
    data = dict(data)
    data["seed"] = _resolve_seed(args, data.get("seed"))
    try:
        return TopologyConfig.from_dict(data)
    except (TypeError, ValueError) as exc:
        raise CliError(f"invalid topology config: {exc}", EXIT_VALIDATION) from exc


def _generate(config: TopologyConfig) -> Topology:
    try:
        return generate_topology(config)
    except ConnectivityExhausted as exc:
        raise CliError(str(exc), EXIT_CONNECTIVITY) from exc


def cmd_generate(args) -> int:
    config = _topology_config(args)
    out = Path(args.out) if args.out else _default_out("generate") / "topology.json"
    if out.exists() and not args.force:
        raise CliError(f"{out} exists; use --force to overwrite", EXIT_IO)
    topo = _generate(config)
    try:
        out.parent.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise CliError(f"cannot create {out.parent}: {exc}", EXIT_IO) from exc
    _write(out, topo.to_json())
    print(f"nodes={topo.node_count} edges={topo.edge_count} mean_degree={topo.mean_degree:.3f} "
          f"connectivity_retries={topo.retries} -> {out}")
    return EXIT_OK


def cmd_run(args) -> int:
    if args.topology:
        try:
            text = Path(args.topology).read_text()
        except OSError as exc:
            raise CliError(f"cannot read {args.topology}: {exc}", EXIT_IO) from exc
        try:
            topo = Topology.from_json(text)
        except (KeyError, TypeError, ValueError) as exc:
            raise CliError(f"invalid topology document: {exc}", EXIT_VALIDATION) from exc
    else:
        topo = _generate(_topology_config(args))
    if not topo.is_connected():
        raise CliError("topology is not connected", EXIT_CONNECTIVITY)
    if not 0 <= args.initiator < topo.node_count:
        raise CliError(f"initiator {args.initiator} out of range", EXIT_VALIDATION)
    out = _prepare_dir(Path(args.out) if args.out else _default_out("run"), args.force)
    coords, traffic = run_full_protocol(topo, args.initiator)
    partition = partition_zones(coords)
    summary = network_zone_summary(partition, topo, args.weighting)
    _write(out / "coordinates.csv", coords.to_csv(topo))
    _write(out / "zones.csv", zone_report_csv(partition, topo))
    if args.trace:
        _write(out / "trace.csv", traffic.event_log())

    def f(x):
        return "NA" if x is None else f"{x:.4f}"

    print(f"zone_count={summary.zone_count} mean_zone_size={f(summary.mean_zone_size)} "
          f"max_zone_size={f(summary.max_zone_size)} emissions={traffic.emissions} "
          f"receptions={traffic.receptions} -> {out}")
    return EXIT_OK


def _plan(args) -> ExperimentPlan:
    data = _read_json(args.config) if args.config else {}
    data = dict(data)
    data.pop("schema_version", None)
    if args.paper_scale:
        data.setdefault("field_radius", 1000.0)
        data.setdefault("trials", 1000)
    data["base_seed"] = _resolve_seed(args, data.get("base_seed"))
    if args.bin_width is not None:
        data["bin_width"] = args.bin_width
    if args.trials is not None:
        data["trials"] = args.trials
    try:
        return ExperimentPlan.from_dict(data)
    except (TypeError, ValueError) as exc:
        raise CliError(f"invalid plan: {exc}", EXIT_VALIDATION) from exc


def cmd_sweep(args) -> int:
    plan = _plan(args)
    out = _prepare_dir(Path(args.out) if args.out else _default_out("sweep"), args.force)
    n_cells = len(plan.landmark_counts) * len(plan.densities)
    log.info("sweep: %d cells x %d trials, R=%g r=%g, plan %s",
             n_cells, plan.trials, plan.field_radius, plan.radio_range, plan.plan_hash())
    step = max(1, n_cells * plan.trials // 20)

    def progress(done, total):
        if done % step == 0 or done == total:
            log.info("progress %d/%d trials", done, total)

    result = run_plan(plan, jobs=args.jobs, progress=progress)
    try:
        result.write(out)
    except OSError as exc:
        raise CliError(f"cannot write results: {exc}", EXIT_IO) from exc
    print(f"{len(result.cells)} cells -> {out}")
    if result.errors:
        for err in result.errors:
            print(f"error: {err}", file=sys.stderr)
    if result.unreliable_cells:
        return EXIT_UNRELIABLE
    return EXIT_OK


def cmd_energy(args) -> int:
    data = _read_json(args.config) if args.config else {}
    data = {k: v for k, v in data.items() if k != "schema_version"}
    try:
        params = energy_mod.EnergyModelParams(**data)
    except (TypeError, ValueError) as exc:
        raise CliError(f"invalid energy params: {exc}", EXIT_VALIDATION) from exc
    out = _prepare_dir(Path(args.out) if args.out else _default_out("energy"), args.force)
    print(energy_mod.format_table(energy_mod.table_reproduction(params)))
    rows = energy_mod.relative_energy_curve(range(1, 11), (10, 20, 30, 40, 50), params)
    _write(out / "energy.csv", energy_mod.energy_csv(rows, "# schema_version=1"))
    print(f"-> {out / 'energy.csv'}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON config file")
    common.add_argument("--out", help="output path (default: timestamped directory)")
    common.add_argument("--force", action="store_true", help="overwrite existing output")
    common.add_argument("--seed", type=int, default=None, help="seed (falls back to $JUMPS_SEED)")
    common.add_argument("-v", "--verbose", action="count", default=0)

    parser = argparse.ArgumentParser(prog="jumps", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate", parents=[common], help="draw a connected topology")
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("run", parents=[common], help="assign coordinates and report zones")
    p.add_argument("--topology", help="topology JSON (otherwise generated from --config)")
    p.add_argument("--initiator", type=int, default=0)
    p.add_argument("--weighting", choices=("zone", "node"), default="zone")
    p.add_argument("--trace", action="store_true", help="also dump the per-round flood log")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("sweep", parents=[common], help="run the landmark x density grid")
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--paper-scale", action="store_true", help="R=1000 m, 1000 trials per cell")
    p.add_argument("--bin-width", type=float, default=None)
    p.add_argument("--trials", type=int, default=None)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("energy", parents=[common], help="energy model tables")
    p.set_defaults(func=cmd_energy)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.INFO, format="%(levelname)s %(message)s", stream=sys.stderr)
    try:
        return args.func(args)
    except CliError as exc:
        print(f"jumps: {exc}", file=sys.stderr)
        return exc.code


if __name__ == "__main__":
    sys.exit(main())
