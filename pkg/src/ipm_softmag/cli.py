"""Command-line entry point: analyze, sweep, materials, calibrate."""

from __future__ import annotations

import argparse
import dataclasses
import json
import sys
from pathlib import Path

from .calibration import calibrate, load_calibration, save_calibration
from .geometry import GeometryError
from .materials import MaterialError, load_material_db, material_to_record
from .report import ConfigError, EmitError, SweepConfig, emit, run_sweep, summary_table

EXIT_OK, EXIT_CONFIG, EXIT_PARTIAL, EXIT_FAILED = 0, 1, 2, 3


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="sweep/machine configuration JSON file")
    p.add_argument("--db", help="material database path (default: $IPM_SOFTMAG_DB or shipped)")
    p.add_argument("--calibration", help="calibration JSON (default: shipped)")


def _outputs(p: argparse.ArgumentParser) -> None:
    p.add_argument("--out", help="output directory for artifacts")
    p.add_argument("--format", choices=("delimited", "structured", "both"), default="both")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ipm-softmag", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("analyze", help="analyze one material and topology")
    _common(p)
    _outputs(p)
    p.add_argument("--material", required=True)
    p.add_argument("--topology", choices=("v", "delta"), default="v")

    p = sub.add_parser("sweep", help="analyze a material x topology grid")
    _common(p)
    _outputs(p)
    p.add_argument("--materials", help="comma-separated material names (default: all)")
    p.add_argument("--topology", choices=("v", "delta", "both"), default=None)
    p.add_argument("--jobs", type=int, default=None)

    p = sub.add_parser("materials", help="inspect the material database")
    p.add_argument("--db", help="material database path")
    msub = p.add_subparsers(dest="action", required=True)
    msub.add_parser("list")
    show = msub.add_parser("show")
    show.add_argument("name")

    p = sub.add_parser("calibrate", help="fit calibration factors and write them as JSON")
    _common(p)
    p.add_argument("--out", help="calibration file to write (default: print)")
    return parser


def _config(args, **overrides) -> SweepConfig:
    cfg = SweepConfig.from_file(args.config) if args.config else SweepConfig()
    changes = {k: v for k, v in overrides.items() if v is not None}
    if args.db:
        changes["db_path"] = args.db
    if args.calibration:
        try:
            changes["calibration"] = load_calibration(args.calibration)
        except (OSError, ValueError, TypeError) as exc:
            raise ConfigError(f"calibration {args.calibration}: {exc}") from None
    try:
        return dataclasses.replace(cfg, **changes)
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from None


def _formats(name: str) -> tuple[str, ...]:
    return ("delimited", "structured") if name == "both" else (name,)


def _finish(rows, cfg: SweepConfig, out, fmt) -> int:
    print(summary_table(rows), end="")
    out = out or cfg.out_dir
    if out:
        emit(rows, _formats(fmt) if fmt else cfg.formats, out, cfg.db_path)
    failed = [r for r in rows if not r.ok]
    for r in failed:
        print(f"failed: {r.material} / {r.topology}: {r.error}", file=sys.stderr)
    if failed and len(failed) == len(rows):
        return EXIT_FAILED
    return EXIT_PARTIAL if failed else EXIT_OK


def cmd_analyze(args) -> int:
    cfg = _config(args, materials=(args.material,), topologies=(args.topology,), jobs=1)
    return _finish(run_sweep(cfg), cfg, args.out, args.format)


def cmd_sweep(args) -> int:
    topos = None
    if args.topology:
        topos = ("v", "delta") if args.topology == "both" else (args.topology,)
    mats = None
    if args.materials:
        mats = tuple(n.strip() for n in args.materials.split(",") if n.strip())
    cfg = _config(args, materials=mats, topologies=topos, jobs=args.jobs)
    return _finish(run_sweep(cfg), cfg, args.out, args.format)


def cmd_materials(args) -> int:
    db = load_material_db(args.db, strict=False)
    if args.action == "list":
        for name in db.names():
            if name in db.materials:
                m = db.materials[name]
                print(f"{name}\ttier={m.cost_tier}\tE={m.young_modulus / 1e9:g}GPa\t"
                      f"rho={m.density:g}kg/m3\tB(10kA/m)={m.steel.evaluate(1e4)[0]:.3f}T")
            else:
                print(f"{name}\tINVALID: {db.errors[name]}")
        return EXIT_OK
    if args.name not in db:
        raise ConfigError(f"unknown material {args.name!r}")
    print(json.dumps(material_to_record(db[args.name]), indent=1))
    return EXIT_OK


def cmd_calibrate(args) -> int:
    cfg = _config(args)
    db = load_material_db(cfg.db_path)
    calib = calibrate(db, cfg.machine.geometry, cfg.machine.topologies["v"], cfg.settings())
    if args.out:
        save_calibration(calib, args.out)
    else:
        print(json.dumps(calib.to_dict(), indent=2, sort_keys=True))
    return EXIT_OK


COMMANDS = {"analyze": cmd_analyze, "sweep": cmd_sweep, "materials": cmd_materials,
            "calibrate": cmd_calibrate}


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except (ConfigError, GeometryError, MaterialError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except EmitError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAILED


if __name__ == "__main__":
    sys.exit(main())
