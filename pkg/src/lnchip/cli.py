"""Command line entry point: ``lnchip <command> [options]``.

Exit codes: 0 success, 2 config error, 3 fit failure, 4 numeric/domain error.
Every run writes ``<command>_manifest.json`` next to its outputs; ``lnchip
reproduce <manifest>`` re-runs it and checks the output hashes.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .analysis import FitError, fit_fringe, fit_hom_dip
from .chip import morph_curve
from .config import ChipConfig, ConfigError, builtin_config_text, sha256_text
from .detection import DetectionError
from .experiments import channels, fringe_report, fringe_scan, hom_experiment, hom_report
from .fock import FockError
from .phasematch import PhaseMatchError
from .tables import (
    CHANNEL_COLUMNS, MORPH_COLUMNS, SCAN_COLUMNS, SCHEMA_VERSION, dumps, read_table, render,
)

EXIT_OK, EXIT_CONFIG, EXIT_FIT, EXIT_NUMERIC = 0, 2, 3, 4

BUILTIN_PREFIX = "builtin:"


def _read_config(path: str) -> tuple[ChipConfig, str]:
    try:
        if path.startswith(BUILTIN_PREFIX):
            text = builtin_config_text(path[len(BUILTIN_PREFIX):])
        else:
            text = Path(path).read_text()
    except (OSError, FileNotFoundError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    try:
        return ChipConfig.model_validate_json(text), text
    except ValueError as exc:
        raise ConfigError(f"{path}: {exc}") from exc


def _grid(lo: float, hi: float, steps: int) -> list[float]:
    return [float(v) for v in np.linspace(lo, hi, steps)]


def _write(out: Path, name: str, text: str, written: dict):
    out.mkdir(parents=True, exist_ok=True)
    (out / name).write_text(text)
    written[name] = hashlib.sha256(text.encode()).hexdigest()


def _run_fringe(cfg, opts, out, written):
    if opts["steps"] < 6:
        raise ValueError("fringe scan needs at least 6 steps")
    grid = _grid(opts["u_min"], opts["u_max"], opts["steps"])
    result = fringe_scan(cfg, grid, opts["duration"], opts["seed"], opts["noiseless"])
    _write(out, f"fringe_scan.{opts['format']}", render(SCAN_COLUMNS, result.rows(), opts["format"]), written)
    report = fringe_report(cfg, result)
    _write(out, "fringe_scan_fit.json", dumps(report), written)
    for pair, fit in report["channels"].items():
        if "error" in fit:
            print(f"{pair}: fit failed ({fit['error']})")
        else:
            p, e = fit["params"], fit["errors"]
            print(f"{pair}: V = {p['visibility']:.4f} +- {e['visibility']:.4f}")
    s = report["summary"]
    if s["two_v_pi_fitted"] is not None:
        print(f"2V_pi = {s['two_v_pi_fitted']:.4f} V (model {s['two_v_pi_model']:.4f} V), "
              f"U_offset = {s['u_offset']:.4f} V")
    return EXIT_FIT if result.failures else EXIT_OK


def _run_hom(cfg, opts, out, written):
    grid = _grid(opts["delay_min"], opts["delay_max"], opts["steps"])
    result = hom_experiment(cfg, opts["u_operating"], grid, opts["duration"], opts["seed"], opts["noiseless"])
    _write(out, f"hom_scan.{opts['format']}", render(SCAN_COLUMNS, result.rows(), opts["format"]), written)
    report = hom_report(result)
    _write(out, "hom_scan_fit.json", dumps(report), written)
    if result.dip is not None:
        print(f"HOM dip visibility = {result.dip.visibility:.4f} +- {result.dip.errors['visibility']:.4f}")
    elif result.no_dip:
        print("no HOM dip (visibility 0)")
    else:
        print(f"dip fit failed: {result.failures['r1r4']}")
        return EXIT_FIT
    return EXIT_OK


def _run_channels(cfg, opts, out, written):
    rows = channels(cfg, opts["periods"], opts["temperature"])
    table = [(r.channel, r.period_um, r.shg_wavelength_nm) for r in rows]
    _write(out, f"channels.{opts['format']}", render(CHANNEL_COLUMNS, table, opts["format"]), written)
    for r in rows:
        print(f"channel {r.channel}: period {r.period_um:.2f} um -> {r.shg_wavelength_nm:.3f} nm")
    return EXIT_OK


def _run_morph(cfg, opts, out, written):
    rows = morph_curve(cfg, _grid(opts["u_min"], opts["u_max"], opts["steps"]))
    table = [(r.voltage, r.p_separated, r.p_bunched_r1, r.p_bunched_r4) for r in rows]
    _write(out, f"morph.{opts['format']}", render(MORPH_COLUMNS, table, opts["format"]), written)
    print(f"wrote {len(rows)} rows")
    return EXIT_OK


COMMANDS = {
    "fringe-scan": _run_fringe,
    "hom-scan": _run_hom,
    "channels": _run_channels,
    "morph": _run_morph,
}


def execute(command: str, opts: dict, out: Path) -> int:
    """Run ``command`` with normalized options and write outputs plus manifest."""
    cfg, text = _read_config(opts["config"])
    written: dict[str, str] = {}
    code = COMMANDS[command](cfg, opts, out, written)
    manifest = {
        "command": command,
        "config_path": opts["config"],
        "config_sha256": sha256_text(text),
        "seed": opts["seed"],
        "options": opts,
        "outputs": written,
        "tool_version": __version__,
        "schema_version": SCHEMA_VERSION,
    }
    _write(out, f"{command.replace('-', '_')}_manifest.json", dumps(manifest), {})
    return code


def _options(args) -> dict:
    skip = {"command", "out", "func"}
    opts = {k: v for k, v in vars(args).items() if k not in skip}
    if opts.get("periods") is not None:
        opts["periods"] = [float(p) for p in opts["periods"]]
    return opts


def _reproduce(args) -> int:
    path = Path(args.manifest)
    try:
        manifest = json.loads(path.read_text())
    except (OSError, ValueError) as exc:
        raise ConfigError(f"cannot read manifest {path}: {exc}") from exc
    _, text = _read_config(manifest["config_path"])
    if sha256_text(text) != manifest["config_sha256"]:
        raise ConfigError("config content changed since the manifest was written")
    if manifest.get("schema_version") != SCHEMA_VERSION:
        raise ConfigError("manifest schema version does not match this tool")
    out = Path(args.out) if args.out else path.parent
    code = execute(manifest["command"], manifest["options"], out)
    same = all(
        hashlib.sha256((out / name).read_bytes()).hexdigest() == digest
        for name, digest in manifest["outputs"].items()
    )
    print("outputs reproduced byte-for-byte" if same else "outputs differ from manifest")
    return code if same else EXIT_NUMERIC


def _fit_table(args) -> int:
    try:
        cols = read_table(args.table)
    except (OSError, ValueError, KeyError) as exc:
        raise ConfigError(f"cannot read table {args.table}: {exc}") from exc
    missing = {"x_value", "coinc_r1r4", "accidentals", "singles_r1", "singles_r4"} - set(cols)
    if missing:
        raise ConfigError(f"{args.table} is not a scan table (missing {', '.join(sorted(missing))})")
    x = cols["x_value"]
    y = cols[f"coinc_{args.pair}"]
    if args.pair == "r1r4":
        acc = cols["accidentals"]
    else:
        s = cols[f"singles_{args.pair[:2]}"]
        acc = (s / 2) ** 2 * args.window * 1e-9 / args.duration
    corrected = np.maximum(y - acc, 0.0)
    sigma = np.maximum(np.sqrt(y + acc), 1.0)
    fit = fit_fringe(x, corrected, sigma) if args.kind == "fringe" else fit_hom_dip(x, corrected, sigma)
    print(dumps(fit.report()), end="")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="lnchip", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", default=f"{BUILTIN_PREFIX}calibrated",
                       help="chip config JSON (default: builtin:calibrated; builtin:ideal also available)")
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--out", default="out")
        p.add_argument("--format", choices=("csv", "json"), default="csv")

    p = sub.add_parser("fringe-scan", help="coincidence fringes versus bias voltage")
    common(p)
    p.add_argument("--u-min", type=float, default=-10.0)
    p.add_argument("--u-max", type=float, default=20.0)
    p.add_argument("--steps", type=int, default=61)
    p.add_argument("--duration", type=float, default=1.0, help="seconds per point")
    p.add_argument("--noiseless", action="store_true", help="write mean counts instead of samples")

    p = sub.add_parser("hom-scan", help="external HOM dip versus delay")
    common(p)
    p.add_argument("--u-operating", type=float, default=2.3)
    p.add_argument("--delay-min", type=float, default=-3.0, help="ps")
    p.add_argument("--delay-max", type=float, default=3.0, help="ps")
    p.add_argument("--steps", type=int, default=61)
    p.add_argument("--duration", type=float, default=1.0)
    p.add_argument("--noiseless", action="store_true")

    p = sub.add_parser("channels", help="SHG wavelength per poling channel")
    common(p)
    p.add_argument("--periods", type=float, nargs="+", default=None, help="poling periods in um")
    p.add_argument("--temperature", type=float, default=None, help="C (default: config)")

    p = sub.add_parser("morph", help="analytic pattern probabilities versus bias")
    common(p)
    p.add_argument("--u-min", type=float, default=-10.0)
    p.add_argument("--u-max", type=float, default=20.0)
    p.add_argument("--steps", type=int, default=301)

    p = sub.add_parser("reproduce", help="re-run a manifest and compare outputs")
    p.add_argument("manifest")
    p.add_argument("--out", default=None)

    p = sub.add_parser("fit", help="fit a scan table written by fringe-scan or hom-scan")
    p.add_argument("table")
    p.add_argument("--kind", choices=("fringe", "dip"), default="fringe")
    p.add_argument("--pair", choices=("r1r4", "r1r1", "r4r4"), default="r1r4")
    p.add_argument("--duration", type=float, default=1.0)
    p.add_argument("--window", type=float, default=1.0, help="coincidence window, ns")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "reproduce":
            return _reproduce(args)
        if args.command == "fit":
            return _fit_table(args)
        return execute(args.command, _options(args), Path(args.out))
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except FitError as exc:
        print(f"fit failure: {exc}", file=sys.stderr)
        return EXIT_FIT
    except (PhaseMatchError, FockError, DetectionError, ValueError, ArithmeticError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
