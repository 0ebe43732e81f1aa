"""Command-line entry point: ``quadinv {propagate,expand,invariants,ermakov,verify,run}``.

Scenarios come from a JSON file (``--config``), from flags, or both; flags
win.  Output goes to ``--out``, else ``$QUADINV_OUT_DIR``, else
``./quadinv_out``.  Exit codes: 0 success, 1 failed checks, 2 invalid
configuration, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

from .coeffs import PRESET_NAMES
from .scenario import EXIT_CONFIG, ConfigError, load_config_text, run_scenario, write_manifest

COMMANDS = ("propagate", "expand", "invariants", "ermakov", "verify")


def _common(p: argparse.ArgumentParser):
    p.add_argument("--config", type=Path, help="scenario JSON file")
    p.add_argument("--preset", choices=PRESET_NAMES)
    p.add_argument("--coeffs", help='inline coefficients as JSON, e.g. \'{"a": "0.5", "b": "0.5+0.1*cos(t)"}\'')
    p.add_argument("--t-max", type=float, dest="t_max")
    p.add_argument("--t", type=float, nargs="+", dest="times", metavar="T", help="output times")
    p.add_argument("--grid", type=float, nargs=3, metavar=("XMIN", "XMAX", "N"))
    p.add_argument("--dt", type=float, help="oracle time step")
    p.add_argument("--out", type=Path, help="output directory")


def _initial(p: argparse.ArgumentParser):
    p.add_argument("--initial", choices=("gaussian", "hermite_mode", "chi_special"))
    p.add_argument("--center", type=float)
    p.add_argument("--width", type=float)
    p.add_argument("--momentum", type=float)
    p.add_argument("--mode", type=int, help="n for hermite_mode, m for chi_special")
    p.add_argument("-N", "--order", type=int, dest="expansion_order", help="expansion order")


def _kappa(p: argparse.ArgumentParser):
    p.add_argument("--c0", type=float)
    p.add_argument("--kappa0", type=float)
    p.add_argument("--kappap0", type=float)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="quadinv", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    p = sub.add_parser("propagate", help="evolve initial data with one solver")
    _common(p)
    _initial(p)
    p.add_argument("--solver", choices=("kernel", "expansion", "oracle"))
    _kappa(p)
    p = sub.add_parser("expand", help="eigenfunction expansion with coefficient tables")
    _common(p)
    _initial(p)
    _kappa(p)
    p = sub.add_parser("invariants", help="pairing drift of the constructed invariants")
    _common(p)
    _initial(p)
    _kappa(p)
    p = sub.add_parser("ermakov", help="auxiliary solution by direct integration and Pinney superposition")
    _common(p)
    _kappa(p)
    p.add_argument("--pinney", action="store_true")
    p = sub.add_parser("verify", help="run the identity and pairing suite")
    _common(p)
    _kappa(p)
    p = sub.add_parser("run", help="run a scenario or batch file")
    p.add_argument("file", type=Path)
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--out", type=Path)
    return parser


def out_dir_from(args) -> Path:
    if getattr(args, "out", None) is not None:
        return args.out
    return Path(os.environ.get("QUADINV_OUT_DIR", "quadinv_out"))


def _read_json(path: Path) -> dict:
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc}") from exc
    return load_config_text(text, str(path))


def config_from_args(args) -> dict:
    cfg = _read_json(args.config) if args.config else {}
    if not isinstance(cfg, dict):
        raise ConfigError("configuration must be a JSON object")
    if args.coeffs:
        cfg["preset"] = load_config_text(args.coeffs, "--coeffs")
    elif args.preset:
        cfg["preset"] = args.preset
    for key in ("t_max", "times", "dt", "c0", "kappa0", "kappap0", "solver", "expansion_order"):
        v = getattr(args, key, None)
        if v is not None:
            cfg[key] = v
    if args.grid:
        cfg["grid"] = {"x_min": args.grid[0], "x_max": args.grid[1], "n": int(args.grid[2])}
    if getattr(args, "pinney", False):
        cfg["pinney"] = True
    if getattr(args, "initial", None) or any(getattr(args, k, None) is not None
                                             for k in ("center", "width", "momentum", "mode")):
        kind = args.initial or cfg.get("initial_data", {}).get("type", "gaussian")
        data = {"type": kind}
        if kind == "gaussian":
            data.update({k: getattr(args, k) for k in ("center", "width", "momentum")
                         if getattr(args, k) is not None})
        else:
            data["n" if kind == "hermite_mode" else "m"] = args.mode if args.mode is not None else 0
        cfg["initial_data"] = data
    return cfg


def _report(name, code, manifest, stream=None):
    stream = sys.stdout if stream is None else stream
    prefix = f"[{name}] " if name else ""
    if manifest.get("error"):
        print(f"{prefix}error ({manifest['error']['type']}): {manifest['error']['message']}", file=sys.stderr)
    for c in manifest.get("checks", []):
        status = "SKIP" if c["passed"] is None else ("PASS" if c["passed"] else "FAIL")
        val = "-" if c["value"] is None else f"{c['value']:.3e}"
        print(f"{prefix}{status:4}  {c['name']:<28} {val:>10}  (tol {c['tolerance']:g})", file=stream)
    if "max_discrepancy" in manifest.get("info", {}):
        print(f"{prefix}max relative discrepancy direct vs Pinney: {manifest['info']['max_discrepancy']:.3e}",
              file=stream)
    for o in manifest.get("outputs", []):
        print(f"{prefix}wrote {o['file']}", file=stream)
    print(f"{prefix}exit {code}", file=stream)


def _run_one(item):
    cfg, out = item
    return run_scenario(cfg, out)


def run_file(path: Path, out: Path, jobs: int) -> int:
    data = _read_json(path)
    if isinstance(data, dict) and "scenarios" in data:
        scenarios = data["scenarios"]
        if not isinstance(scenarios, list) or not all(isinstance(s, dict) for s in scenarios):
            raise ConfigError("field 'scenarios': must be a list of objects")
        names = [s.get("name", f"scenario_{i:03d}") for i, s in enumerate(scenarios)]
        if len(set(names)) != len(names):
            raise ConfigError("field 'scenarios': names must be unique")
        items = [(s, out / n) for s, n in zip(scenarios, names)]
        if jobs > 1:
            with ProcessPoolExecutor(max_workers=jobs) as pool:
                results = list(pool.map(_run_one, items))
        else:
            results = [_run_one(it) for it in items]
        for n, (code, manifest) in zip(names, results):
            _report(n, code, manifest)
        return max(code for code, _ in results) if results else 0
    code, manifest = run_scenario(data, out)
    _report(None, code, manifest)
    return code


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    out = out_dir_from(args)
    try:
        if args.command == "run":
            return run_file(args.file, out, max(1, args.jobs))
        cfg = config_from_args(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        write_manifest(out, {"command": args.command, "status": "config_error", "exit_code": EXIT_CONFIG,
                             "error": {"type": "ConfigError", "message": str(exc)}, "checks": [], "outputs": []})
        return EXIT_CONFIG
    code, manifest = run_scenario(cfg, out, args.command)
    _report(None, code, manifest)
    return code


if __name__ == "__main__":
    sys.exit(main())
