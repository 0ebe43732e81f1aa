"""Scenario execution behind the command-line interface.

A scenario is a JSON object validated against ``schema/scenario.schema.json``.
:func:`run_scenario` turns one into CSV datasets plus a run manifest and
returns the process exit code.
"""

from __future__ import annotations

import csv
import io
import json
import logging
import math
import platform
import warnings
from dataclasses import dataclass, field
from importlib import metadata, resources
from pathlib import Path

import jsonschema
import numpy as np
import scipy

from . import __version__
from .cauchy_solvers import (chi_from_initial, chi_special, coefficients_csv, default_k1,
                             eigenfunction_expansion, evolve_by_kernel, expansion_setup, matched_state,
                             oscillation_number, psi_special)
from .coeffs import CoefficientSet, from_inline, preset
from .errors import QuadinvError, ResolutionError, SingularityError
from .grid_ops import Grid, WaveFunction, inner_product, l2_distance, ladder, to_csv
from .invariants import (ProductInvariant, SimplestInvariant, ermakov_invariant, general_superposition,
                         linear_from_mu, pinney, quadratic_from_kappa)
from .kernel import T_MIN, general_kernel_parameters, green_parameters, kernel_residual
from .ode_engine import (abel_residual, green_seed, pair_constant, ratio_identity_residual,
                         solve_characteristic, solve_ermakov)
from .oracle import OracleConfig, evolve_path

logger = logging.getLogger(__name__)

EXIT_OK, EXIT_CHECKS, EXIT_CONFIG, EXIT_NUMERIC = 0, 1, 2, 3

DEFAULTS = {
    "command": "propagate",
    "preset": "sho",
    "grid": {"x_min": -12.0, "x_max": 12.0, "n": 512},
    "times": [1.0],
    "initial_data": {"type": "gaussian", "center": 0.0, "width": 1.0, "momentum": 0.0},
    "solver": "kernel",
    "expansion_order": 48,
    "dt": 5e-4,
    "c0": 1.0,
    "kappa0": 1.0,
    "pinney": False,
}

TOLERANCES = {
    "pairing_drift": 1e-5,
    "linear_system": 1e-8,
    "quadratic_system": 1e-8,
    "characteristic_residual": 1e-8,
    "kernel_consistency": 1e-7,
    "kernel_schrodinger": 1e-6,
    "ermakov_invariant_drift": 1e-8,
    "appendix_identities": 1e-7,
    "commutator": 1e-8,
    "kernel_vs_oracle": 1e-4,
    "pinney_agreement": 1e-6,
}

PAIRING_TIMES = tuple(np.round(np.linspace(0.1, 1.5, 15), 12))


class ConfigError(QuadinvError):
    """Scenario rejected before any numerics ran."""


def load_schema() -> dict:
    text = resources.files("quadinv").joinpath("schema/scenario.schema.json").read_text(encoding="utf-8")
    return json.loads(text)


def validate(config: dict) -> None:
    """Raise :class:`ConfigError` naming the offending field."""
    validator = jsonschema.Draft7Validator(load_schema())
    errors = sorted(validator.iter_errors(config), key=lambda e: list(e.absolute_path))
    if errors:
        e = errors[0]
        where = "/".join(str(p) for p in e.absolute_path) or "<root>"
        raise ConfigError(f"field '{where}': {e.message}")


def load_config_text(text: str, source: str = "<config>") -> dict:
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{source}: line {exc.lineno}, column {exc.colno}: {exc.msg}") from exc


def resolve(config: dict) -> dict:
    """Validate and merge with defaults (nested dicts merged one level deep)."""
    validate(config)
    out = {k: (dict(v) if isinstance(v, dict) else v) for k, v in DEFAULTS.items()}
    for k, v in config.items():
        if k in ("grid", "initial_data") and isinstance(v, dict):
            base = out[k] if k == "grid" else ({} if v.get("type") != "gaussian" else dict(DEFAULTS[k]))
            base.update(v)
            out[k] = base
        else:
            out[k] = v
    out["_times_given"] = "times" in config
    times = out["times"]
    if any(t2 <= t1 for t1, t2 in zip(times, times[1:])):
        raise ConfigError("field 'times': must be strictly increasing")
    return out


def build_coeffs(cfg: dict) -> CoefficientSet:
    p = cfg["preset"]
    try:
        if isinstance(p, str):
            c = preset(p)
            return c.with_t_max(cfg["t_max"]) if "t_max" in cfg else c
        return from_inline(p, cfg.get("t_max", 3.0), name="inline")
    except QuadinvError as exc:
        raise ConfigError(f"field 'preset': {exc}") from exc


def build_grid(cfg: dict) -> Grid:
    g = cfg["grid"]
    try:
        return Grid(float(g["x_min"]), float(g["x_max"]), int(g["n"]))
    except QuadinvError as exc:
        raise ConfigError(f"field 'grid': {exc}") from exc


def gaussian(grid: Grid, center=0.0, width=1.0, momentum=0.0) -> WaveFunction:
    """Normalised ``(pi w**2)**(-1/4) exp(-(x - x0)**2/(2 w**2) + i k x)``."""
    x = grid.x
    return WaveFunction(grid, (math.pi * width ** 2) ** -0.25
                        * np.exp(-(x - center) ** 2 / (2.0 * width ** 2) + 1j * momentum * x))


# ---------------------------------------------------------------------------
# results


@dataclass
class RunResult:
    checks: list = field(default_factory=list)
    outputs: list = field(default_factory=list)
    info: dict = field(default_factory=dict)

    def check(self, name, value, tol, note=None):
        passed = None if value is None else bool(value < tol)
        self.checks.append({"name": name, "value": None if value is None else float(value),
                            "tolerance": tol, "passed": passed, **({"note": note} if note else {})})

    def all_passed(self):
        return all(c["passed"] is not False for c in self.checks)


def _write(out_dir: Path, name: str, text: str, result: RunResult, **meta):
    (out_dir / name).write_text(text, encoding="utf-8", newline="")
    result.outputs.append({"file": name, **meta})


def _table(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([v if isinstance(v, (int, str)) else format(float(v), ".17g") for v in r])
    return buf.getvalue()


# ---------------------------------------------------------------------------
# commands


def _expansion_state(coeffs, cfg, t_end):
    return matched_state(coeffs, max(t_end, T_MIN), C0=float(cfg["c0"]), N=int(cfg["expansion_order"]))


def _initial(coeffs, grid, cfg, t_end):
    """``(psi0, chi, state)``; ``chi`` and ``state`` are ``None`` unless the expansion data need them."""
    data = cfg["initial_data"]
    kind = data["type"]
    if kind == "gaussian":
        return gaussian(grid, data["center"], data["width"], data["momentum"]), None, None
    state = _expansion_state(coeffs, cfg, t_end)
    if kind == "hermite_mode":
        return psi_special(int(data["n"]), state, 0.0, grid), None, state
    m = int(data["m"])
    chi = chi_special(m, state, grid)
    return eigenfunction_expansion(coeffs, state.k1, state.k, chi, 0.0, m + 1, state=state), chi, state


def _propagate(coeffs, grid, cfg, out_dir, result, *, coefficients=False):
    times = [float(t) for t in cfg["times"]]
    coeffs.check_time(times[-1], where="times")
    solver = "expansion" if coefficients else cfg["solver"]
    psi0, chi, state = _initial(coeffs, grid, cfg, times[-1])
    if solver == "oracle":
        states = evolve_path(coeffs, psi0, times, OracleConfig(float(cfg["dt"])))
    elif solver == "kernel":
        states, routes = _kernel_states(coeffs, psi0, times)
        result.info["kernel_route"] = routes
    else:
        state = _expansion_state(coeffs, cfg, times[-1]) if state is None else state
        chi = chi_from_initial(state, psi0) if chi is None else chi
        N = int(cfg["expansion_order"])
        states = []
        for i, t in enumerate(times):
            states.append(eigenfunction_expansion(coeffs, state.k1, state.k, chi, t, N, state=state))
            if coefficients:
                _write(out_dir, f"coefficients_{i:03d}.csv", coefficients_csv(state.coefficients(chi, t, N)),
                       result, t=t)
        result.info["delta"] = state.delta
        result.info["xi"] = state.xi_const
    for i, (t, wf) in enumerate(zip(times, states)):
        _write(out_dir, f"psi_{solver}_{i:03d}.csv", to_csv(wf, density=True), result, t=t)
        result.info.setdefault("norms", []).append(wf.norm())
    result.info["solver"] = solver


def _kernel_states(coeffs, psi0, times):
    """Green-kernel quadrature, or the regular kernel of ``default_k1`` where the grid cannot resolve it.

    The Green kernel oscillates like ``1/t`` near ``t = 0``; the regular
    kernel has ``mu(0) = 1`` and acts on ``chi = K(0)**-1 psi0`` instead.
    """
    seed = green_seed(coeffs, max(times[-1], T_MIN), gamma0_integral=True) if times[-1] >= T_MIN else None
    regular = None
    states, routes = [], []
    for t in times:
        if t < T_MIN:
            states.append(psi0)
            routes.append("identity")
            continue
        g = green_parameters(coeffs, t, seed)
        if oscillation_number(g, psi0.grid, psi0) < 0.5 * math.pi:
            states.append(evolve_by_kernel(g, psi0))
            routes.append("green")
            continue
        if regular is None:
            k1 = default_k1(coeffs, times[-1])
            st = expansion_setup(coeffs, k1, solve_ermakov(coeffs, 1.0, 1.0, 0.0, times[-1]))
            regular = (st, chi_from_initial(st, psi0))
        st, chi = regular
        try:
            states.append(evolve_by_kernel(st.kernel(t), chi))
        except ResolutionError as exc:
            raise ResolutionError(f"neither the Green kernel nor the regular kernel is resolved at t = {t}: "
                                  f"{exc}") from exc
        routes.append("regular")
    return states, routes


def _pairing_series(invariant, chi_path, psi_path, times):
    return np.array([inner_product(c, invariant.apply(p, t)) for t, c, p in zip(times, chi_path, psi_path)])


def _pairing_checks(coeffs, grid, cfg, result, out_dir=None):
    times = [float(t) for t in cfg["times"]] if cfg["_times_given"] and len(cfg["times"]) > 1 \
        else list(PAIRING_TIMES)
    t_end = coeffs.t_max
    psi0, _, _ = _initial(coeffs, grid, cfg, times[-1])
    chi0 = gaussian(grid, 0.5, 1.2, -0.3)
    ocfg = OracleConfig(min(float(cfg["dt"]), 1e-3))
    psi_path = evolve_path(coeffs, psi0, times, ocfg)
    chi_path = evolve_path(coeffs, chi0, times, ocfg)
    mu1 = solve_characteristic(coeffs, 1.0, 0.0, t_end)
    mu2 = solve_characteristic(coeffs, 0.0, 1.0, t_end)
    cpd0 = float(coeffs.c(0.0) + coeffs.d(0.0))
    k0 = float(cfg["kappa0"])
    kp0 = float(cfg.get("kappap0", cpd0 * k0))
    kappa = solve_ermakov(coeffs, float(cfg["c0"]), k0, kp0, t_end)
    invs = {
        "linear": linear_from_mu(coeffs, mu1, 0.5),
        "quadratic": quadratic_from_kappa(coeffs, kappa),
        "product": ProductInvariant(linear_from_mu(coeffs, mu1), linear_from_mu(coeffs, mu2)),
        "simplest": SimplestInvariant(coeffs),
    }
    for name, inv in invs.items():
        vals = _pairing_series(inv, chi_path, psi_path, times)
        drift = np.abs(vals - vals[0]) / abs(vals[0])
        result.check(f"pairing_{name}", float(drift.max()), TOLERANCES["pairing_drift"])
        if out_dir is not None:
            _write(out_dir, f"drift_{name}.csv",
                   _table(["t", "value_re", "value_im", "rel_drift"],
                          [(t, v.real, v.imag, d) for t, v, d in zip(times, vals, drift)]), result)


def _ermakov(coeffs, cfg, out_dir, result):
    t_end = float(cfg["times"][-1]) if cfg["_times_given"] else coeffs.t_max
    C0 = float(cfg["c0"])
    k0 = float(cfg["kappa0"])
    kp0 = float(cfg.get("kappap0", 0.0))
    ts = np.linspace(0.0, t_end, 201)
    direct = solve_ermakov(coeffs, C0, k0, kp0, t_end)
    kd = direct.kappa(ts)
    header, cols = ["t", "kappa_direct"], [ts, kd]
    if cfg["pinney"]:
        # basis (1, 0) and (0, 1); C1, C2, C3 follow from the initial data
        k1 = solve_ermakov(coeffs, 0.0, 1.0, 0.0, t_end)
        k2 = solve_ermakov(coeffs, 0.0, 0.0, 1.0, t_end)
        a0 = float(coeffs.a(0.0))
        C1, C3 = k0 * k0, k0 * kp0
        C2 = (C0 * (2.0 * a0) ** 2 + C3 * C3) / C1
        kp = pinney(coeffs, k1, k2, C1, C2, C3).kappa(ts)
        rel = np.abs(kp - kd) / np.abs(kd)
        header += ["kappa_pinney", "rel_diff"]
        cols += [kp, rel]
        result.info["max_discrepancy"] = float(rel.max())
        result.check("pinney_agreement", float(rel.max()), TOLERANCES["pinney_agreement"])
    _write(out_dir, "kappa.csv", _table(header, zip(*cols)), result)


def _max_over(fn, ts):
    return float(max(abs(float(fn(t))) for t in ts))


def _verify(coeffs, grid, cfg, result):
    t_end = coeffs.t_max
    ts = np.linspace(0.0, t_end, 200)

    def guarded(name, tol, fn):
        try:
            result.check(name, fn(), tol)
        except SingularityError as exc:
            result.check(name, None, tol, note=f"skipped: {exc}")

    mu = solve_characteristic(coeffs, 1.0, 0.0, t_end)
    guarded("characteristic_residual", TOLERANCES["characteristic_residual"],
            lambda: _max_over(mu.residual, mu.nodes))
    lin = linear_from_mu(coeffs, mu, 0.5)
    guarded("linear_system", TOLERANCES["linear_system"], lambda: max(max(lin.residuals(t)) for t in ts))
    cpd0 = float(coeffs.c(0.0) + coeffs.d(0.0))
    kappa = solve_ermakov(coeffs, 1.0, 1.0, cpd0, t_end)
    quad = quadratic_from_kappa(coeffs, kappa)
    guarded("quadratic_system", TOLERANCES["quadratic_system"], lambda: max(max(quad.residuals(t)) for t in ts))
    homog = solve_ermakov(coeffs, 0.0, 0.0, 1.0, t_end)
    inv = ermakov_invariant(coeffs, homog, kappa, ts)
    guarded("ermakov_invariant_drift", TOLERANCES["ermakov_invariant_drift"],
            lambda: float(np.ptp(inv) / abs(inv[0])))
    other = solve_ermakov(coeffs, 0.5, 1.3, -0.2, t_end)
    guarded("identity_A4", TOLERANCES["appendix_identities"],
            lambda: float(np.ptp([pair_constant(kappa, other, t) for t in ts])))
    guarded("identity_A5", TOLERANCES["appendix_identities"],
            lambda: _max_over(lambda t: abel_residual(kappa, other, t), ts))
    guarded("identity_A6", TOLERANCES["appendix_identities"],
            lambda: _max_over(lambda t: ratio_identity_residual(kappa, other, t), ts))
    sup = general_superposition(coeffs, kappa, other, 1.0, 0.5)
    guarded("superposition_residual", 1e-7, lambda: _max_over(sup.residual, ts[1:-1]))

    def kernel_checks():
        seed = green_seed(coeffs, 0.6, gamma0_integral=True)
        p = general_kernel_parameters(coeffs, 0.1, 1.0, 0.0, 1.0, 0.5, seed)
        result.check("kernel_consistency", max(p.consistency().values()), TOLERANCES["kernel_consistency"])
        return kernel_residual(lambda s: general_kernel_parameters(coeffs, 0.1, 1.0, 0.0, 1.0, s, seed),
                               grid, 0.5, 1e-4, y=0.5)

    guarded("kernel_schrodinger", TOLERANCES["kernel_schrodinger"], kernel_checks)

    ld = quad.ladder_data(0.7)
    psi = gaussian(grid, 0.3, 1.0, 0.2)
    comm = ladder(ld, ladder(ld, psi, "raise"), "lower") - ladder(ld, ladder(ld, psi, "lower"), "raise") - psi
    result.check("commutator", float(np.max(np.abs(comm.samples))), TOLERANCES["commutator"])

    def kernel_vs_oracle():
        phi = gaussian(grid, 0.5, 1.0, 0.3)
        k = evolve_by_kernel(green_parameters(coeffs, 1.0), phi)
        o = evolve_path(coeffs, phi, [1.0], OracleConfig(5e-4))[0]
        return l2_distance(k, o)

    guarded("kernel_vs_oracle", TOLERANCES["kernel_vs_oracle"], kernel_vs_oracle)
    _pairing_checks(coeffs, grid, cfg, result)


# ---------------------------------------------------------------------------
# driver


def _versions():
    return {"quadinv": __version__, "numpy": np.__version__, "scipy": scipy.__version__,
            "jsonschema": metadata.version("jsonschema"), "python": platform.python_version()}


def write_manifest(out_dir: Path, manifest: dict) -> None:
    out_dir.mkdir(parents=True, exist_ok=True)
    text = json.dumps(manifest, indent=2, sort_keys=True, allow_nan=True) + "\n"
    (out_dir / "manifest.json").write_text(text, encoding="utf-8", newline="")


def run_scenario(config: dict, out_dir, command: str | None = None) -> tuple[int, dict]:
    """Run one scenario; always writes ``manifest.json`` into ``out_dir``.

    Returns ``(exit_code, manifest)``: 0 success, 1 failed checks,
    2 invalid configuration, 3 numerical failure.
    """
    out_dir = Path(out_dir)
    config = dict(config)
    if command is not None:
        config["command"] = command
    result = RunResult()
    manifest = {"command": config.get("command", DEFAULTS["command"]), "config": config,
                "tolerances": TOLERANCES, "versions": _versions()}
    code = EXIT_OK
    try:
        out_dir.mkdir(parents=True, exist_ok=True)
        cfg = resolve(config)
        coeffs = build_coeffs(cfg)
        grid = build_grid(cfg)
        if cfg["times"][-1] > coeffs.t_max:
            raise ConfigError(f"field 'times': {cfg['times'][-1]} exceeds t_max = {coeffs.t_max}")
        manifest["resolved"] = {k: v for k, v in cfg.items() if not k.startswith("_")}
        cmd = cfg["command"]
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always")
            if cmd == "propagate":
                _propagate(coeffs, grid, cfg, out_dir, result)
            elif cmd == "expand":
                _propagate(coeffs, grid, cfg, out_dir, result, coefficients=True)
            elif cmd == "invariants":
                _pairing_checks(coeffs, grid, cfg, result, out_dir)
            elif cmd == "ermakov":
                _ermakov(coeffs, cfg, out_dir, result)
            else:
                _verify(coeffs, grid, cfg, result)
        manifest["warnings"] = sorted({f"{w.category.__name__}: {w.message}" for w in caught})
        if not result.all_passed():
            code = EXIT_CHECKS
        manifest["status"] = "ok" if code == EXIT_OK else "checks_failed"
    except (ConfigError, jsonschema.SchemaError) as exc:
        code = EXIT_CONFIG
        manifest["status"] = "config_error"
        manifest["error"] = {"type": type(exc).__name__, "message": str(exc)}
    except (QuadinvError, ArithmeticError, np.linalg.LinAlgError) as exc:
        code = EXIT_NUMERIC
        manifest["status"] = "numerical_error"
        manifest["error"] = {"type": type(exc).__name__, "module": type(exc).__module__, "message": str(exc)}
    manifest["exit_code"] = code
    manifest["checks"] = result.checks
    manifest["outputs"] = result.outputs
    manifest["info"] = result.info
    try:
        write_manifest(out_dir, manifest)
    except OSError as exc:
        logger.error("could not write manifest: %s", exc)
    return code, manifest
