"""Command-line entry point.

Subcommands cover the full pipeline: pulse optimization, derivative-norm
inspection, detection spectra, identity-protection maps, PulsePol transfer
maps and single-pulse robustness profiles.  Every run writes its output
atomically together with a manifest that echoes the fully resolved
configuration, the seed and the package version, so a run can be repeated
from the manifest alone.
"""

import argparse
import json
import math
import os
import sys as _sys

import numpy as np

from . import __version__
from .experiments import (
    atomic_write_text,
    detection_spectrum,
    dnp_transfer_map,
    identity_robustness_map,
    map_csv,
    pulse_robustness_profile,
    spectrum_csv,
)
from .optimizer import (
    DeConfig,
    GrapeConfig,
    de_optimize,
    default_phi_weights,
    default_psi_weights,
    grape_optimize,
    random_smooth_pulse,
)
from .pulses import (
    bb1,
    composite_to_pulse,
    corpse,
    ideal_pulse,
    load_pulse,
    pulse_to_dict,
    square_pulse,
)
from .sequences import STRATEGIES, PulsePolSpec
from .system import ErrorModel, system_from_file
from .vanloan import KNOWN_GENERATORS, derivative_norms, directional_derivatives

TWO_PI = 2.0 * math.pi
PULSE_FAMILIES = ("ideal", "square", "corpse", "bb1", "roc")


class CliError(Exception):
    pass


def resolve_pulse(family: str, theta: float, sys, dt: float, path=None):
    """Build a pulse from a named family, or load one from a file."""
    if path is not None:
        return load_pulse(path)
    if family == "ideal":
        return ideal_pulse(theta)
    if family == "square":
        return square_pulse(theta, 0.0, sys.omega_max, dt)
    if family == "corpse":
        return composite_to_pulse(corpse(theta), sys.omega_max, dt, theta)
    if family == "bb1":
        return composite_to_pulse(bb1(theta), sys.omega_max, dt, theta)
    if family == "roc":
        return packaged_roc_pulse(theta)
    raise CliError(f"unknown pulse family: {family!r}")


def packaged_roc_pulse(theta: float):
    """Load a pre-optimized robust pulse shipped with the package."""
    from importlib import resources

    if abs(theta - math.pi) < 1e-9:
        name = "roc_pi.json"
    elif abs(theta - math.pi / 2) < 1e-9:
        name = "roc_pi2.json"
    else:
        raise CliError("packaged robust pulses cover theta = pi and pi/2 only")
    ref = resources.files("rocdd.data").joinpath(name)
    with resources.as_file(ref) as p:
        return load_pulse(p)


def _write_json(path, obj) -> None:
    atomic_write_text(path, json.dumps(obj, indent=2) + "\n")


def _write_manifest(out_path, subcommand: str, config: dict) -> None:
    manifest = {
        "subcommand": subcommand,
        "version": __version__,
        "config": config,
    }
    _write_json(str(out_path) + ".manifest.json", manifest)


def load_config(path) -> dict:
    """Reload the resolved config block from a manifest or config file."""
    with open(path) as fh:
        data = json.load(fh)
    if "config" in data and "subcommand" in data:
        return data["config"]
    return data


def _merge_config(args, fields: dict) -> dict:
    """Resolve config values: file defaults, overridden by explicit flags.

    ``fields`` maps config key -> argparse attribute name.  Unknown keys in
    the config file are rejected.
    """
    base = {}
    if getattr(args, "config", None):
        base = load_config(args.config)
        unknown = set(base) - set(fields)
        if unknown:
            raise CliError(f"unknown config fields: {sorted(unknown)}")
    resolved = {}
    for key, attr in fields.items():
        flag_value = getattr(args, attr, None)
        if flag_value is not None:
            resolved[key] = flag_value
        elif key in base:
            resolved[key] = base[key]
        else:
            resolved[key] = None
    return resolved


def _require(cfg: dict, *keys):
    for key in keys:
        if cfg[key] is None:
            raise CliError(f"missing required option: {key}")


def _grid(half_width: float, points: int) -> np.ndarray:
    if points < 1:
        raise CliError("grid needs at least one point")
    if points == 1:
        return np.array([0.0])
    return np.linspace(-half_width, half_width, points)


def _error_model(cfg) -> ErrorModel:
    return ErrorModel(cfg["eps1"] or 0.0, cfg["eps2"] or 0.0)


# --- subcommand runners -----------------------------------------------------


def run_optimize(args) -> int:
    fields = {
        "system_file": "system",
        "method": "method",
        "target_theta_rad": "target_theta",
        "target_phi_rad": "target_phi",
        "dt_ns": "dt_ns",
        "n_slices": "slices",
        "max_iters": "max_iters",
        "seed": "seed",
    }
    cfg = _merge_config(args, fields)
    if cfg["method"] is None:
        cfg["method"] = "de"
    if cfg["target_phi_rad"] is None:
        cfg["target_phi_rad"] = 0.0
    if cfg["dt_ns"] is None:
        cfg["dt_ns"] = 2.0
    if cfg["n_slices"] is None:
        cfg["n_slices"] = 40
    _require(cfg, "system_file", "target_theta_rad")
    sys = system_from_file(cfg["system_file"])
    dt = cfg["dt_ns"] * 1e-9
    if dt < sys.t_min:
        raise CliError("slice duration below the system's minimum switch time")
    target = (cfg["target_theta_rad"], cfg["target_phi_rad"])
    if cfg["method"] == "de":
        if cfg["seed"] is None:
            raise CliError("the stochastic optimizer requires --seed")
        de_cfg = DeConfig(chromosome_len_p=2 * cfg["n_slices"],
                          max_iters=cfg["max_iters"] or 1000,
                          seed=cfg["seed"])
        res = de_optimize(target, sys, default_psi_weights(), de_cfg, dt)
    elif cfg["method"] == "grape":
        rng = np.random.default_rng(cfg["seed"] or 0)
        init = random_smooth_pulse(cfg["n_slices"], dt, sys, rng, target)
        g_cfg = GrapeConfig(max_iters=cfg["max_iters"] or 200)
        res = grape_optimize(init, target, sys, default_phi_weights(), g_cfg)
    else:
        raise CliError(f"unknown method: {cfg['method']!r}")
    payload = pulse_to_dict(res.pulse)
    _write_json(args.out, payload)
    _write_manifest(args.out, "optimize", cfg)
    report = {
        "final_fitness": res.fitness_history[-1],
        "iterations": len(res.fitness_history) - 1,
        "converged": res.converged,
    }
    print(json.dumps(report))
    return 0


def run_derivs(args) -> int:
    fields = {
        "system_file": "system",
        "pulse_file": "pulse",
        "generators": "generators",
    }
    cfg = _merge_config(args, fields)
    if cfg["generators"] is None:
        cfg["generators"] = list(KNOWN_GENERATORS)
    _require(cfg, "system_file", "pulse_file")
    sys = system_from_file(cfg["system_file"])
    pulse = load_pulse(cfg["pulse_file"])
    tags = cfg["generators"]
    for tag in tags:
        if tag not in KNOWN_GENERATORS:
            raise CliError(f"unknown generator tag: {tag!r}")
    ds = directional_derivatives(pulse, sys, tags)
    norms = derivative_norms(ds)
    payload = {
        "first_order": {t: norms[t] for t in ds.d1},
        "second_order": {f"{a},{b}": norms[(a, b)] for (a, b) in ds.d2},
    }
    _write_json(args.out, payload)
    _write_manifest(args.out, "derivs", cfg)
    return 0


def run_spectrum(args) -> int:
    fields = {
        "system_file": "system",
        "pulse_file": "pulse",
        "family": "family",
        "strategy": "strategy",
        "cycles": "cycles",
        "dt_ns": "dt_ns",
        "tau_min_ns": "tau_min_ns",
        "tau_max_ns": "tau_max_ns",
        "tau_points": "tau_points",
        "eps1": "eps1",
        "eps2": "eps2",
        "seed": "seed",
        "threads": "threads",
    }
    cfg = _merge_config(args, fields)
    if cfg["strategy"] is None:
        cfg["strategy"] = "xy8"
    if cfg["family"] is None and cfg["pulse_file"] is None:
        cfg["family"] = "ideal"
    if cfg["cycles"] is None:
        cfg["cycles"] = 8
    if cfg["dt_ns"] is None:
        cfg["dt_ns"] = 2.0
    if cfg["tau_points"] is None:
        cfg["tau_points"] = 600
    if cfg["threads"] is None:
        cfg["threads"] = os.cpu_count() or 1
    _require(cfg, "system_file", "tau_min_ns", "tau_max_ns")
    if cfg["strategy"] == "rp-xy8" and cfg["seed"] is None:
        raise CliError("strategy rp-xy8 requires --seed")
    sys = system_from_file(cfg["system_file"])
    pulse = resolve_pulse(cfg["family"], math.pi, sys, cfg["dt_ns"] * 1e-9,
                          path=cfg["pulse_file"])
    taus = np.linspace(cfg["tau_min_ns"] * 1e-9, cfg["tau_max_ns"] * 1e-9,
                       cfg["tau_points"])
    res = detection_spectrum(sys, cfg["strategy"], pulse, cfg["cycles"], taus,
                             err=_error_model(cfg), seed=cfg["seed"],
                             threads=cfg["threads"])
    atomic_write_text(args.out, spectrum_csv(res))
    _write_manifest(args.out, "spectrum", cfg)
    return 0


_GRID_FIELDS = {
    "det_max_mhz": "det_max_mhz",
    "det_points": "det_points",
    "rabi_max_pct": "rabi_max_pct",
    "rabi_points": "rabi_points",
}


def _grid_defaults(cfg) -> None:
    if cfg["det_max_mhz"] is None:
        cfg["det_max_mhz"] = 5.0
    if cfg["det_points"] is None:
        cfg["det_points"] = 21
    if cfg["rabi_max_pct"] is None:
        cfg["rabi_max_pct"] = 10.0
    if cfg["rabi_points"] is None:
        cfg["rabi_points"] = 21


def _error_grids(cfg, sys):
    det_frac_max = cfg["det_max_mhz"] * TWO_PI * 1e6 / sys.delta_max
    det = _grid(det_frac_max, cfg["det_points"])
    rabi = _grid(cfg["rabi_max_pct"] / 100.0, cfg["rabi_points"])
    return det, rabi


def run_identity_map(args) -> int:
    fields = {
        "system_file": "system",
        "pulse_file": "pulse",
        "family": "family",
        "strategy": "strategy",
        "cycles": "cycles",
        "dt_ns": "dt_ns",
        "tau_ns": "tau_ns",
        "seed": "seed",
        "threads": "threads",
        **_GRID_FIELDS,
    }
    cfg = _merge_config(args, fields)
    if cfg["strategy"] is None:
        cfg["strategy"] = "xy8"
    if cfg["family"] is None and cfg["pulse_file"] is None:
        cfg["family"] = "square"
    if cfg["cycles"] is None:
        cfg["cycles"] = 100
    if cfg["dt_ns"] is None:
        cfg["dt_ns"] = 2.0
    if cfg["threads"] is None:
        cfg["threads"] = os.cpu_count() or 1
    _grid_defaults(cfg)
    _require(cfg, "system_file", "tau_ns")
    if cfg["strategy"] == "rp-xy8" and cfg["seed"] is None:
        raise CliError("strategy rp-xy8 requires --seed")
    sys = system_from_file(cfg["system_file"])
    pulse = resolve_pulse(cfg["family"], math.pi, sys, cfg["dt_ns"] * 1e-9,
                          path=cfg["pulse_file"])
    det, rabi = _error_grids(cfg, sys)
    m = identity_robustness_map(sys, cfg["strategy"], pulse, cfg["cycles"],
                                cfg["tau_ns"] * 1e-9, det, rabi,
                                seed=cfg["seed"], threads=cfg["threads"])
    atomic_write_text(args.out, map_csv(m, sys.delta_max))
    _write_manifest(args.out, "identity-map", cfg)
    return 0


def run_dnp_map(args) -> int:
    fields = {
        "system_file": "system",
        "pulse_file": "pulse",
        "family": "family",
        "l": "l",
        "cycles": "cycles",
        "dt_ns": "dt_ns",
        "threads": "threads",
        **_GRID_FIELDS,
    }
    cfg = _merge_config(args, fields)
    if cfg["family"] is None and cfg["pulse_file"] is None:
        cfg["family"] = "square"
    if cfg["l"] is None:
        cfg["l"] = 5
    if cfg["cycles"] is None:
        cfg["cycles"] = 29
    if cfg["dt_ns"] is None:
        cfg["dt_ns"] = 2.0
    if cfg["threads"] is None:
        cfg["threads"] = os.cpu_count() or 1
    _grid_defaults(cfg)
    _require(cfg, "system_file")
    sys = system_from_file(cfg["system_file"])
    dt = cfg["dt_ns"] * 1e-9
    if cfg["pulse_file"] is not None:
        raise CliError("dnp-map takes a pulse family, not a pulse file "
                       "(both pi/2 and pi rotations are needed)")
    pi2 = resolve_pulse(cfg["family"], math.pi / 2, sys, dt)
    pi = resolve_pulse(cfg["family"], math.pi, sys, dt)
    spec = PulsePolSpec(l=cfg["l"], cycles=cfg["cycles"], pi2_pulse=pi2,
                        pi_pulse=pi)
    det, rabi = _error_grids(cfg, sys)
    m = dnp_transfer_map(spec, sys, det, rabi, threads=cfg["threads"])
    atomic_write_text(args.out, map_csv(m, sys.delta_max))
    _write_manifest(args.out, "dnp-map", cfg)
    return 0


def run_pulse_profile(args) -> int:
    fields = {
        "system_file": "system",
        "pulse_file": "pulse",
        "family": "family",
        "target_theta_rad": "target_theta",
        "dt_ns": "dt_ns",
        "threads": "threads",
        **_GRID_FIELDS,
    }
    cfg = _merge_config(args, fields)
    if cfg["target_theta_rad"] is None:
        cfg["target_theta_rad"] = math.pi
    if cfg["dt_ns"] is None:
        cfg["dt_ns"] = 2.0
    if cfg["threads"] is None:
        cfg["threads"] = os.cpu_count() or 1
    _grid_defaults(cfg)
    _require(cfg, "system_file")
    if cfg["family"] is None and cfg["pulse_file"] is None:
        cfg["family"] = "square"
    sys = system_from_file(cfg["system_file"])
    pulse = resolve_pulse(cfg["family"], cfg["target_theta_rad"], sys,
                          cfg["dt_ns"] * 1e-9, path=cfg["pulse_file"])
    det, rabi = _error_grids(cfg, sys)
    m = pulse_robustness_profile(pulse, sys, det, rabi, threads=cfg["threads"])
    atomic_write_text(args.out, map_csv(m, sys.delta_max))
    _write_manifest(args.out, "pulse-profile", cfg)
    return 0


# --- argument parsing -------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="rocdd",
        description="Robust pulse optimization and DD sequence simulation.",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="subcommand", required=True)

    def common(p):
        p.add_argument("--config", help="JSON config or manifest file")
        p.add_argument("--system", help="system description JSON")
        p.add_argument("--out", required=True, help="output file")
        p.add_argument("--seed", type=int)
        p.add_argument("--threads", type=int)

    p = sub.add_parser("optimize", help="search for a robust shaped pulse")
    common(p)
    p.add_argument("--method", choices=("de", "grape"))
    p.add_argument("--target-theta", type=float, dest="target_theta")
    p.add_argument("--target-phi", type=float, dest="target_phi")
    p.add_argument("--dt-ns", type=float, dest="dt_ns")
    p.add_argument("--slices", type=int)
    p.add_argument("--max-iters", type=int, dest="max_iters")
    p.set_defaults(runner=run_optimize)

    p = sub.add_parser("derivs", help="directional-derivative norms of a pulse")
    common(p)
    p.add_argument("--pulse", help="pulse JSON file")
    p.add_argument("--generators", nargs="+", choices=KNOWN_GENERATORS)
    p.set_defaults(runner=run_derivs)

    p = sub.add_parser("spectrum", help="nuclear-spin detection spectrum")
    common(p)
    p.add_argument("--pulse", help="pulse JSON file")
    p.add_argument("--family", choices=PULSE_FAMILIES)
    p.add_argument("--strategy", choices=STRATEGIES)
    p.add_argument("--cycles", type=int)
    p.add_argument("--dt-ns", type=float, dest="dt_ns")
    p.add_argument("--tau-min-ns", type=float, dest="tau_min_ns")
    p.add_argument("--tau-max-ns", type=float, dest="tau_max_ns")
    p.add_argument("--tau-points", type=int, dest="tau_points")
    p.add_argument("--eps1", type=float)
    p.add_argument("--eps2", type=float)
    p.set_defaults(runner=run_spectrum)

    def grids(p):
        p.add_argument("--det-max-mhz", type=float, dest="det_max_mhz")
        p.add_argument("--det-points", type=int, dest="det_points")
        p.add_argument("--rabi-max-pct", type=float, dest="rabi_max_pct")
        p.add_argument("--rabi-points", type=int, dest="rabi_points")

    p = sub.add_parser("identity-map", help="identity-protection robustness map")
    common(p)
    p.add_argument("--pulse", help="pulse JSON file")
    p.add_argument("--family", choices=PULSE_FAMILIES)
    p.add_argument("--strategy", choices=STRATEGIES)
    p.add_argument("--cycles", type=int)
    p.add_argument("--dt-ns", type=float, dest="dt_ns")
    p.add_argument("--tau-ns", type=float, dest="tau_ns")
    grids(p)
    p.set_defaults(runner=run_identity_map)

    p = sub.add_parser("dnp-map", help="PulsePol polarization-transfer map")
    common(p)
    p.add_argument("--pulse", help="(unsupported for dnp-map)")
    p.add_argument("--family", choices=PULSE_FAMILIES)
    p.add_argument("--l", type=int)
    p.add_argument("--cycles", type=int)
    p.add_argument("--dt-ns", type=float, dest="dt_ns")
    grids(p)
    p.set_defaults(runner=run_dnp_map)

    p = sub.add_parser("pulse-profile", help="single-pulse robustness profile")
    common(p)
    p.add_argument("--pulse", help="pulse JSON file")
    p.add_argument("--family", choices=PULSE_FAMILIES)
    p.add_argument("--target-theta", type=float, dest="target_theta")
    p.add_argument("--dt-ns", type=float, dest="dt_ns")
    grids(p)
    p.set_defaults(runner=run_pulse_profile)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.runner(args)
    except (CliError, ValueError, OSError, json.JSONDecodeError) as exc:
        report = {"error": type(exc).__name__, "message": str(exc)}
        print(json.dumps(report), file=_sys.stderr)
        return 1


if __name__ == "__main__":
    raise SystemExit(main())
