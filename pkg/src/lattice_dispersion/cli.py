"""Command-line front end.

Every subcommand reads an optional JSON config, lets flags override it and
writes machine-readable results into ``--out``.  Each output embeds the fully
resolved config; timestamps only go to the ``run.log`` sidecar so repeated
runs produce identical files.

Exit status: 0 on success, 2 for invalid input, 3 for numerical failure.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import math
import sys
from datetime import datetime, timezone
from pathlib import Path

import jsonschema
import numpy as np

from .edge import resolve_branch
from .errors import ConvergenceError, ValidationError
from .evolution import decay_series, evolve_ac_kernel
from .jost import is_generic, scattering_coeffs, wronskian
from .lattice import LatticeWindow, Potential, kernel_norm
from .oscillatory import build_cutoffs, classify_decay, default_a_grid, sup_over_a_scan
from .resolvent import (genericity_t0, limiting_absorption_sweep, resolvent_at_zero_kernel,
                        resolvent_kernel_jost)
from .spectrum import discrete_spectrum

log = logging.getLogger("lattice_dispersion")

EXIT_OK, EXIT_INVALID, EXIT_NUMERIC = 0, 2, 3

_number_list = {"type": "array", "items": {"type": "number"}, "minItems": 1}

CONFIG_SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "properties": {
        "potential": {
            "oneOf": [
                {"type": "string"},
                {"type": "object",
                 "required": ["offset", "values"],
                 "additionalProperties": False,
                 "properties": {"offset": {"type": "integer"},
                                "values": {"type": "array", "items": {"type": "number"}}}},
            ]
        },
        "window": {"type": ["integer", "null"], "minimum": 1},
        "sigma": {"type": "number", "minimum": 0},
        "tmin": {"type": "number", "exclusiveMinimum": 0},
        "tmax": {"type": "number", "exclusiveMinimum": 0},
        "nt": {"type": "integer", "minimum": 2},
        "times": _number_list,
        "t": {"type": "number", "minimum": 0},
        "kind": {"enum": ["weighted", "l1_inf"]},
        "fit_window": {"type": "array", "items": {"type": "number"},
                       "minItems": 2, "maxItems": 2},
        "omegas": _number_list,
        "eps": _number_list,
        "edge_omegas": _number_list,
        "side": {"enum": ["plus", "minus"]},
        "observe": {"type": "integer", "minimum": 0},
        "thetas": _number_list,
        "seed": {"type": "integer", "minimum": 0},
        "ensemble": {"type": "integer", "minimum": 0},
        "support": {"type": "integer", "minimum": 1},
        "theta0": {"type": "number", "exclusiveMinimum": 0},
        "cutoff": {"enum": ["chi0", "chi"]},
        "a_step": {"type": "number", "exclusiveMinimum": 0, "maximum": 0.01},
        "refine": {"type": "boolean"},
    },
}

DEFAULTS = {
    "potential": {"offset": 0, "values": []},
    "window": 400,
    "sigma": 3.0,
    "seed": 0,
}

SUBCOMMAND_DEFAULTS = {
    "genericity": {"ensemble": 0, "support": 9},
    "spectrum": {},
    "resolvent": {"omegas": [1.0, 2.0, 3.0], "eps": [2.0 ** -k for k in range(4, 15)],
                  "edge_omegas": [1e-4, 3e-4, 1e-3, 3e-3, 1e-2], "side": "plus"},
    "evolve": {"t": 1.0, "observe": 50},
    "decay-fit": {"tmin": 50.0, "tmax": 1000.0, "nt": 12, "kind": "weighted",
                  "fit_window": [50.0, 1e300], "window": None},
    "oscillatory": {"times": [100.0, 1000.0, 10000.0], "theta0": math.pi / 4,
                    "cutoff": "chi0", "a_step": 0.01, "refine": True},
    "scattering": {"thetas": [-3.0, -2.5, -2.0, -1.5, -1.0, -0.5]},
}


def _validate(cfg: dict) -> None:
    try:
        jsonschema.validate(cfg, CONFIG_SCHEMA)
    except jsonschema.ValidationError as exc:
        path = "/".join(str(p) for p in exc.absolute_path) or "<root>"
        raise ValidationError(f"invalid config at {path}: {exc.message}") from exc


def resolve_config(command: str, file_cfg: dict, overrides: dict) -> dict:
    """Merge defaults, the config file and command-line overrides (in that order)."""
    _validate(file_cfg)
    cfg = dict(DEFAULTS)
    cfg.update(SUBCOMMAND_DEFAULTS[command])
    cfg.update(file_cfg)
    cfg.update({k: v for k, v in overrides.items() if v is not None})
    _validate(cfg)
    return cfg


def _load_potential(source) -> Potential:
    if isinstance(source, dict):
        return Potential.from_dict(source)
    text = str(source).strip()
    if text.startswith("{"):
        try:
            return Potential.from_dict(json.loads(text))
        except json.JSONDecodeError as exc:
            raise ValidationError(f"potential is not valid JSON: {exc}") from exc
    try:
        return Potential.load(text)
    except FileNotFoundError as exc:
        raise ValidationError(f"potential file not found: {text}") from exc
    except json.JSONDecodeError as exc:
        raise ValidationError(f"potential file {text} is not valid JSON: {exc}") from exc


def _dump_json(path: Path, data: dict) -> None:
    path.write_text(json.dumps(data, indent=2, sort_keys=True) + "\n")


def _config_line(cfg: dict) -> str:
    return "config: " + json.dumps(cfg, sort_keys=True)


def _write_csv(path: Path, cfg: dict, header, rows) -> None:
    with open(path, "w", newline="") as fh:
        fh.write(f"# {_config_line(cfg)}\n")
        w = csv.writer(fh)
        w.writerow(header)
        for r in rows:
            w.writerow([repr(float(x)) if isinstance(x, (float, np.floating)) else x for x in r])


def _window(cfg: dict) -> LatticeWindow:
    return LatticeWindow.symmetric(cfg["window"])


# subcommands --------------------------------------------------------------

def _genericity_record(V: Potential) -> dict:
    flag, w0, pairing = is_generic(V)
    t0 = genericity_t0(V)
    return {"generic": bool(flag), "w0": w0, "v_pairing": pairing,
            "t0_generic": bool(t0.generic), "t0_pairing": t0.pairing,
            "t0_cond": t0.cond, "t0_needs_review": bool(t0.needs_review),
            "agree": bool(flag) == bool(t0.generic)}


def random_potential(rng: np.random.Generator, max_support: int = 9,
                     amplitude: float = 1.0, max_offset: int = 5) -> Potential:
    """Random compact potential with support length at most ``max_support``."""
    s = int(rng.integers(1, max_support + 1))
    offset = int(rng.integers(-max_offset, max_offset + 1))
    return Potential(offset, rng.uniform(-amplitude, amplitude, s))


def cmd_genericity(cfg: dict, out: Path) -> dict:
    V = _load_potential(cfg["potential"])
    result = _genericity_record(V)
    if cfg["ensemble"]:
        rng = np.random.default_rng(cfg["seed"])
        members = []
        for _ in range(cfg["ensemble"]):
            W = random_potential(rng, cfg["support"])
            rec = _genericity_record(W)
            rec["potential"] = W.to_dict()
            members.append(rec)
        result["ensemble"] = members
        result["ensemble_agree"] = all(m["agree"] for m in members)
    result["config"] = cfg
    _dump_json(out / "genericity.json", result)
    return result


def cmd_spectrum(cfg: dict, out: Path) -> dict:
    V = _load_potential(cfg["potential"])
    sd = discrete_spectrum(V, _window(cfg))
    result = {"eigenvalues": sd.eigenvalues, "window": cfg["window"], "config": cfg}
    _dump_json(out / "spectrum.json", result)
    return result


def cmd_resolvent(cfg: dict, out: Path) -> dict:
    V = _load_potential(cfg["potential"])
    win = _window(cfg)
    side = cfg["side"]
    rows = []
    for om in cfg["omegas"]:
        to_limit, succ = limiting_absorption_sweep(V, om, cfg["eps"], win, side, 1.0)
        rows.extend((om, e, a, b) for e, a, b in zip(cfg["eps"], to_limit, succ))
    _write_csv(out / "resolvent_lap.csv", cfg,
               ["omega", "eps", "dist_to_limit", "dist_successive"], rows)

    generic = is_generic(V)[0]
    prow = []
    r0 = resolvent_at_zero_kernel(V, win) if generic else None
    for om in cfg["edge_omegas"]:
        r = resolvent_kernel_jost(V, om, win, side)
        if generic:
            q = kernel_norm(r - r0, "b_sigma_minus_sigma", cfg["sigma"]) / math.sqrt(om)
            kind = "remainder_over_sqrt"
        else:
            q = kernel_norm(r, "b_sigma_minus_sigma", cfg["sigma"]) * math.sqrt(om)
            kind = "norm_times_sqrt"
        prow.append((om, q, kind))
    _write_csv(out / "resolvent_puiseux.csv", cfg, ["omega", "value", "quantity"], prow)
    vals = [r[1] for r in prow]
    result = {"generic": bool(generic), "puiseux_spread": max(vals) / min(vals), "config": cfg}
    _dump_json(out / "resolvent.json", result)
    return result


def cmd_evolve(cfg: dict, out: Path) -> dict:
    V = _load_potential(cfg["potential"])
    win = _window(cfg)
    ev = evolve_ac_kernel(V, cfg["t"], win)
    obs = min(cfg["observe"], win.half_width)
    c = win.index(0)
    block = ev.entries[c - obs:c + obs + 1, c - obs:c + obs + 1]
    sites = range(-obs, obs + 1)
    rows = ((n, m, block[i, j].real, block[i, j].imag)
            for i, n in enumerate(sites) for j, m in enumerate(sites))
    _write_csv(out / "kernel.csv", cfg, ["n", "m", "re", "im"], rows)
    result = {"t": cfg["t"], "achieved_error": ev.achieved_error, "config": cfg}
    _dump_json(out / "evolve.json", result)
    return result


def _times(cfg: dict) -> np.ndarray:
    if "times" in cfg:
        return np.asarray(cfg["times"], dtype=float)
    if cfg["tmax"] <= cfg["tmin"]:
        raise ValidationError(f"tmax={cfg['tmax']} must exceed tmin={cfg['tmin']}")
    return np.geomspace(cfg["tmin"], cfg["tmax"], cfg["nt"])


def cmd_decay_fit(cfg: dict, out: Path) -> dict:
    V = _load_potential(cfg["potential"])
    win = None if cfg["window"] is None else _window(cfg)
    series = decay_series(V, cfg["sigma"], _times(cfg), cfg["kind"], win,
                          tuple(cfg["fit_window"]))
    series.write_csv(out / "decay.csv", [_config_line(cfg)])
    result = series.summary()
    result["config"] = cfg
    _dump_json(out / "decay.json", result)
    return result


def cmd_oscillatory(cfg: dict, out: Path) -> dict:
    cut = build_cutoffs(cfg["theta0"])
    if cfg["cutoff"] == "chi0":
        g, interval = cut.chi0, None
    else:
        g, interval = cut.chi, cut.chi_support()
    grid = default_a_grid(cfg["a_step"])
    rows, sups, args = [], [], []
    for t in cfg["times"]:
        scan = sup_over_a_scan(t, g, grid, interval, cfg["refine"])
        rows.extend((t, a, v, e) for a, v, e in zip(scan.a_grid, scan.values, scan.errors))
        sups.append(scan.sup)
        args.append(scan.argmax)
    _write_csv(out / "oscillatory.csv", cfg, ["t", "a", "abs_integral", "err_estimate"], rows)
    result = {"times": list(cfg["times"]), "sup": sups, "argmax": args, "config": cfg}
    if len(cfg["times"]) >= 2:
        dc = classify_decay(cfg["times"], sups)
        result.update({"slope": dc.slope, "k": dc.k,
                       "spread_half": dc.spread_half, "spread_third": dc.spread_third})
    _dump_json(out / "oscillatory.json", result)
    return result


def cmd_scattering(cfg: dict, out: Path) -> dict:
    V = _load_potential(cfg["potential"])
    rows = []
    for th in cfg["thetas"]:
        sc = scattering_coeffs(V, th)
        w = wronskian(V, resolve_branch(2 - 2 * math.cos(th), "plus" if th < 0 else "minus").mu)
        rows.append((th, sc.a.real, sc.a.imag, sc.b.real, sc.b.imag, w.real, w.imag))
    _write_csv(out / "scattering.csv", cfg,
               ["theta", "a_re", "a_im", "b_re", "b_im", "w_re", "w_im"], rows)
    result = {"rows": len(rows), "config": cfg}
    return result


COMMANDS = {
    "genericity": (cmd_genericity, "zero-energy genericity: Wronskian test and T0 cross-check"),
    "spectrum": (cmd_spectrum, "eigenvalues outside [0, 4]"),
    "resolvent": (cmd_resolvent, "limiting-absorption and band-edge tables"),
    "evolve": (cmd_evolve, "dump the continuous-spectrum propagator kernel"),
    "decay-fit": (cmd_decay_fit, "propagator norms over time with a power-law fit"),
    "oscillatory": (cmd_oscillatory, "sup over a of the lattice oscillatory integral"),
    "scattering": (cmd_scattering, "scattering coefficients and Wronskian table"),
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="lattice-dispersion",
        description="Spectral and dispersive numerics for -Delta + V on the integer lattice.")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, (_, help_text) in COMMANDS.items():
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", type=Path, help="JSON config file")
        p.add_argument("--out", type=Path, default=Path("."), help="output directory")
        p.add_argument("--window", type=int, help="window half-width N (default 400)")
        p.add_argument("--sigma", type=float, help="weight exponent (default 3)")
        p.add_argument("--tmax", type=float, help="largest time sampled")
        p.add_argument("--seed", type=int, help="seed for random ensembles")
        p.add_argument("--potential", help='potential file or inline JSON {"offset":..,"values":[..]}')
        if name == "evolve":
            p.add_argument("--t", type=float, help="time")
        if name == "decay-fit":
            p.add_argument("--kind", choices=["weighted", "l1_inf"])
            p.add_argument("--tmin", type=float)
        if name == "genericity":
            p.add_argument("--ensemble", type=int, help="also test this many random potentials")
        if name == "oscillatory":
            p.add_argument("--cutoff", choices=["chi0", "chi"])
    return parser


def _read_config(path) -> dict:
    if path is None:
        return {}
    try:
        data = json.loads(Path(path).read_text())
    except FileNotFoundError as exc:
        raise ValidationError(f"config file not found: {path}") from exc
    except json.JSONDecodeError as exc:
        raise ValidationError(f"config file {path} is not valid JSON: {exc}") from exc
    if not isinstance(data, dict):
        raise ValidationError("config file must contain a JSON object")
    return data


def _setup_log(out: Path) -> logging.Handler:
    handler = logging.FileHandler(out / "run.log")
    handler.setFormatter(logging.Formatter("%(message)s"))
    log.addHandler(handler)
    log.setLevel(logging.INFO)
    return handler


def run(argv=None) -> int:
    args = build_parser().parse_args(argv)
    overrides = {k: v for k, v in vars(args).items()
                 if k not in ("command", "config", "out")}
    handler = None
    try:
        cfg = resolve_config(args.command, _read_config(args.config), overrides)
        cfg["potential"] = _load_potential(cfg["potential"]).to_dict()
        args.out.mkdir(parents=True, exist_ok=True)
        handler = _setup_log(args.out)
        log.info("%s start %s", datetime.now(timezone.utc).isoformat(), args.command)
        func = COMMANDS[args.command][0]
        func(cfg, args.out)
        log.info("%s done", datetime.now(timezone.utc).isoformat())
        return EXIT_OK
    except ConvergenceError as exc:
        print(f"error: numerical failure: {exc}", file=sys.stderr)
        log.info("numerical failure: %s", exc)
        return EXIT_NUMERIC
    except (ValidationError, ValueError) as exc:
        print(f"error: invalid input: {exc}", file=sys.stderr)
        log.info("invalid input: %s", exc)
        return EXIT_INVALID
    finally:
        if handler is not None:
            log.removeHandler(handler)
            handler.close()


def main() -> None:
    sys.exit(run())
