"""Command line front end: ``westervelt {simulate,convergence,compare}``.

Configuration comes from an optional ``--config`` file (``key = value``
lines with ``#`` comments, or a manifest.json written by an earlier run),
overridden by command line flags.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
import time
from pathlib import Path

from . import __version__
from .experiments import (
    INTEGRATORS,
    SimulationConfig,
    compare_integrators,
    convergence_study,
    parse_profile,
    run_simulation,
)
from .integrators import NewtonConfig
from .model import ModelParams

EXIT_OK, EXIT_CONFIG, EXIT_DEGENERATE, EXIT_NEWTON = 0, 1, 2, 3
_STATUS_EXIT = {"completed": EXIT_OK, "degenerate": EXIT_DEGENERATE, "newton-failed": EXIT_NEWTON}

# config key -> command line flag
_KEYS = {
    "domain": "--domain",
    "elements": "--elements",
    "degree_k": "--degree-k",
    "order_q": "--order-q",
    "tau": "--tau",
    "t_final": "--t-final",
    "alpha": "--alpha",
    "beta": "--beta",
    "initial": "--initial",
    "initial_psi": "--initial-psi",
    "integrator": "--integrator",
    "snapshots": "--snapshots",
    "out_dir": "--out-dir",
}

DEFAULTS = {
    "domain": "0,16",
    "degree_k": "2",
    "order_q": "2",
    "alpha": "0",
    "beta": "0.3",
    "initial": "gaussian(0.2)",
    "initial_psi": "zero",
    "integrator": "cpg",
    "snapshots": "",
    "out_dir": ".",
}


class ConfigError(ValueError):
    pass


def fmt(x: float) -> str:
    return format(float(x), ".17g")


def read_config_file(path) -> dict:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    if path.suffix == ".json":
        data = json.loads(text)
        data = data.get("config", data)
        return {k: ",".join(map(str, v)) if isinstance(v, list) else str(v) for k, v in data.items()}
    out = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected key = value")
        key, value = (s.strip() for s in line.split("=", 1))
        key = key.replace("-", "_")
        if key not in _KEYS and key != "levels":
            raise ConfigError(f"{path}:{lineno}: unknown key {key!r}")
        out[key] = value
    return out


def resolve(args) -> dict:
    raw = dict(DEFAULTS)
    if args.config:
        raw.update(read_config_file(args.config))
    for key in _KEYS:
        val = getattr(args, key, None)
        if val is not None:
            raw[key] = val
    return raw


def _floats(text: str) -> tuple:
    return tuple(float(v) for v in text.replace(";", ",").split(",") if v.strip())


def build_config(raw: dict, require=("elements", "tau", "t_final")) -> SimulationConfig:
    missing = [k for k in require if not raw.get(k)]
    if missing:
        raise ConfigError("missing required setting(s): " + ", ".join(_KEYS[k] for k in missing))
    if raw["integrator"] not in INTEGRATORS:
        raise ConfigError(f"unknown integrator {raw['integrator']!r}; choose from {', '.join(INTEGRATORS)}")
    try:
        domain = _floats(raw["domain"])
        if len(domain) != 2:
            raise ConfigError("--domain expects two numbers 'a,b'")
        return SimulationConfig(
            num_elements=int(raw.get("elements") or 1),
            tau=float(raw.get("tau") or 1.0),
            t_final=float(raw["t_final"]),
            domain=domain,
            degree_k=int(raw["degree_k"]),
            order_q=int(raw["order_q"]),
            params=ModelParams(float(raw["alpha"]), float(raw["beta"])),
            psi0=raw["initial_psi"],
            p0=raw["initial"],
            snapshot_times=_floats(raw["snapshots"]),
            integrator=raw["integrator"],
            newton=NewtonConfig(),
        )
    except ConfigError:
        raise
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def _check_profiles(config: SimulationConfig):
    mesh = config.mesh()
    try:
        parse_profile(config.psi0, mesh)
        parse_profile(config.p0, mesh)
    except (ValueError, OSError) as exc:
        raise ConfigError(str(exc)) from exc


def write_csv(path: Path, header, rows):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        writer.writerows(rows)


def write_snapshots(path: Path, traj):
    x = traj.mesh.global_nodes
    header = ["x"] + [fmt(s.time) for s in traj.snapshots]
    rows = [[fmt(x[i])] + [fmt(s.p[i]) for s in traj.snapshots] for i in range(len(x))]
    write_csv(path, header, rows)


def write_energy(path: Path, traj):
    led = traj.ledger
    cum = led.cumulative_dissipation()
    rows = [[fmt(t), fmt(e), fmt(d)] for t, e, d in zip(led.times, led.energies, cum)]
    write_csv(path, ["t", "E_h", "dissipation_cumulative"], rows)


def write_manifest(out_dir: Path, raw: dict, command: str, started: float, status: str,
                   message: str, outputs: list):
    echo = {k: raw[k] for k in _KEYS if k in raw and k != "out_dir"}
    for k in ("levels", "h0"):
        if k in raw:
            echo[k] = raw[k]
    manifest = {
        "command": command,
        "config": echo,
        "version": __version__,
        "wall_clock_seconds": time.perf_counter() - started,
        "status": status,
        "message": message,
        "outputs": [str(p) for p in outputs],
    }
    path = out_dir / "manifest.json"
    path.write_text(json.dumps(manifest, indent=2) + "\n")
    return path


def _out_dir(raw) -> Path:
    out = Path(raw["out_dir"])
    out.mkdir(parents=True, exist_ok=True)
    return out


def cmd_simulate(args) -> int:
    started = time.perf_counter()
    raw = resolve(args)
    config = build_config(raw)
    _check_profiles(config)
    out = _out_dir(raw)
    traj = run_simulation(config)
    outputs = [out / "snapshots.csv", out / "energy.csv"]
    write_snapshots(outputs[0], traj)
    write_energy(outputs[1], traj)
    status, message = traj.status, traj.message
    if args.overlay_linear:
        lin = run_simulation(config.replace(params=ModelParams(0.0, 0.0)))
        outputs.append(out / "snapshots_linear.csv")
        write_snapshots(outputs[-1], lin)
    write_manifest(out, raw, "simulate", started, status, message, outputs)
    if message:
        print(f"westervelt: {message}", file=sys.stderr)
    return _STATUS_EXIT[status]


def cmd_convergence(args) -> int:
    started = time.perf_counter()
    raw = resolve(args)
    if args.levels is not None:
        raw["levels"] = str(args.levels)
    raw.setdefault("levels", "4")
    raw["h0"] = str(args.h0)
    levels = int(raw["levels"])
    if levels < 3:
        raise ConfigError("--levels must be at least 3 to estimate convergence orders")
    config = build_config(raw, require=("t_final",))
    if config.integrator != "cpg":
        raise ConfigError("convergence studies use the cpg integrator")
    _check_profiles(config)
    out = _out_dir(raw)
    try:
        rows = convergence_study(config, levels, h0=args.h0)
    except RuntimeError as exc:
        msg = str(exc)
        status = "degenerate" if "1 - 2*beta*p" in msg else "newton-failed"
        write_manifest(out, raw, "convergence", started, status, msg, [])
        print(f"westervelt: {msg}", file=sys.stderr)
        return _STATUS_EXIT[status]
    path = out / "convergence.csv"
    write_csv(path, ["h_tau", "err", "eoc"],
              [[fmt(r.h), fmt(r.err), "" if r.eoc is None else fmt(r.eoc)] for r in rows])
    write_manifest(out, raw, "convergence", started, "completed", "", [path])
    return EXIT_OK


def cmd_compare(args) -> int:
    started = time.perf_counter()
    raw = resolve(args)
    config = build_config(raw)
    _check_profiles(config)
    out = _out_dir(raw)
    summaries = compare_integrators(config)
    path = out / "compare.csv"
    write_csv(path, ["integrator", "max_drift", "balance_residual", "final_energy"],
              [[s.integrator, fmt(s.max_drift), fmt(s.balance_residual), fmt(s.final_energy)]
               for s in summaries])
    failed = [s for s in summaries if s.status != "completed"]
    status = failed[0].status if failed else "completed"
    message = "; ".join(f"{s.integrator}: {s.status}" for s in failed)
    write_manifest(out, raw, "compare", started, status, message, [path])
    return _STATUS_EXIT[status]


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="westervelt", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="key=value config file or manifest.json")
    common.add_argument("--domain", help="interval 'a,b' (default 0,16)")
    common.add_argument("--elements", help="number of elements")
    common.add_argument("--degree-k", dest="degree_k", help="polynomial degree in space")
    common.add_argument("--order-q", dest="order_q", help="polynomial degree in time")
    common.add_argument("--tau", help="time step")
    common.add_argument("--t-final", dest="t_final", help="final time")
    common.add_argument("--alpha", help="viscous damping (>= 0)")
    common.add_argument("--beta", help="nonlinearity (>= 0)")
    common.add_argument("--initial", help="initial pressure profile, e.g. gaussian(0.2)")
    common.add_argument("--initial-psi", dest="initial_psi", help="initial potential profile")
    common.add_argument("--integrator", help="|".join(INTEGRATORS))
    common.add_argument("--snapshots", help="comma separated snapshot times")
    common.add_argument("--out-dir", dest="out_dir", help="output directory")

    p = sub.add_parser("simulate", parents=[common], help="run one simulation")
    p.add_argument("--overlay-linear", action="store_true",
                   help="also write snapshots_linear.csv for alpha = beta = 0")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("convergence", parents=[common], help="space-time convergence study")
    p.add_argument("--levels", type=int, help="number of refinement levels (default 4)")
    p.add_argument("--h0", type=float, default=0.25, help="coarsest h = tau (default 0.25)")
    p.set_defaults(func=cmd_convergence)

    p = sub.add_parser("compare", parents=[common], help="energy drift of all integrators")
    p.set_defaults(func=cmd_compare)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code else EXIT_OK
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"westervelt: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
