"""Batch front-end: ``orbits solve|verify|continue|map|export``.

Jobs are described by a TOML file::

    command = "solve"

    [model]
    preset = "kepler"            # kepler | rotating_kepler | forced_stark | bicircular
    params = {}
    # exclusion_radius = 0.4

    [seed.circle]                # or [seed.collision_seed] / [seed.file]
    radius = 0.5419              # default: Kepler circle for the winding
    winding = 0.5

    [seed.perturbation]          # optional
    amplitude = 0.05
    random_seed = 7

    [solver]
    N = 128

    [output]
    dir = "out"
    formats = ["csv", "svg"]

Exit codes: 0 success, 2 non-convergence, 3 invalid config or input,
4 verification failure.
"""

from __future__ import annotations

import argparse
import logging
import sys
from dataclasses import fields as dc_fields
from pathlib import Path

import numpy as np

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from .errors import ConfigError, OrbitsError
from .fields import make_preset, parameter_family
from .io import (EXPORT_FORMATS, export_orbit, model_from_meta, orbit_record, read_loop, read_orbit,
                 write_json)
from .loops import ANTIPERIODIC, PERIODIC, from_function, perturb
from .reparam import sigma_map, time_map
from .solver import SolveOptions, continue_family, solve_critical
from .verify import Thresholds, collision_times, verify_solution

log = logging.getLogger("orbits")

EXIT_OK, EXIT_NONCONVERGED, EXIT_CONFIG, EXIT_VERIFY = 0, 2, 3, 4
COMMANDS = ("solve", "verify", "continue", "map")
SEED_KINDS = ("circle", "collision_seed", "file")


def load_config(path) -> dict:
    try:
        with open(path, "rb") as fh:
            cfg = tomllib.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"config {path} is not valid TOML: {exc}") from exc
    cfg["_base"] = str(Path(path).resolve().parent)
    return cfg


def _resolve(cfg: dict, p) -> Path:
    p = Path(p)
    return p if p.is_absolute() else Path(cfg.get("_base", ".")) / p


def _is_half_odd(w: float) -> bool:
    return abs(2 * w - round(2 * w)) < 1e-12 and round(2 * w) % 2 == 1


def _check_winding(w, what: str) -> float:
    try:
        w = float(w)
    except (TypeError, ValueError):
        raise ConfigError(f"{what}: winding must be a number") from None
    if abs(2 * w - round(2 * w)) > 1e-12 or w == 0:
        raise ConfigError(f"{what}: winding must be a nonzero integer or half-integer")
    return w


def model_from_config(cfg: dict):
    block = cfg.get("model")
    if not isinstance(block, dict) or "preset" not in block:
        raise ConfigError("missing [model] block with a preset")
    return make_preset(block["preset"], block.get("params", {}), block.get("exclusion_radius"))


def solver_options(cfg: dict, parity: str) -> SolveOptions:
    block = dict(cfg.get("solver", {}))
    known = {f.name for f in dc_fields(SolveOptions)}
    unknown = set(block) - known
    if unknown:
        raise ConfigError(f"unknown solver options {sorted(unknown)}")
    declared = block.pop("parity", parity)
    if declared != parity:
        raise ConfigError(f"solver parity {declared!r} contradicts the seed winding (needs {parity!r})")
    return SolveOptions(parity=parity, **block)


def build_seed(cfg: dict):
    """Seed loop from the ``[seed]`` block (exactly one kind, optional perturbation)."""
    block = cfg.get("seed")
    if not isinstance(block, dict):
        raise ConfigError("missing [seed] block")
    kinds = [k for k in SEED_KINDS if k in block]
    if len(kinds) != 1:
        raise ConfigError(f"exactly one seed block out of {SEED_KINDS} is required, got {kinds}")
    kind = kinds[0]
    entry = block[kind]
    n = int(cfg.get("solver", {}).get("N", SolveOptions.N))
    if kind == "file":
        path = entry.get("path") if isinstance(entry, dict) else entry
        seed = read_loop(_resolve(cfg, path))
    else:
        w = _check_winding(entry.get("winding", 0.5), f"seed.{kind}")
        parity = ANTIPERIODIC if _is_half_odd(w) else PERIODIC
        if kind == "circle":
            radius = float(entry.get("radius", (4 * np.pi * abs(w)) ** (-1.0 / 3.0)))
            seed = from_function(lambda t: radius * np.exp(2j * np.pi * w * t), n, parity)
        else:
            # mu = -2 pi^2 w^2 A^6 for A cos(2 pi w tau); default makes mu = -1
            amp = float(entry.get("amplitude", (2 * np.pi ** 2 * w ** 2) ** (-1.0 / 6.0)))
            seed = from_function(lambda t: amp * np.cos(2 * np.pi * w * t), n, parity)
        if "parity" in cfg.get("solver", {}) and cfg["solver"]["parity"] != parity:
            raise ConfigError(f"winding {w} requires parity {parity!r}")
    pert = block.get("perturbation")
    if pert:
        if "random_seed" not in pert:
            raise ConfigError("seed.perturbation needs an explicit random_seed")
        rng = np.random.default_rng(int(pert["random_seed"]))
        seed = perturb(seed, rng, float(pert.get("amplitude", 0.05)), int(pert.get("bandwidth", 4)))
    return seed


def _out_dir(cfg: dict, override) -> Path:
    if override is not None:
        return Path(override)
    return _resolve(cfg, cfg.get("output", {}).get("dir", "out"))


def _formats(cfg: dict):
    fmts = cfg.get("output", {}).get("formats", [])
    bad = [f for f in fmts if f not in EXPORT_FORMATS]
    if bad:
        raise ConfigError(f"unknown export formats {bad}")
    return fmts


def _thresholds(cfg: dict) -> Thresholds:
    try:
        return Thresholds(**cfg.get("verify", {}).get("thresholds", {}))
    except TypeError as exc:
        raise ConfigError(f"bad verify thresholds: {exc}") from exc


def _write_orbit(path: Path, z, model, report, verification, fmts) -> None:
    write_json(path, orbit_record(z, model, report, verification))
    for fmt in fmts:
        export_orbit(path, fmt)


def _job_solve(cfg, out: Path) -> int:
    model = model_from_config(cfg)
    seed = build_seed(cfg)
    opts = solver_options(cfg, seed.parity)
    fmts = _formats(cfg)
    th = _thresholds(cfg)
    z, report = solve_critical(seed, model, opts)
    verification = verify_solution(z, model, th)
    _write_orbit(out / "orbit.json", z, model, report, verification, fmts)
    if not report.converged:
        print(f"solver did not converge: |grad| = {report.final_grad_norm:.3g}", file=sys.stderr)
        return EXIT_NONCONVERGED
    if not verification.passed:
        print(f"verification failed: {verification.failures}", file=sys.stderr)
        return EXIT_VERIFY
    return EXIT_OK


def _job_verify(cfg, out: Path) -> int:
    block = cfg.get("verify", {})
    if "orbit" not in block:
        raise ConfigError("verify job needs verify.orbit = <orbit file>")
    data = read_orbit(_resolve(cfg, block["orbit"]))
    z = read_loop(_resolve(cfg, block["orbit"]))
    model = model_from_meta(data.get("meta", {}))
    verification = verify_solution(z, model, _thresholds(cfg))
    write_json(out / "verification.json", verification.to_dict())
    if not verification.passed:
        print(f"verification failed: {verification.failures}", file=sys.stderr)
        return EXIT_VERIFY
    return EXIT_OK


def _job_continue(cfg, out: Path) -> int:
    block = cfg.get("continue")
    if not isinstance(block, dict):
        raise ConfigError("continue job needs a [continue] block")
    try:
        param, start, stop = block["param"], float(block["start"]), float(block["stop"])
        steps = int(block.get("steps", 10))
    except KeyError as exc:
        raise ConfigError(f"[continue] lacks {exc}") from None
    mblock = cfg.get("model", {})
    if "preset" not in mblock:
        raise ConfigError("missing [model] block with a preset")
    family = parameter_family(mblock["preset"], mblock.get("params", {}), param, start, stop,
                              mblock.get("exclusion_radius"))
    seed = build_seed(cfg)
    opts = solver_options(cfg, seed.parity)
    fmts = _formats(cfg)
    th = _thresholds(cfg)
    fam = continue_family(seed, family, steps, opts, float(block.get("s_min_step", 1e-3)))
    manifest = {"param": param, "start": start, "stop": stop, "steps": steps,
                "truncated": fam.truncated, "members": []}
    failed = False
    for k, (s, z, report) in enumerate(fam):
        model = family(s)
        verification = verify_solution(z, model, th)
        failed |= not verification.passed
        name = f"member_{k:03d}.json"
        _write_orbit(out / "family" / name, z, model, report, verification, fmts)
        manifest["members"].append({"index": k, "s": s, "value": start + s * (stop - start),
                                    "file": f"family/{name}", "converged": report.converged,
                                    "action": report.action.total, "verified": verification.passed})
    write_json(out / "manifest.json", manifest)
    if fam.truncated:
        print(f"continuation truncated after {len(fam)} members", file=sys.stderr)
        return EXIT_NONCONVERGED
    if failed:
        print("verification failed for some family members", file=sys.stderr)
        return EXIT_VERIFY
    return EXIT_OK


def _job_map(cfg, out: Path) -> int:
    block = cfg.get("map", {})
    if "input" not in block:
        raise ConfigError("map job needs map.input = <loop or orbit file>")
    z = read_loop(_resolve(cfg, block["input"]))
    q = sigma_map(z, block.get("M"))
    rec = {"parity_class": "odd" if z.parity == ANTIPERIODIC else "even",
           "collision_times": collision_times(z),
           "collision_taus": list(time_map(z).collisions),
           "q": q.to_dict()}
    write_json(out / "q.json", rec)
    return EXIT_OK


JOBS = {"solve": _job_solve, "verify": _job_verify, "continue": _job_continue, "map": _job_map}


def run_job(config_path, command: str | None = None, out=None) -> int:
    """Run one job and return its exit status; diagnostics go to stderr."""
    try:
        cfg = load_config(config_path)
        declared = cfg.get("command")
        if command is not None and declared is not None and declared != command:
            raise ConfigError(f"config is for {declared!r}, not {command!r}")
        command = command or declared
        if command not in JOBS:
            raise ConfigError(f"unknown command {command!r}; choose from {COMMANDS}")
        out_dir = _out_dir(cfg, out)
        return JOBS[command](cfg, out_dir)
    except ConfigError as exc:
        print(f"invalid config: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OrbitsError as exc:
        # invalid inputs (bad parameters, malformed files, degenerate seeds)
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="orbits", description=__doc__.split("\n")[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", required=True)
        p.add_argument("--out", default=None)
    p = sub.add_parser("export", help="write csv / svg files for an orbit file")
    p.add_argument("orbit")
    p.add_argument("--format", choices=EXPORT_FORMATS, required=True)
    p.add_argument("--out", default=None)
    p.add_argument("-M", type=int, default=None, help="number of uniform time samples")
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    if args.command == "export":
        try:
            print(export_orbit(args.orbit, args.format, args.out, args.M))
        except OrbitsError as exc:
            print(f"error: {exc}", file=sys.stderr)
            return EXIT_CONFIG
        return EXIT_OK
    return run_job(args.config, args.command, args.out)


if __name__ == "__main__":
    sys.exit(main())
