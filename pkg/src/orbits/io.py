"""Orbit files (JSON) and plot-ready exports (CSV, SVG)."""

from __future__ import annotations

import csv
import json
from pathlib import Path

import numpy as np

from .errors import InvalidInputError
from .fields import FieldModel, make_preset
from .loops import Loop, evaluate
from .reparam import find_collisions, invert_time, sigma_map, time_map
from .solver import SolveReport
from .verify import VerificationReport

EXPORT_FORMATS = ("csv", "svg")


def orbit_record(z: Loop, model: FieldModel, report: SolveReport | None = None,
                 verification: VerificationReport | None = None, q: Loop | None = None) -> dict:
    q = sigma_map(z) if q is None else q
    md = model.to_dict()
    meta = {"model": md["preset"], "params": md["params"], "parity": z.parity, "N": z.n}
    if "exclusion_radius" in md:
        meta["exclusion_radius"] = md["exclusion_radius"]
    return {
        "meta": meta,
        "z": z.to_dict(),
        "q": q.to_dict(),
        "action": report.action.to_dict() if report else None,
        "report": report.to_dict() if report else None,
        "verification": verification.to_dict() if verification else None,
    }


def write_json(path, data) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(data, indent=1))
    return path


def read_orbit(path) -> dict:
    """Load an orbit file; raises :class:`InvalidInputError` if it is unusable."""
    try:
        data = json.loads(Path(path).read_text())
    except (OSError, ValueError) as exc:
        raise InvalidInputError(f"cannot read orbit file {path}: {exc}") from exc
    if not isinstance(data, dict) or "z" not in data:
        raise InvalidInputError(f"{path} is not an orbit file (no 'z' loop)")
    return data


def read_loop(path) -> Loop:
    """Load a bare loop record or the ``z`` loop of an orbit file."""
    try:
        data = json.loads(Path(path).read_text())
    except (OSError, ValueError) as exc:
        raise InvalidInputError(f"cannot read loop file {path}: {exc}") from exc
    if isinstance(data, dict) and "z" in data:
        data = data["z"]
    if not isinstance(data, dict):
        raise InvalidInputError(f"{path} holds no loop")
    return Loop.from_dict(data)


def model_from_meta(meta: dict) -> FieldModel:
    try:
        return make_preset(meta["model"], meta.get("params"), meta.get("exclusion_radius"))
    except KeyError as exc:
        raise InvalidInputError(f"orbit meta lacks {exc}") from exc


def orbit_table(z: Loop, m: int | None = None) -> dict:
    """Columns of the CSV export at ``m`` uniform times (default ``4 N``).

    The exact collision instants are merged in as extra rows so that the
    zeros of ``q`` show up in the table.
    """
    m = 4 * z.n if m is None else m
    table = time_map(z)
    t = np.arange(m) / m
    tau = invert_time(table, t)
    if table.collisions:
        tc = np.asarray(table.collisions)
        t = np.append(t, table.t_at(tc) % 1.0)
        tau = np.append(tau, tc)
        order = np.argsort(t, kind="stable")
        t, tau = t[order], tau[order]
    zs = evaluate(z, tau)
    q = zs ** 2
    return {"t": t, "Re q": q.real, "Im q": q.imag, "|q|": np.abs(q), "tau_z(t)": tau,
            "Re z": zs.real, "Im z": zs.imag}


def export_csv(z: Loop, path, m: int | None = None) -> Path:
    cols = orbit_table(z, m)
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(list(cols))
        for row in zip(*cols.values()):
            w.writerow([repr(float(v)) for v in row])
    return path


def export_svg(z: Loop, path, m: int | None = None, size: int = 480) -> Path:
    """Static SVG of the q-curve; collisions are marked with red dots."""
    q = orbit_table(z, m)
    x, y = q["Re q"], q["Im q"]
    xs = np.append(x, x[0])
    ys = np.append(y, y[0])
    lo = min(xs.min(), ys.min(), 0.0)
    hi = max(xs.max(), ys.max(), 0.0)
    pad = 0.05 * (hi - lo or 1.0)
    lo, hi = lo - pad, hi + pad
    scale = size / (hi - lo)

    def px(u, v):
        return (u - lo) * scale, (hi - v) * scale

    pts = [px(u, v) for u, v in zip(xs, ys)]
    d = "M " + " L ".join(f"{a:.3f} {b:.3f}" for a, b in pts)
    marks = []
    for c in find_collisions(z, strict=False):
        w = complex(evaluate(z, c.tau)) ** 2
        cx, cy = px(w.real, w.imag)
        marks.append(f'<circle cx="{cx:.3f}" cy="{cy:.3f}" r="4" fill="red"/>')
    ox, oy = px(0.0, 0.0)
    body = "\n".join([
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{size}" height="{size}" '
        f'viewBox="0 0 {size} {size}">',
        f'<path d="{d}" fill="none" stroke="black" stroke-width="1"/>',
        f'<circle cx="{ox:.3f}" cy="{oy:.3f}" r="2" fill="gray"/>',
        *marks,
        "</svg>",
    ])
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(body + "\n")
    return path


def export_orbit(orbit_path, fmt: str, out_path=None, m: int | None = None) -> Path:
    """Export an orbit file to ``csv`` or ``svg``."""
    if fmt not in EXPORT_FORMATS:
        raise InvalidInputError(f"unknown export format {fmt!r}; choose from {EXPORT_FORMATS}")
    z = read_loop(orbit_path)
    out_path = Path(orbit_path).with_suffix("." + fmt) if out_path is None else out_path
    return (export_csv if fmt == "csv" else export_svg)(z, out_path, m)
