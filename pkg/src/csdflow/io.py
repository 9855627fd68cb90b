"""CSV data products and their readers.

Every float is written with 17 significant digits, so two runs with the
same configuration produce byte-identical files.  Readers validate the
header and the per-row field count and raise CorruptInput with the file
name on any malformed input.
"""

import math
from pathlib import Path

import numpy as np

from .curvature import curvature
from .errors import CorruptInput
from .geometry import ProfileSurface, Topology, validate_nodes

FLOAT_FMT = "%.17g"

PROFILE_HEADER = "s,r,z"
FIELD_HEADER = (
    "s,r,z,H,kappa_p,kappa_rot,normsqA,normsqAo,gradH,normsqGradA,normsqHessA"
)
DIAGNOSTICS_HEADER = "t,area,volume,dissipation,max_normsqA,dt,eta"
REPORT_HEADER = "t,eta,argmax_r,argmax_z"
CHECK_HEADER = "identity,nodes,dt,max_residual,l2_residual,order"
TABLE_HEADER = "t,h"


def _f(x):
    return FLOAT_FMT % float(x)


def _rows_to_text(header, rows):
    lines = [header]
    lines.extend(",".join(row) for row in rows)
    return "\n".join(lines) + "\n"


def _read_csv(path, header, blank_ok=()):
    """Rows of floats from a CSV with an exact expected header.

    Column indices listed in blank_ok may be empty; they read as NaN."""
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise CorruptInput(f"{path}: {exc}") from exc
    lines = [ln for ln in text.splitlines() if ln and not ln.startswith("#")]
    if not lines or lines[0].strip() != header:
        raise CorruptInput(f"{path}: expected header {header!r}")
    width = len(header.split(","))
    out = []
    for i, ln in enumerate(lines[1:], start=2):
        parts = ln.split(",")
        if len(parts) != width:
            raise CorruptInput(f"{path}: line {i} has {len(parts)} fields")
        row = []
        for j, tok in enumerate(parts):
            tok = tok.strip()
            if tok == "" and j in blank_ok:
                row.append(float("nan"))
                continue
            try:
                row.append(float(tok))
            except ValueError:
                raise CorruptInput(f"{path}: line {i}: bad number {tok!r}") from None
        out.append(row)
    return np.array(out, dtype=np.float64).reshape(len(out), width)


def _meta_path(path):
    return Path(path).with_suffix(".meta")


def write_profile(path, s, time=0.0):
    """Profile snapshot CSV (arc position, r, z) plus key=value sidecar."""
    path = Path(path)
    arc = s.arc_positions()
    rows = [(_f(arc[i]), _f(s.r[i]), _f(s.z[i])) for i in range(s.nodes)]
    path.write_text(_rows_to_text(PROFILE_HEADER, rows))
    meta = (
        f"k={s.k}\n"
        f"topology={s.topology.value}\n"
        f"time={_f(time)}\n"
        f"spacing={_f(s.spacing)}\n"
    )
    _meta_path(path).write_text(meta)


def _parse_meta(path):
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise CorruptInput(f"{path}: {exc}") from exc
    meta = {}
    for ln in text.splitlines():
        ln = ln.strip()
        if not ln or ln.startswith("#"):
            continue
        if "=" not in ln:
            raise CorruptInput(f"{path}: expected key=value, got {ln!r}")
        key, val = ln.split("=", 1)
        meta[key.strip()] = val.strip()
    return meta


def read_profile(path):
    """Load a profile snapshot; returns (surface, time)."""
    path = Path(path)
    data = _read_csv(path, PROFILE_HEADER)
    if data.shape[0] < 2:
        raise CorruptInput(f"{path}: profile needs at least two rows")
    meta = _parse_meta(_meta_path(path))
    for key in ("k", "topology", "time"):
        if key not in meta:
            raise CorruptInput(f"{_meta_path(path)}: missing key {key!r}")
    try:
        k = int(meta["k"])
        time = float(meta["time"])
        topology = Topology(meta["topology"])
    except (ValueError, KeyError) as exc:
        raise CorruptInput(f"{_meta_path(path)}: {exc}") from exc
    r, z = data[:, 1].copy(), data[:, 2].copy()
    if "spacing" in meta:
        spacing = float(meta["spacing"])
    else:
        gaps = np.hypot(np.diff(r), np.diff(z))
        spacing = float(np.mean(gaps))
    validate_nodes(r, z, k, topology, spacing, check_intersection=False)
    return ProfileSurface(r, z, k, topology, spacing), time


def write_fields(path, s, time=0.0, fields=None):
    """Per-node curvature field snapshot CSV."""
    f = curvature(s) if fields is None else fields
    arc = s.arc_positions()
    cols = (
        arc, s.r, s.z, f.H, f.kappa_p, f.kappa_rot, f.normsqA, f.normsqAo,
        f.gradH, f.normsqGradA, f.normsqHessA,
    )
    rows = [tuple(_f(c[i]) for c in cols) for i in range(s.nodes)]
    Path(path).write_text(_rows_to_text(FIELD_HEADER, rows))


def read_fields(path):
    """Field snapshot as a dict of named columns."""
    data = _read_csv(path, FIELD_HEADER)
    names = FIELD_HEADER.split(",")
    return {name: data[:, j].copy() for j, name in enumerate(names)}


def write_diagnostics(path, traj):
    """Per-snapshot diagnostic series of a flow trajectory.

    The eta column is left empty where monitoring was disabled."""
    rows = []
    for i in range(len(traj.times)):
        eta = traj.eta[i]
        rows.append(
            (
                _f(traj.times[i]),
                _f(traj.area[i]),
                _f(traj.volume[i]),
                _f(traj.dissipation[i]),
                _f(traj.max_normsqA[i]),
                _f(traj.dt[i]),
                "" if math.isnan(eta) else _f(eta),
            )
        )
    Path(path).write_text(_rows_to_text(DIAGNOSTICS_HEADER, rows))


def read_diagnostics(path):
    """Diagnostic series as a dict of arrays (eta NaN where blank)."""
    data = _read_csv(path, DIAGNOSTICS_HEADER, blank_ok=(6,))
    names = DIAGNOSTICS_HEADER.split(",")
    return {name: data[:, j].copy() for j, name in enumerate(names)}


def write_report(path, report):
    """Concentration report: eta series rows plus a summary block."""
    rows = [
        (
            _f(report.times[i]),
            _f(report.eta[i]),
            _f(report.argmax_r[i]),
            _f(report.argmax_z[i]),
        )
        for i in range(len(report.times))
    ]
    text = _rows_to_text(REPORT_HEADER, rows)
    text += (
        "# rho=%s, eps0=%s, c_eta=%s, c_fit=%s, lifespan_bound=%s\n"
        % (
            _f(report.rho),
            _f(report.eps0_used),
            _f(report.c_eta),
            _f(report.c_fit),
            _f(report.lifespan_bound),
        )
    )
    text += "# m=%d, grid: %s\n" % (report.m, report.grid_note)
    Path(path).write_text(text)


def read_report(path):
    """Returns (series dict, summary dict) from a concentration report."""
    data = _read_csv(path, REPORT_HEADER)
    names = REPORT_HEADER.split(",")
    series = {name: data[:, j].copy() for j, name in enumerate(names)}
    summary = {}
    for ln in Path(path).read_text().splitlines():
        if not ln.startswith("# ") or "=" not in ln:
            continue
        for item in ln[2:].split(","):
            if "=" not in item:
                continue
            key, val = item.split("=", 1)
            try:
                summary[key.strip()] = float(val)
            except ValueError:
                summary[key.strip()] = val.strip()
    return series, summary


def write_check(path, reports):
    """One CSV row per identity residual report."""
    rows = [
        (
            rep.identity,
            "%d" % rep.nodes,
            _f(rep.dt),
            _f(rep.max_residual),
            _f(rep.l2_residual),
            _f(rep.order),
        )
        for rep in reports
    ]
    Path(path).write_text(_rows_to_text(CHECK_HEADER, rows))


def read_check(path):
    """Check rows as a list of dicts (identity stays a string)."""
    path = Path(path)
    try:
        lines = [
            ln
            for ln in path.read_text().splitlines()
            if ln and not ln.startswith("#")
        ]
    except OSError as exc:
        raise CorruptInput(f"{path}: {exc}") from exc
    if not lines or lines[0].strip() != CHECK_HEADER:
        raise CorruptInput(f"{path}: expected header {CHECK_HEADER!r}")
    out = []
    for i, ln in enumerate(lines[1:], start=2):
        parts = ln.split(",")
        if len(parts) != 6:
            raise CorruptInput(f"{path}: line {i} has {len(parts)} fields")
        try:
            out.append(
                {
                    "identity": parts[0],
                    "nodes": int(parts[1]),
                    "dt": float(parts[2]),
                    "max_residual": float(parts[3]),
                    "l2_residual": float(parts[4]),
                    "order": float(parts[5]),
                }
            )
        except ValueError as exc:
            raise CorruptInput(f"{path}: line {i}: {exc}") from exc
    return out


def write_table(path, times, values):
    """Constraint sample table CSV with header t,h."""
    times = np.asarray(times, dtype=np.float64)
    values = np.asarray(values, dtype=np.float64)
    rows = [(_f(times[i]), _f(values[i])) for i in range(times.shape[0])]
    Path(path).write_text(_rows_to_text(TABLE_HEADER, rows))


def read_table(path):
    """Constraint sample table; returns (times, values)."""
    data = _read_csv(path, TABLE_HEADER)
    if data.shape[0] < 2:
        raise CorruptInput(f"{path}: table needs at least two samples")
    return data[:, 0].copy(), data[:, 1].copy()
