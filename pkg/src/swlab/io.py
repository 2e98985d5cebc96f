"""Serialization: SWV1 field files, JSON mirrors, CSV logs, JSON reports.

The SWV1 format is binary, little-endian:

    magic   "SWVF" (4 bytes)
    version u32 = 1
    Nx, Ny, n   u32
    degree      i32
    Lx, Ly, epsilon, tau   f64
    then f64 arrays in row-major site order:
        fluctuation a   (2 per site: ax, ay)
        u               (4n per site: Re c1, Im c1, Re c2, Im c2 per factor)
        phi             (2 per site: Re, Im)
        conformal h     (1 per site)

A JSON mirror with the same keys is accepted for small lattices; saving to
a path ending in ``.json`` selects it automatically.  Binary round-trips
are bit-exact.
"""

import csv
import json
import struct

import numpy as np

from .lattice import TorusLattice, BundleSpec, ConnectionField
from .equations import Configuration

_MAGIC = b"SWVF"
_HEADER = "<4sIIIIiddddd"  # magic, version, Nx, Ny, n, degree, Lx, Ly,
#                            epsilon, tau, (reserved)

CSV_COLUMNS = ("iter", "energy", "r1", "r2", "r3", "gauge_defect", "wall_ms")


class FieldIOError(IOError):
    """Malformed or unreadable field file."""


def _field_blocks(q):
    lat = q.lattice
    a = np.stack([q.a.ax, q.a.ay], axis=-1)
    u = q.u.view(float).reshape(lat.Nx, lat.Ny, 4 * q.n)
    phi = q.phi[..., None].view(float).reshape(lat.Nx, lat.Ny, 2)
    return a, u, phi, lat.h


def save_fields(path, q):
    """Write a configuration to an SWV1 file (or JSON mirror for .json)."""
    path = str(path)
    if path.endswith(".json"):
        return _save_json(path, q)
    lat = q.lattice
    a, u, phi, h = _field_blocks(q)
    header = struct.pack("<4sIIIIidddd", _MAGIC, 1, lat.Nx, lat.Ny, q.n,
                         q.bundle.degree, lat.Lx, lat.Ly, q.epsilon, q.tau)
    with open(path, "wb") as fh:
        fh.write(header)
        for block in (a, u, phi, h):
            fh.write(np.ascontiguousarray(block, dtype="<f8").tobytes())
    return path


def load_fields(path):
    """Read a configuration from an SWV1 file or its JSON mirror."""
    path = str(path)
    if path.endswith(".json"):
        return _load_json(path)
    fmt = "<4sIIIIidddd"
    size = struct.calcsize(fmt)
    try:
        with open(path, "rb") as fh:
            head = fh.read(size)
            if len(head) < size:
                raise FieldIOError(f"{path}: truncated header")
            (magic, version, nx, ny, n, degree,
             lx, ly, epsilon, tau) = struct.unpack(fmt, head)
            if magic != _MAGIC:
                raise FieldIOError(f"{path}: bad magic {magic!r}")
            if version != 1:
                raise FieldIOError(f"{path}: unsupported version {version}")
            counts = (2, 4 * n, 2, 1)
            blocks = []
            for c in counts:
                data = np.frombuffer(fh.read(8 * nx * ny * c), dtype="<f8")
                if data.size != nx * ny * c:
                    raise FieldIOError(f"{path}: truncated field data")
                blocks.append(data.reshape(nx, ny, c))
    except OSError as exc:
        raise FieldIOError(str(exc)) from exc
    a, u, phi, h = blocks
    conformal = h[..., 0]
    if np.all(conformal == 1.0):
        conformal = None
    lat = TorusLattice(nx, ny, lx, ly, conformal=conformal)
    conn = ConnectionField(lat, BundleSpec(degree),
                           ax=a[..., 0], ay=a[..., 1])
    uc = u.copy().view(complex).reshape(nx, ny, n, 2)
    phic = phi.copy().view(complex).reshape(nx, ny)
    return Configuration(lat, BundleSpec(degree), a=conn, u=uc, phi=phic,
                         n=n, epsilon=epsilon, tau=tau)


def _save_json(path, q):
    lat = q.lattice
    a, u, phi, h = _field_blocks(q)
    doc = {
        "magic": "SWVF", "version": 1,
        "Nx": lat.Nx, "Ny": lat.Ny, "n": q.n, "degree": q.bundle.degree,
        "Lx": lat.Lx, "Ly": lat.Ly, "epsilon": q.epsilon, "tau": q.tau,
        "a": a.ravel().tolist(),
        "u": u.ravel().tolist(),
        "phi": phi.ravel().tolist(),
        "conformal": h.ravel().tolist(),
    }
    with open(path, "w") as fh:
        json.dump(doc, fh)
    return path


def _load_json(path):
    try:
        with open(path) as fh:
            doc = json.load(fh)
    except (OSError, ValueError) as exc:
        raise FieldIOError(f"{path}: {exc}") from exc
    try:
        nx, ny, n = doc["Nx"], doc["Ny"], doc["n"]
        conformal = np.array(doc["conformal"], float).reshape(nx, ny)
        if np.all(conformal == 1.0):
            conformal = None
        lat = TorusLattice(nx, ny, doc["Lx"], doc["Ly"], conformal=conformal)
        a = np.array(doc["a"], float).reshape(nx, ny, 2)
        u = np.array(doc["u"], float).reshape(nx, ny, 4 * n) \
            .view(complex).reshape(nx, ny, n, 2)
        phi = np.array(doc["phi"], float).reshape(nx, ny, 2) \
            .view(complex).reshape(nx, ny)
        conn = ConnectionField(lat, BundleSpec(doc["degree"]),
                               ax=a[..., 0], ay=a[..., 1])
        return Configuration(lat, BundleSpec(doc["degree"]), a=conn, u=u,
                             phi=phi, n=n, epsilon=doc["epsilon"],
                             tau=doc["tau"])
    except (KeyError, ValueError) as exc:
        raise FieldIOError(f"{path}: malformed field document "
                           f"({exc})") from exc


def write_csv_log(path, rows):
    """Write per-iteration rows with the documented stable columns."""
    try:
        with open(str(path), "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(CSV_COLUMNS)
            for row in rows:
                writer.writerow([repr(float(v)) if isinstance(v, float)
                                 else v for v in row])
    except OSError as exc:
        raise FieldIOError(str(exc)) from exc
    return path


def read_csv_log(path):
    """Read a CSV iteration log back into a list of tuples."""
    out = []
    try:
        with open(str(path), newline="") as fh:
            reader = csv.reader(fh)
            header = next(reader)
            if tuple(header) != CSV_COLUMNS:
                raise FieldIOError(f"{path}: unexpected columns {header}")
            for row in reader:
                out.append((int(row[0]),) + tuple(float(v) for v in row[1:]))
    except OSError as exc:
        raise FieldIOError(str(exc)) from exc
    return out


def write_json_report(path, report):
    """Serialize a dict (or SolveReport-like .to_dict()) as JSON."""
    doc = report.to_dict() if hasattr(report, "to_dict") else report
    try:
        with open(str(path), "w") as fh:
            json.dump(doc, fh, indent=2, default=_json_default)
    except OSError as exc:
        raise FieldIOError(str(exc)) from exc
    return path


def _json_default(value):
    if isinstance(value, (np.integer,)):
        return int(value)
    if isinstance(value, (np.floating,)):
        return float(value)
    if isinstance(value, np.ndarray):
        return value.tolist()
    if isinstance(value, complex):
        return [value.real, value.imag]
    raise TypeError(f"not JSON serializable: {type(value)!r}")
