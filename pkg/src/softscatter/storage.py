"""Artifact serialization: CSV bodies with JSON headers, JSON reports.

Every tabular artifact is a CSV file whose first line is ``# {json}`` — a
self-describing header carrying the geometry needed to rebuild the object —
followed by a column-name line and data rows.  Floats are written with
``repr`` (shortest round-trip form) and JSON objects with sorted keys, so a
given object serializes to identical bytes on every run; determinism of the
artifacts is part of the interface contract, not an accident.

Formats
-------
field     columns x,y,z,re,im   header: format, role, domain, resolution
density   columns x,y,z,n       header adds capacitance (re/im)
grid      columns x,y,z,w       header: format, domain, resolution
pattern   columns bx,by,bz,w,re,im   header: format, k, alpha, order
ensemble  columns x,y,z,a,re_C,im_C  plus a JSON sidecar (k, seed, M, ...)
"""

from __future__ import annotations

import dataclasses
import json
import logging
from pathlib import Path

import numpy as np

from .errors import ParseError
from .fields import ComplexField
from .grids import BallDomain, BoxDomain, DomainGrid, DomainSpec, build_domain_grid
from .particles import DensityField, ParticleEnsemble
from .spherequad import FarFieldPattern, SphereQuadrature

logger = logging.getLogger(__name__)

__all__ = [
    "fmt_float", "sanitize_json", "domain_to_json", "domain_from_json",
    "write_field", "read_field", "write_density", "read_density",
    "write_grid", "read_grid", "write_pattern", "read_pattern",
    "write_ensemble", "read_ensemble", "write_report", "read_report",
    "read_header",
]


def fmt_float(x) -> str:
    """Shortest decimal string that round-trips to the same double."""
    return repr(float(x))


def sanitize_json(obj):
    """Recursively convert an object tree to plain JSON-serializable types.

    Complex numbers become {"re": ..., "im": ...}; numpy scalars and arrays
    become Python scalars and lists; dataclasses become dicts.
    """
    if dataclasses.is_dataclass(obj) and not isinstance(obj, type):
        return sanitize_json(dataclasses.asdict(obj))
    if isinstance(obj, dict):
        return {str(key): sanitize_json(val) for key, val in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [sanitize_json(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [sanitize_json(v) for v in obj.tolist()]
    if isinstance(obj, (complex, np.complexfloating)):
        z = complex(obj)
        return {"im": z.imag, "re": z.real}
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    return obj


def domain_to_json(domain: DomainSpec) -> dict:
    if isinstance(domain, BallDomain):
        return {"center": list(domain.center), "kind": "ball", "radius": domain.radius}
    return {"hi": list(domain.hi), "kind": "box", "lo": list(domain.lo)}


def domain_from_json(data: dict) -> DomainSpec:
    kind = data.get("kind")
    if kind == "ball":
        return BallDomain(center=tuple(data["center"]), radius=float(data["radius"]))
    if kind == "box":
        return BoxDomain(lo=tuple(data["lo"]), hi=tuple(data["hi"]))
    raise ParseError(f"unknown domain kind {kind!r}")


# ---------------------------------------------------------------------------
# low-level CSV plumbing


def _write_csv(path: Path, header: dict, columns: list[str], rows) -> None:
    lines = ["# " + json.dumps(sanitize_json(header), sort_keys=True)]
    lines.append(",".join(columns))
    for row in rows:
        lines.append(",".join(fmt_float(v) for v in row))
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text("\n".join(lines) + "\n", newline="\n")
    logger.debug("wrote %s (%d rows)", path, len(lines) - 2)


def read_header(path) -> dict:
    """Parse the JSON header line of a CSV artifact."""
    path = Path(path)
    with path.open() as fh:
        first = fh.readline()
    if not first.startswith("#"):
        raise ParseError("missing JSON header line", path=str(path), line=1)
    try:
        return json.loads(first.lstrip("#").strip())
    except json.JSONDecodeError as exc:
        raise ParseError(f"malformed JSON header: {exc}", path=str(path), line=1) from exc


def _read_csv(path, columns: list[str]) -> tuple[dict, np.ndarray]:
    """Read a header + column-checked CSV body; returns (header, (R, C) array)."""
    path = Path(path)
    text = path.read_text()
    lines = text.splitlines()
    if not lines or not lines[0].startswith("#"):
        raise ParseError("missing JSON header line", path=str(path), line=1)
    try:
        header = json.loads(lines[0].lstrip("#").strip())
    except json.JSONDecodeError as exc:
        raise ParseError(f"malformed JSON header: {exc}", path=str(path), line=1) from exc
    if len(lines) < 2:
        raise ParseError("missing column header line", path=str(path), line=2)
    names = [c.strip() for c in lines[1].split(",")]
    if names != columns:
        raise ParseError(
            f"expected columns {','.join(columns)}, found {','.join(names)}",
            path=str(path), line=2,
        )
    data = np.empty((len(lines) - 2, len(columns)))
    for i, line in enumerate(lines[2:], start=3):
        parts = line.split(",")
        if len(parts) != len(columns):
            raise ParseError(
                f"expected {len(columns)} values, found {len(parts)}",
                path=str(path), line=i,
            )
        try:
            data[i - 3] = [float(p) for p in parts]
        except ValueError as exc:
            raise ParseError(f"non-numeric value: {exc}", path=str(path), line=i) from exc
    if not np.all(np.isfinite(data)):
        bad = int(np.flatnonzero(~np.all(np.isfinite(data), axis=1))[0]) + 3
        raise ParseError("non-finite value", path=str(path), line=bad)
    return header, data


def _grid_from_header(header: dict, path: Path, n_rows: int,
                      coords: np.ndarray) -> DomainGrid:
    """Rebuild the grid an artifact was sampled on and verify coordinates."""
    try:
        domain = domain_from_json(header["domain"])
        resolution = int(header["resolution"])
    except KeyError as exc:
        raise ParseError(f"header missing {exc}", path=str(path), line=1) from exc
    grid = build_domain_grid(domain, resolution)
    if grid.n_cells != n_rows:
        raise ParseError(
            f"file has {n_rows} rows but the declared grid has {grid.n_cells} cells "
            "(truncated or padded file?)",
            path=str(path), line=n_rows + 3,
        )
    scale = float(np.max(np.abs(grid.cell_centers))) or 1.0
    if not np.allclose(coords, grid.cell_centers, atol=1e-9 * scale, rtol=0.0):
        row = int(np.argmax(np.max(np.abs(coords - grid.cell_centers), axis=1))) + 3
        raise ParseError("cell coordinates do not match the declared grid",
                         path=str(path), line=row)
    return grid


# ---------------------------------------------------------------------------
# fields and densities


def write_field(path, field: ComplexField) -> None:
    grid = field.grid
    header = {
        "domain": domain_to_json(grid.domain),
        "format": "field",
        "resolution": grid.resolution,
        "role": field.role,
    }
    rows = np.column_stack([grid.cell_centers, field.values.real, field.values.imag])
    _write_csv(Path(path), header, ["x", "y", "z", "re", "im"], rows)


def read_field(path) -> ComplexField:
    header, data = _read_csv(path, ["x", "y", "z", "re", "im"])
    if header.get("format") != "field":
        raise ParseError(f"expected a field file, found format={header.get('format')!r}",
                         path=str(path), line=1)
    grid = _grid_from_header(header, Path(path), data.shape[0], data[:, :3])
    values = data[:, 3] + 1j * data[:, 4]
    return ComplexField(grid=grid, values=values, role=header.get("role", "potential_q"))


def write_density(path, density: DensityField) -> None:
    grid = density.grid
    c0 = complex(density.capacitance)
    header = {
        "capacitance": {"im": c0.imag, "re": c0.real},
        "domain": domain_to_json(grid.domain),
        "format": "density",
        "resolution": grid.resolution,
        "total_expected": density.total_expected,
    }
    rows = np.column_stack([grid.cell_centers, density.values])
    _write_csv(Path(path), header, ["x", "y", "z", "n"], rows)


def read_density(path) -> DensityField:
    header, data = _read_csv(path, ["x", "y", "z", "n"])
    if header.get("format") != "density":
        raise ParseError(f"expected a density file, found format={header.get('format')!r}",
                         path=str(path), line=1)
    grid = _grid_from_header(header, Path(path), data.shape[0], data[:, :3])
    cap = header.get("capacitance", {"re": 1.0, "im": 0.0})
    return DensityField(grid=grid, values=data[:, 3],
                        capacitance=complex(cap["re"], cap["im"]))


# ---------------------------------------------------------------------------
# grids


def write_grid(path, grid: DomainGrid) -> None:
    header = {
        "domain": domain_to_json(grid.domain),
        "format": "grid",
        "resolution": grid.resolution,
    }
    rows = np.column_stack([grid.cell_centers, grid.cell_weights])
    _write_csv(Path(path), header, ["x", "y", "z", "w"], rows)


def read_grid(path) -> DomainGrid:
    header, data = _read_csv(path, ["x", "y", "z", "w"])
    if header.get("format") != "grid":
        raise ParseError(f"expected a grid file, found format={header.get('format')!r}",
                         path=str(path), line=1)
    return _grid_from_header(header, Path(path), data.shape[0], data[:, :3])


# ---------------------------------------------------------------------------
# patterns


def write_pattern(path, pattern: FarFieldPattern) -> None:
    quad = pattern.quadrature
    header = {
        "alpha": list(pattern.alpha),
        "format": "pattern",
        "k": pattern.k,
        "order": quad.order,
    }
    rows = np.column_stack([quad.nodes, quad.weights,
                            pattern.values.real, pattern.values.imag])
    _write_csv(Path(path), header, ["bx", "by", "bz", "w", "re", "im"], rows)


def read_pattern(path) -> FarFieldPattern:
    header, data = _read_csv(path, ["bx", "by", "bz", "w", "re", "im"])
    if header.get("format") != "pattern":
        raise ParseError(f"expected a pattern file, found format={header.get('format')!r}",
                         path=str(path), line=1)
    for key in ("k", "alpha"):
        if key not in header:
            raise ParseError(f"pattern header missing {key!r}", path=str(path), line=1)
    quad = SphereQuadrature(nodes=data[:, :3], weights=data[:, 3],
                            order=int(header.get("order", 0)))
    try:
        quad.validate()
    except Exception as exc:
        raise ParseError(f"pattern rows are not a valid quadrature: {exc}",
                         path=str(path), line=3) from exc
    return FarFieldPattern(quadrature=quad, values=data[:, 4] + 1j * data[:, 5],
                           k=float(header["k"]), alpha=tuple(header["alpha"]))


# ---------------------------------------------------------------------------
# ensembles


def write_ensemble(path, ens: ParticleEnsemble, meta: dict) -> None:
    """Write positions/radii/capacitances plus a JSON sidecar of metadata."""
    path = Path(path)
    header = {"count": ens.count, "format": "ensemble"}
    rows = np.column_stack([
        ens.positions, ens.radii, ens.capacitances.real, ens.capacitances.imag,
    ]) if ens.count else np.zeros((0, 6))
    _write_csv(path, header, ["x", "y", "z", "a", "re_C", "im_C"], rows)
    sidecar = dict(meta)
    sidecar.setdefault("k", ens.k)
    sidecar.setdefault("a_max", ens.a_max)
    sidecar.setdefault("d_min", ens.d_min)
    sidecar["count"] = ens.count
    write_report(path.with_suffix(".json"), sidecar)


def read_ensemble(path) -> tuple[ParticleEnsemble, dict]:
    header, data = _read_csv(path, ["x", "y", "z", "a", "re_C", "im_C"])
    if header.get("format") != "ensemble":
        raise ParseError(f"expected an ensemble file, found format={header.get('format')!r}",
                         path=str(path), line=1)
    sidecar_path = Path(path).with_suffix(".json")
    meta = read_report(sidecar_path) if sidecar_path.exists() else {}
    ens = ParticleEnsemble(
        positions=data[:, :3], radii=data[:, 3],
        capacitances=data[:, 4] + 1j * data[:, 5],
        k=float(meta.get("k", 1.0)),
        a_max=float(meta.get("a_max", float(np.max(data[:, 3])) if data.size else 0.0)),
        d_min=float(meta.get("d_min", 0.0)),
    )
    return ens, meta


# ---------------------------------------------------------------------------
# reports


def write_report(path, report: dict) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    text = json.dumps(sanitize_json(report), sort_keys=True, indent=2)
    path.write_text(text + "\n", newline="\n")
    logger.debug("wrote %s", path)


def read_report(path) -> dict:
    path = Path(path)
    try:
        return json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise ParseError(f"malformed JSON report: {exc}", path=str(path),
                         line=exc.lineno) from exc
