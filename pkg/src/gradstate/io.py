"""Plain-text mesh/matrix dumps, legacy VTK export and benchmark CSV."""

from __future__ import annotations

import csv
from pathlib import Path

import numpy as np
import scipy.sparse as sp

from .mesh import Mesh

BENCH_FIELDS = ["h_label", "dofs", "algorithm", "iterations", "residual", "wall_time_seconds", "flag"]
SWEEP_FIELDS = ["alpha", "iterations", "residual", "flag"]


def write_mesh(mesh: Mesh, path) -> None:
    """Header ``N M``, then ``x y b`` per node and ``i j k`` per triangle."""
    with open(path, "w") as fh:
        fh.write(f"{mesh.n_nodes} {mesh.n_triangles}\n")
        for (x, y), b in zip(mesh.nodes, mesh.boundary_mask):
            fh.write(f"{float(x)!r} {float(y)!r} {int(b)}\n")
        for i, j, k in mesh.triangles:
            fh.write(f"{i} {j} {k}\n")


def read_mesh(path, level: int = -1, radius: float | None = None) -> Mesh:
    with open(path) as fh:
        n, m = (int(v) for v in fh.readline().split())
        rows = [fh.readline().split() for _ in range(n)]
        tris = np.array([[int(v) for v in fh.readline().split()] for _ in range(m)], dtype=np.int64)
    nodes = np.array([[float(r[0]), float(r[1])] for r in rows])
    mask = np.array([r[2] == "1" for r in rows])
    if radius is None:
        radius = float(np.linalg.norm(nodes[mask], axis=1).max()) if mask.any() else 1.0
    return Mesh(nodes, tris.reshape(-1, 3), mask, level, radius)


def write_coo(A, path) -> None:
    """``i j value`` triplets, 0-based, sorted by (i, j)."""
    A = sp.coo_matrix(A)
    order = np.lexsort((A.col, A.row))
    with open(path, "w") as fh:
        for i, j, v in zip(A.row[order], A.col[order], A.data[order]):
            fh.write(f"{i} {j} {float(v)!r}\n")


def read_coo(path, shape=None) -> sp.csr_matrix:
    data = np.loadtxt(path, ndmin=2)
    if data.size == 0:
        return sp.csr_matrix(shape or (0, 0))
    i, j = data[:, 0].astype(int), data[:, 1].astype(int)
    if shape is None:
        shape = (i.max() + 1, j.max() + 1)
    return sp.csr_matrix((data[:, 2], (i, j)), shape=shape)


def write_vtk(mesh: Mesh, interior_map, fields: dict, path, title: str = "gradstate") -> None:
    """Legacy ASCII VTK unstructured grid; interior vectors are padded with
    zeros on boundary nodes."""
    n = mesh.n_nodes
    lines = [
        "# vtk DataFile Version 3.0",
        title,
        "ASCII",
        "DATASET UNSTRUCTURED_GRID",
        f"POINTS {n} double",
    ]
    lines += [f"{float(x)!r} {float(y)!r} 0.0" for x, y in mesh.nodes]
    m = mesh.n_triangles
    lines.append(f"CELLS {m} {4 * m}")
    lines += [f"3 {i} {j} {k}" for i, j, k in mesh.triangles]
    lines.append(f"CELL_TYPES {m}")
    lines += ["5"] * m
    lines.append(f"POINT_DATA {n}")
    for name, vals in fields.items():
        full = np.zeros(n)
        full[interior_map] = vals
        lines.append(f"SCALARS {name} double 1")
        lines.append("LOOKUP_TABLE default")
        lines += [repr(float(v)) for v in full]
    Path(path).write_text("\n".join(lines) + "\n")


def write_rows(rows: list[dict], path, fieldnames) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=fieldnames, extrasaction="ignore")
        writer.writeheader()
        writer.writerows(rows)


def read_rows(path) -> list[dict]:
    """Parse a bench or sweep CSV back into typed rows."""
    casts = {
        "dofs": int,
        "iterations": int,
        "residual": float,
        "wall_time_seconds": float,
        "alpha": float,
    }
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    return [{k: casts.get(k, str)(v) for k, v in r.items()} for r in rows]
