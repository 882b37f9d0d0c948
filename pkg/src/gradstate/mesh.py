"""Quasi-uniform triangulations of the disk B_r(0).

Meshes start from a hexagon fan (origin plus six rim nodes) and are refined
by red (4-way) subdivision.  Midpoints of boundary edges are pushed radially
onto the circle so the polygonal domain approaches the disk with an
O(h^2) area defect.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

MAX_LEVEL = 10


class MeshError(ValueError):
    pass


@dataclass(frozen=True)
class Mesh:
    """Triangulation with counter-clockwise triangles.

    ``boundary_mask[i]`` is True when node ``i`` sits on the circle
    ``|x| = radius``.
    """

    nodes: np.ndarray
    triangles: np.ndarray
    boundary_mask: np.ndarray
    level: int
    radius: float

    @property
    def n_nodes(self) -> int:
        return self.nodes.shape[0]

    @property
    def n_triangles(self) -> int:
        return self.triangles.shape[0]

    @property
    def interior_nodes(self) -> np.ndarray:
        return np.flatnonzero(~self.boundary_mask)


def hexagon_fan(radius: float = 1.0) -> Mesh:
    if not radius > 0:
        raise MeshError(f"radius must be positive, got {radius!r}")
    angles = np.arange(6) * (np.pi / 3.0)
    rim = radius * np.column_stack([np.cos(angles), np.sin(angles)])
    nodes = np.vstack([np.zeros((1, 2)), rim])
    triangles = np.array([[0, 1 + k, 1 + (k + 1) % 6] for k in range(6)], dtype=np.int64)
    mask = np.ones(7, dtype=bool)
    mask[0] = False
    return Mesh(nodes, triangles, mask, 0, float(radius))


def mesh_edges(triangles: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Unique edges of a triangulation.

    Returns ``(edges, tri_edge, counts)``: ``edges`` is (E, 2) with sorted
    endpoints in lexicographic order; ``tri_edge[t, k]`` indexes local edge k
    of triangle t (0 = v0v1, 1 = v1v2, 2 = v2v0); ``counts`` is the number of
    triangles sharing each edge.
    """
    t = triangles
    local = np.stack([t[:, [0, 1]], t[:, [1, 2]], t[:, [2, 0]]], axis=1).reshape(-1, 2)
    local = np.sort(local, axis=1)
    edges, inverse, counts = np.unique(local, axis=0, return_inverse=True, return_counts=True)
    return edges, inverse.reshape(-1, 3), counts


def refine(mesh: Mesh, max_level: int = MAX_LEVEL) -> Mesh:
    """Split every triangle into four through its edge midpoints.

    Parent nodes keep their indices; the midpoint of the e-th edge of
    ``mesh_edges`` gets index ``n_nodes + e``.
    """
    if mesh.level + 1 > max_level:
        raise MeshError(f"refinement level {mesh.level + 1} exceeds cap {max_level}")
    edges, tri_edge, counts = mesh_edges(mesh.triangles)
    n = mesh.n_nodes
    mid = 0.5 * (mesh.nodes[edges[:, 0]] + mesh.nodes[edges[:, 1]])
    on_boundary = counts == 1
    if np.any(on_boundary):
        r = np.linalg.norm(mid[on_boundary], axis=1)
        mid[on_boundary] *= (mesh.radius / r)[:, None]

    a, b, c = mesh.triangles.T
    ab, bc, ca = (tri_edge + n).T
    children = np.stack(
        [
            np.column_stack([a, ab, ca]),
            np.column_stack([ab, b, bc]),
            np.column_stack([ca, bc, c]),
            np.column_stack([ab, bc, ca]),
        ],
        axis=1,
    ).reshape(-1, 3)

    nodes = np.vstack([mesh.nodes, mid])
    mask = np.concatenate([mesh.boundary_mask, on_boundary])
    return Mesh(nodes, children, mask, mesh.level + 1, mesh.radius)


def build_disk_mesh(radius: float, level: int, max_level: int = MAX_LEVEL) -> Mesh:
    if not radius > 0:
        raise MeshError(f"radius must be positive, got {radius!r}")
    if level < 0:
        raise MeshError(f"level must be non-negative, got {level}")
    if level > max_level:
        raise MeshError(f"level {level} exceeds cap {max_level}")
    mesh = hexagon_fan(radius)
    for _ in range(level):
        mesh = refine(mesh, max_level=max_level)
    return mesh


def signed_areas(nodes: np.ndarray, triangles: np.ndarray) -> np.ndarray:
    p0, p1, p2 = (nodes[triangles[:, k]] for k in range(3))
    e1 = p1 - p0
    e2 = p2 - p0
    return 0.5 * (e1[:, 0] * e2[:, 1] - e1[:, 1] * e2[:, 0])


def edge_lengths(mesh: Mesh) -> np.ndarray:
    """(M, 3) lengths of edges (v0v1, v1v2, v2v0) per triangle."""
    p = mesh.nodes[mesh.triangles]
    return np.linalg.norm(p[:, [1, 2, 0]] - p, axis=2)


def mesh_size(mesh: Mesh) -> float:
    """Largest triangle diameter (longest edge)."""
    return float(edge_lengths(mesh).max())


def min_angle(mesh: Mesh) -> float:
    """Smallest interior angle over all triangles, in degrees."""
    lengths = edge_lengths(mesh)
    # angle at vertex k is opposite the edge (k+1, k+2)
    l0, l1, l2 = lengths[:, 0], lengths[:, 1], lengths[:, 2]
    opp = np.column_stack([l1, l2, l0])
    adj1 = np.column_stack([l0, l1, l2])
    adj2 = np.column_stack([l2, l0, l1])
    cosang = (adj1**2 + adj2**2 - opp**2) / (2.0 * adj1 * adj2)
    return float(np.degrees(np.arccos(np.clip(cosang, -1.0, 1.0))).min())


def check_mesh(mesh: Mesh, area_constant: float = 2.0) -> None:
    """Raise MeshError if any structural invariant is violated."""
    areas = signed_areas(mesh.nodes, mesh.triangles)
    bad = np.flatnonzero(areas <= 0)
    if bad.size:
        raise MeshError(f"triangle {bad[0]} has non-positive area {areas[bad[0]]:.3e}")
    r = np.linalg.norm(mesh.nodes[mesh.boundary_mask], axis=1)
    if r.size and np.max(np.abs(r - mesh.radius)) > 1e-12 * mesh.radius:
        raise MeshError("boundary node off the circle")
    edges, _, counts = mesh_edges(mesh.triangles)
    if np.any(counts > 2):
        raise MeshError("non-manifold edge shared by more than two triangles")
    # a hanging node would leave an interior edge with a single owner
    bnodes = np.unique(edges[counts == 1])
    if not np.array_equal(bnodes, np.flatnonzero(mesh.boundary_mask)):
        raise MeshError("boundary mask does not match boundary edges")
    disk = np.pi * mesh.radius**2
    total = areas.sum()
    h = mesh_size(mesh)
    if total > disk * (1 + 1e-12) or total < disk - area_constant * h**2:
        raise MeshError(f"covered area {total:.6f} inconsistent with disk area {disk:.6f}")
