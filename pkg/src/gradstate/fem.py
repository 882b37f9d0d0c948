"""P1 finite element operators on interior (Dirichlet-eliminated) dofs."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np
import scipy.sparse as sp

from .mesh import Mesh, signed_areas

# lumping constants of the mass / lumped-mass equivalence, keyed by dimension
LUMPING_CONSTANT = {2: 4.0, 3: 5.0}

_MASS_REF = np.array([[2.0, 1.0, 1.0], [1.0, 2.0, 1.0], [1.0, 1.0, 2.0]]) / 12.0


class AssemblyError(ValueError):
    pass


@dataclass(frozen=True)
class BilinearForm:
    """Constant-coefficient form  a(y, v) = int sum_ij a_ij y_{x_i} v_{x_j} + c0 y v."""

    coefficients: np.ndarray = field(default_factory=lambda: np.eye(2))
    c0: float = 0.0

    def __post_init__(self):
        a = np.asarray(self.coefficients, dtype=float)
        if a.shape != (2, 2) or not np.allclose(a, a.T):
            raise AssemblyError("coefficient matrix must be symmetric 2x2")
        if np.linalg.eigvalsh(a).min() <= 0 or self.c0 < 0:
            raise AssemblyError("form is not uniformly elliptic")
        object.__setattr__(self, "coefficients", a)


@dataclass(frozen=True)
class FemSystem:
    """Assembled operators restricted to interior nodes.

    ``w`` is the diagonal of the lumped mass matrix; ``sigma`` is the
    lambda-step proximal constant ``c_n / min(w)``.
    """

    mesh: Mesh
    M: sp.csr_matrix
    K: sp.csr_matrix
    w: np.ndarray
    D_axes: tuple
    D: sp.csr_matrix
    interior_map: np.ndarray
    n_dim: int
    c_n: float
    omega_m: float
    sigma: float

    @property
    def n(self) -> int:
        return self.interior_map.size

    @property
    def W(self) -> sp.dia_matrix:
        return sp.diags(self.w)


def p1_gradients(mesh: Mesh) -> tuple[np.ndarray, np.ndarray]:
    """Per-element areas and barycentric gradients, shape (M,) and (M, 3, 2)."""
    areas = signed_areas(mesh.nodes, mesh.triangles)
    bad = np.flatnonzero(areas <= 0)
    if bad.size:
        t = bad[0]
        raise AssemblyError(
            f"degenerate triangle {t} (nodes {mesh.triangles[t].tolist()}), area {areas[t]:.3e}"
        )
    p = mesh.nodes[mesh.triangles]
    # grad phi_k = rot90(p_{k+2} - p_{k+1}) / (2 area)
    e = p[:, [2, 0, 1]] - p[:, [1, 2, 0]]
    grads = np.stack([-e[:, :, 1], e[:, :, 0]], axis=2) / (2.0 * areas)[:, None, None]
    return areas, grads


def _scatter(mesh: Mesh, local: np.ndarray) -> sp.csr_matrix:
    t = mesh.triangles
    rows = np.repeat(t, 3, axis=1).ravel()
    cols = np.tile(t, (1, 3)).ravel()
    n = mesh.n_nodes
    A = sp.coo_matrix((local.ravel(), (rows, cols)), shape=(n, n)).tocsr()
    A.sum_duplicates()
    A.sort_indices()
    return A


def element_mass(areas: np.ndarray) -> np.ndarray:
    return areas[:, None, None] * _MASS_REF[None]


def element_axis_stiffness(areas: np.ndarray, grads: np.ndarray, axis: int) -> np.ndarray:
    g = grads[:, :, axis]
    return areas[:, None, None] * (g[:, :, None] * g[:, None, :])


def element_stiffness(areas: np.ndarray, grads: np.ndarray, form: BilinearForm) -> np.ndarray:
    a = form.coefficients
    local = np.zeros((areas.size, 3, 3))
    for i in range(2):
        for j in range(2):
            if a[i, j] == 0.0:
                continue
            gi = grads[:, :, i]
            gj = grads[:, :, j]
            # symmetric by construction: pair (i,j) with (j,i)
            local += 0.5 * a[i, j] * areas[:, None, None] * (
                gj[:, :, None] * gi[:, None, :] + gi[:, :, None] * gj[:, None, :]
            )
    if form.c0:
        local += form.c0 * element_mass(areas)
    return local


def full_matrices(mesh: Mesh, form: BilinearForm | None = None) -> dict:
    """Unrestricted mass, stiffness and per-axis gradient matrices."""
    form = form or BilinearForm()
    areas, grads = p1_gradients(mesh)
    return {
        "M": _scatter(mesh, element_mass(areas)),
        "K": _scatter(mesh, element_stiffness(areas, grads, form)),
        "D_axes": tuple(_scatter(mesh, element_axis_stiffness(areas, grads, j)) for j in range(2)),
    }


def assemble(mesh: Mesh, form: BilinearForm | None = None) -> FemSystem:
    full = full_matrices(mesh, form)
    interior = mesh.interior_nodes
    if interior.size == 0:
        raise AssemblyError("mesh has no interior nodes")

    def restrict(A):
        B = A[interior][:, interior].tocsr()
        B.sort_indices()
        return B

    M = restrict(full["M"])
    K = restrict(full["K"])
    D_axes = tuple(restrict(Dj) for Dj in full["D_axes"])
    D = restrict(full["D_axes"][0] + full["D_axes"][1])
    # lumped mass: row sums of the full mass matrix
    w = np.asarray(full["M"].sum(axis=1)).ravel()[interior]
    c_n = LUMPING_CONSTANT[2]
    omega_m = 1.0 / w.min()
    return FemSystem(
        mesh=mesh,
        M=M,
        K=K,
        w=w,
        D_axes=D_axes,
        D=D,
        interior_map=interior,
        n_dim=2,
        c_n=c_n,
        omega_m=omega_m,
        sigma=c_n * omega_m,
    )


def interpolate_nodal(func: Callable[[np.ndarray], np.ndarray], mesh: Mesh) -> np.ndarray:
    """Values of ``func`` at interior nodes; ``func`` maps (n, 2) points to (n,)."""
    pts = mesh.nodes[mesh.interior_nodes]
    vals = np.asarray(func(pts), dtype=float)
    if vals.shape != (pts.shape[0],):
        vals = np.broadcast_to(vals, (pts.shape[0],)).copy()
    if not np.all(np.isfinite(vals)):
        i = np.flatnonzero(~np.isfinite(vals))[0]
        raise AssemblyError(f"non-finite value at node {mesh.interior_nodes[i]} {pts[i].tolist()}")
    return vals


def gradient_seminorm_sq(y: np.ndarray, system: FemSystem) -> float:
    """||grad y_h||^2 = y^T D y."""
    return float(y @ (system.D @ y))


def mass_norm(v: np.ndarray, system: FemSystem) -> float:
    return float(np.sqrt(max(v @ (system.M @ v), 0.0)))
