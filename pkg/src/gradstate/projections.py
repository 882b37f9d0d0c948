"""Projections onto the box S and the ellipsoid C = {z : z^T D z <= delta}.

The ellipsoid projection solves the KKT system

    x - g + 2 rho D x = 0,    x^T D x = delta

by Newton's method on (x, rho), eliminating the bordered Jacobian through
two solves with I + 2 rho D.  Along the exact solution curve
x(rho) = (I + 2 rho D)^{-1} g the constraint reduces to the decreasing
scalar equation phi(rho) = x(rho)^T D x(rho) - delta, which gives both a
safeguarded fallback and a dense eigen-decomposition oracle.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from functools import cached_property

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .linalg import SpdFactor

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class BoxSet:
    a: float
    b: float

    def __post_init__(self):
        if not self.a <= self.b:
            raise ValueError(f"empty box [{self.a}, {self.b}]")

    def contains(self, v, slack: float = 0.0) -> bool:
        return bool(np.all(v >= self.a - slack) and np.all(v <= self.b + slack))


@dataclass
class EllipsoidSet:
    D: sp.spmatrix
    delta: float

    def __post_init__(self):
        if not self.delta > 0:
            raise ValueError("delta must be positive")
        self.D = sp.csc_matrix(self.D, dtype=float)
        self._eye = sp.identity(self.D.shape[0], format="csc")

    @property
    def n(self) -> int:
        return self.D.shape[0]

    @cached_property
    def factor(self) -> SpdFactor:
        return SpdFactor(self.D)

    def quad(self, z: np.ndarray) -> float:
        return float(z @ (self.D @ z))

    def contains(self, z: np.ndarray, rtol: float = 1e-10) -> bool:
        return self.quad(z) <= self.delta * (1.0 + rtol)

    def shifted_solve(self, rho: float):
        """Solver for (I + 2 rho D)."""
        lu = spla.splu(self._eye + (2.0 * rho) * self.D, permc_spec="MMD_AT_PLUS_A",
                       diag_pivot_thresh=0.0, options={"SymmetricMode": True})
        return lu.solve


@dataclass
class ProjectionResult:
    x: np.ndarray
    rho: float
    newton_iters: int
    fallback: bool = False


def project_box(v: np.ndarray, S: BoxSet) -> np.ndarray:
    return np.clip(v, S.a, S.b)


def kkt_residual(x: np.ndarray, rho: float, g: np.ndarray, C: EllipsoidSet) -> tuple[float, float]:
    """Stationarity ||x - g + 2 rho D x|| and the constraint/complementarity gap.

    The second entry is |x^T D x - delta| when rho > 0 and the feasibility
    violation max(x^T D x - delta, 0) when rho = 0.
    """
    Dx = C.D @ x
    gap = float(x @ Dx) - C.delta
    gap = abs(gap) if rho > 0 else max(gap, 0.0)
    return float(np.linalg.norm(x - g + 2.0 * rho * Dx)), gap


def project_ellipsoid(
    g: np.ndarray,
    C: EllipsoidSet,
    tol: float = 1e-10,
    max_iter: int = 50,
    rho0: float | None = None,
) -> ProjectionResult:
    """Euclidean projection of ``g`` onto C.

    Damped Newton on the (x, rho) system, started at (g, 0) or at the exact
    curve point for a supplied ``rho0``.  The step is halved until rho stays
    non-negative.  Convergence is declared when both KKT residuals are below
    ``tol * max(1, ||g||, delta)``, after which one more Newton step is
    taken if it lowers the residual; otherwise the scalar secular fallback
    takes over.
    """
    g = np.asarray(g, dtype=float)
    Dg = C.D @ g
    if g @ Dg <= C.delta:
        return ProjectionResult(g.copy(), 0.0, 0)

    scale = max(1.0, float(np.linalg.norm(g)), C.delta)
    if rho0 is not None and rho0 > 0:
        rho = float(rho0)
        x = C.shifted_solve(rho)(g)
    else:
        rho = 0.0
        x = g.copy()
    done = False
    for it in range(1, max_iter + 1):
        Dx = C.D @ x
        r1 = x - g + 2.0 * rho * Dx
        r2 = float(x @ Dx) - C.delta
        res = max(float(np.linalg.norm(r1)), abs(r2))
        if done:
            if res >= res_prev:
                x, rho = x_prev, rho_prev
            return ProjectionResult(x, rho, it - 1)
        if res <= tol * scale and rho > 0:
            done = True
        x_prev, rho_prev, res_prev = x, rho, res
        solve = C.shifted_solve(rho)
        a = solve(r1)
        c = solve(2.0 * Dx)
        denom = 2.0 * (Dx @ c)
        if not denom > 0:
            break
        drho = (r2 - 2.0 * (Dx @ a)) / denom
        dx = -a - c * drho
        t = 1.0
        while rho + t * drho < 0.0 and t > 1e-12:
            t *= 0.5
        x = x + t * dx
        rho = max(rho + t * drho, 0.0)
        if not np.all(np.isfinite(x)):
            break
    if done:
        return ProjectionResult(x_prev, rho_prev, max_iter)
    log.debug("ellipsoid Newton did not converge; using secular fallback")
    x, rho, n_evals = _secular_sparse(g, C, tol * scale)
    return ProjectionResult(x, rho, max_iter + n_evals, fallback=True)


def _secular_sparse(g: np.ndarray, C: EllipsoidSet, ftol: float, max_evals: int = 200):
    """Safeguarded Newton/bisection on phi(rho) = x(rho)^T D x(rho) - delta."""
    gnorm2 = float(g @ g)
    lo, hi = 0.0, gnorm2 / (8.0 * C.delta)
    rho = 0.5 * hi
    x = g
    for k in range(1, max_evals + 1):
        solve = C.shifted_solve(rho)
        x = solve(g)
        Dx = C.D @ x
        phi = float(x @ Dx) - C.delta
        if abs(phi) <= ftol:
            return x, rho, k
        if phi > 0:
            lo = rho
        else:
            hi = rho
        dphi = -4.0 * float(Dx @ solve(Dx))
        cand = rho - phi / dphi if dphi < 0 else -1.0
        rho = cand if lo < cand < hi else 0.5 * (lo + hi)
        if hi - lo <= 1e-16 * max(hi, 1.0):
            break
    return x, rho, max_evals


def secular_projection_oracle(
    g: np.ndarray, C: EllipsoidSet, tol: float = 1e-14, max_dim: int = 600
) -> tuple[np.ndarray, float]:
    """Projection onto C via dense diagonalisation and bisection in rho.

    With D = V diag(lam) V^T and g_hat = V^T g, solves
    sum_i lam_i g_hat_i^2 / (1 + 2 rho lam_i)^2 = delta by bisection.
    """
    n = C.n
    if n > max_dim:
        raise ValueError(f"dense oracle limited to dim <= {max_dim}, got {n}")
    lam, V = np.linalg.eigh(C.D.toarray())
    gh = V.T @ g
    if float(np.sum(lam * gh**2)) <= C.delta:
        return np.array(g, dtype=float), 0.0

    def phi(rho):
        return float(np.sum(lam * gh**2 / (1.0 + 2.0 * rho * lam) ** 2)) - C.delta

    lo, hi = 0.0, float(gh @ gh) / (8.0 * C.delta)
    while phi(hi) > 0:
        hi *= 2.0
    for _ in range(400):
        mid = 0.5 * (lo + hi)
        if phi(mid) > 0:
            lo = mid
        else:
            hi = mid
        if hi - lo <= tol * hi:
            break
    rho = 0.5 * (lo + hi)
    return V @ (gh / (1.0 + 2.0 * rho * lam)), rho


def prox_support_ellipsoid(d: np.ndarray, sigma: float, C: EllipsoidSet, tol: float = 1e-10) -> np.ndarray:
    """prox of delta*_C / sigma at d, by the Moreau identity."""
    if not sigma > 0:
        raise ValueError("sigma must be positive")
    return d - project_ellipsoid(sigma * d, C, tol=tol).x / sigma


def support_function_ellipsoid(lam: np.ndarray, C: EllipsoidSet) -> float:
    """sup_{z in C} <lam, z> = sqrt(delta * lam^T D^{-1} lam)."""
    if not np.any(lam):
        return 0.0
    q = float(lam @ C.factor.solve(lam))
    return float(np.sqrt(C.delta * max(q, 0.0)))


def support_function_box(mu: np.ndarray, S: BoxSet) -> float:
    return float(S.b * np.maximum(mu, 0.0).sum() + S.a * np.minimum(mu, 0.0).sum())
