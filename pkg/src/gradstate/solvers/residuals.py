"""Normalized KKT residuals and objective values.

All norms are Euclidean and all projections unweighted.  ``eta_d`` is the
stopping measure of the dual method; ``eta_c`` and ``eta_h`` those of ADMM
and ihADMM, the latter with mass-weighted multipliers.
"""

from __future__ import annotations

import numpy as np

from ..projections import (
    BoxSet,
    EllipsoidSet,
    project_box,
    project_ellipsoid,
    support_function_box,
    support_function_ellipsoid,
)

_nrm = np.linalg.norm


def _proj_gap(v, mult, C: EllipsoidSet, tol):
    return _nrm(v - project_ellipsoid(v + mult, C, tol=tol).x) / (1.0 + _nrm(v))


def _box_gap(v, mult, S: BoxSet):
    return _nrm(v - project_box(v + mult, S)) / (1.0 + _nrm(v))


def eta_d_terms(sys, y, u, p, lam, mu, yd, f, C, S, tol=1e-10) -> np.ndarray:
    M, K = sys.M, sys.K
    Myd, Mf = M @ yd, M @ f
    r1 = _nrm(M @ (y - yd) + K.T @ p + lam) / (1.0 + _nrm(Myd))
    r2 = _proj_gap(y, lam, C, tol)
    r3 = _box_gap(u, mu, S)
    r4 = _nrm(K @ y - M @ u - Mf) / (1.0 + _nrm(Mf))
    return np.array([r1, r2, r3, r4])


def residual_eta_d(sys, y, u, p, lam, mu, yd, f, C, S, tol=1e-10) -> float:
    return float(eta_d_terms(sys, y, u, p, lam, mu, yd, f, C, S, tol).max())


def eta_c_terms(sys, y, u, p, z, w, lam, mu, yd, f, alpha, C, S, tol=1e-10) -> np.ndarray:
    M, K = sys.M, sys.K
    Myd, Mf, Mu = M @ yd, M @ f, M @ u
    return np.array(
        [
            _nrm(M @ (y - yd) + K.T @ p + lam) / (1.0 + _nrm(Myd)),
            _nrm(alpha * Mu - M.T @ p + mu) / (1.0 + _nrm(Mu)),
            _nrm(K @ y - Mu - Mf) / (1.0 + _nrm(Mf)),
            _nrm(y - z) / (1.0 + _nrm(y)),
            _nrm(u - w) / (1.0 + _nrm(u)),
            _proj_gap(z, lam, C, tol),
            _box_gap(w, mu, S),
        ]
    )


def residual_eta_c(sys, y, u, p, z, w, lam, mu, yd, f, alpha, C, S, tol=1e-10) -> float:
    return float(eta_c_terms(sys, y, u, p, z, w, lam, mu, yd, f, alpha, C, S, tol).max())


def eta_h_terms(sys, y, u, p, z, w, lam, mu, yd, f, alpha, C, S, tol=1e-10) -> np.ndarray:
    M, K = sys.M, sys.K
    Myd, Mf, Mu = M @ yd, M @ f, M @ u
    Mlam, Mmu = M @ lam, M @ mu
    return np.array(
        [
            _nrm(M @ (y - yd) + K.T @ p + Mlam) / (1.0 + _nrm(Myd)),
            _nrm(alpha * Mu - M.T @ p + Mmu) / (1.0 + _nrm(Mu)),
            _nrm(K @ y - Mu - Mf) / (1.0 + _nrm(Mf)),
            _nrm(M @ (y - z)) / (1.0 + _nrm(y)),
            _nrm(M @ (u - w)) / (1.0 + _nrm(u)),
            _proj_gap(z, Mlam, C, tol),
            _box_gap(w, Mmu, S),
        ]
    )


def residual_eta_h(sys, y, u, p, z, w, lam, mu, yd, f, alpha, C, S, tol=1e-10) -> float:
    return float(eta_h_terms(sys, y, u, p, z, w, lam, mu, yd, f, alpha, C, S, tol).max())


def compute_dual_objective(sys, p, lam, mu, alpha, yd, f, C, S, M_factor) -> float:
    """F(p, lam, mu) of the unconstrained dual; minimized by the dual method."""
    M, K = sys.M, sys.K
    Myd = M @ yd
    r = K.T @ p + lam - Myd
    s = M @ p - mu
    return float(
        0.5 * r @ M_factor.solve(r)
        + 0.5 / alpha * s @ M_factor.solve(s)
        + support_function_ellipsoid(lam, C)
        + support_function_box(mu, S)
        + (M @ f) @ p
        - 0.5 * yd @ Myd
    )


def primal_objective(sys, y, u, yd, alpha) -> float:
    e = y - yd
    return float(0.5 * e @ (sys.M @ e) + 0.5 * alpha * u @ (sys.M @ u))
