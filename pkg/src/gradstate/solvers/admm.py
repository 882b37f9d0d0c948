"""Primal ADMM baselines: classical (Euclidean penalty) and the mass-weighted
heterogeneous variant.  Both split y = z, u = w with z in C and w in S."""

from __future__ import annotations

import time

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from ..projections import project_box, project_ellipsoid
from .common import Discretized, SolverConfig, SolverReport, apply_alpha
from .dabcd import _inputs
from .residuals import primal_objective, residual_eta_c, residual_eta_h


class SingularSystemError(ArithmeticError):
    pass


def _factor(A):
    try:
        lu = spla.splu(sp.csc_matrix(A))
    except RuntimeError as exc:
        raise SingularSystemError(f"block system is singular: {exc}") from exc
    return lu


def admm_matrix(sys, alpha, sigma):
    M, K = sys.M, sys.K
    I = sp.identity(sys.n, format="csr")
    return sp.bmat(
        [[M + sigma * I, None, K.T], [None, alpha * M + sigma * I, -M], [K, -M, None]],
        format="csc",
    )


def ihadmm_matrix(sys, alpha, sigma):
    M, K = sys.M, sys.K
    return sp.bmat([[(1.0 + sigma) * M, K.T], [K, -M / (alpha + sigma)]], format="csc")


def _new_report(disc, config, name):
    return SolverReport(
        algorithm=name,
        level=disc.level,
        alpha=disc.alpha,
        iterations=0,
        converged=False,
        setup_time_seconds=disc.setup_time,
        inputs=_inputs(disc, config, name),
    )


def admm(disc: Discretized, config: SolverConfig | None = None) -> SolverReport:
    config = config or SolverConfig()
    disc = apply_alpha(disc, config)
    sys, alpha, sigma = disc.system, disc.alpha, config.admm_sigma
    yd, f, C, S = disc.yd, disc.f, disc.C, disc.S
    M, n = sys.M, sys.n
    Myd, Mf = M @ yd, M @ f

    t_start = time.perf_counter()
    lu = _factor(admm_matrix(sys, alpha, sigma))
    z, w, lam, mu = (np.zeros(n) for _ in range(4))
    rho = None
    report = _new_report(disc, config, "admm")
    for k in range(1, config.max_iter + 1):
        rhs = np.concatenate([Myd - lam + sigma * z, sigma * w - mu, Mf])
        x = lu.solve(rhs)
        y, u, p = x[:n], x[n : 2 * n], x[2 * n :]
        proj = project_ellipsoid(y + lam / sigma, C, tol=config.proj_tol, rho0=rho)
        rho = proj.rho if proj.rho > 0 else None
        z = proj.x
        w = project_box(u + mu / sigma, S)
        lam = lam + sigma * (y - z)
        mu = mu + sigma * (u - w)

        eta = residual_eta_c(sys, y, u, p, z, w, lam, mu, yd, f, alpha, C, S, tol=config.proj_tol)
        report.residual_history.append(eta)
        report.objective_history.append(primal_objective(sys, z, w, yd, alpha))
        report.newton_iters.append(proj.newton_iters)
        report.iterations = k
        if eta < config.tol:
            report.converged = True
            break
    report.wall_time_seconds = time.perf_counter() - t_start
    report.y, report.u, report.p = y, u, p
    report.z, report.w, report.lam, report.mu = z, w, lam, mu
    return report


def ihadmm(disc: Discretized, config: SolverConfig | None = None) -> SolverReport:
    config = config or SolverConfig()
    disc = apply_alpha(disc, config)
    sys, alpha, sigma = disc.system, disc.alpha, config.admm_sigma
    yd, f, C, S = disc.yd, disc.f, disc.C, disc.S
    M, n, wlump = sys.M, sys.n, sys.w
    Mf = M @ f

    t_start = time.perf_counter()
    lu = _factor(ihadmm_matrix(sys, alpha, sigma))
    z, w, lam, mu = (np.zeros(n) for _ in range(4))
    rho = None
    report = _new_report(disc, config, "ihadmm")
    for k in range(1, config.max_iter + 1):
        rhs = np.concatenate(
            [M @ (yd - lam + sigma * z), M @ (sigma * w - mu) / (alpha + sigma) + Mf]
        )
        x = lu.solve(rhs)
        y, p = x[:n], x[n:]
        u = (p + sigma * w - mu) / (sigma + alpha)
        proj = project_ellipsoid(y + (M @ lam) / (sigma * wlump), C, tol=config.proj_tol, rho0=rho)
        rho = proj.rho if proj.rho > 0 else None
        z = proj.x
        w = project_box(u + (M @ mu) / (sigma * wlump), S)
        lam = lam + sigma * (y - z)
        mu = mu + sigma * (u - w)

        eta = residual_eta_h(sys, y, u, p, z, w, lam, mu, yd, f, alpha, C, S, tol=config.proj_tol)
        report.residual_history.append(eta)
        report.objective_history.append(primal_objective(sys, z, w, yd, alpha))
        report.newton_iters.append(proj.newton_iters)
        report.iterations = k
        if eta < config.tol:
            report.converged = True
            break
    report.wall_time_seconds = time.perf_counter() - t_start
    report.y, report.u, report.p = y, u, p
    report.z, report.w, report.lam, report.mu = z, w, lam, mu
    return report
