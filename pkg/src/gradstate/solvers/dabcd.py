"""Accelerated inexact block coordinate descent on the dual problem.

The dual unknowns are (p, lam, mu).  Each sweep solves the p-block as a
preconditioned saddle-point system, then takes closed-form proximal steps
in lam (sigma-scaled, through an ellipsoid projection) and in mu (lumped
mass metric, through a box projection), followed by Nesterov-type
extrapolation of all three blocks.
"""

from __future__ import annotations

import logging
import time
from dataclasses import dataclass

import numpy as np

from ..linalg import SaddleOperator, SaddlePreconditioner, SpdFactor, gmres
from ..projections import BoxSet, EllipsoidSet, project_box, project_ellipsoid
from .common import Discretized, SolverConfig, SolverReport, apply_alpha
from .residuals import compute_dual_objective, residual_eta_d

log = logging.getLogger(__name__)


@dataclass
class PSolve:
    p: np.ndarray
    y: np.ndarray
    relres: float
    iterations: int
    converged: bool
    certificate: float = float("nan")


def p_subproblem_rhs(sys, lam, mu, alpha, f, yd):
    M = sys.M
    return np.concatenate([mu - alpha * (M @ f), M @ yd - lam])


def p_certificate(sys, p, y, lam, mu, alpha, f, yd, M_factor: SpdFactor) -> float:
    """Norm of the dual-objective gradient in p at an inexact saddle solution.

    With block residuals r1, r2 of the saddle system this equals
    ||r1 / alpha + K M^{-1} r2||.
    """
    M, K = sys.M, sys.K
    r1 = M @ p - alpha * (K @ y) - (mu - alpha * (M @ f))
    r2 = K @ p + M @ y - (M @ yd - lam)
    return float(np.linalg.norm(r1 / alpha + K @ M_factor.solve(r2)))


def solve_p_subproblem(
    sys,
    lam,
    mu,
    alpha,
    f,
    yd,
    tol,
    precond: SaddlePreconditioner | None = None,
    x0=None,
    restart: int = 50,
    max_iter: int = 500,
) -> PSolve:
    """GMRES on [[M, -alpha K], [K, M]] [p; y] = [mu - alpha M f; M yd - lam]."""
    n = sys.n
    A = SaddleOperator(sys.M, sys.K, alpha)
    P = precond if precond is not None else SaddlePreconditioner(sys.M, sys.K, alpha)
    b = p_subproblem_rhs(sys, lam, mu, alpha, f, yd)
    res = gmres(A, P, b, tol=tol, max_iter=max_iter, restart=restart, x0=x0)
    if not res.converged:
        log.warning("p-subproblem GMRES stopped at relres %.2e > %.2e", res.relres, tol)
    return PSolve(res.x[:n], res.x[n:], res.relres, res.iterations, res.converged)


def update_lambda(sys, p_tilde, lam_k, yd, C: EllipsoidSet, M_factor: SpdFactor, tol=1e-10, rho0=None):
    """lam~ = d - Pi_C(sigma d) / sigma with M d = M yd / sigma + M lam - (K p~ + lam) / sigma.

    Returns ``(lam_tilde, projection result)``.
    """
    sigma = sys.sigma
    d = yd / sigma + lam_k - M_factor.solve(sys.K.T @ p_tilde + lam_k) / sigma
    proj = project_ellipsoid(sigma * d, C, tol=tol, rho0=rho0)
    return d - proj.x / sigma, proj


def update_mu(sys, p_tilde, mu_k, S: BoxSet, alpha, M_factor: SpdFactor):
    """mu~ = W (q - alpha Pi_S(q / alpha)) / c_n,  q = p~ + c_n W^{-1} mu - M^{-1} mu."""
    c = sys.c_n
    s = M_factor.solve(mu_k)
    q = p_tilde + c * mu_k / sys.w - s
    return sys.w * (q - alpha * project_box(q / alpha, S)) / c


def recover_control(sys, p, mu, alpha, M_factor: SpdFactor):
    """u = (p - M^{-1} mu) / alpha."""
    return (p - M_factor.solve(mu)) / alpha


def momentum(t: float) -> tuple[float, float]:
    """Return (t_next, beta) for the extrapolation step."""
    t_next = 0.5 * (1.0 + np.sqrt(1.0 + 4.0 * t * t))
    return t_next, (t - 1.0) / t_next


def fe_dabcd(disc: Discretized, config: SolverConfig | None = None, x0=None) -> SolverReport:
    """Run the dual method from zero (or from ``x0 = (p, lam, mu)``).

    Stops when eta_d, evaluated at the accepted (tilde) iterates with the
    state from the saddle solve, drops below ``config.tol``.
    """
    config = config or SolverConfig()
    disc = apply_alpha(disc, config)
    sys, alpha = disc.system, disc.alpha
    yd, f, C, S, Mfac = disc.yd, disc.f, disc.C, disc.S, disc.M_factor
    n = sys.n

    t_start = time.perf_counter()
    P = SaddlePreconditioner(sys.M, sys.K, alpha, method=config.factor_method)
    if x0 is None:
        p, lam, mu = np.zeros(n), np.zeros(n), np.zeros(n)
    else:
        p, lam, mu = (np.array(v, dtype=float) for v in x0)
    p_prev, lam_prev, mu_prev = p.copy(), lam.copy(), mu.copy()
    t = 1.0
    saddle_guess = None
    rho = None

    report = SolverReport(
        algorithm="dabcd",
        level=disc.level,
        alpha=alpha,
        iterations=0,
        converged=False,
        setup_time_seconds=disc.setup_time,
        inputs=_inputs(disc, config, "dabcd"),
    )
    y = np.zeros(n)
    u = np.zeros(n)
    for k in range(1, config.max_iter + 1):
        eps_k = config.eps(k)
        b = p_subproblem_rhs(sys, lam, mu, alpha, f, yd)
        tol = config.gmres_tol(k, float(np.linalg.norm(b)))
        gm_iters = 0
        while True:
            ps = solve_p_subproblem(
                sys, lam, mu, alpha, f, yd, tol, precond=P, x0=saddle_guess,
                restart=config.gmres_restart, max_iter=config.gmres_max_iter,
            )
            gm_iters += ps.iterations
            cert = p_certificate(sys, ps.p, ps.y, lam, mu, alpha, f, yd, Mfac)
            if cert <= eps_k or tol <= config.gmres_floor:
                break
            tol = max(tol * 1e-2, config.gmres_floor)
            saddle_guess = np.concatenate([ps.p, ps.y])
        saddle_guess = np.concatenate([ps.p, ps.y])
        p_t, y = ps.p, ps.y

        lam_t, proj = update_lambda(sys, p_t, lam, yd, C, Mfac, tol=config.proj_tol, rho0=rho)
        rho = proj.rho if proj.rho > 0 else None
        mu_t = update_mu(sys, p_t, mu, S, alpha, Mfac)
        u = recover_control(sys, p_t, mu_t, alpha, Mfac)

        eta = residual_eta_d(sys, y, u, p_t, lam_t, mu_t, yd, f, C, S, tol=config.proj_tol)
        report.residual_history.append(eta)
        report.objective_history.append(
            compute_dual_objective(sys, p_t, lam_t, mu_t, alpha, yd, f, C, S, Mfac)
        )
        report.inner_gmres_iters.append(gm_iters)
        report.newton_iters.append(proj.newton_iters)
        report.certificates.append({"eps_k": eps_k, "delta_p": cert, "gmres_relres": ps.relres})
        report.iterations = k
        if eta < config.tol:
            report.converged = True
            p, lam, mu = p_t, lam_t, mu_t
            break

        t, beta = momentum(t)
        p = p_t + beta * (p_t - p_prev)
        lam = lam_t + beta * (lam_t - lam_prev)
        mu = mu_t + beta * (mu_t - mu_prev)
        p_prev, lam_prev, mu_prev = p_t, lam_t, mu_t
    else:
        p, lam, mu = p_t, lam_t, mu_t

    report.wall_time_seconds = time.perf_counter() - t_start
    report.y, report.u, report.p, report.lam, report.mu = y, u, p, lam, mu
    return report


def _inputs(disc: Discretized, config: SolverConfig, algorithm: str) -> dict:
    pr = disc.problem
    return {
        "problem": pr.name,
        "level": disc.level,
        "algorithm": algorithm,
        "alpha": disc.alpha,
        "delta": pr.delta,
        "box": [pr.box.a, pr.box.b],
        "tol": config.tol,
        "max_iter": config.max_iter,
        "admm_sigma": config.admm_sigma,
        "dofs": disc.n,
    }
