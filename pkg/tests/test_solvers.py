import dataclasses
import json

import numpy as np
import pytest
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from gradstate.problems import FIELDS, example1, example2
from gradstate.projections import BoxSet
from gradstate.solvers import (
    SolverConfig,
    SolverReport,
    admm,
    compute_dual_objective,
    discretize,
    fe_dabcd,
    ihadmm,
    momentum,
    p_certificate,
    primal_objective,
    recover_control,
    residual_eta_c,
    residual_eta_d,
    residual_eta_h,
    solve_p_subproblem,
    update_lambda,
    update_mu,
)
from gradstate.solvers.residuals import eta_c_terms

_DISC = {}


def disc(name="example1", level=2, **changes):
    key = (name, level, tuple(sorted(changes.items())))
    if key not in _DISC:
        spec = {"example1": example1, "example2": example2}[name]()
        if changes:
            spec = dataclasses.replace(spec, **changes)
        _DISC[key] = discretize(spec, level)
    return _DISC[key]


def zero_data_disc():
    return disc("example1", 2, y_d=FIELDS["zero"], f=FIELDS["zero"])


def test_p_subproblem_zero_rhs():
    d = disc()
    s = d.system
    lam, mu = s.M @ d.yd, d.alpha * (s.M @ d.f)
    ps = solve_p_subproblem(s, lam, mu, d.alpha, d.f, d.yd, 1e-10)
    assert ps.iterations == 0 and not np.any(ps.p) and not np.any(ps.y)
    z = zero_data_disc()
    ps = solve_p_subproblem(z.system, np.zeros(z.n), np.zeros(z.n), 1.0, z.f, z.yd, 1e-10)
    assert not np.any(ps.p) and not np.any(ps.y)


def test_p_subproblem_residual(rng):
    d = disc("example2", 2)
    s = d.system
    lam, mu = rng.normal(size=d.n) * 0.01, rng.normal(size=d.n) * 0.01
    yd, f = rng.normal(size=d.n), rng.normal(size=d.n)
    tol = 1e-9
    ps = solve_p_subproblem(s, lam, mu, d.alpha, f, yd, tol)
    rhs = np.concatenate([mu - d.alpha * (s.M @ f), s.M @ yd - lam])
    r1 = s.M @ ps.p - d.alpha * (s.K @ ps.y) - rhs[: d.n]
    r2 = s.K.T @ ps.p + s.M @ ps.y - rhs[d.n :]
    assert np.linalg.norm(np.concatenate([r1, r2])) <= tol * np.linalg.norm(rhs)


def test_lambda_update_trivial_cases(rng):
    d = disc()
    s = d.system
    zero = np.zeros(d.n)
    lt, _ = update_lambda(s, zero, zero, zero, d.C, d.M_factor)
    assert not np.any(lt)
    # sigma d deep inside C
    lt, proj = update_lambda(s, zero, zero, 1e-6 * rng.normal(size=d.n), d.C, d.M_factor)
    assert proj.rho == 0.0
    np.testing.assert_allclose(lt, 0.0, atol=1e-12)


def test_mu_update_trivial_cases(rng):
    d = disc()
    s = d.system
    zero = np.zeros(d.n)
    assert not np.any(update_mu(s, zero, zero, d.S, d.alpha, d.M_factor))
    # q / alpha inside the box gives zero
    p = rng.uniform(-1, 1, d.n) * d.alpha
    np.testing.assert_allclose(update_mu(s, p, zero, BoxSet(-2, 2), d.alpha, d.M_factor), 0.0, atol=1e-15)


def test_recover_control(rng):
    d = disc()
    p = rng.normal(size=d.n)
    np.testing.assert_allclose(recover_control(d.system, p, np.zeros(d.n), 0.5, d.M_factor), 2 * p)
    assert not np.any(recover_control(d.system, np.zeros(d.n), np.zeros(d.n), 0.5, d.M_factor))


def test_dual_objective_at_zero():
    d = disc("example2", 2)
    zero = np.zeros(d.n)
    F = compute_dual_objective(d.system, zero, zero, zero, d.alpha, d.yd, d.f, d.C, d.S, d.M_factor)
    assert F == pytest.approx(0.0, abs=1e-14)
    z = zero_data_disc()
    assert compute_dual_objective(z.system, zero[: z.n], zero[: z.n], zero[: z.n], 1.0, z.yd, z.f,
                                  z.C, z.S, z.M_factor) == 0.0


def test_momentum_sequence():
    t2, beta1 = momentum(1.0)
    assert t2 == pytest.approx((1 + np.sqrt(5)) / 2) and beta1 == 0.0
    t = 1.0
    for _ in range(200):
        t_next, beta = momentum(t)
        assert 0.0 <= beta < 1.0 and t_next > t
        t = t_next


def test_eps_schedule_summable():
    cfg = SolverConfig()
    assert cfg.eps(1) == 1e-3 and cfg.eps(10) == pytest.approx(1e-4)
    ks = np.arange(1, 100_001)
    partial = np.cumsum(ks * np.array([cfg.eps(k) for k in ks]))
    assert partial[-1] < 1e-3 * 5 + 1.21  # zeta(3) bounds the tail
    with pytest.raises(ValueError):
        SolverConfig(eps_power=2.0)


@pytest.mark.parametrize("solver", [fe_dabcd, admm, ihadmm])
def test_zero_data_converges_immediately(solver):
    rep = solver(zero_data_disc())
    assert rep.converged and rep.iterations == 1
    assert rep.residual_history[0] == 0.0
    assert not np.any(rep.u) and not np.any(rep.y)


def test_unconstrained_matches_direct_kkt():
    d = disc("example2", 3, delta=1e6, box=BoxSet(-1e6, 1e6))
    s, a = d.system, d.alpha
    M, K = s.M, s.K
    Z = None
    A = sp.bmat([[M, Z, K.T], [Z, a * M, -M], [K, -M, Z]], format="csc")
    x = spla.spsolve(A, np.concatenate([M @ d.yd, np.zeros(d.n), M @ d.f]))
    u_ref = x[d.n : 2 * d.n]
    rep = fe_dabcd(d, SolverConfig(tol=1e-10, max_iter=500))
    assert rep.converged
    np.testing.assert_allclose(rep.u, u_ref, atol=1e-6 * max(1, np.abs(u_ref).max()))
    # inactive bounds: mu vanishes and alpha M u = M p
    assert np.abs(rep.mu).max() <= 1e-15
    assert np.linalg.norm(a * (M @ rep.u) - M @ rep.p) <= 1e-10


def test_inexactness_certificates():
    d = disc("example1", 3)
    rep = fe_dabcd(d, SolverConfig(max_iter=30))
    for c in rep.certificates:
        assert c["delta_p"] <= c["eps_k"]
    # mass solves in the lam / mu steps are direct: residual at round-off
    s = d.system
    b = np.random.default_rng(1).normal(size=d.n)
    assert np.linalg.norm(s.M @ d.M_factor.solve(b) - b) <= 1e-12 * np.linalg.norm(b)


def test_certificate_formula(rng):
    d = disc("example2", 2)
    s = d.system
    lam, mu = rng.normal(size=d.n) * 0.01, rng.normal(size=d.n) * 0.01
    ps = solve_p_subproblem(s, lam, mu, d.alpha, d.f, d.yd, 1e-14)
    assert p_certificate(s, ps.p, ps.y, lam, mu, d.alpha, d.f, d.yd, d.M_factor) <= 1e-8
    # the certificate is the dual gradient in p, checked against finite differences of F
    p = ps.p + rng.normal(size=d.n) * 1e-2

    def F(q):
        return compute_dual_objective(s, q, lam, mu, d.alpha, d.yd, d.f, d.C, d.S, d.M_factor)

    y = d.M_factor.solve(s.M @ d.yd - lam - s.K @ p)
    grad = np.array([(F(p + 1e-6 * e) - F(p - 1e-6 * e)) / 2e-6 for e in np.eye(d.n)])
    cert = p_certificate(s, p, y, lam, mu, d.alpha, d.f, d.yd, d.M_factor)
    assert cert == pytest.approx(np.linalg.norm(grad), rel=1e-5)


def test_majorization_matrix_psd():
    for level in (0, 1, 2):
        d = disc("example2", level)
        s = d.system
        Minv = np.linalg.inv(s.M.toarray())
        D2a = s.sigma * np.eye(d.n) - Minv
        D2b = (s.c_n * np.diag(1 / s.w) - Minv) / d.alpha
        for X in (D2a, D2b):
            assert np.linalg.eigvalsh(0.5 * (X + X.T)).min() >= -1e-9 * np.abs(X).max()


def test_eta_d_perturbation_band(rng):
    d = disc("example2", 3)
    rep = fe_dabcd(d, SolverConfig(tol=1e-8, max_iter=1000))
    args = (d.yd, d.f, d.C, d.S)
    base = residual_eta_d(d.system, rep.y, rep.u, rep.p, rep.lam, rep.mu, *args)
    assert base < 1e-8
    for _ in range(5):
        pert = [v + 1e-3 * rng.normal(size=d.n) for v in (rep.y, rep.u, rep.p, rep.lam, rep.mu)]
        eta = residual_eta_d(d.system, *pert, *args)
        assert 1e-5 <= eta <= 1e-1


def test_eta_c_split_terms(rng):
    d = disc()
    y, u, p = (rng.normal(size=d.n) for _ in range(3))
    zero = np.zeros(d.n)
    terms = eta_c_terms(d.system, y, u, p, y, u, zero, zero, d.yd, d.f, d.alpha, d.C, d.S)
    assert terms[3] == 0.0 and terms[4] == 0.0


def test_residuals_zero_at_converged_points():
    d = disc("example2", 2)
    rep = admm(d, SolverConfig(tol=1e-9, max_iter=2000))
    assert rep.converged
    assert residual_eta_c(d.system, rep.y, rep.u, rep.p, rep.z, rep.w, rep.lam, rep.mu,
                          d.yd, d.f, d.alpha, d.C, d.S) < 1e-9
    rep = ihadmm(d, SolverConfig(tol=1e-9, max_iter=2000))
    assert residual_eta_h(d.system, rep.y, rep.u, rep.p, rep.z, rep.w, rep.lam, rep.mu,
                          d.yd, d.f, d.alpha, d.C, d.S) < 1e-9


def test_admm_output_satisfies_eta_d():
    d = disc("example1", 4)
    rep = admm(d)
    assert rep.converged
    eta = residual_eta_d(d.system, rep.y, rep.u, rep.p, rep.lam, rep.mu, d.yd, d.f, d.C, d.S)
    assert eta <= 10 * 1e-4


def test_strong_duality_against_conic_solver():
    cp = pytest.importorskip("cvxpy")
    d = disc("example1", 2)
    s = d.system
    M, K, D = s.M.toarray(), s.K.toarray(), s.D.toarray()
    Lm, Ld = np.linalg.cholesky(M), np.linalg.cholesky(D)
    y, u = cp.Variable(d.n), cp.Variable(d.n)
    obj = 0.5 * cp.sum_squares(Lm.T @ (y - d.yd)) + 0.5 * d.alpha * cp.sum_squares(Lm.T @ u)
    cons = [K @ y == M @ u + M @ d.f, cp.sum_squares(Ld.T @ y) <= d.C.delta, u >= d.S.a, u <= d.S.b]
    prob = cp.Problem(cp.Minimize(obj), cons)
    prob.solve(solver=cp.CLARABEL)
    rep = fe_dabcd(d, SolverConfig(tol=1e-8, max_iter=3000))
    assert rep.converged
    assert rep.objective_history[-1] == pytest.approx(-prob.value, rel=1e-6)
    assert primal_objective(s, rep.y, rep.u, d.yd, d.alpha) == pytest.approx(prob.value, rel=1e-5)
    e = rep.u - u.value
    assert np.sqrt(e @ M @ e) <= 1e-5


def test_report_json_roundtrip():
    rep = fe_dabcd(disc("example2", 2), SolverConfig(max_iter=5))
    d = json.loads(rep.to_json())
    for key in ("iterations", "residual_history", "objective_history", "wall_time_seconds",
                "algorithm", "level", "alpha"):
        assert key in d
    back = SolverReport.from_dict(d)
    assert back.iterations == rep.iterations
    np.testing.assert_array_equal(back.u, rep.u)
    assert back.residual_history == rep.residual_history


def test_report_flags_max_iter():
    rep = admm(disc("example2", 2), SolverConfig(max_iter=1))
    assert rep.iterations == 1 and not rep.converged


def test_alpha_override_applies():
    rep = fe_dabcd(disc("example2", 2), SolverConfig(alpha=0.5, max_iter=3))
    assert rep.alpha == 0.5 and rep.inputs["alpha"] == 0.5
