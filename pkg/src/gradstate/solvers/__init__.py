from .admm import SingularSystemError, admm, ihadmm
from .common import Discretized, SolverConfig, SolverReport, discretize
from .dabcd import (
    fe_dabcd,
    momentum,
    p_certificate,
    recover_control,
    solve_p_subproblem,
    update_lambda,
    update_mu,
)
from .residuals import (
    compute_dual_objective,
    primal_objective,
    residual_eta_c,
    residual_eta_d,
    residual_eta_h,
)

ALGORITHMS = {"dabcd": fe_dabcd, "ihadmm": ihadmm, "admm": admm}


def run(disc: Discretized, algorithm: str, config: SolverConfig | None = None) -> SolverReport:
    try:
        fn = ALGORITHMS[algorithm]
    except KeyError:
        raise KeyError(f"unknown algorithm {algorithm!r}; choose from {sorted(ALGORITHMS)}") from None
    return fn(disc, config)


__all__ = [
    "ALGORITHMS",
    "Discretized",
    "SingularSystemError",
    "SolverConfig",
    "SolverReport",
    "admm",
    "compute_dual_objective",
    "discretize",
    "fe_dabcd",
    "ihadmm",
    "momentum",
    "p_certificate",
    "primal_objective",
    "recover_control",
    "residual_eta_c",
    "residual_eta_d",
    "residual_eta_h",
    "run",
    "solve_p_subproblem",
    "update_lambda",
    "update_mu",
]
