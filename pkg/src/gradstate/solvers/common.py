"""Shared setup, configuration and reporting for the three solvers."""

from __future__ import annotations

import json
import time
from dataclasses import asdict, dataclass, field
from typing import Optional

import numpy as np

from ..fem import FemSystem, assemble, interpolate_nodal
from ..linalg import SpdFactor
from ..mesh import MAX_LEVEL, build_disk_mesh
from ..problems import ProblemSpec
from ..projections import EllipsoidSet


@dataclass
class Discretized:
    """A problem assembled on one mesh level, with the mass factorization."""

    problem: ProblemSpec
    level: int
    system: FemSystem
    yd: np.ndarray
    f: np.ndarray
    C: EllipsoidSet
    M_factor: SpdFactor
    setup_time: float = 0.0

    @property
    def n(self) -> int:
        return self.system.n

    @property
    def alpha(self) -> float:
        return self.problem.alpha

    @property
    def S(self):
        return self.problem.box

    @property
    def Myd(self) -> np.ndarray:
        return self.system.M @ self.yd

    @property
    def Mf(self) -> np.ndarray:
        return self.system.M @ self.f

    def with_problem(self, problem: ProblemSpec) -> "Discretized":
        """Same mesh and operators, new data (alpha, box, delta or fields)."""
        if problem.radius != self.problem.radius:
            raise ValueError("radius change requires a new mesh")
        mesh = self.system.mesh
        C = self.C if problem.delta == self.C.delta else EllipsoidSet(self.system.D, problem.delta)
        return Discretized(
            problem=problem,
            level=self.level,
            system=self.system,
            yd=interpolate_nodal(problem.y_d, mesh),
            f=interpolate_nodal(problem.f, mesh),
            C=C,
            M_factor=self.M_factor,
            setup_time=self.setup_time,
        )


def discretize(
    problem: ProblemSpec, level: int, max_level: int = MAX_LEVEL, factor_method: str = "direct"
) -> Discretized:
    t0 = time.perf_counter()
    mesh = build_disk_mesh(problem.radius, level, max_level=max_level)
    system = assemble(mesh)
    disc = Discretized(
        problem=problem,
        level=level,
        system=system,
        yd=interpolate_nodal(problem.y_d, mesh),
        f=interpolate_nodal(problem.f, mesh),
        C=EllipsoidSet(system.D, problem.delta),
        M_factor=SpdFactor(system.M, method=factor_method),
    )
    disc.setup_time = time.perf_counter() - t0
    return disc


@dataclass
class SolverConfig:
    """Outer tolerance, iteration cap and inner accuracy controls.

    The inexactness schedule is eps_k = min(eps_cap, k^-eps_power); with
    eps_power = 4 the sum of k * eps_k is finite.
    """

    tol: float = 1e-4
    max_iter: int = 100
    alpha: Optional[float] = None
    admm_sigma: float = 0.1
    eps_cap: float = 1e-3
    eps_power: float = 4.0
    gmres_floor: float = 1e-12
    gmres_restart: int = 50
    gmres_max_iter: int = 500
    proj_tol: float = 1e-10
    factor_method: str = "direct"

    def __post_init__(self):
        if not self.tol > 0:
            raise ValueError("tol must be positive")
        if self.max_iter < 1:
            raise ValueError("max_iter must be at least 1")
        if not self.admm_sigma > 0:
            raise ValueError("admm_sigma must be positive")
        if self.alpha is not None and not self.alpha > 0:
            raise ValueError("alpha must be positive")
        if self.eps_power <= 2:
            raise ValueError("eps_power must exceed 2 for a summable k * eps_k")

    def eps(self, k: int) -> float:
        return min(self.eps_cap, float(k) ** (-self.eps_power))

    def gmres_tol(self, k: int, rhs_norm: float) -> float:
        return max(self.eps(k) / (1.0 + rhs_norm), self.gmres_floor)


def apply_alpha(disc: Discretized, config: SolverConfig) -> Discretized:
    if config.alpha is None or config.alpha == disc.alpha:
        return disc
    return disc.with_problem(disc.problem.with_alpha(config.alpha))


def _floats(v):
    return [float(x) for x in v]


@dataclass
class SolverReport:
    algorithm: str
    level: int
    alpha: float
    iterations: int
    converged: bool
    residual_history: list = field(default_factory=list)
    objective_history: list = field(default_factory=list)
    wall_time_seconds: float = 0.0
    setup_time_seconds: float = 0.0
    inner_gmres_iters: list = field(default_factory=list)
    newton_iters: list = field(default_factory=list)
    certificates: list = field(default_factory=list)
    inputs: dict = field(default_factory=dict)
    y: Optional[np.ndarray] = None
    u: Optional[np.ndarray] = None
    p: Optional[np.ndarray] = None
    lam: Optional[np.ndarray] = None
    mu: Optional[np.ndarray] = None
    z: Optional[np.ndarray] = None
    w: Optional[np.ndarray] = None

    @property
    def residual(self) -> float:
        return self.residual_history[-1] if self.residual_history else float("nan")

    def to_dict(self) -> dict:
        d = asdict(self)
        for key in ("y", "u", "p", "lam", "mu", "z", "w"):
            d[key] = None if d[key] is None else _floats(d[key])
        d["residual_history"] = _floats(self.residual_history)
        d["objective_history"] = _floats(self.objective_history)
        d["residual"] = float(self.residual)
        return d

    def to_json(self, **kw) -> str:
        return json.dumps(self.to_dict(), **kw)

    @classmethod
    def from_dict(cls, d: dict) -> "SolverReport":
        d = dict(d)
        d.pop("residual", None)
        for key in ("y", "u", "p", "lam", "mu", "z", "w"):
            if d.get(key) is not None:
                d[key] = np.asarray(d[key], dtype=float)
        return cls(**d)
