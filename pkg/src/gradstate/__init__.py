"""Dual block coordinate descent and ADMM baselines for elliptic control
with an integral gradient-state budget and control bounds."""

from .fem import FemSystem, assemble, interpolate_nodal
from .mesh import Mesh, build_disk_mesh, mesh_size, refine
from .problems import ProblemSpec, alpha_sweep_spec, example1, example2, get_problem
from .projections import BoxSet, EllipsoidSet, project_box, project_ellipsoid
from .solvers import SolverConfig, SolverReport, admm, discretize, fe_dabcd, ihadmm, run

__version__ = "0.1.0"
