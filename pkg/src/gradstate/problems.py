"""Benchmark instances on disks.

Data fields are vectorized callables of an (n, 2) point array, registered
by name in ``FIELDS`` so that config files and the CLI can refer to them.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Callable, Optional

import numpy as np

from .projections import BoxSet

LOG2 = np.log(2.0)


@dataclass(frozen=True)
class ScalarField:
    name: str
    func: Callable[[np.ndarray], np.ndarray]

    def __call__(self, pts: np.ndarray) -> np.ndarray:
        pts = np.atleast_2d(np.asarray(pts, dtype=float))
        return np.asarray(self.func(pts), dtype=float)


FIELDS: dict[str, ScalarField] = {}


def register_field(name: str):
    def deco(func):
        FIELDS[name] = ScalarField(name, func)
        return FIELDS[name]

    return deco


def _radius(pts):
    return np.hypot(pts[:, 0], pts[:, 1])


@register_field("zero")
def zero_field(pts):
    return np.zeros(pts.shape[0])


@register_field("one")
def one_field(pts):
    return np.ones(pts.shape[0])


@register_field("ex1_state")
def ex1_state(pts):
    r = _radius(pts)
    out = np.empty_like(r)
    inner = r <= 1.0
    out[inner] = 0.25 + 0.5 * LOG2 - 0.25 * r[inner] ** 2
    out[~inner] = 0.5 * LOG2 - 0.5 * np.log(r[~inner])
    return out


@register_field("ex1_source")
def ex1_source(pts):
    r = _radius(pts)
    out = np.empty_like(r)
    inner = r <= 1.0
    out[inner] = 1.25 + 0.5 * LOG2 - 0.25 * r[inner] ** 2
    out[~inner] = 0.5 * LOG2 - 0.5 * np.log(r[~inner])
    return out


@register_field("ex1_control")
def ex1_control(pts):
    r = _radius(pts)
    out = np.empty_like(r)
    inner = r <= 1.0
    out[inner] = -0.25 - 0.5 * LOG2 + 0.25 * r[inner] ** 2
    out[~inner] = -0.5 * LOG2 + 0.5 * np.log(r[~inner])
    return out


@register_field("radius_squared")
def radius_squared(pts):
    return pts[:, 0] ** 2 + pts[:, 1] ** 2


@dataclass(frozen=True)
class ProblemSpec:
    """min 1/2||y - y_d||^2 + alpha/2 ||u||^2  s.t.  -Lap y = u + f,
    y = 0 on the circle, ||grad y||^2 <= delta, a <= u <= b."""

    name: str
    radius: float
    alpha: float
    box: BoxSet
    delta: float
    y_d: ScalarField
    f: ScalarField
    exact_u: Optional[ScalarField] = None
    exact_y: Optional[ScalarField] = None

    def __post_init__(self):
        if not self.alpha > 0:
            raise ValueError("alpha must be positive")
        if not self.delta > 0:
            raise ValueError("delta must be positive")
        if not self.radius > 0:
            raise ValueError("radius must be positive")

    def with_alpha(self, alpha: float) -> "ProblemSpec":
        return replace(self, alpha=float(alpha))


def example1() -> ProblemSpec:
    """Disk of radius 2 with a known solution (state equal to the target)."""
    return ProblemSpec(
        name="example1",
        radius=2.0,
        alpha=1.0,
        box=BoxSet(-2.0, 2.0),
        delta=2.0,
        y_d=FIELDS["ex1_state"],
        f=FIELDS["ex1_source"],
        exact_u=FIELDS["ex1_control"],
        exact_y=FIELDS["ex1_state"],
    )


def example2() -> ProblemSpec:
    return ProblemSpec(
        name="example2",
        radius=1.0,
        alpha=1e-2,
        box=BoxSet(0.0, 0.5),
        delta=0.5,
        y_d=FIELDS["radius_squared"],
        f=FIELDS["zero"],
    )


PROBLEMS: dict[str, Callable[[], ProblemSpec]] = {
    "example1": example1,
    "example2": example2,
}


def get_problem(name: str) -> ProblemSpec:
    try:
        return PROBLEMS[name]()
    except KeyError:
        raise KeyError(f"unknown problem {name!r}; choose from {sorted(PROBLEMS)}") from None


def alpha_sweep_spec(base: ProblemSpec, alphas) -> list[ProblemSpec]:
    """One spec per alpha.  The example-1 sweep also tightens the box to
    [-1/2, 1/2] and sets delta = 1, which invalidates the known solution."""
    alphas = list(alphas)
    if not alphas:
        raise ValueError("empty alpha list")
    if any(not a > 0 for a in alphas):
        raise ValueError("alphas must be positive")
    if base.name == "example1":
        base = replace(base, box=BoxSet(-0.5, 0.5), delta=1.0, exact_u=None, exact_y=None)
    return [base.with_alpha(a) for a in alphas]
