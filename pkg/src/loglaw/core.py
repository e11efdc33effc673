"""System abstraction shared by every other module.

Phase points are plain numpy arrays.  Torus-like systems use arrays of shape
``(..., dimension)`` with coordinates in [0, 1); geodesic flows use arrays of
group elements of shape ``(..., 2, 2)``.
"""

from __future__ import annotations

import numbers
from dataclasses import dataclass, field
from typing import Any, Callable

import numpy as np

from loglaw.errors import InvalidArgumentError, NumericDomainError
from loglaw.rng import RngStream

MAP = "map"
FLOW = "flow"

TARGET_KINDS = ("base_ball", "sasaki_ball", "sublevel", "section")


class SystemModel:
    """A named measure-preserving map or flow.

    Subclasses provide ``_advance`` (exact closed-form step), ``sample`` (draws
    from the invariant measure) and ``distance``.
    """

    name: str = "system"
    kind: str = MAP
    dimension: int = 1
    velocity_bound: float = 1.0

    @property
    def parameters(self) -> dict:
        return {}

    def _advance(self, x: np.ndarray, dt):
        raise NotImplementedError

    def sample(self, rng: RngStream, n: int) -> np.ndarray:
        raise NotImplementedError

    def distance(self, x: np.ndarray, y: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def coerce(self, x) -> np.ndarray:
        return np.array(x, dtype=float, copy=True)

    def wrap(self, out, like):
        return out

    def describe(self) -> dict:
        return {"name": self.name, "kind": self.kind, "dimension": self.dimension,
                "velocity_bound": self.velocity_bound, "parameters": self.parameters}


def _check_dt(model: SystemModel, dt):
    if model.kind == MAP:
        if isinstance(dt, numbers.Integral):
            dt = int(dt)
        elif isinstance(dt, numbers.Real) and float(dt).is_integer():
            dt = int(dt)
        else:
            raise InvalidArgumentError(f"map {model.name!r} advances in integer steps, got dt={dt!r}")
        if dt < 0:
            raise InvalidArgumentError("dt must be non-negative")
        return dt
    dt = float(dt)
    if not np.isfinite(dt) or dt < 0:
        raise InvalidArgumentError(f"dt must be finite and non-negative, got {dt!r}")
    return dt


def advance(model: SystemModel, x, dt):
    """Phi^dt(x) for flows, T^dt(x) for maps.  Never mutates ``x``."""
    dt = _check_dt(model, dt)
    arr = model.coerce(x)
    if not np.all(np.isfinite(arr)):
        raise NumericDomainError("non-finite phase point")
    if dt == 0:
        return model.wrap(arr, x)
    out = model._advance(arr, dt)
    if not np.all(np.isfinite(out)):
        raise NumericDomainError("state left the finite domain")
    return model.wrap(out, x)


def sample_invariant(model: SystemModel, rng: RngStream, n: int) -> np.ndarray:
    if int(n) < 1:
        raise InvalidArgumentError("n must be >= 1")
    return model.sample(rng, int(n))


def torus_distance(x, y) -> np.ndarray:
    """Flat distance on R^d / Z^d; last axis is the coordinate axis."""
    d = np.abs(np.asarray(x, dtype=float) - np.asarray(y, dtype=float)) % 1.0
    d = np.minimum(d, 1.0 - d)
    return np.sqrt(np.sum(d * d, axis=-1))


@dataclass(frozen=True)
class TargetFamily:
    """Sublevel targets B_l = {level_fn < l} of a 1-Lipschitz level function."""

    level_fn: Callable[[np.ndarray], np.ndarray]
    kind: str
    center: Any
    lipschitz_constant: float = 1.0
    label: str = ""
    extra: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in TARGET_KINDS:
            raise InvalidArgumentError(f"unknown target kind {self.kind!r}")

    def __call__(self, x) -> np.ndarray:
        return self.level_fn(x)

    def contains(self, x, l: float) -> np.ndarray:
        return self.level_fn(x) < l


def torus_ball(center) -> TargetFamily:
    c = np.atleast_1d(np.asarray(center, dtype=float)) % 1.0

    def level(x):
        return torus_distance(x, c)

    return TargetFamily(level, "base_ball", tuple(c), 1.0, label=f"ball{tuple(np.round(c, 6))}")
