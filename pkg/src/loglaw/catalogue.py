"""Named systems and targets for the command line, each tied to its experiment."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from loglaw.core import TargetFamily, torus_ball
from loglaw.errors import ConfigError, InvalidArgumentError
from loglaw.hyperbolic import FuchsianDomain, GeodesicFlow, base_ball, sasaki_ball
from loglaw.systems import LinearFlow, Rotation, RotationSpec, Suspension, TorusMap

EXPERIMENTS = {
    "hitting-exponent": "median log tau against -log l; slope estimates the hitting exponent",
    "cylinder-dimension": "per-eps slopes of log mu(C(eps, l)) against log l; conditional dimension",
    "correlation": "sampled correlation curve with exponential / polynomial / none classification",
    "section-check": "suspension flow against its floor map: sum identity, mean return, exponent pair",
    "excursion": "running minimum distance to a point; -log d_t / log t tends to 1 on surfaces",
    "cusp-excursion": "running maximum distance on the modular surface; max / log t tends to 1",
}


@dataclass(frozen=True)
class SystemEntry:
    name: str
    build: object
    dimension: float
    doc: str
    experiment: str
    default_center: tuple = ()
    targets: tuple = ("base-ball",)
    params: dict = field(default_factory=dict)
    target_experiments: dict = field(default_factory=dict)


def _dom(name):
    return GeodesicFlow(FuchsianDomain(name))


SYSTEMS = {
    e.name: e
    for e in [
        SystemEntry("cat", lambda p: TorusMap("cat"), 2.0,
                    "Arnold cat map [[2,1],[1,1]] on the 2-torus, exact 64-bit orbits",
                    "equality under exponential mixing: hitting exponent 2 for balls", (0.3, 0.7)),
        SystemEntry("doubling", lambda p: TorusMap("doubling"), 1.0,
                    "x -> 2x mod 1 with fresh random binary digits",
                    "equality under exponential mixing: hitting exponent 1 for balls", (0.3,)),
        SystemEntry("rotation-golden", lambda p: Rotation(RotationSpec.golden()), 1.0,
                    "circle rotation by the golden mean (bounded partial quotients)",
                    "arithmetic boundary: equality holds without mixing, exponent 1", (0.3,)),
        SystemEntry("rotation-liouville", lambda p: Rotation(RotationSpec.liouville()), 1.0,
                    "circle rotation by a Liouville-type number (partial quotients k^k)",
                    "arithmetic boundary: per-radius ratios above 1.5 without decay", (0.3,)),
        SystemEntry("rotation-custom", lambda p: Rotation(RotationSpec.custom(float(p.get("alpha", math.sqrt(2) - 1)))),
                    1.0, "circle rotation by a user angle alpha (default sqrt(2) - 1)",
                    "lower bound: hitting exponent at least the target dimension", (0.3,),
                    params={"alpha": "rotation angle in (0, 1)"}),
        SystemEntry("linear-flow-golden", lambda p: LinearFlow.from_class("golden"), 1.0,
                    "unit-speed linear flow on the 2-torus with golden slope",
                    "lower bound for flows without mixing: exponent of balls at least 1", (0.3, 0.7)),
        SystemEntry("linear-flow-liouville", lambda p: LinearFlow.from_class("liouville"), 1.0,
                    "unit-speed linear flow on the 2-torus with Liouville-type slope",
                    "lower bound for flows without mixing: exponent of balls at least 1", (0.3, 0.7)),
        SystemEntry("linear-flow-custom", lambda p: LinearFlow.from_class("custom", float(p.get("slope", math.sqrt(2)))),
                    1.0, "unit-speed linear flow on the 2-torus with a user slope (default sqrt(2))",
                    "lower bound for flows without mixing: exponent of balls at least 1", (0.3, 0.7),
                    params={"slope": "direction (1, slope)"}),
        SystemEntry("suspension-cat",
                    lambda p: Suspension(TorusMap("cat"), float(p.get("roof_c0", 1.0)), float(p.get("roof_c1", 0.5))),
                    2.0, "suspension of the cat map under the roof c0 + c1 cos(2 pi x)",
                    "section reduction: flow and floor-map exponents agree (2)", (0.3, 0.7),
                    params={"roof_c0": "roof mean (1.0)", "roof_c1": "roof amplitude (0.5)"}),
        SystemEntry("suspension-doubling",
                    lambda p: Suspension(TorusMap("doubling"), float(p.get("roof_c0", 1.0)),
                                         float(p.get("roof_c1", 0.5))),
                    1.0, "suspension of the doubling map under the roof c0 + c1 cos(2 pi x)",
                    "section reduction: flow and floor-map exponents agree (1)", (0.3,),
                    params={"roof_c0": "roof mean (1.0)", "roof_c1": "roof amplitude (0.5)"}),
        SystemEntry("bolza", lambda p: _dom("bolza"), 1.0,
                    "geodesic flow on the Bolza genus-2 surface (regular octagon, angles pi/4)",
                    "geodesic flow: base balls exponent n-1 = 1, Sasaki balls 2n-2 = 2, excursions 1",
                    targets=("base-ball", "sasaki-ball"),
                    target_experiments={"base-ball": "base-ball exponent n-1 = 1 and cylinder measure ~ eps * l",
                                        "sasaki-ball": "Sasaki-ball exponent 2n-2 = 2"}),
        SystemEntry("modular", lambda p: _dom("modular"), 1.0,
                    "geodesic flow on the modular surface PSL(2,Z)\\H (one cusp)",
                    "geodesic flow with a cusp: base balls exponent 1, cusp excursions max / log t -> 1",
                    targets=("base-ball", "sasaki-ball"),
                    target_experiments={"base-ball": "base-ball exponent 1 on a finite-area surface with a cusp",
                                        "sasaki-ball": "Sasaki-ball exponent 2 on a surface with a cusp"}),
    ]
}

TARGETS = {
    "base-ball": "points (base points for flows) within distance l of a centre",
    "sasaki-ball": "unit vectors within surrogate Sasaki distance l of a target vector (surfaces only)",
}


def system_entry(name: str) -> SystemEntry:
    if name not in SYSTEMS:
        raise ConfigError(f"unknown system {name!r}", "system.name")
    return SYSTEMS[name]


def build_system(name: str, params: dict | None = None):
    entry = system_entry(name)
    params = dict(params or {})
    unknown = sorted(set(params) - set(entry.params))
    if unknown:
        raise ConfigError(f"unknown parameter {unknown[0]!r} for system {name!r}", f"system.{unknown[0]}")
    try:
        return entry.build(params)
    except (InvalidArgumentError, ValueError, TypeError) as exc:
        raise ConfigError(f"bad parameters for system {name!r}: {exc}", "system") from exc


def build_target(model, system: str, kind: str = "base-ball", center=None, r_max: float = 0.5) -> TargetFamily:
    entry = system_entry(system)
    if kind not in TARGETS:
        raise ConfigError(f"unknown target kind {kind!r}", "target.kind")
    if kind not in entry.targets:
        raise ConfigError(f"target {kind!r} is not available for {system!r}", "target.kind")
    if isinstance(model, GeodesicFlow):
        dom = model.domain
        if kind == "base-ball":
            p = dom.center if center is None else _complex(center)
            return base_ball(dom, p, r_max=r_max)
        if center is None:
            p, th = dom.center, math.pi / 2
        else:
            p, th = _complex(center[:2]), float(center[2]) if len(center) > 2 else math.pi / 2
        return sasaki_ball(dom, p, th, r_max=r_max)
    c = entry.default_center if center is None else tuple(float(v) for v in center)
    dim = model.base.dimension if isinstance(model, Suspension) else model.dimension
    if len(c) != dim:
        raise ConfigError(f"target centre needs {dim} coordinates", "target.center")
    return torus_ball(c)


def _complex(center):
    if isinstance(center, (int, float, complex)):
        return complex(center)
    try:
        x, y = center[0], center[1]
    except (TypeError, IndexError) as exc:
        raise ConfigError("hyperbolic centre must be [x, y] with y > 0", "target.center") from exc
    if float(y) <= 0:
        raise ConfigError("hyperbolic centre must lie in the upper half-plane", "target.center")
    return complex(float(x), float(y))


def listing() -> list[str]:
    """Catalogue lines, sorted."""
    lines = []
    for name, e in SYSTEMS.items():
        extra = "; params: " + ", ".join(f"{k} = {v}" for k, v in sorted(e.params.items())) if e.params else ""
        lines.append(f"system\t{name}\t{e.doc}{extra}\texperiment: {e.experiment}")
        for t in e.targets:
            lines.append(f"target\t{name}/{t}\t{TARGETS[t]}\texperiment: {e.target_experiments.get(t, e.experiment)}")
    for name, doc in EXPERIMENTS.items():
        lines.append(f"experiment\t{name}\t{doc}\texperiment: {name}")
    return sorted(lines)
