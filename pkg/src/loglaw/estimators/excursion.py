"""Excursion statistics of geodesic orbits.

``excursion_curve`` follows the running minimum d_t of the quotient distance
between the orbit's base point and a point p, and reports -log d_t / log t
on a time grid, together with the lim-sup variant over individual closest
approaches.  ``cusp_excursion`` follows the running maximum of the distance
to p on the modular surface, whose growth is driven by trips into the cusp.

The translate cache only holds lifts of p within a fixed reach of the
domain, so distances are exact once they drop below ``exact_below``
(r_max + extra reach, about 1.5 by default); earlier, larger values are
upper bounds.  Grid points in that regime are flagged.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from loglaw.errors import InvalidArgumentError, ReductionFailure
from loglaw.hyperbolic import _kernels, tangent
from loglaw.hyperbolic.cache import TranslateCache, build_cache
from loglaw.hyperbolic.domains import FuchsianDomain
from loglaw.hyperbolic.flow import WINDOW, liouville_sample
from loglaw.parallel import map_trajectories
from loglaw.rng import rng_stream

EXTRA_REACH = 1.0
EVENT_T_MIN = 10.0


def _g_of(u):
    return np.ascontiguousarray(np.asarray(getattr(u, "g", u), dtype=float))


def _check_grid(t_grid):
    t = np.asarray(t_grid, dtype=float)
    if t.ndim != 1 or len(t) == 0 or np.any(t <= 0) or np.any(np.diff(t) <= 0):
        raise InvalidArgumentError("t_grid must be positive and increasing")
    return np.ascontiguousarray(t)


def geometric_grid(t_min: float = 10.0, t_max: float = 1e6, per_decade: int = 4):
    k = int(round(per_decade * math.log10(t_max / t_min)))
    return t_min * (t_max / t_min) ** (np.arange(k + 1) / k)


@dataclass
class ExcursionCurve:
    t: np.ndarray
    d_min: np.ndarray
    exponent: np.ndarray
    event_limsup: np.ndarray
    exact: np.ndarray

    @property
    def final_exponent(self) -> float:
        return float(self.exponent[-1])


def excursion_cache(dom: FuchsianDomain, p: complex) -> TranslateCache:
    return build_cache(dom, p, r_max=0.5, window=WINDOW, extra_reach=EXTRA_REACH)


def excursion_curve(dom: FuchsianDomain, u0, p=None, t_grid=None, cache: TranslateCache | None = None,
                    t_event_min: float = EVENT_T_MIN) -> ExcursionCurve:
    """Running minimum d_t of dist(base(Phi^s u0), p) over s <= t."""
    t_grid = _check_grid(geometric_grid() if t_grid is None else t_grid)
    if cache is None:
        cache = excursion_cache(dom, dom.center if p is None else p)
    gens, inv, cx, cy = cache.kernel_args()
    g0 = _g_of(u0)
    z0 = complex(tangent.base_point(g0))
    gz, _ = dom.reduce_matrix(g0)
    zr = complex(tangent.base_point(gz))
    d_init = float(np.min(tangent.hyp_distance(zr, cache.points)))
    dmin, ev, ok = _kernels.excursion_scan(g0, dom.code, gens, inv, cx, cy, cache.qx, cache.qy, cache.qd, t_grid,
                                           WINDOW, dom.word_cap, d_init, float(t_event_min))
    if not ok:
        raise ReductionFailure("orbit reduction exceeded the word cap", z0, [])
    with np.errstate(divide="ignore"):
        expo = -np.log(dmin) / np.log(t_grid)
    exact = dmin < cache.r_max + EXTRA_REACH
    return ExcursionCurve(t_grid, dmin, expo, ev, exact)


@dataclass
class ExcursionEnsemble:
    t: np.ndarray
    final_exponents: np.ndarray
    exponents: np.ndarray
    fraction_in_band: float
    band: tuple
    warnings: list = field(default_factory=list)

    def summary(self) -> dict:
        return {"t_final": float(self.t[-1]), "band": list(self.band), "fraction_in_band": self.fraction_in_band,
                "median_final_exponent": float(np.median(self.final_exponents)),
                "warnings": list(self.warnings)}


def excursion_ensemble(dom: FuchsianDomain, ensemble: int, seed: int = 0, p=None, t_grid=None,
                       band=(0.8, 1.2), workers: int | None = None) -> ExcursionEnsemble:
    """excursion_curve over Liouville-distributed starts keyed by trajectory."""
    t_grid = _check_grid(geometric_grid() if t_grid is None else t_grid)
    cache = excursion_cache(dom, dom.center if p is None else p)

    def job(ids):
        return np.array([excursion_curve(dom, liouville_sample(dom, rng_stream(seed, int(i))), t_grid=t_grid,
                                         cache=cache).exponent for i in ids])

    E = np.concatenate(map_trajectories(job, int(ensemble), workers))
    fin = E[:, -1]
    frac = float(np.mean((fin >= band[0]) & (fin <= band[1])))
    return ExcursionEnsemble(t_grid, fin, E, frac, tuple(band))


@dataclass
class CuspCurve:
    t: np.ndarray
    d_max: np.ndarray
    statistic: np.ndarray

    @property
    def final_statistic(self) -> float:
        return float(self.statistic[-1])


def cusp_excursion(dom: FuchsianDomain, u0, t_grid=None, p=None, cache: TranslateCache | None = None) -> CuspCurve:
    """Running maximum of dist(p, base(Phi^s u0)) and max / log t on the
    modular surface."""
    if dom.variant != "modular":
        raise InvalidArgumentError("cusp excursions need the modular surface")
    t_grid = _check_grid(geometric_grid() if t_grid is None else t_grid)
    if cache is None:
        cache = build_cache(dom, dom.center if p is None else p, r_max=0.5, window=WINDOW)
    gens, inv, cx, cy = cache.kernel_args()
    g0 = _g_of(u0)
    dmax, ok = _kernels.cusp_scan(g0, gens, inv, cx, cy, cache.qx, cache.qy, t_grid, WINDOW, dom.word_cap)
    if not ok:
        raise ReductionFailure("orbit reduction exceeded the word cap", complex(tangent.base_point(g0)), [])
    with np.errstate(divide="ignore"):
        stat = dmax / np.log(t_grid)
    return CuspCurve(t_grid, dmax, stat)
