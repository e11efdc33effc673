"""Geodesic flow on the unit tangent bundle of a quotient surface."""

from __future__ import annotations

import math

import numpy as np

from loglaw.core import FLOW, SystemModel, TargetFamily
from loglaw.errors import InvalidArgumentError, ReductionFailure
from loglaw.hyperbolic import _kernels, mobius, tangent
from loglaw.hyperbolic.cache import TranslateCache, build_cache
from loglaw.hyperbolic.domains import FuchsianDomain
from loglaw.hyperbolic.tangent import UnitTangent
from loglaw.rng import RngStream

WINDOW = 1.0
SASAKI_LIPSCHITZ = 1.5


def reduce_to_domain(dom: FuchsianDomain, u: UnitTangent):
    """(reduced vector, word); ``dom.word_matrix(word)`` maps u to it."""
    g, word = dom.reduce_matrix(u.g)
    return UnitTangent(g), word


def liouville_sample(dom: FuchsianDomain, rng: RngStream, n: int | None = None, max_attempts: int | None = None):
    """Liouville-distributed unit vectors on the quotient (area x uniform
    angle), reduced to the fundamental domain.  Returns one UnitTangent, or
    an (n, 2, 2) array of group elements when n is given."""
    gen = rng.generator()
    m = 1 if n is None else int(n)
    z, _ = dom.sample_base(gen, m, max_attempts)
    th = 2 * np.pi * gen.random(m)
    g = tangent.from_point(z, th)
    if n is None:
        return UnitTangent(g[0])
    return g


class GeodesicFlow(SystemModel):
    kind = FLOW
    dimension = 3
    velocity_bound = 1.0

    def __init__(self, domain: FuchsianDomain | str = "bolza"):
        self.domain = FuchsianDomain(domain) if isinstance(domain, str) else domain

    @property
    def name(self):
        return self.domain.variant

    @property
    def parameters(self):
        return {"domain": self.domain.variant, "area": self.domain.area}

    def coerce(self, x):
        if isinstance(x, UnitTangent):
            return x.g.copy()
        return np.array(x, dtype=float, copy=True)

    def wrap(self, out, like):
        return UnitTangent(out) if isinstance(like, UnitTangent) else out

    def _advance(self, x, dt):
        g = np.asarray(x, dtype=float)
        flat = g.reshape(-1, 2, 2)
        out = np.empty_like(flat)
        for i, m in enumerate(flat):
            # long times go window by window so drift is removed by reduction
            h = m.copy()
            left = float(dt)
            while left > 0:
                w = min(WINDOW, left)
                h = h @ tangent.flow_matrix(w)
                h, _ = self.domain.reduce_matrix(h)
                left -= w
            out[i] = h
        return out.reshape(g.shape)

    def sample(self, rng, n):
        return liouville_sample(self.domain, rng, n)

    def distance(self, x, y):
        return mobius.hyp_distance(tangent.base_point(x), tangent.base_point(y))

    def sample_states(self, rngs):
        """One Liouville sample per stream (trajectory-keyed)."""
        return np.array([liouville_sample(self.domain, r, 1)[0] for r in rngs])


def target_vector(dom: FuchsianDomain, p=None, theta: float = math.pi / 2):
    p = dom.center if p is None else complex(p)
    g, _ = dom.reduce_matrix(tangent.from_point(p, theta))
    return UnitTangent(g)


def base_ball(dom: FuchsianDomain, p=None, r_max: float = 0.5) -> TargetFamily:
    """Preimage of the base ball U_r(p); level = quotient distance to p."""
    pv = target_vector(dom, p)
    cache = build_cache(dom, pv.z, pv.theta, r_max=r_max, window=WINDOW)

    def level(g):
        z = tangent.base_point(np.asarray(g))
        return np.min(mobius.hyp_distance(np.asarray(z)[..., None], cache.points), axis=-1)

    return TargetFamily(level, "base_ball", pv.z, 1.0, label=f"{dom.variant}-ball",
                        extra={"cache": cache, "r_max": r_max})


def sasaki_ball(dom: FuchsianDomain, p=None, theta: float = math.pi / 2, r_max: float = 0.5) -> TargetFamily:
    pv = target_vector(dom, p, theta)
    cache = build_cache(dom, pv.z, pv.theta, r_max=r_max, window=WINDOW)

    def level(g):
        g = np.asarray(g)
        z = np.asarray(tangent.base_point(g))[..., None]
        th = np.asarray(tangent.direction(g))[..., None]
        d = mobius.hyp_distance(z, cache.points)
        ang = tangent.transported_angle_gap(np.broadcast_to(cache.points, d.shape), cache.qth, z, th)
        return np.min(np.hypot(d, ang), axis=-1)

    return TargetFamily(level, "sasaki_ball", (pv.z, pv.theta), 1.0, label=f"{dom.variant}-sasaki",
                        extra={"cache": cache, "r_max": r_max})


def scan_entry(dom: FuchsianDomain, g, cache: TranslateCache, radii, t_max, kind="base_ball"):
    """Entry times of one orbit (g of shape (2, 2)) or of a batch of orbits
    (shape (n, 2, 2)) into targets of several radii.  Returns (taus,
    censored) with taus = inf where censored."""
    radii = np.asarray(radii, dtype=float)
    order = np.argsort(-radii, kind="stable")
    r = np.ascontiguousarray(radii[order])
    tm = np.ascontiguousarray(np.broadcast_to(np.asarray(t_max, dtype=float), radii.shape)[order])
    if r[0] > cache.r_max:
        raise InvalidArgumentError(f"radius {r[0]} exceeds the cache budget {cache.r_max}")
    gens, inv, cx, cy = cache.kernel_args()
    g = np.asarray(g, dtype=float)
    single = g.ndim == 2
    G = np.ascontiguousarray(g.reshape(-1, 2, 2))
    if kind == "base_ball":
        taus, status = _kernels.ball_scan_batch(G, dom.code, gens, inv, cx, cy, cache.qx, cache.qy, cache.qd,
                                                r, tm, WINDOW, cache.y_skip, dom.word_cap)
    elif kind == "sasaki_ball":
        taus, status = _kernels.sasaki_scan_batch(G, dom.code, gens, inv, cx, cy, cache.qx, cache.qy, cache.qth,
                                                  cache.qd, r, tm, WINDOW, cache.y_skip, dom.word_cap,
                                                  SASAKI_LIPSCHITZ)
    else:
        raise InvalidArgumentError(f"unsupported hyperbolic target kind {kind!r}")
    if np.any(status == 2):
        bad = int(np.argmax(np.any(status == 2, axis=1)))
        raise ReductionFailure("orbit reduction exceeded the word cap", complex(tangent.base_point(G[bad])), [])
    out_t = np.empty_like(taus)
    out_c = np.empty(taus.shape, dtype=bool)
    out_t[:, order] = taus
    out_c[:, order] = status == 1
    if single:
        return out_t[0], out_c[0]
    return out_t, out_c


def ball_entry_scan(dom: FuchsianDomain, u, cache: TranslateCache, r: float, t_max: float):
    """First time the orbit of u enters the base ball of radius r about the
    cached target; None on timeout."""
    g = u.g if isinstance(u, UnitTangent) else u
    taus, cens = scan_entry(dom, g, cache, [r], [t_max])
    return None if cens[0] else float(taus[0])
