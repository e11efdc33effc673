"""Lifts of a target vector near the fundamental domain."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from loglaw.errors import InvalidArgumentError
from loglaw.hyperbolic import mobius, tangent
from loglaw.hyperbolic.domains import BOLZA, MODULAR, FuchsianDomain


@dataclass(frozen=True)
class TranslateCache:
    """Translates gamma*p of a target vector p = (z, theta).

    Bolza: every translate within ``reach`` of the octagon centre i, sorted
    by that distance (``reach`` = circumradius + window + r_max covers every
    lift an orbit window can approach).  Modular: translates inside the box
    an orbit window can reach while below height ``y_skip``; windows starting
    higher cannot come within r_max of any lift.
    """

    domain: FuchsianDomain
    p: complex
    theta: float
    r_max: float
    window: float
    qx: np.ndarray
    qy: np.ndarray
    qth: np.ndarray
    qd: np.ndarray
    y_skip: float

    def __len__(self):
        return len(self.qx)

    @property
    def points(self):
        return self.qx + 1j * self.qy

    def kernel_args(self):
        dom = self.domain
        c = dom.neighbour_centers if dom.variant == BOLZA else np.zeros(1, dtype=complex)
        return (np.ascontiguousarray(dom.generators), np.ascontiguousarray(dom.inverse_index, dtype=np.int64),
                np.ascontiguousarray(c.real), np.ascontiguousarray(c.imag))


def _bolza_translates(dom: FuchsianDomain, gp: np.ndarray, reach: float):
    """Group elements gamma with d(gamma p, i) < reach, by breadth-first
    search over words in the side pairings (each tile lies within the
    circumradius of its centre, so the search region is padded by 2R)."""
    R = dom.bounding_radius
    pad = reach + 2 * R
    seen = {}
    frontier = [np.eye(2)]

    def key(m):
        c = mobius.apply(m, 1j)
        return (round(c.real, 7), round(c.imag, 7))

    seen[key(np.eye(2))] = np.eye(2)
    while frontier:
        nxt = []
        for m in frontier:
            for gk in dom.generators:
                h = mobius.normalize(m @ gk)
                k = key(h)
                if k in seen:
                    continue
                if mobius.hyp_distance(mobius.apply(h, 1j), 1j) > pad:
                    continue
                seen[k] = h
                nxt.append(h)
        frontier = nxt
    elems = np.array(list(seen.values()))
    lifts = elems @ gp
    z = tangent.base_point(lifts)
    d = mobius.hyp_distance(z, 1j)
    keep = d < reach
    return lifts[keep], d[keep]


def _modular_translates(gp: np.ndarray, y_min: float, x_max: float):
    """All gamma p with Im >= y_min and |Re| <= x_max (gamma in PSL(2,Z))."""
    p = complex(tangent.base_point(gp))
    out = []
    c = 0
    # |cp + d| >= c Im p, so larger c cannot reach height y_min
    while c == 0 or p.imag / (c * p.imag) ** 2 >= y_min:
        d_lo = math.floor(-c * p.real - math.sqrt(p.imag / y_min)) - 1
        d_hi = math.ceil(-c * p.real + math.sqrt(p.imag / y_min)) + 1
        for d in range(d_lo, d_hi + 1):
            if c == 0 and d != 1:
                continue
            if math.gcd(c, d) != 1:
                continue
            if abs(c * p + d) ** 2 > p.imag / y_min:
                continue
            # complete (c, d) to a matrix of determinant 1
            if c == 0:
                a, b = 1, 0
            else:
                a, b = _bezout(d, c)
            gamma = np.array([[a, -b], [c, d]], dtype=float)
            q = complex(mobius.apply(gamma, p))
            n_lo = math.ceil(-x_max - q.real)
            n_hi = math.floor(x_max - q.real)
            for n in range(n_lo, n_hi + 1):
                out.append(np.array([[1.0, n], [0.0, 1.0]]) @ gamma @ gp)
        c += 1
    return np.array(out)


def _bezout(d, c):
    """(a, b) with a*d + b*c = 1."""
    old_r, r = d, c
    old_s, s = 1, 0
    old_t, t = 0, 1
    while r:
        qt = old_r // r
        old_r, r = r, old_r - qt * r
        old_s, s = s, old_s - qt * s
        old_t, t = t, old_t - qt * t
    if old_r == -1:
        old_s, old_t = -old_s, -old_t
    return old_s, old_t


def build_cache(dom: FuchsianDomain, p: complex, theta: float = math.pi / 2, r_max: float = 0.5,
                window: float = 1.0, extra_reach: float = 0.0) -> TranslateCache:
    """Translate cache for target vector (p, theta); ``extra_reach`` widens it
    beyond r_max (the excursion scan needs lifts up to the surface diameter)."""
    p = complex(p)
    if p.imag <= 0:
        raise InvalidArgumentError("target point must lie in the upper half-plane")
    if r_max <= 0:
        raise InvalidArgumentError("r_max must be positive")
    gp, _ = dom.reduce_matrix(tangent.from_point(p, theta))
    reach = r_max + window + extra_reach
    if dom.variant == BOLZA:
        lifts, d = _bolza_translates(dom, gp, dom.bounding_radius + reach)
        order = np.argsort(d, kind="stable")
        lifts, d = lifts[order], d[order]
        y_skip = math.inf
    else:
        pr = complex(tangent.base_point(gp))
        y_skip = pr.imag * math.exp(reach)
        y_min = (math.sqrt(3) / 2) * math.exp(-reach)
        x_max = 0.5 + y_skip * math.sinh(reach)
        lifts = _modular_translates(gp, y_min, x_max)
        z = tangent.base_point(lifts)
        d = mobius.hyp_distance(z, 1j)
    z = tangent.base_point(lifts)
    th = tangent.direction(lifts)
    return TranslateCache(dom, complex(tangent.base_point(gp)), float(tangent.direction(gp)), float(r_max),
                          float(window), np.ascontiguousarray(z.real), np.ascontiguousarray(z.imag),
                          np.ascontiguousarray(th), np.ascontiguousarray(d), float(y_skip))
