"""Unit tangent vectors of H^2 as group elements.

g in PSL(2,R) stands for the vector g_*(i, up).  Its base point is g(i) and
its direction is pi/2 - 2 arg(ci + d).  The geodesic flow is right
multiplication by diag(e^{t/2}, e^{-t/2}).
"""

from __future__ import annotations

import numpy as np

from loglaw.errors import InvalidArgumentError
from loglaw.hyperbolic import mobius

TWO_PI = 2 * np.pi


def base_point(g):
    g = np.asarray(g, dtype=float)
    return mobius.apply(g, 1j)


def direction(g):
    g = np.asarray(g, dtype=float)
    return (np.pi / 2 - 2 * np.angle(g[..., 1, 0] * 1j + g[..., 1, 1])) % TWO_PI


def from_point(z, theta) -> np.ndarray:
    """Group element(s) for the unit vector at z with angle theta."""
    z = np.asarray(z, dtype=complex)
    if np.any(z.imag <= 0):
        raise InvalidArgumentError("base point must lie in the upper half-plane")
    phi = (np.asarray(theta, dtype=float) - np.pi / 2) / 2
    sy = np.sqrt(z.imag)
    c, s = np.cos(phi), np.sin(phi)
    x = z.real
    g = np.empty(np.broadcast(z, phi).shape + (2, 2))
    # [[sy, x/sy], [0, 1/sy]] @ [[c, s], [-s, c]]
    g[..., 0, 0] = sy * c - x / sy * s
    g[..., 0, 1] = sy * s + x / sy * c
    g[..., 1, 0] = -s / sy
    g[..., 1, 1] = c / sy
    return g


def flow_matrix(t):
    t = np.asarray(t, dtype=float)
    out = np.zeros(t.shape + (2, 2))
    out[..., 0, 0] = np.exp(t / 2)
    out[..., 1, 1] = np.exp(-t / 2)
    return out


class UnitTangent:
    """Immutable unit tangent vector; (z, theta) is cached on construction."""

    __slots__ = ("g", "z", "theta")

    def __init__(self, g):
        g = mobius.normalize(np.array(g, dtype=float))
        if g.shape != (2, 2):
            raise InvalidArgumentError("UnitTangent wraps a single 2x2 matrix")
        g.setflags(write=False)
        self.g = g
        self.z = complex(base_point(g))
        self.theta = float(direction(g))

    @classmethod
    def at(cls, z, theta):
        return cls(from_point(complex(z), float(theta)))

    def projection_error(self) -> float:
        dz = abs(complex(base_point(self.g)) - self.z)
        dth = abs((float(direction(self.g)) - self.theta + np.pi) % TWO_PI - np.pi)
        return max(dz, dth)

    def __repr__(self):
        return f"UnitTangent(z={self.z:.6g}, theta={self.theta:.6g})"


def geodesic_advance(u: UnitTangent, t: float) -> UnitTangent:
    if not np.isfinite(t):
        raise InvalidArgumentError("t must be finite")
    return UnitTangent(u.g @ flow_matrix(t))


def hyp_distance(z, w):
    return mobius.hyp_distance(z, w)


def transported_angle_gap(z1, th1, z2, th2):
    """Signed angle between (z2, th2) and (z1, th1) carried to z2 along the
    connecting geodesic, wrapped to [-pi, pi)."""
    z1 = np.asarray(z1, dtype=complex)
    z2 = np.asarray(z2, dtype=complex)
    same = np.abs(z1 - z2) <= 1e-300 + 1e-15 * np.abs(z1)
    # transport preserves the angle to the geodesic's tangent
    a12 = mobius.direction_toward(z1, np.where(same, z1 + 1j * z1.imag, z2))
    a21 = mobius.direction_toward(np.where(same, z1 + 1j * z1.imag, z2), z1) + np.pi
    moved = np.where(same, th1, th1 - a12 + a21)
    return (np.asarray(th2) - moved + np.pi) % TWO_PI - np.pi


def sasaki_distance(u, v) -> float:
    """sqrt(d(x,y)^2 + angle^2) with the angle measured after parallel
    transport along the connecting geodesic (lifted vectors, no quotient)."""
    d = float(mobius.hyp_distance(u.z, v.z))
    ang = float(transported_angle_gap(u.z, u.theta, v.z, v.theta))
    return float(np.hypot(d, ang))
