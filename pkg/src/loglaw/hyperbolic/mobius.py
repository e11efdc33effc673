"""PSL(2,R) algebra on the upper half-plane."""

from __future__ import annotations

import numpy as np

from loglaw.errors import InvalidArgumentError

IDENTITY = np.eye(2)


def normalize(g) -> np.ndarray:
    """Rescale to determinant 1 (projective: g and -g are the same map)."""
    g = np.asarray(g, dtype=float)
    det = g[..., 0, 0] * g[..., 1, 1] - g[..., 0, 1] * g[..., 1, 0]
    if np.any(det <= 0):
        raise InvalidArgumentError("orientation-reversing or singular matrix")
    return g / np.sqrt(det)[..., None, None]


def inverse(g) -> np.ndarray:
    g = np.asarray(g, dtype=float)
    out = np.empty_like(g)
    out[..., 0, 0] = g[..., 1, 1]
    out[..., 1, 1] = g[..., 0, 0]
    out[..., 0, 1] = -g[..., 0, 1]
    out[..., 1, 0] = -g[..., 1, 0]
    return out


def apply(g, z):
    g = np.asarray(g, dtype=float)
    return (g[..., 0, 0] * z + g[..., 0, 1]) / (g[..., 1, 0] * z + g[..., 1, 1])


def projective_close(g, h, tol=1e-9) -> bool:
    g, h = np.asarray(g), np.asarray(h)
    return bool(min(np.max(np.abs(g - h)), np.max(np.abs(g + h))) < tol)


class MobiusTransform:
    """z -> (az+b)/(cz+d) with ad-bc = 1."""

    __slots__ = ("matrix",)

    def __init__(self, a, b=None, c=None, d=None):
        m = np.array([[a, b], [c, d]], dtype=float) if b is not None else np.array(a, dtype=float)
        m = normalize(m)
        m.setflags(write=False)
        self.matrix = m

    a = property(lambda self: self.matrix[0, 0])
    b = property(lambda self: self.matrix[0, 1])
    c = property(lambda self: self.matrix[1, 0])
    d = property(lambda self: self.matrix[1, 1])

    def __matmul__(self, other):
        return MobiusTransform(self.matrix @ other.matrix)

    def __call__(self, z):
        return apply(self.matrix, z)

    def inverse(self):
        return MobiusTransform(inverse(self.matrix))

    def __eq__(self, other):
        return isinstance(other, MobiusTransform) and projective_close(self.matrix, other.matrix, 1e-12)

    def __hash__(self):
        return id(self)

    def __repr__(self):
        return f"MobiusTransform({self.a:.6g}, {self.b:.6g}, {self.c:.6g}, {self.d:.6g})"


def hyp_distance(z, w):
    """Hyperbolic distance in the upper half-plane."""
    z = np.asarray(z, dtype=complex)
    w = np.asarray(w, dtype=complex)
    if np.any(z.imag <= 0) or np.any(w.imag <= 0):
        raise InvalidArgumentError("points must lie in the upper half-plane")
    # 2 asinh(|z-w| / (2 sqrt(y y'))) is the cancellation-free form of arccosh
    return 2.0 * np.arcsinh(np.abs(z - w) / (2.0 * np.sqrt(z.imag * w.imag)))


# Cayley transform between the upper half-plane and the unit disk
def to_disk(z):
    z = np.asarray(z, dtype=complex)
    return (z - 1j) / (z + 1j)


def from_disk(zeta):
    zeta = np.asarray(zeta, dtype=complex)
    return 1j * (1 + zeta) / (1 - zeta)


def disk_to_half_plane(m) -> np.ndarray:
    """Conjugate an SU(1,1) disk automorphism to a real SL(2) matrix."""
    C = np.array([[1, -1j], [1, 1j]])
    Cinv = np.array([[1j, 1j], [-1, 1]]) / (2j)
    h = Cinv @ np.asarray(m, dtype=complex) @ C
    h = h / np.sqrt(np.linalg.det(h))
    if np.max(np.abs(h.imag)) > np.max(np.abs(h.real)):
        h = h * 1j
    if np.max(np.abs(h.imag)) > 1e-12:
        raise InvalidArgumentError("disk map is not conjugate to a real matrix")
    return normalize(h.real)


def direction_toward(a, b):
    """Angle (half-plane convention) of the unit vector at a pointing along
    the geodesic to b."""
    a = np.asarray(a, dtype=complex)
    b = np.asarray(b, dtype=complex)
    w = (b - a.real) / a.imag
    zeta = (w - 1j) / (w + 1j)
    return np.angle(zeta) + np.pi / 2
