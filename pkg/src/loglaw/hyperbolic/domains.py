"""Fundamental domains of the modular group and of the Bolza surface group."""

from __future__ import annotations

import math
from functools import cached_property

import numpy as np

from loglaw.errors import InvalidArgumentError, ReductionFailure, SamplingFailure
from loglaw.hyperbolic import mobius

MODULAR = "modular"
BOLZA = "bolza"

# regular octagon, interior angle pi/4
BOLZA_INRADIUS = math.acosh(1 / math.tan(math.pi / 8))
BOLZA_CIRCUMRADIUS = math.acosh(1 / math.tan(math.pi / 8) ** 2)


def _disk_rotation(angle):
    return np.array([[np.exp(0.5j * angle), 0], [0, np.exp(-0.5j * angle)]])


def _disk_translation(length):
    # moves 0 to tanh(length/2) along the positive real axis
    return np.array([[math.cosh(length / 2), math.sinh(length / 2)],
                     [math.sinh(length / 2), math.cosh(length / 2)]], dtype=complex)


def bolza_generators() -> np.ndarray:
    """Side pairings g_k, k = 0..7, translating the octagon centre by twice
    the inradius in direction k*pi/4; g_{k+4} = g_k^{-1}."""
    out = []
    for k in range(8):
        R = _disk_rotation(k * math.pi / 4)
        m = R @ _disk_translation(2 * BOLZA_INRADIUS) @ np.linalg.inv(R)
        out.append(mobius.disk_to_half_plane(m))
    return np.array(out)


def bolza_vertices() -> np.ndarray:
    """Octagon vertices in the half-plane, vertex j at disk angle (2j+1)pi/8."""
    rad = math.tanh(BOLZA_CIRCUMRADIUS / 2)
    ang = (2 * np.arange(8) + 1) * np.pi / 8
    return mobius.from_disk(rad * np.exp(1j * ang))


class FuchsianDomain:
    """Fundamental domain with its side-pairing generators.

    ``generators[k]`` are 2x2 real matrices and ``inverse_index[k]`` is the
    index of their inverse.  Reduction words list generator indices in the
    order they are applied on the left.
    """

    def __init__(self, variant: str, word_cap: int = 10_000):
        if variant not in (MODULAR, BOLZA):
            raise InvalidArgumentError(f"unknown domain variant {variant!r}")
        self.variant = variant
        self.word_cap = int(word_cap)
        if variant == MODULAR:
            T = np.array([[1.0, 1.0], [0.0, 1.0]])
            S = np.array([[0.0, -1.0], [1.0, 0.0]])
            self.generators = np.array([T, mobius.inverse(T), S])
            self.inverse_index = np.array([1, 0, 2])
            self.generator_names = ("T", "T^-1", "S")
            self.area = math.pi / 3
            self.center = 2j
        else:
            self.generators = bolza_generators()
            self.inverse_index = (np.arange(8) + 4) % 8
            self.generator_names = tuple(f"g{k}" for k in range(8))
            self.area = 4 * math.pi
            self.center = 1j
        self.generators.setflags(write=False)

    def __repr__(self):
        return f"FuchsianDomain({self.variant!r})"

    @property
    def code(self) -> int:
        return 0 if self.variant == MODULAR else 1

    @cached_property
    def neighbour_centers(self) -> np.ndarray:
        """g_k(i) for the Dirichlet test (Bolza only)."""
        return mobius.apply(self.generators, 1j)

    @property
    def bounding_radius(self) -> float:
        if self.variant == BOLZA:
            return BOLZA_CIRCUMRADIUS
        return math.inf

    # membership
    def contains(self, z, tol: float = 1e-9):
        z = np.asarray(z, dtype=complex)
        if self.variant == MODULAR:
            return (np.abs(z.real) <= 0.5 + tol) & (np.abs(z) >= 1 - tol)
        # Dirichlet cell of i: no neighbour centre strictly closer
        own = np.abs(z - 1j) ** 2
        c = self.neighbour_centers
        other = np.abs(z[..., None] - c) ** 2 / c.imag
        return np.all(own[..., None] <= other * (1 + tol) + tol, axis=-1)

    def _reduction_step(self, z) -> int | None:
        """Generator index that moves z closer to the domain, None if inside."""
        if self.variant == MODULAR:
            if z.real > 0.5:
                return 1
            if z.real < -0.5:
                return 0
            if abs(z) < 1.0:
                return 2
            return None
        c = self.neighbour_centers
        own = abs(z - 1j) ** 2
        other = np.abs(z - c) ** 2 / c.imag
        k = int(np.argmin(other))
        if other[k] < own * (1 - 1e-13):
            return int(self.inverse_index[k])
        return None

    def reduce_matrix(self, g):
        """Left-multiply g by generators until its base point lies in the
        domain; returns (reduced g, word)."""
        g = mobius.normalize(np.array(g, dtype=float))
        word = []
        while True:
            z = complex(mobius.apply(g, 1j))
            k = self._reduction_step(z)
            if k is None:
                return g, word
            if self.variant == MODULAR and k in (0, 1):
                # collapse a run of translations into one step
                n = int(math.floor(z.real + 0.5))
                steps = abs(n)
                word.extend([1 if n > 0 else 0] * steps)
                g = np.array([[1.0, -float(n)], [0.0, 1.0]]) @ g
            else:
                word.append(k)
                g = self.generators[k] @ g
            if len(word) > self.word_cap:
                raise ReductionFailure("word-length cap exceeded", z, word)
            g = mobius.normalize(g)

    def word_matrix(self, word) -> np.ndarray:
        """Product W = w_k ... w_1 of a reduction word."""
        m = np.eye(2)
        for k in word:
            m = self.generators[k] @ m
        return m

    def reduce_point(self, z):
        g = np.array([[math.sqrt(z.imag), z.real / math.sqrt(z.imag)], [0.0, 1 / math.sqrt(z.imag)]])
        g, word = self.reduce_matrix(g)
        return complex(mobius.apply(g, 1j)), word

    # relations
    def relation_residuals(self) -> dict:
        G = self.generators
        eye = np.eye(2)
        if self.variant == MODULAR:
            T, S = G[0], G[2]
            rels = {"S^2": S @ S, "(ST)^3": np.linalg.matrix_power(S @ T, 3)}
        else:
            a = G
            inv = lambda k: G[(k + 4) % 8]
            prod = a[0] @ inv(1) @ a[2] @ inv(3) @ inv(0) @ a[1] @ inv(2) @ a[3]
            rels = {"surface": prod}
            for k in range(8):
                rels[f"g{k}*g{(k + 4) % 8}"] = a[k] @ inv(k)
        return {name: float(min(np.max(np.abs(m - eye)), np.max(np.abs(m + eye)))) for name, m in rels.items()}

    def side_pairing_residual(self) -> float:
        """Bolza: g_k must carry the two vertices of side k+4 onto those of side k."""
        if self.variant != BOLZA:
            return 0.0
        V = bolza_vertices()
        worst = 0.0
        for k in range(8):
            # side k faces direction k*pi/4, between vertices k-1 and k
            src = V[[(k + 3) % 8, (k + 4) % 8]]
            dst = V[[(k - 1) % 8, k % 8]]
            img = mobius.apply(self.generators[k], src)
            err = min(max(abs(img[0] - dst[0]), abs(img[1] - dst[1])),
                      max(abs(img[0] - dst[1]), abs(img[1] - dst[0])))
            worst = max(worst, err)
        return worst

    # sampling of the base point with density dx dy / y^2
    def sample_base(self, gen: np.random.Generator, n: int, max_attempts: int | None = None):
        """n base points, uniform in hyperbolic area over the domain.

        Returns ``(points, acceptance_rate)``; the rate counts every proposal
        of every batch, so ``rate * proposal_measure`` estimates the area.
        """
        if max_attempts is None:
            max_attempts = 100 * n + 1000
        out = np.empty(n, dtype=complex)
        filled = attempts = accepted = 0
        while filled < n:
            if attempts >= max_attempts:
                raise SamplingFailure(f"{self.variant} base sampler exceeded {max_attempts} proposals",
                                      accepted, attempts)
            m = min(max(2 * (n - filled), 64), max_attempts - attempts)
            z = self._propose(gen, m)
            attempts += m
            z = z[self.contains(z, tol=0.0)]
            accepted += len(z)
            z = z[: n - filled]
            out[filled:filled + len(z)] = z
            filled += len(z)
        return out, accepted / attempts

    def _propose(self, gen, m):
        if self.variant == MODULAR:
            x = gen.random(m) - 0.5
            y = (math.sqrt(3) / 2) / (1.0 - gen.random(m))
            return x + 1j * y
        return sample_disk(gen, m, 1j, BOLZA_CIRCUMRADIUS)

    @property
    def proposal_measure(self) -> float:
        """Hyperbolic area of the proposal region of ``sample_base``."""
        if self.variant == MODULAR:
            return 2 / math.sqrt(3)
        return disk_area(BOLZA_CIRCUMRADIUS)


def disk_area(radius):
    return 2 * math.pi * (math.cosh(radius) - 1)


def sample_disk(gen, m, center, radius):
    """Uniform (hyperbolic area) samples in the disk of given radius about a
    point of the half-plane."""
    r = np.arccosh(1 + gen.random(m) * (math.cosh(radius) - 1))
    psi = 2 * np.pi * gen.random(m)
    zeta = np.tanh(r / 2) * np.exp(1j * psi)
    w = mobius.from_disk(zeta)
    return center.real + center.imag * w
