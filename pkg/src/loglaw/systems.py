"""Catalogue of torus maps, circle rotations, linear torus flows and
suspension flows.

Map orbits used by the ensemble engines run on exact 64-bit fixed-point
states: the cat map and rotations act on (Z / 2**64)^d, where the step is an
exact modular matrix product, and the doubling map shifts a window over an
infinite random binary expansion.  Float coordinates are only produced for
target tests.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache

import numpy as np

from loglaw import arith
from loglaw.core import FLOW, MAP, SystemModel, torus_distance
from loglaw.errors import InvalidArgumentError
from loglaw.rng import RngStream

CAT_MATRIX = ((2, 1), (1, 1))
_U64 = np.uint64
_MASK = (1 << 64) - 1


def u64_from_float(x) -> np.ndarray:
    x = np.asarray(x, dtype=float) % 1.0
    return np.floor(x * 2.0**64).astype(np.uint64)


def float_from_u64(u) -> np.ndarray:
    return (np.asarray(u, dtype=np.uint64) >> _U64(11)).astype(np.float64) * 2.0**-53


@lru_cache(maxsize=None)
def _cat_powers(count: int) -> np.ndarray:
    """M^0 .. M^(count-1) reduced mod 2**64, shape (count, 2, 2)."""
    out = np.empty((count, 2, 2), dtype=np.uint64)
    a, b, c, d = 1, 0, 0, 1
    for j in range(count):
        out[j] = ((a, b), (c, d))
        a, b, c, d = (2 * a + c) & _MASK, (2 * b + d) & _MASK, (a + c) & _MASK, (b + d) & _MASK
    return out


def _cat_power(n: int) -> tuple[int, int, int, int]:
    result = (1, 0, 0, 1)
    base = (2, 1, 1, 1)
    while n:
        if n & 1:
            a, b, c, d = result
            e, f, g, h = base
            result = ((a * e + b * g) & _MASK, (a * f + b * h) & _MASK,
                      (c * e + d * g) & _MASK, (c * f + d * h) & _MASK)
        e, f, g, h = base
        base = ((e * e + f * g) & _MASK, (e * f + f * h) & _MASK,
                (g * e + h * g) & _MASK, (g * f + h * h) & _MASK)
        n >>= 1
    return result


class MapState:
    """Exact ensemble state for the block engine; a thin record, mutated only
    by the owning model's ``block``."""

    def __init__(self, arrays, gens=None, buffer=None, pos=0):
        self.arrays = arrays
        self.gens = gens
        self.buffer = buffer
        self.pos = pos

    def __len__(self):
        return len(self.arrays[0])


class MapSystem(SystemModel):
    kind = MAP
    block_size = 256

    def state_from_points(self, x0, gens=None) -> MapState:
        raise NotImplementedError

    def random_state(self, gens) -> MapState:
        raise NotImplementedError

    def block(self, state: MapState, count: int) -> np.ndarray:
        """Coordinates at times n0, ..., n0+count-1 (shape (count, N, dim));
        advances ``state`` by ``count`` steps."""
        raise NotImplementedError

    def take(self, state: MapState, idx) -> MapState:
        arrays = tuple(a[idx] for a in state.arrays)
        gens = [state.gens[i] for i in np.atleast_1d(np.arange(len(state))[idx])] if state.gens else state.gens
        buffer = state.buffer[idx] if state.buffer is not None else None
        return MapState(arrays, gens, buffer, state.pos)

    def sample(self, rng: RngStream, n: int) -> np.ndarray:
        gen = rng.generator()
        st = self.random_state([gen] * 1, n=n)
        return self.block(st, 1)[0]

    def distance(self, x, y):
        return torus_distance(x, y)


@dataclass(frozen=True)
class TorusMap(MapSystem):
    """Hyperbolic toral automorphism (``cat``) or the doubling map."""

    variant: str = "cat"

    def __post_init__(self):
        if self.variant not in ("cat", "doubling"):
            raise InvalidArgumentError(f"unknown torus map variant {self.variant!r}")

    @property
    def name(self):
        return self.variant

    @property
    def dimension(self):
        return 2 if self.variant == "cat" else 1

    @property
    def velocity_bound(self):
        # Lipschitz constant of one step in the flat metric
        return (3 + math.sqrt(5)) / 2 if self.variant == "cat" else 2.0

    @property
    def matrix(self):
        return CAT_MATRIX if self.variant == "cat" else ((2,),)

    @property
    def parameters(self):
        return {"variant": self.variant}

    def step(self, x):
        x = np.asarray(x, dtype=float)
        if self.variant == "cat":
            out = np.stack([(2 * x[..., 0] + x[..., 1]) % 1.0, (x[..., 0] + x[..., 1]) % 1.0], axis=-1)
        else:
            out = (2 * x) % 1.0
        return out

    def _advance(self, x, dt):
        if self.variant == "cat":
            a, b, c, d = _cat_power(int(dt))
            u = np.atleast_1d(u64_from_float(x[..., 0]))
            v = np.atleast_1d(u64_from_float(x[..., 1]))
            nu = u * _U64(a) + v * _U64(b)
            nv = u * _U64(c) + v * _U64(d)
            out = np.stack([float_from_u64(nu), float_from_u64(nv)], axis=-1)
            return out.reshape(x.shape)
        out = x
        for _ in range(int(dt)):
            out = (2 * out) % 1.0
        return out

    # block engine
    def state_from_points(self, x0, gens=None):
        x0 = np.atleast_2d(np.asarray(x0, dtype=float))
        if self.variant == "cat":
            return MapState((u64_from_float(x0[:, 0]), u64_from_float(x0[:, 1])))
        return MapState((u64_from_float(x0[:, 0]),), gens=gens, buffer=None)

    def random_state(self, gens, n=None):
        if n is not None:
            # n draws from a single generator (sampling helper)
            g = gens[0]
            if self.variant == "cat":
                return MapState((g.integers(0, 2**64, size=n, dtype=np.uint64),
                                 g.integers(0, 2**64, size=n, dtype=np.uint64)))
            return MapState((g.integers(0, 2**64, size=n, dtype=np.uint64),), gens=None)
        if self.variant == "cat":
            w = np.array([g.integers(0, 2**64, size=2, dtype=np.uint64) for g in gens]).reshape(-1, 2)
            return MapState((w[:, 0].copy(), w[:, 1].copy()))
        w = np.array([g.integers(0, 2**64, dtype=np.uint64) for g in gens], dtype=np.uint64)
        return MapState((w,), gens=list(gens))

    def _next_words(self, state):
        n = len(state)
        if state.gens is None:
            return np.zeros(n, dtype=np.uint64)
        if state.buffer is None or state.pos >= state.buffer.shape[1]:
            state.buffer = np.array([g.integers(0, 2**64, size=32, dtype=np.uint64) for g in state.gens],
                                    dtype=np.uint64).reshape(n, 32)
            state.pos = 0
        w = state.buffer[:, state.pos]
        state.pos += 1
        return w

    def block(self, state, count):
        if self.variant == "cat":
            P = _cat_powers(count + 1)
            u, v = state.arrays
            cu = P[:count, 0, 0, None] * u[None, :] + P[:count, 0, 1, None] * v[None, :]
            cv = P[:count, 1, 0, None] * u[None, :] + P[:count, 1, 1, None] * v[None, :]
            nu = P[count, 0, 0] * u + P[count, 0, 1] * v
            nv = P[count, 1, 0] * u + P[count, 1, 1] * v
            state.arrays = (nu, nv)
            return np.stack([float_from_u64(cu), float_from_u64(cv)], axis=-1)
        # doubling: shift register over the binary expansion
        if count % 64:
            raise InvalidArgumentError("doubling-map blocks must be multiples of 64 steps")
        j = np.arange(64, dtype=np.uint64)[:, None]
        pieces = []
        (w,) = state.arrays
        for _ in range(count // 64):
            nxt = self._next_words(state)
            piece = (w[None, :] << j) | np.where(j == 0, _U64(0), nxt[None, :] >> (_U64(64) - j))
            pieces.append(piece)
            w = nxt
        state.arrays = (w,)
        return float_from_u64(np.concatenate(pieces, axis=0))[..., None]

    def sample(self, rng, n):
        st = self.random_state([rng.generator()], n=n)
        if self.variant == "cat":
            return np.stack([float_from_u64(st.arrays[0]), float_from_u64(st.arrays[1])], axis=-1)
        return float_from_u64(st.arrays[0])[:, None]


@dataclass(frozen=True)
class RotationSpec:
    alpha: float
    arithmetic_class: str = "custom"
    partial_quotients: tuple = ()
    denominators: tuple = ()
    alpha_u64: int = 0

    @classmethod
    def golden(cls):
        u = arith.golden_u64()
        cf = [1] * 40
        return cls((math.sqrt(5) - 1) / 2, "golden", tuple(cf),
                   tuple(q for _, q in arith.convergents(cf)), u)

    @classmethod
    def liouville(cls, q_limit: int = arith.Q_LIMIT):
        pq = arith.liouville_quotients(q_limit)
        value = arith.continued_fraction_value(pq)
        return cls(float(value), "liouville", tuple(pq),
                   tuple(q for _, q in arith.convergents(pq)), arith.to_u64(value))

    @classmethod
    def custom(cls, alpha: float):
        if not 0 < alpha < 1:
            raise InvalidArgumentError("rotation number must lie in (0, 1)")
        frac = Fraction(alpha)
        pq = arith.continued_fraction_of(frac, max_terms=40)
        return cls(float(alpha), "custom", tuple(pq),
                   tuple(q for _, q in arith.convergents(pq)), arith.to_u64(frac))

    @classmethod
    def from_class(cls, arithmetic_class: str, alpha: float | None = None):
        if arithmetic_class == "golden":
            return cls.golden()
        if arithmetic_class == "liouville":
            return cls.liouville()
        if arithmetic_class == "custom" and alpha is not None:
            return cls.custom(alpha)
        raise InvalidArgumentError(f"bad rotation class {arithmetic_class!r} / alpha {alpha!r}")


@dataclass(frozen=True)
class Rotation(MapSystem):
    spec: RotationSpec = field(default_factory=RotationSpec.golden)

    name = property(lambda self: f"rotation-{self.spec.arithmetic_class}")
    dimension = 1
    velocity_bound = 1.0

    @property
    def alpha(self):
        return self.spec.alpha

    @property
    def parameters(self):
        return {"alpha": self.spec.alpha, "arithmetic_class": self.spec.arithmetic_class}

    def step(self, x):
        return (np.asarray(x, dtype=float) + self.spec.alpha) % 1.0

    def _advance(self, x, dt):
        u = np.atleast_1d(u64_from_float(x)) + _U64((int(dt) * self.spec.alpha_u64) & _MASK)
        return float_from_u64(u).reshape(np.shape(x))

    def state_from_points(self, x0, gens=None):
        x0 = np.atleast_2d(np.asarray(x0, dtype=float))
        return MapState((u64_from_float(x0[:, 0]),))

    def random_state(self, gens, n=None):
        if n is not None:
            return MapState((gens[0].integers(0, 2**64, size=n, dtype=np.uint64),))
        return MapState((np.array([g.integers(0, 2**64, dtype=np.uint64) for g in gens], dtype=np.uint64),))

    def block(self, state, count):
        (u,) = state.arrays
        a = _U64(self.spec.alpha_u64)
        steps = np.arange(count, dtype=np.uint64) * a
        coords = u[None, :] + steps[:, None]
        state.arrays = (u + _U64((count * self.spec.alpha_u64) & _MASK),)
        return float_from_u64(coords)[..., None]

    def sample(self, rng, n):
        st = self.random_state([rng.generator()], n=n)
        return float_from_u64(st.arrays[0])[:, None]


def map_step(spec, x):
    """One exact step of a torus map or rotation, reduced to [0, 1)."""
    if isinstance(spec, (TorusMap, Rotation)):
        return spec.step(x)
    if isinstance(spec, RotationSpec):
        return Rotation(spec).step(x)
    raise InvalidArgumentError(f"not a map: {spec!r}")


@dataclass(frozen=True)
class LinearFlow(SystemModel):
    """Unit-speed straight-line flow on the 2-torus, direction (1, slope)."""

    slope: float = (math.sqrt(5) - 1) / 2
    arithmetic_class: str = "custom"

    kind = FLOW
    dimension = 2
    velocity_bound = 1.0

    @classmethod
    def from_class(cls, arithmetic_class: str, slope: float | None = None):
        if arithmetic_class in ("golden", "liouville"):
            return cls(RotationSpec.from_class(arithmetic_class).alpha, arithmetic_class)
        return cls(float(slope), "custom")

    @property
    def name(self):
        return f"linear-flow-{self.arithmetic_class}"

    @property
    def parameters(self):
        return {"slope": self.slope, "arithmetic_class": self.arithmetic_class}

    @property
    def velocity(self) -> np.ndarray:
        return np.array([1.0, self.slope]) / math.hypot(1.0, self.slope)

    def _advance(self, x, dt):
        return (x + dt * self.velocity) % 1.0

    def positions(self, x0, times) -> np.ndarray:
        times = np.asarray(times, dtype=float)
        return (np.asarray(x0, dtype=float)[None, :] + times[:, None] * self.velocity[None, :]) % 1.0

    def sample(self, rng, n):
        return rng.generator().random((n, 2))

    def distance(self, x, y):
        return torus_distance(x, y)


@dataclass(frozen=True)
class Suspension(SystemModel):
    """Suspension flow over a torus map with roof c0 + c1*cos(2*pi*x)."""

    base: TorusMap = field(default_factory=TorusMap)
    roof_c0: float = 1.0
    roof_c1: float = 0.0

    kind = FLOW
    velocity_bound = 1.0

    def __post_init__(self):
        if self.roof_c0 - abs(self.roof_c1) <= 0:
            raise InvalidArgumentError("roof must be bounded away from zero")

    @property
    def name(self):
        return f"suspension-{self.base.variant}"

    @property
    def dimension(self):
        return self.base.dimension + 1

    @property
    def roof_min(self):
        return self.roof_c0 - abs(self.roof_c1)

    @property
    def roof_max(self):
        return self.roof_c0 + abs(self.roof_c1)

    @property
    def mean_roof(self):
        # integral of the roof against Lebesgue on the base
        return self.roof_c0

    @property
    def parameters(self):
        return {"base": self.base.variant, "roof_c0": self.roof_c0, "roof_c1": self.roof_c1}

    def roof(self, base_point):
        x = np.asarray(base_point, dtype=float)
        return self.roof_c0 + self.roof_c1 * np.cos(2 * np.pi * x[..., 0])

    def _advance(self, x, dt):
        x = np.atleast_2d(x)
        out = np.empty_like(x)
        for i, row in enumerate(x):
            (b, h), _ = suspension_advance(self, (row[:-1], row[-1]), dt)
            out[i, :-1] = b
            out[i, -1] = h
        return out if out.shape[0] > 1 else out[0]

    def sample(self, rng, n):
        gen = rng.generator()
        out = np.empty((n, self.dimension))
        filled = 0
        while filled < n:
            m = 2 * (n - filled) + 8
            b = self.base.sample(rng.substream(filled), m)
            keep = gen.random(m) * self.roof_max < self.roof(b)
            b = b[keep][: n - filled]
            h = gen.random(len(b)) * self.roof(b)
            out[filled:filled + len(b), :-1] = b
            out[filled:filled + len(b), -1] = h
            filled += len(b)
        return out

    def distance(self, x, y):
        return torus_distance(np.asarray(x)[..., :-1], np.asarray(y)[..., :-1]) + np.abs(
            np.asarray(x)[..., -1] - np.asarray(y)[..., -1])


def suspension_advance(spec: Suspension, state, dt: float):
    """Flow a suspension state ``(base_point, height)`` for time ``dt``.

    Ceiling crossings are resolved exactly from the closed-form roof.  Returns
    ``((base_point, height), crossings)``.
    """
    if dt < 0:
        raise InvalidArgumentError("dt must be non-negative")
    base, h = state
    base = np.asarray(base, dtype=float)
    h = float(h)
    roof = float(spec.roof(base))
    if not 0 <= h < roof:
        raise InvalidArgumentError(f"height {h} outside [0, roof={roof})")
    remaining = float(dt)
    crossings = 0
    while h + remaining >= roof:
        remaining -= roof - h
        base = spec.base.step(base)
        h = 0.0
        roof = float(spec.roof(base))
        crossings += 1
    return (base, h + remaining), crossings
