"""Sampled correlation functions C(t) = E[f g(Phi^t)] - E f E g and a decay
classification.

Only grid points with |C(t)| above three Monte Carlo standard errors enter
the classification.  On those (t > 0) two lines are fitted: log|C| against
t (exponential decay) and log|C| against log t (polynomial decay); the
better r^2 wins, provided the slope is negative by more than three standard
errors.  Otherwise the curve is classified "none", and with fewer than four
usable points "inconclusive".
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from loglaw.core import advance
from loglaw.errors import InsufficientDataError, InvalidArgumentError
from loglaw.estimators.fitting import LineFit, loglog_fit
from loglaw.rng import RngStream
from loglaw.systems import MapState, MapSystem, TorusMap

MIN_SAMPLES = 10_000
MIN_POINTS = 4
NOISE_MULTIPLE = 3.0
MIN_R2 = 0.5


@dataclass(frozen=True)
class Observable:
    fn: object
    name: str

    def __call__(self, x):
        return np.asarray(self.fn(np.asarray(x, dtype=float)), dtype=float)


def constant(c: float = 1.0) -> Observable:
    return Observable(lambda x: np.full(x.shape[:-1], float(c)), f"constant({c:g})")


def cosine(k=(1,)) -> Observable:
    """cos(2 pi k . x) on the torus."""
    k = np.asarray(k, dtype=float)

    def f(x):
        return np.cos(2 * np.pi * (x[..., : len(k)] @ k))

    return Observable(f, "cos(2pi " + ",".join(f"{int(v)}" for v in k) + " . x)")


def cat_modes(k0=(1, 0), terms: int = 24):
    """Frequency vectors k_j = (M^T)^j k0 for the cat matrix M = [[2, 1], [1, 1]]."""
    mt = np.array([[2, 1], [1, 1]], dtype=object).T
    ks = [np.array(k0, dtype=object)]
    for _ in range(terms - 1):
        ks.append(mt.dot(ks[-1]))
    return [tuple(int(v) for v in k) for k in ks]


def cat_mode_series(beta: float = 0.5, k0=(1, 0), terms: int = 24) -> Observable:
    """f = sum_j beta^j cos(2 pi k_j . x) along a cat-map frequency orbit.

    Composition with the cat map shifts the series by one mode, so the
    correlation is known in closed form (see ``cat_mode_series_correlation``)."""
    ks = np.array(cat_modes(k0, terms), dtype=float)
    w = beta ** np.arange(terms)

    def f(x):
        return np.cos(2 * np.pi * (x[..., :2] @ ks.T)) @ w

    return Observable(f, f"cat-mode-series(beta={beta:g})")


def cat_mode_series_correlation(beta: float, t, terms: int = 24):
    """Exact C(t) of ``cat_mode_series`` under the cat map."""
    t = np.atleast_1d(np.asarray(t, dtype=int))
    out = np.zeros(len(t))
    for i, s in enumerate(t):
        j = np.arange(max(terms - s, 0))
        out[i] = 0.5 * np.sum(beta ** (2 * j + s))
    return out


@dataclass
class CorrelationCurve:
    t: np.ndarray
    values: np.ndarray
    noise: np.ndarray
    classification: str
    rate: float | None = None
    exp_fit: LineFit | None = None
    poly_fit: LineFit | None = None
    used: np.ndarray | None = None
    warnings: list = field(default_factory=list)

    @property
    def noise_floor(self) -> float:
        return float(np.max(self.noise))

    def summary(self) -> dict:
        def lf(f):
            return None if f is None else {"slope": f.slope, "intercept": f.intercept, "stderr": f.stderr,
                                           "r_squared": f.r_squared, "points": f.n}

        return {"classification": self.classification, "rate": self.rate, "noise_floor": self.noise_floor,
                "exponential_fit": lf(self.exp_fit), "polynomial_fit": lf(self.poly_fit),
                "supra_noise_points": int(np.count_nonzero(self.used)) if self.used is not None else 0,
                "warnings": list(self.warnings)}


def classify(t, values, noise):
    """Returns (classification, rate, exp_fit, poly_fit, used)."""
    t = np.asarray(t, dtype=float)
    values = np.asarray(values, dtype=float)
    used = (np.abs(values) > NOISE_MULTIPLE * np.asarray(noise)) & (t > 0)
    if np.count_nonzero(used) < MIN_POINTS:
        return "inconclusive", None, None, None, used
    y = np.log(np.abs(values[used]))
    try:
        ef = loglog_fit(np.column_stack([t[used], y]))
        pf = loglog_fit(np.column_stack([np.log(t[used]), y]))
    except InsufficientDataError:
        return "inconclusive", None, None, None, used
    best, kind = (ef, "exponential") if ef.r_squared >= pf.r_squared else (pf, "polynomial")
    if best.slope + NOISE_MULTIPLE * best.stderr < 0 and best.r_squared >= MIN_R2:
        return kind, -best.slope, ef, pf, used
    return "none", None, ef, pf, used


def _map_orbit(model: MapSystem, st: MapState, times):
    """Coordinates of an ensemble at the integer times (ascending)."""
    times = np.asarray(times, dtype=int)
    out = {}
    n0 = 0
    want = set(times.tolist())
    last = int(times.max())
    while n0 <= last:
        count = 64 if isinstance(model, TorusMap) and model.variant == "doubling" else min(256, last - n0 + 1)
        coords = model.block(st, count)
        for j in range(count):
            if n0 + j in want:
                out[n0 + j] = coords[j]
        n0 += count
    return [out[int(s)] for s in times]


def correlation_curve(model, f: Observable, g: Observable, t_grid, n: int, rng: RngStream,
                      allow_degenerate: bool = False) -> CorrelationCurve:
    """Ensemble estimate of C(t) on ``t_grid`` from ``n`` invariant samples.

    Zero-variance observables are rejected unless ``allow_degenerate``, in
    which case their (identically zero) curve is returned."""
    if n < MIN_SAMPLES:
        raise InvalidArgumentError(f"n must be >= {MIN_SAMPLES}")
    t_grid = np.asarray(t_grid, dtype=float)
    if t_grid.ndim != 1 or len(t_grid) == 0 or np.any(t_grid < 0) or np.any(np.diff(t_grid) <= 0):
        raise InvalidArgumentError("t_grid must be increasing and non-negative")
    if model.kind == "map" and not np.all(t_grid == np.round(t_grid)):
        raise InvalidArgumentError("map correlations need integer times")
    gen = rng.generator()
    if isinstance(model, MapSystem):
        st = model.random_state([gen], n=n)
        if isinstance(model, TorusMap) and model.variant == "doubling":
            st = MapState(st.arrays, [gen] * n)
        ts = t_grid.astype(int)
        xs = _map_orbit(model, st, np.concatenate([[0], ts]) if ts[0] else ts)
        x0 = xs[0]
        if ts[0]:
            xs = xs[1:]
    else:
        x0 = model.sample(RngStream(int(gen.integers(0, 2**63)), 0), n)
        xs = []
        x, prev = x0, 0.0
        for s in t_grid:
            x = advance(model, x, float(s - prev)) if s > prev else x
            prev = s
            xs.append(x)
    fx = f(x0)
    if not np.all(np.isfinite(fx)):
        raise InvalidArgumentError(f"observable {f.name} is not finite")
    if float(np.var(fx)) <= 1e-300 and not allow_degenerate:
        raise InvalidArgumentError(f"observable {f.name} has zero variance")
    fc = fx - fx.mean()
    vals, noise = [], []
    for x in xs:
        gx = g(x)
        if float(np.var(gx)) <= 1e-300 and not allow_degenerate:
            raise InvalidArgumentError(f"observable {g.name} has zero variance")
        prod = fc * (gx - gx.mean())
        vals.append(float(prod.mean()))
        noise.append(float(prod.std(ddof=1)) / math.sqrt(n))
    vals = np.array(vals)
    noise = np.array(noise)
    kind, rate, ef, pf, used = classify(t_grid, vals, noise)
    return CorrelationCurve(t_grid, vals, noise, kind, rate, ef, pf, used)
