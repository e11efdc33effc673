"""Hitting times tau(x, B_l) for single orbits and trajectory-keyed ensembles.

Map orbits run on the exact block engines and report the first n >= 0 with
f(T^n x) < l.  Rotations with ball targets use the closed-form first entry
on the 64-bit phase circle.  Hyperbolic targets use the compiled window
scans.  Other flows use a Lipschitz scan: a coarse grid on which an interval
[a, b] can only contain an entry if (f(a) + f(b) - v (b - a)) / 2 < l, with
flagged intervals bisected down to 1e-3 l / v.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from loglaw import arith
from loglaw.core import FLOW, SystemModel, TargetFamily
from loglaw.errors import InvalidArgumentError
from loglaw.estimators.fitting import ExponentFit, RadiusSchedule, fit_hitting_exponent
from loglaw.hyperbolic.flow import GeodesicFlow, scan_entry
from loglaw.parallel import map_trajectories
from loglaw.rng import rng_stream
from loglaw.systems import MapState, MapSystem, Rotation, Suspension

COARSE_STEP = 0.05
MAX_BLOCK = 4096


@dataclass(frozen=True)
class HitRecord:
    trajectory_id: int
    l: float
    tau: float
    censored: bool
    t_max: float


@dataclass
class HitTable:
    """Ensemble hitting times; rows are trajectories (sorted by id), columns radii."""

    ids: np.ndarray
    l_values: np.ndarray
    taus: np.ndarray
    censored: np.ndarray
    t_max: np.ndarray

    def records(self) -> list:
        out = []
        for i, tid in enumerate(self.ids):
            for k, l in enumerate(self.l_values):
                c = bool(self.censored[i, k])
                out.append(HitRecord(int(tid), float(l), float(self.t_max[k] if c else self.taus[i, k]), c,
                                     float(self.t_max[k])))
        return out

    @staticmethod
    def concat(parts):
        parts = [p for p in parts if len(p.ids)]
        return HitTable(np.concatenate([p.ids for p in parts]), parts[0].l_values,
                        np.concatenate([p.taus for p in parts]), np.concatenate([p.censored for p in parts]),
                        parts[0].t_max)


# initial states ---------------------------------------------------------

def _generators(seed, ids):
    return [rng_stream(seed, int(i)).generator() for i in ids]


def suspension_states(model: Suspension, gens):
    """Flow-invariant samples: base from the exact engine weighted by the
    roof (rejection), height uniform below the roof."""
    base = model.base
    words = []
    hs = np.empty(len(gens))
    for n, g in enumerate(gens):
        while True:
            st = base.random_state([g])
            b = base.block(MapState(tuple(a.copy() for a in st.arrays)), 64 if base.variant == "doubling" else 1)[0]
            if g.random() * model.roof_max < float(model.roof(b[0])):
                break
        words.append(st.arrays)
        hs[n] = g.random() * float(model.roof(b[0]))
    arrays = tuple(np.concatenate([w[j] for w in words]) for j in range(len(words[0])))
    gl = list(gens) if base.variant == "doubling" else None
    return MapState(arrays, gl), hs


def initial_states(model: SystemModel, ids, seed: int):
    gens = _generators(seed, ids)
    if isinstance(model, MapSystem):
        return model.random_state(gens)
    if isinstance(model, GeodesicFlow):
        from loglaw.hyperbolic.flow import liouville_sample
        return np.array([liouville_sample(model.domain, rng_stream(seed, int(i)), 1)[0] for i in ids])
    if isinstance(model, Suspension):
        return suspension_states(model, gens)
    if model.kind == FLOW:
        return np.array([g.random(model.dimension) for g in gens])
    raise InvalidArgumentError(f"no ensemble sampler for {model.name!r}")


# map engines -----------------------------------------------------------

def _map_hits(model: MapSystem, target: TargetFamily, radii, t_max, state: MapState):
    """Exact first n >= 0 with level(T^n x) < l for radii in descending order."""
    N = len(state)
    nr = len(radii)
    taus = np.full((N, nr), np.inf)
    done = np.zeros((N, nr), dtype=bool)
    idx = np.arange(N)
    n0 = 0
    block = 64
    tmax_all = float(np.max(t_max))
    while len(idx) and n0 <= tmax_all:
        coords = model.block(state, block)
        f = target(coords)
        fmin = np.minimum.accumulate(f, axis=0)
        # steps before the running minimum drops below each radius
        first = (fmin[:, :, None] >= radii[None, None, :]).sum(axis=0)
        n_hit = n0 + first
        sub = done[idx]
        new = (~sub) & (first < block) & (n_hit <= t_max[None, :])
        rows = idx[:, None].repeat(nr, axis=1)
        taus[rows[new], np.nonzero(new)[1]] = n_hit[new]
        sub |= new
        n0 += block
        # radii whose budget is exhausted are settled (censored)
        sub |= (n0 > t_max)[None, :]
        done[idx] = sub
        keep = ~np.all(sub, axis=1)
        if not np.all(keep):
            state = model.take(state, keep)
            idx = idx[keep]
        block = min(MAX_BLOCK, block * 2)
    censored = ~np.isfinite(taus)
    return taus, censored


def _rotation_hits(model: Rotation, target: TargetFamily, radii, t_max, state: MapState):
    (theta,) = state.arrays
    center = float(np.atleast_1d(target.center)[0])
    N = len(theta)
    taus = np.full((N, len(radii)), np.inf)
    for i in range(N):
        for k, l in enumerate(radii):
            n = arith.rotation_first_entry(model.spec.alpha_u64, int(theta[i]), center, float(l))
            if n is not None and n <= t_max[k]:
                taus[i, k] = n
    return taus, ~np.isfinite(taus)


# flow engines ----------------------------------------------------------

def _refine(pos, level, l, lip, a, b, fa, fb, tol):
    if fa < l:
        return a
    if 0.5 * (fa + fb - lip * (b - a)) >= l:
        return None
    if b - a <= tol:
        return b if fb < l else None
    m = 0.5 * (a + b)
    fm = float(level(pos(np.array([m])))[0])
    left = _refine(pos, level, l, lip, a, m, fa, fm, tol)
    if left is not None:
        return left
    return _refine(pos, level, l, lip, m, b, fm, fb, tol)


def flow_first_entry(pos, level, l, lip, t0, t_max, chunk: int = 2048, coarse: float = COARSE_STEP):
    """First t in [t0, t_max] with level(pos(t)) < l, or None.

    ``pos`` maps an array of times to phase points and ``lip`` bounds the
    speed of t -> level(pos(t)).  The base grid step l / (4 lip) is
    coarsened by powers of two up to ``coarse``: the Lipschitz test keeps
    the scan sound at any step, and flagged intervals are bisected back
    down, through the base grid, to the tolerance 1e-3 l / lip.
    """
    tol = 1e-3 * l / lip
    base = l / (4 * lip)
    step = base * 2 ** max(0, math.floor(math.log2(coarse / base))) if coarse > base else base
    t = float(t0)
    while t <= t_max:
        times = np.minimum(t + step * np.arange(chunk + 1), t_max)
        f = level(pos(times))
        if f[0] < l:
            return float(times[0])
        lb = 0.5 * (f[:-1] + f[1:] - lip * np.diff(times))
        for j in np.flatnonzero((f[1:] < l) | (lb < l)):
            e = _refine(pos, level, l, lip, times[j], times[j + 1], f[j], f[j + 1], tol)
            if e is not None:
                return float(e)
        if times[-1] >= t_max:
            return None
        t = float(times[-1])
    return None


def _flow_hits(model, target, radii, t_max, x0):
    lip = model.velocity_bound * target.lipschitz_constant
    N = len(x0)
    taus = np.full((N, len(radii)), np.inf)
    for i in range(N):
        pos = _position_fn(model, x0[i])
        start = 0.0
        for k, l in enumerate(radii):
            e = flow_first_entry(pos, target, l, lip, start, t_max[k])
            if e is None:
                # smaller radii cannot be hit earlier
                start = max(start, t_max[k])
                continue
            taus[i, k] = e
            start = e
    return taus, ~np.isfinite(taus)


def _position_fn(model, x):
    if hasattr(model, "positions"):
        return lambda times: model.positions(x, times)
    from loglaw.core import advance

    return lambda times: np.array([advance(model, x, float(t)) for t in times])


def _geodesic_hits(model: GeodesicFlow, target: TargetFamily, radii, t_max, g0):
    return scan_entry(model.domain, np.asarray(g0).reshape(-1, 2, 2), target.extra["cache"], radii, t_max,
                      kind=target.kind)


def _suspension_hits(model: Suspension, target: TargetFamily, radii, t_max, state):
    from loglaw.estimators.section import suspension_flow_times

    base_state, h0 = state
    taus, cens, _ = suspension_flow_times(model, target, radii, t_max, base_state, h0)
    return taus, cens


def _engine_for(model, target):
    if hasattr(model, "ensemble_hits"):
        # user models supply their own engine as a method
        return lambda _model, *args: model.ensemble_hits(*args)
    if isinstance(model, GeodesicFlow):
        if target.kind not in ("base_ball", "sasaki_ball") or "cache" not in target.extra:
            raise InvalidArgumentError("geodesic targets must come from base_ball() or sasaki_ball()")
        return _geodesic_hits
    if isinstance(model, Rotation) and target.kind == "base_ball":
        return _rotation_hits
    if isinstance(model, MapSystem):
        return _map_hits
    if isinstance(model, Suspension):
        return _suspension_hits
    if model.kind == FLOW:
        return _flow_hits
    raise InvalidArgumentError(f"no hitting engine for {model.name!r}")


def _check_radii(l_values, t_max, model):
    l_values = np.atleast_1d(np.asarray(l_values, dtype=float))
    if np.any(~np.isfinite(l_values)) or np.any(l_values <= 0):
        raise InvalidArgumentError("l must be positive and finite")
    t_max = np.broadcast_to(np.asarray(t_max, dtype=float), l_values.shape).copy()
    if np.any(t_max < 0) or np.any(~np.isfinite(t_max)):
        raise InvalidArgumentError("t_max must be finite and non-negative")
    if model.kind == "map":
        t_max = np.floor(t_max)
    return l_values, t_max


def ensemble_hits(model, target, l_values, t_max, ids, seed, states=None) -> HitTable:
    l_values, t_max = _check_radii(l_values, t_max, model)
    ids = np.asarray(ids, dtype=np.int64)
    order = np.argsort(-l_values, kind="stable")
    radii = l_values[order]
    tm = t_max[order]
    if states is None:
        states = initial_states(model, ids, seed)
    taus, cens = _engine_for(model, target)(model, target, radii, tm, states)
    out_t = np.empty_like(taus)
    out_c = np.empty_like(cens)
    out_t[:, order] = taus
    out_c[:, order] = cens
    out_t[out_c] = np.inf
    return HitTable(ids, l_values, out_t, out_c, t_max)


def hitting_time(model: SystemModel, x0, target: TargetFamily, l: float, t_max: float, rng=None,
                 trajectory_id: int = 0) -> HitRecord:
    """tau(x0, B_l) = inf{t >= 0 : level(Phi^t x0) < l}, censored at t_max.

    For the doubling map a float x0 only carries 53 bits; pass ``rng`` to
    continue its binary expansion with random digits."""
    if not (l > 0 and math.isfinite(l)):
        raise InvalidArgumentError("l must be positive and finite")
    if model.kind == "map" and not float(t_max).is_integer():
        raise InvalidArgumentError("t_max must be an integer for maps")
    if isinstance(model, MapSystem):
        gens = [rng.generator()] if rng is not None else None
        state = model.state_from_points(np.atleast_2d(x0), gens)
    elif isinstance(model, GeodesicFlow):
        g = getattr(x0, "g", x0)
        state = np.asarray(g, dtype=float)[None]
    elif isinstance(model, Suspension):
        b, h = x0
        state = (model.base.state_from_points(np.atleast_2d(b)), np.array([float(h)]))
    else:
        state = np.atleast_2d(np.asarray(x0, dtype=float))
    table = ensemble_hits(model, target, [l], [t_max], [trajectory_id], 0, states=state)
    return table.records()[0]


def run_ensemble(model, target, l_values, t_max, ensemble: int, seed: int, workers: int | None = None) -> HitTable:
    """Trajectory-keyed ensemble; trajectory i starts from stream (seed, i)."""

    def job(ids):
        return ensemble_hits(model, target, l_values, t_max, ids, seed)

    return HitTable.concat(map_trajectories(job, int(ensemble), workers))


def default_t_max(l_values, d_expected: float, margin: float = 100.0):
    return margin * np.asarray(l_values, dtype=float) ** (-d_expected)


def hitting_exponent(model, target, schedule: RadiusSchedule, ensemble: int, t_max_rule=None, seed: int = 0,
                     workers: int | None = None, d_expected: float | None = None, min_ensemble: int = 30,
                     table: HitTable | None = None):
    """Median log tau regressed on -log l.  Returns (ExponentFit, HitTable)."""
    if ensemble < min_ensemble:
        raise InvalidArgumentError(f"ensemble must be >= {min_ensemble}")
    l_values = schedule.array
    if t_max_rule is None:
        if d_expected is None:
            raise InvalidArgumentError("give t_max_rule or d_expected")
        t_max = default_t_max(l_values, d_expected)
    else:
        t_max = np.array([t_max_rule(l) for l in l_values], dtype=float)
    if table is None:
        table = run_ensemble(model, target, l_values, t_max, ensemble, seed, workers)
    fit = fit_hitting_exponent(l_values, table.taus, table.censored)
    return fit, table


def per_radius_ratio(table: HitTable) -> np.ndarray:
    """log tau / -log l per trajectory and radius (nan when censored or tau < 1)."""
    with np.errstate(divide="ignore", invalid="ignore"):
        r = np.log(table.taus) / (-np.log(table.l_values))[None, :]
    r[table.censored | ~np.isfinite(r)] = np.nan
    return r
