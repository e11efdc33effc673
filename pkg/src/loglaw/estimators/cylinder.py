"""Measure of the entry set C(eps, l) = {x : Phi^t x in B_l for some 0 <= t < eps}.

Maps use the discrete convention: C(eps, l) collects the points entering
B_l at some step n with 0 <= n < eps, so eps = 1 gives B_l itself.

Small targets make plain Monte Carlo wasteful, so when the geometry allows
it points are drawn from a region that contains C(eps, l) and the estimate
is rescaled by the region's measure:

* torus maps (eps <= 1) and torus flows: the ball of radius l + v eps
  around the target centre (a tube along the flow for linear flows);
* suspensions (eps below the minimal roof): half the points have their
  base in the ball, half sit within eps of the roof above a preimage of
  the ball (exact inverse map on the 64-bit state);
* geodesic flows with base-ball targets: the hyperbolic disk of radius
  l + eps around p, with the direction drawn from the cone of vectors whose
  geodesic meets the closed ball (half-angle asin(sinh l / sinh D) at
  distance D) and weighted by its share of the circle.

Everything else samples the invariant measure directly.  Detection uses
the hitting engines with t_max = eps.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from loglaw.core import TargetFamily
from loglaw.errors import InsufficientDataError, InvalidArgumentError
from loglaw.estimators.fitting import loglog_fit
from loglaw.hyperbolic import mobius, tangent
from loglaw.hyperbolic.domains import disk_area, sample_disk
from loglaw.hyperbolic.flow import GeodesicFlow, liouville_sample
from loglaw.rng import RngStream
from loglaw.systems import LinearFlow, MapState, MapSystem, Suspension, TorusMap, float_from_u64, u64_from_float

MIN_SAMPLES = 1000
BATCH = 20000


@dataclass(frozen=True)
class CylinderEstimate:
    epsilon: float
    l: float
    mu_hat: float
    stderr: float
    n: int
    hits: int = 0
    method: str = "global"

    def as_row(self) -> dict:
        return {"epsilon": self.epsilon, "l": self.l, "mu_hat": self.mu_hat, "stderr": self.stderr, "n": self.n,
                "hits": self.hits, "method": self.method}


# proposals ----------------------------------------------------------------
# each returns (states, weights, method) with mu_hat = mean(weights * hit)

def _ball_volume(dim, rho):
    return 2 * rho if dim == 1 else math.pi * rho * rho


def _uniform_ball(gen, m, dim, center, rho):
    c = np.atleast_1d(np.asarray(center, dtype=float))
    if dim == 1:
        return ((c[0] + rho * (2 * gen.random(m) - 1)) % 1.0)[:, None]
    r = rho * np.sqrt(gen.random(m))
    a = 2 * np.pi * gen.random(m)
    return (c[None, :] + np.column_stack([r * np.cos(a), r * np.sin(a)])) % 1.0


def _map_states(model, pts, gen):
    gens = [gen] * len(pts) if isinstance(model, TorusMap) and model.variant == "doubling" else None
    return model.state_from_points(pts, gens)


def _propose_map(model: MapSystem, target, l, eps, gen, m, local):
    rho = l
    if local and eps <= 1 and target.kind == "base_ball" and rho < 0.5:
        pts = _uniform_ball(gen, m, model.dimension, target.center, rho)
        return _map_states(model, pts, gen), np.full(m, _ball_volume(model.dimension, rho)), "local-ball"
    if isinstance(model, TorusMap):
        st = model.random_state([gen], n=m)
        if model.variant == "doubling":
            st = MapState(st.arrays, [gen] * m)
        return st, np.ones(m), "global"
    return model.random_state([gen], n=m), np.ones(m), "global"


def _propose_linear(model: LinearFlow, target, l, eps, gen, m, local):
    v = model.velocity
    if local and target.kind == "base_ball" and eps + 4 * l <= 0.5:
        # every entry point within eps lies in this tube behind the ball
        a = -(eps + l) + (eps + 2 * l) * gen.random(m)
        b = l * (2 * gen.random(m) - 1)
        perp = np.array([-v[1], v[0]])
        c = np.asarray(target.center, dtype=float)
        pts = (c[None, :] + a[:, None] * v[None, :] + b[:, None] * perp[None, :]) % 1.0
        return pts, np.full(m, 2 * l * (eps + 2 * l)), "local-tube"
    return gen.random((m, 2)), np.ones(m), "global"


def _injectivity(cache):
    p = complex(cache.p)
    pts = cache.points
    d = np.array([float(tangent.hyp_distance(p, q)) for q in pts])
    d = d[d > 1e-9]
    return 0.5 * float(d.min()) if len(d) else math.inf


def _propose_geodesic(model: GeodesicFlow, target, l, eps, gen, m, local):
    dom = model.domain
    cache = target.extra["cache"]
    rho = l + eps
    if local and rho < _injectivity(cache):
        p = complex(cache.p)
        z = sample_disk(gen, m, p, rho)
        if target.kind == "base_ball":
            D = 2 * np.arcsinh(np.abs(z - p) / (2 * np.sqrt(z.imag * p.imag)))
            with np.errstate(divide="ignore", invalid="ignore"):
                s = np.where(D > l, math.sinh(l) / np.sinh(D), 1.0)
            beta = np.where(s >= 1.0, np.pi, np.arcsin(np.minimum(s, 1.0)) * (1 + 1e-12))
            th = mobius.direction_toward(z, p) + beta * (2 * gen.random(m) - 1)
            w = beta / np.pi
            method = "local-cone"
        else:
            th = 2 * np.pi * gen.random(m)
            w = np.ones(m)
            method = "local-disk"
        return tangent.from_point(z, th), w * disk_area(rho) / dom.area, method
    seed_stream = RngStream(int(gen.integers(0, 2**63)), 0)
    return liouville_sample(dom, seed_stream, m), np.ones(m), "global"


def _preimage_words(base: TorusMap, arrays, gen):
    """Exact F^{-1} on 64-bit coordinates (a uniform branch for doubling)."""
    if base.variant == "cat":
        u, v = arrays
        # inverse of [[2, 1], [1, 1]] is [[1, -1], [-1, 2]]
        return (u - v, v + v - u)
    (w,) = arrays
    top = gen.integers(0, 2, size=len(w), dtype=np.uint64) << np.uint64(63)
    return ((w >> np.uint64(1)) | top,)


def _propose_suspension(model: Suspension, target, l, eps, gen, m, local):
    base = model.base
    dim = base.dimension
    vol = _ball_volume(dim, l)
    if local and target.kind == "base_ball" and eps < model.roof_min and l < 0.5:
        # stratum A: base already in the ball; stratum B: height within eps
        # of the roof and landing in the ball.  For eps below the minimal
        # roof these cover C(eps, l) and intersect only where b is in the ball.
        ma = m // 2
        mb = m - ma
        ba = _uniform_ball(gen, ma, dim, target.center, l)
        ha = gen.random(ma) * model.roof(ba)
        wa = 2.0 * vol * model.roof(ba) / model.mean_roof
        y = _uniform_ball(gen, mb, dim, target.center, l)
        bw = _preimage_words(base, tuple(u64_from_float(y[:, j]) for j in range(dim)), gen)
        bb = np.stack([float_from_u64(a) for a in bw], axis=-1)
        hb = model.roof(bb) - eps * gen.random(mb)
        wb = np.where(target(bb) < l, 0.0, 2.0 * vol * eps / model.mean_roof)
        aw = tuple(u64_from_float(ba[:, j]) for j in range(dim))
        arrays = tuple(np.concatenate([a, b]) for a, b in zip(aw, bw))
        gens = [gen] * m if base.variant == "doubling" else None
        return (MapState(arrays, gens), np.concatenate([ha, hb])), np.concatenate([wa, wb]), "local-strata"
    # roof-weighted base words (rejection), height uniform below the roof
    words, got = [], 0
    while got < m:
        k = 2 * (m - got) + 16
        st = base.random_state([gen], n=k)
        b = np.stack([float_from_u64(a) for a in st.arrays], axis=-1)
        keep = gen.random(k) * model.roof_max < model.roof(b)
        words.append(tuple(a[keep] for a in st.arrays))
        got += int(keep.sum())
    arrays = tuple(np.concatenate([w[j] for w in words])[:m] for j in range(len(words[0])))
    b = np.stack([float_from_u64(a) for a in arrays], axis=-1)
    h = gen.random(m) * model.roof(b)
    gens = [gen] * m if base.variant == "doubling" else None
    return (MapState(arrays, gens), h), np.ones(m), "global"


def _propose(model, target, l, eps, gen, m, local):
    if isinstance(model, GeodesicFlow):
        return _propose_geodesic(model, target, l, eps, gen, m, local)
    if isinstance(model, Suspension):
        return _propose_suspension(model, target, l, eps, gen, m, local)
    if isinstance(model, MapSystem):
        return _propose_map(model, target, l, eps, gen, m, local)
    if isinstance(model, LinearFlow):
        return _propose_linear(model, target, l, eps, gen, m, local)
    if hasattr(model, "cylinder_states"):
        return model.cylinder_states(target, l, eps, gen, m)
    return model.sample(RngStream(int(gen.integers(0, 2**63)), 0), m), np.ones(m), "global"


def _linear_entered(model: LinearFlow, target, l, eps, X, chunk: int = 1000):
    """Batch form of the flow scan: a grid at step l / (4 v) over [0, eps]
    and the Lipschitz test on every interval; undecided samples are
    refined one by one."""
    from loglaw.estimators.hitting import flow_first_entry

    lip = model.velocity_bound * target.lipschitz_constant
    k = max(1, math.ceil(eps / (l / (4 * lip))))
    times = np.linspace(0.0, eps, k + 1)
    v = model.velocity
    out = np.zeros(len(X), dtype=bool)
    for lo in range(0, len(X), chunk):
        P = (X[lo:lo + chunk, None, :] + times[None, :, None] * v[None, None, :]) % 1.0
        f = target(P)
        hit = np.any(f[:, :-1] < l, axis=1)
        lb = 0.5 * (f[:, :-1] + f[:, 1:] - lip * np.diff(times)[None, :])
        unsure = ~hit & np.any(lb < l, axis=1)
        for j in np.flatnonzero(unsure):
            x0 = X[lo + j]
            e = flow_first_entry(lambda t, x0=x0: model.positions(x0, t), target, l, lip, 0.0, eps)
            hit[j] = e is not None and e < eps
        out[lo:lo + chunk] = hit
    return out


def _entered(model, target, l, eps, states):
    """Boolean per state: entry into B_l at some time in [0, eps)."""
    from loglaw.estimators.hitting import _engine_for

    if isinstance(model, LinearFlow):
        return _linear_entered(model, target, l, eps, np.asarray(states, dtype=float))
    if model.kind == "map":
        horizon = float(math.ceil(eps) - 1)
    else:
        horizon = float(eps)
    taus, cens = _engine_for(model, target)(model, target, np.array([l]), np.array([horizon]), states)
    hit = ~cens[:, 0]
    if model.kind != "map":
        hit &= taus[:, 0] < eps
    return hit


def cylinder_measure(model, target: TargetFamily, epsilon: float, l: float, n: int, rng: RngStream,
                     local: bool = True) -> CylinderEstimate:
    """Monte Carlo estimate of mu(C(epsilon, l)) with its standard error."""
    if not (epsilon > 0 and math.isfinite(epsilon)):
        raise InvalidArgumentError("epsilon must be positive")
    if not (l > 0 and math.isfinite(l)):
        raise InvalidArgumentError("l must be positive")
    if n < MIN_SAMPLES:
        raise InvalidArgumentError(f"n must be >= {MIN_SAMPLES}")
    gen = rng.generator()
    vals = []
    method = "global"
    done = 0
    while done < n:
        m = min(BATCH, n - done)
        states, w, method = _propose(model, target, l, epsilon, gen, m, local)
        vals.append(np.where(_entered(model, target, l, epsilon, states), w, 0.0))
        done += m
    v = np.concatenate(vals)
    mu = float(v.mean())
    se = float(v.std(ddof=1)) / math.sqrt(n)
    return CylinderEstimate(float(epsilon), float(l), mu, se, int(n), int(np.count_nonzero(v)), method)


@dataclass
class DimensionEstimate:
    """Per-eps slopes of log mu(C) against log l, and d at the smallest eps."""

    eps_values: list
    l_values: list
    fits: list
    estimates: list
    d: float
    stability_gap: float
    warnings: list = field(default_factory=list)

    @property
    def slopes(self):
        return [f.slope if f is not None else math.nan for f in self.fits]

    def ratio(self, eps_small, eps_big):
        """mu(eps_big, l) / mu(eps_small, l) for every l."""
        i, j = self.eps_values.index(eps_small), self.eps_values.index(eps_big)
        out = []
        for a, b in zip(self.estimates[i], self.estimates[j]):
            out.append(b.mu_hat / a.mu_hat if a.mu_hat > 0 else math.nan)
        return out

    def summary(self) -> dict:
        return {
            "d": self.d, "stability_gap": self.stability_gap,
            "per_epsilon": [
                {"epsilon": e, "slope": f.slope if f else None, "stderr": f.stderr if f else None,
                 "r_squared": f.r_squared if f else None}
                for e, f in zip(self.eps_values, self.fits)
            ],
            "warnings": list(self.warnings),
        }


def conditional_dimension(model, target: TargetFamily, eps_grid, l_grid, n: int, rng: RngStream,
                          local: bool = True) -> DimensionEstimate:
    """Fit log mu_hat(C(eps, l)) against log l for each eps.  d is the slope
    at the smallest eps; the stability gap is the largest pairwise slope
    difference across eps."""
    eps_grid = [float(e) for e in eps_grid]
    l_grid = [float(x) for x in l_grid]
    if len(l_grid) < 3:
        raise InvalidArgumentError("l grid needs at least 3 radii")
    if model.kind != "map" and len(eps_grid) < 3:
        raise InvalidArgumentError("eps grid needs at least 3 values")
    fits, ests, warnings = [], [], []
    for i, e in enumerate(eps_grid):
        row = [cylinder_measure(model, target, e, l, n, rng.substream(i * 1000 + k), local)
               for k, l in enumerate(l_grid)]
        ests.append(row)
        pts = [(math.log(c.l), math.log(c.mu_hat)) for c in row if c.mu_hat > 0]
        dropped = len(row) - len(pts)
        if dropped:
            warnings.append(f"eps {e:g}: {dropped} radii dropped (mu_hat = 0)")
        try:
            fits.append(loglog_fit(pts))
        except InsufficientDataError:
            fits.append(None)
            warnings.append(f"eps {e:g}: too few radii left for a fit")
    good = [(e, f) for e, f in zip(eps_grid, fits) if f is not None]
    if not good:
        raise InsufficientDataError("no epsilon left with a usable fit")
    d = min(good, key=lambda t: t[0])[1].slope
    sl = [f.slope for _, f in good]
    gap = float(max(sl) - min(sl))
    return DimensionEstimate(eps_grid, l_grid, fits, ests, float(d), gap, warnings)
