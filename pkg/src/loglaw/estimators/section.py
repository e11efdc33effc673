"""Suspension flows against their floor section.

A state (b, h) of the suspension first reaches the floor at time roof(b) - h,
landing at pi(x) = F(b).  For a target S_r = {base in the ball} the flow
hitting time is then

    tau(x, S_r) = roof(b) - h + sum_{i=0}^{tau_F(pi x) - 1} roof(F^i pi x)

(0 if b is already in the ball), where tau_F counts section returns from
n = 0.  The flow route below runs the clock crossing by crossing with a
compensated sum; the section route finds tau_F on the base map and adds
the roofs with an exactly rounded sum.  The two must agree to round-off.
"""

from __future__ import annotations

import copy
import math
from dataclasses import dataclass, field

import numpy as np

from loglaw.core import TargetFamily
from loglaw.errors import InvalidArgumentError
from loglaw.estimators.fitting import ExponentFit, RadiusSchedule, fit_hitting_exponent
from loglaw.parallel import map_trajectories
from loglaw.systems import MapState, Suspension

MAX_BLOCK = 4096


def clone_state(state: MapState) -> MapState:
    gens = [copy.deepcopy(g) for g in state.gens] if state.gens else state.gens
    buf = state.buffer.copy() if state.buffer is not None else None
    return MapState(tuple(a.copy() for a in state.arrays), gens, buf, state.pos)


def _blocks(model: Suspension, state: MapState):
    block = 64
    while True:
        yield model.base.block(state, block)
        block = min(MAX_BLOCK, block * 2)


def suspension_flow_times(model: Suspension, target: TargetFamily, radii, t_max, base_state: MapState, h0):
    """Flow route.  ``radii`` descending.  Returns (taus, censored, crossings)
    where crossings[i, k] counts floor hits before the entry."""
    state = clone_state(base_state)
    N = len(state)
    nr = len(radii)
    taus = np.full((N, nr), np.inf)
    crossings = np.zeros((N, nr), dtype=np.int64)
    settled = np.zeros((N, nr), dtype=bool)
    clock = np.zeros(N)
    comp = np.zeros(N)
    n = 0
    roofs_prev = None
    tmax_all = float(np.max(t_max))
    for coords in _blocks(model, state):
        f = target(coords)
        roofs = model.roof(coords)
        for j in range(len(coords)):
            if n > 0:
                inc = roofs_prev - (h0 if n == 1 else 0.0)
                # Neumaier compensated clock
                s = clock + inc
                big = np.abs(clock) >= np.abs(inc)
                comp += np.where(big, (clock - s) + inc, (inc - s) + clock)
                clock = s
            now = clock + comp
            hit = (f[j][:, None] < radii[None, :]) & ~settled & (now[:, None] <= t_max[None, :])
            if hit.any():
                taus[hit] = np.broadcast_to(now[:, None], hit.shape)[hit]
                crossings[hit] = n
            settled |= hit | (now[:, None] > t_max[None, :])
            roofs_prev = roofs[j]
            n += 1
        if settled.all() or float(np.min(clock + comp)) > tmax_all:
            break
    cens = ~np.isfinite(taus)
    return taus, cens, crossings


def suspension_section_times(model: Suspension, target: TargetFamily, radii, max_returns, base_state: MapState, h0):
    """Section route.  Returns (tau_F(pi x), reconstructed flow time, sum of
    the tau_F roofs after pi(x)); tau_F = -1 when b itself is in the target
    and -2 when there is no return within ``max_returns``."""
    state = clone_state(base_state)
    N = len(state)
    nr = len(radii)
    tau_sec = np.full((N, nr), -2, dtype=np.int64)
    partials = [[[] for _ in range(nr)] for _ in range(N)]
    first_roof = None
    n0 = 0
    for coords in _blocks(model, state):
        B = len(coords)
        f = target(coords)
        roofs = model.roof(coords)
        if first_roof is None:
            first_roof = roofs[0].copy()
            inside0 = f[0][:, None] < radii[None, :]
            tau_sec[inside0] = -1
        for i in range(N):
            for k in range(nr):
                if tau_sec[i, k] != -2:
                    continue
                # returns to the section are the indices n >= 1
                lo = 1 if n0 == 0 else 0
                hits = np.flatnonzero(f[lo:, i] < radii[k])
                if len(hits):
                    stop = lo + hits[0]
                    tau_sec[i, k] = n0 + stop - 1
                    partials[i][k].append(math.fsum(roofs[lo:stop, i]))
                else:
                    partials[i][k].append(math.fsum(roofs[lo:, i]))
        n0 += B
        if np.all(tau_sec != -2) or n0 > max_returns:
            break
    flow_time = np.full((N, nr), np.inf)
    roof_sum = np.full((N, nr), np.nan)
    for i in range(N):
        for k in range(nr):
            if tau_sec[i, k] == -1:
                flow_time[i, k] = 0.0
            elif tau_sec[i, k] >= 0:
                flow_time[i, k] = math.fsum([float(first_roof[i]), -float(h0[i])] + partials[i][k])
                roof_sum[i, k] = math.fsum(partials[i][k])
    return tau_sec, flow_time, roof_sum


@dataclass
class SectionReport:
    mean_return: float
    mean_return_stderr: float
    residuals: np.ndarray
    max_residual: float
    flow_fit: ExponentFit | None
    section_fit: ExponentFit | None
    ratio_by_radius: list
    l_values: list
    warnings: list = field(default_factory=list)
    flow_taus: np.ndarray | None = None
    flow_censored: np.ndarray | None = None
    section_counts: np.ndarray | None = None

    @property
    def exponent_gap(self) -> float:
        if self.flow_fit is None or self.section_fit is None:
            return math.nan
        return abs(self.flow_fit.slope - self.section_fit.slope)

    def summary(self) -> dict:
        return {
            "mean_return": self.mean_return, "mean_return_stderr": self.mean_return_stderr,
            "max_identity_residual": self.max_residual,
            "flow_fit": self.flow_fit.summary() if self.flow_fit else None,
            "section_fit": self.section_fit.summary() if self.section_fit else None,
            "exponent_gap": self.exponent_gap,
            "ratio_by_radius": [{"l": l, "median_ratio": r} for l, r in zip(self.l_values, self.ratio_by_radius)],
            "warnings": list(self.warnings),
        }


def _section_chunk(model, target, radii, t_max, ids, seed):
    from loglaw.estimators.hitting import _generators, suspension_states

    base_state, h0 = suspension_states(model, _generators(seed, ids))
    taus, cens, _ = suspension_flow_times(model, target, radii, t_max, base_state, h0)
    max_returns = int(math.ceil(np.max(t_max) / model.roof_min)) + 1
    tau_sec, recon, roof_sum = suspension_section_times(model, target, radii, max_returns, base_state, h0)
    return taus, cens, tau_sec, recon, roof_sum


def section_check(model: Suspension, target: TargetFamily, schedule: RadiusSchedule, ensemble: int,
                  seed: int = 0, t_max=None, workers: int | None = None) -> SectionReport:
    """Check the sum identity per trajectory, estimate the mean return time
    and compare flow and section exponents for base-ball targets."""
    if not isinstance(model, Suspension):
        raise InvalidArgumentError("section_check needs a suspension flow")
    l_values = schedule.array
    order = np.argsort(-l_values, kind="stable")
    radii = l_values[order]
    if t_max is None:
        t_max = 100.0 * model.roof_max * l_values ** (-model.base.dimension)
    t_max = np.broadcast_to(np.asarray(t_max, dtype=float), l_values.shape)[order]

    parts = map_trajectories(lambda ids: _section_chunk(model, target, radii, t_max, ids, seed),
                             int(ensemble), workers)
    inv = np.argsort(order)
    taus, cens, tau_sec, recon, roof_sum = (np.concatenate([p[j] for p in parts])[:, inv] for j in range(5))

    ok = ~cens & np.isfinite(recon)
    resid = np.where(ok, np.abs(taus - recon), 0.0)
    per_traj = resid.max(axis=1)
    warnings = []

    # Birkhoff average of the roof along each section orbit (longest leg)
    per_mean = []
    for i in range(len(taus)):
        good = np.flatnonzero(ok[i] & (tau_sec[i] > 0))
        if len(good):
            j = good[np.argmax(tau_sec[i, good])]
            per_mean.append(roof_sum[i, j] / tau_sec[i, j])
    per_mean = np.array(per_mean)
    mean_return = float(np.mean(per_mean)) if len(per_mean) else math.nan
    mr_se = float(np.std(per_mean, ddof=1) / math.sqrt(len(per_mean))) if len(per_mean) > 1 else math.nan

    flow_fit = section_fit = None
    try:
        flow_fit = fit_hitting_exponent(l_values, taus, cens)
    except Exception as exc:  # noqa: BLE001 - reported in the summary
        warnings.append(f"flow fit: {exc}")
    sec_t = np.where(tau_sec < 0, 0, tau_sec).astype(float)
    sec_c = cens | (tau_sec == -2)
    try:
        section_fit = fit_hitting_exponent(l_values, sec_t, sec_c)
    except Exception as exc:  # noqa: BLE001
        warnings.append(f"section fit: {exc}")
    ratios = []
    for k in range(len(l_values)):
        m = ok[:, k] & (sec_t[:, k] > 0)
        r = taus[m, k] / (sec_t[m, k] * mean_return)
        ratios.append(float(np.median(r)) if len(r) else math.nan)
    return SectionReport(mean_return, mr_se, per_traj, float(per_traj.max()) if len(per_traj) else 0.0,
                         flow_fit, section_fit, ratios, [float(x) for x in l_values], warnings,
                         np.where(cens, np.inf, taus), cens, tau_sec)
