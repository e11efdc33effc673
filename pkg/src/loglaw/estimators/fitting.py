"""Weighted log-log regression and radius schedules."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from loglaw.errors import InsufficientDataError, InvalidArgumentError

RESOLUTION_FLOOR = 1e-9


@dataclass(frozen=True)
class LineFit:
    slope: float
    intercept: float
    stderr: float
    r_squared: float
    n: int


def loglog_fit(points, weights=None) -> LineFit:
    """Weighted least squares line through (x, y) pairs; callers pass logs."""
    pts = np.asarray(points, dtype=float)
    if pts.ndim != 2 or pts.shape[1] != 2 or len(pts) < 3:
        raise InsufficientDataError("need at least 3 points for a fit")
    x, y = pts[:, 0], pts[:, 1]
    if not np.all(np.isfinite(pts)):
        raise InsufficientDataError("non-finite fit points")
    w = np.ones_like(x) if weights is None else np.asarray(weights, dtype=float)
    if np.any(w < 0) or w.sum() <= 0:
        raise InvalidArgumentError("weights must be non-negative and not all zero")
    w = w / w.mean()
    xm = np.sum(w * x) / w.sum()
    ym = np.sum(w * y) / w.sum()
    sxx = np.sum(w * (x - xm) ** 2)
    if sxx <= 1e-300 or np.ptp(x) == 0:
        raise InsufficientDataError("degenerate abscissae")
    slope = np.sum(w * (x - xm) * (y - ym)) / sxx
    intercept = ym - slope * xm
    resid = y - (slope * x + intercept)
    ss_res = float(np.sum(w * resid**2))
    ss_tot = float(np.sum(w * (y - ym) ** 2))
    n = len(x)
    sigma2 = ss_res / (n - 2)
    stderr = math.sqrt(sigma2 / sxx)
    r2 = 1.0 - ss_res / ss_tot if ss_tot > 0 else (1.0 if ss_res == 0 else 0.0)
    return LineFit(float(slope), float(intercept), float(stderr), float(r2), n)


@dataclass(frozen=True)
class RadiusSchedule:
    l_values: tuple

    def __post_init__(self):
        v = np.asarray(self.l_values, dtype=float)
        if len(v) < 1 or np.any(~np.isfinite(v)) or np.any(v <= 0):
            raise InvalidArgumentError("radii must be positive and finite")
        if np.any(np.diff(v) >= 0):
            raise InvalidArgumentError("radius schedule must be strictly decreasing")
        if v[-1] <= RESOLUTION_FLOOR:
            raise InvalidArgumentError(f"smallest radius {v[-1]} is below the resolution floor")
        object.__setattr__(self, "l_values", tuple(float(x) for x in v))

    @classmethod
    def geometric(cls, l0: float, ratio: float = 0.5, count: int = 6):
        if not 0 < ratio < 1:
            raise InvalidArgumentError("ratio must lie in (0, 1)")
        return cls(tuple(l0 * ratio**k for k in range(count)))

    @classmethod
    def dyadic(cls, first: float, last: float, step: float = 1.0):
        """2^-first, 2^-(first+step), ..., 2^-last."""
        ks = np.arange(first, last + 1e-9, step)
        return cls(tuple(2.0 ** -k for k in ks))

    def __len__(self):
        return len(self.l_values)

    def __iter__(self):
        return iter(self.l_values)

    @property
    def array(self):
        return np.array(self.l_values)


@dataclass
class ExponentFit:
    """Slope of median log tau against -log l, with per-radius bookkeeping."""

    slope: float
    intercept: float
    stderr: float
    r_squared: float
    l_values: list
    n_samples: list
    n_censored: list
    median_log_tau: list
    used: list
    warnings: list = field(default_factory=list)

    def summary(self) -> dict:
        return {
            "slope": self.slope, "intercept": self.intercept, "stderr": self.stderr,
            "r_squared": self.r_squared,
            "per_radius": [
                {"l": l, "n": n, "censored": c, "median_log_tau": m, "used": u}
                for l, n, c, m, u in zip(self.l_values, self.n_samples, self.n_censored,
                                         self.median_log_tau, self.used)
            ],
            "warnings": list(self.warnings),
        }


def fit_hitting_exponent(l_values, taus, censored, max_censored: float = 0.1) -> ExponentFit:
    """Regress the median of log tau over uncensored records on -log l.

    ``taus``/``censored`` have shape (ensemble, len(l_values)).  Radii with
    more than ``max_censored`` censoring are dropped with a warning; tau = 0
    (start inside the target) enters the median as -inf.
    """
    l_values = np.asarray(l_values, dtype=float)
    taus = np.asarray(taus, dtype=float)
    censored = np.asarray(censored, dtype=bool)
    warnings = []
    xs, ys, used, meds, ns, cs = [], [], [], [], [], []
    for k, l in enumerate(l_values):
        col = taus[:, k][~censored[:, k]]
        n_c = int(censored[:, k].sum())
        ns.append(int(len(taus)))
        cs.append(n_c)
        frac = n_c / max(len(taus), 1)
        with np.errstate(divide="ignore"):
            med = float(np.median(np.log(col))) if len(col) else math.nan
        meds.append(med)
        ok = frac <= max_censored and np.isfinite(med)
        if frac > max_censored:
            warnings.append(f"radius {l:.6g} dropped: {100 * frac:.1f}% censored")
        elif not np.isfinite(med):
            warnings.append(f"radius {l:.6g} dropped: median log tau is not finite")
        used.append(bool(ok))
        if ok:
            xs.append(-math.log(l))
            ys.append(med)
    if len(xs) < 3:
        raise InsufficientDataError(f"only {len(xs)} usable radii (need 3); " + "; ".join(warnings))
    fit = loglog_fit(np.column_stack([xs, ys]))
    return ExponentFit(fit.slope, fit.intercept, fit.stderr, fit.r_squared, [float(x) for x in l_values],
                       ns, cs, meds, used, warnings)
