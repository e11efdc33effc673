"""Compiled per-trajectory scans for geodesic flows on quotient surfaces.

Orbits advance window by window.  At each window start the group element g
is renormalized and reduced to the fundamental domain, so the base point of
g diag(e^{s/2}, e^{-s/2}) over s in [0, L] is the vertical geodesic e^s i
pulled back by g.  For a translate q, with w = g^{-1} q,

    cosh d(s) = cosh(a) cosh(s - s0),  cosh(a) = |w| / Im w,  s0 = log |w|,

so entry into a ball and the closest approach within a window are
closed-form.
"""

import math

import numpy as np
from numba import njit

MODULAR = 0
BOLZA = 1
HALF_PI = 0.5 * math.pi
TWO_PI = 2.0 * math.pi


@njit(cache=True)
def renormalize(g):
    det = g[0, 0] * g[1, 1] - g[0, 1] * g[1, 0]
    s = 1.0 / math.sqrt(det)
    g[0, 0] *= s
    g[0, 1] *= s
    g[1, 0] *= s
    g[1, 1] *= s


@njit(cache=True)
def _left_mul(h, g):
    a = h[0, 0] * g[0, 0] + h[0, 1] * g[1, 0]
    b = h[0, 0] * g[0, 1] + h[0, 1] * g[1, 1]
    c = h[1, 0] * g[0, 0] + h[1, 1] * g[1, 0]
    d = h[1, 0] * g[0, 1] + h[1, 1] * g[1, 1]
    g[0, 0] = a
    g[0, 1] = b
    g[1, 0] = c
    g[1, 1] = d


@njit(cache=True)
def flow(g, t):
    e = math.exp(0.5 * t)
    g[0, 0] *= e
    g[1, 0] *= e
    g[0, 1] /= e
    g[1, 1] /= e


@njit(cache=True)
def base_of(g):
    # g(i) = (ai + b)/(ci + d)
    c = g[1, 0]
    d = g[1, 1]
    den = c * c + d * d
    x = (g[0, 0] * c + g[0, 1] * d) / den
    y = 1.0 / den
    return x, y


@njit(cache=True)
def reduce_inplace(g, variant, gens, inv_index, cx, cy, cap):
    """Reduce g to the fundamental domain; returns steps used or -1."""
    steps = 0
    while True:
        x, y = base_of(g)
        if variant == MODULAR:
            if x > 0.5 or x < -0.5:
                n = math.floor(x + 0.5)
                # T^{-n} g
                g[0, 0] -= n * g[1, 0]
                g[0, 1] -= n * g[1, 1]
                steps += 1
            elif x * x + y * y < 1.0:
                a, b = g[0, 0], g[0, 1]
                g[0, 0] = -g[1, 0]
                g[0, 1] = -g[1, 1]
                g[1, 0] = a
                g[1, 1] = b
                steps += 1
            else:
                return steps
        else:
            own = x * x + (y - 1.0) ** 2
            best = -1
            bval = own * (1.0 - 1e-13)
            for k in range(cx.shape[0]):
                v = ((x - cx[k]) ** 2 + (y - cy[k]) ** 2) / cy[k]
                if v < bval:
                    bval = v
                    best = k
            if best < 0:
                return steps
            _left_mul(gens[inv_index[best]], g)
            steps += 1
        if steps > cap:
            return -1
        renormalize(g)


@njit(cache=True)
def _pull_back(g, qx, qy):
    """w = g^{-1} q as (u, v)."""
    # g^{-1} = [[d, -b], [-c, a]]
    a, b, c, d = g[0, 0], g[0, 1], g[1, 0], g[1, 1]
    nr = d * qx - b
    ni = d * qy
    dr = -c * qx + a
    di = -c * qy
    den = dr * dr + di * di
    u = (nr * dr + ni * di) / den
    v = (ni * dr - nr * di) / den
    return u, v


@njit(cache=True)
def _pull_back_angle(g, qx, qy, qth):
    # direction pushed forward by g^{-1} = [[d, -b], [-c, a]]: th - 2 arg(-c q + a)
    c = -g[1, 0]
    d = g[0, 0]
    return qth - 2.0 * math.atan2(c * qy, c * qx + d)


@njit(cache=True)
def _hyp_dist(x1, y1, x2, y2):
    dx = x1 - x2
    dy = y1 - y2
    return 2.0 * math.asinh(math.sqrt(dx * dx + dy * dy) / (2.0 * math.sqrt(y1 * y2)))


@njit(cache=True)
def _direction_toward(ax, ay, bx, by):
    wx = (bx - ax) / ay
    wy = by / ay
    # zeta = (w - i)/(w + i); arg zeta = arg(w - i) - arg(w + i)
    return math.atan2(wy - 1.0, wx) - math.atan2(wy + 1.0, wx) + HALF_PI


@njit(cache=True)
def _wrap(a):
    return (a + math.pi) % TWO_PI - math.pi


@njit(cache=True)
def sasaki_gap(s, u, v, thw):
    """Surrogate Sasaki distance between the orbit vector at e^s i (pointing
    up) and the target vector (u + iv, thw)."""
    y = math.exp(s)
    d = _hyp_dist(0.0, y, u, v)
    if d < 1e-12:
        ang = _wrap(thw - HALF_PI)
    else:
        a12 = _direction_toward(0.0, y, u, v)
        a21 = _direction_toward(u, v, 0.0, y) + math.pi
        ang = _wrap(thw - (HALF_PI - a12 + a21))
    return math.sqrt(d * d + ang * ang)


@njit(cache=True)
def _skip_window(variant, y, y_skip):
    return variant == MODULAR and y > y_skip


@njit(cache=True)
def ball_scan(g0, variant, gens, inv_index, cx, cy, qx, qy, qd, radii, t_max, L, y_skip, cap):
    """First entry times into base balls of every radius (descending).

    Returns (taus, status) where status is 0 = hit, 1 = censored,
    2 = reduction failure.
    """
    nr = radii.shape[0]
    taus = np.full(nr, np.inf)
    status = np.ones(nr, dtype=np.int64)
    coshr = np.cosh(radii)
    g = g0.copy()
    renormalize(g)
    if reduce_inplace(g, variant, gens, inv_index, cx, cy, cap) < 0:
        status[:] = 2
        return taus, status
    best = np.empty(nr)
    k = 0
    t = 0.0
    while k < nr:
        while k < nr and t >= t_max[k]:
            k += 1
        if k >= nr:
            break
        best[:] = np.inf
        x, y = base_of(g)
        if not _skip_window(variant, y, y_skip):
            dz = _hyp_dist(x, y, 0.0, 1.0)
            reach = dz + L + radii[k]
            for j in range(qx.shape[0]):
                if variant == BOLZA and qd[j] > reach:
                    break
                u, v = _pull_back(g, qx[j], qy[j])
                cha = math.sqrt(u * u + v * v) / v
                if cha >= coshr[k]:
                    continue
                s0 = 0.5 * math.log(u * u + v * v)
                for kk in range(k, nr):
                    if cha >= coshr[kk]:
                        break
                    delta = math.acosh(coshr[kk] / cha)
                    if s0 + delta <= 0.0 or s0 - delta >= L:
                        continue
                    e = t + max(0.0, s0 - delta)
                    if e < best[kk]:
                        best[kk] = e
        while k < nr and best[k] < np.inf:
            if best[k] <= t_max[k]:
                taus[k] = best[k]
                status[k] = 0
            k += 1
        t += L
        flow(g, L)
        renormalize(g)
        if reduce_inplace(g, variant, gens, inv_index, cx, cy, cap) < 0:
            for kk in range(k, nr):
                status[kk] = 2
            return taus, status
    return taus, status


@njit(cache=True)
def _first_below(lo, hi, u, v, thw, r, lip, h0, tol):
    """Leftmost s in [lo, hi] with sasaki_gap < r, to within tol; inf if the
    Lipschitz bound rules every subinterval out."""
    n = max(1, int(math.ceil((hi - lo) / h0)))
    h = (hi - lo) / n
    stack_lo = np.empty(128)
    stack_hi = np.empty(128)
    stack_flo = np.empty(128)
    stack_fhi = np.empty(128)
    f_prev = sasaki_gap(lo, u, v, thw)
    if f_prev < r:
        return lo
    for i in range(n):
        a = lo + i * h
        b = lo + (i + 1) * h if i < n - 1 else hi
        fb = sasaki_gap(b, u, v, thw)
        top = 0
        stack_lo[0] = a
        stack_hi[0] = b
        stack_flo[0] = f_prev
        stack_fhi[0] = fb
        top = 1
        while top > 0:
            top -= 1
            sa = stack_lo[top]
            sb = stack_hi[top]
            fa = stack_flo[top]
            fbb = stack_fhi[top]
            if fa < r:
                return sa
            if 0.5 * (fa + fbb - lip * (sb - sa)) >= r:
                continue
            if sb - sa <= tol:
                if fbb < r:
                    return sb
                continue
            m = 0.5 * (sa + sb)
            fm = sasaki_gap(m, u, v, thw)
            if top + 2 > 128:
                continue
            # right half below left so the left is examined first
            stack_lo[top] = m
            stack_hi[top] = sb
            stack_flo[top] = fm
            stack_fhi[top] = fbb
            stack_lo[top + 1] = sa
            stack_hi[top + 1] = m
            stack_flo[top + 1] = fa
            stack_fhi[top + 1] = fm
            top += 2
        if fb < r:
            return b
        f_prev = fb
    return np.inf


@njit(cache=True)
def sasaki_scan(g0, variant, gens, inv_index, cx, cy, qx, qy, qth, qd, radii, t_max, L, y_skip, cap, lip):
    """First entry into surrogate-Sasaki balls of every radius (descending)."""
    nr = radii.shape[0]
    taus = np.full(nr, np.inf)
    status = np.ones(nr, dtype=np.int64)
    coshr = np.cosh(radii)
    g = g0.copy()
    renormalize(g)
    if reduce_inplace(g, variant, gens, inv_index, cx, cy, cap) < 0:
        status[:] = 2
        return taus, status
    best = np.empty(nr)
    k = 0
    t = 0.0
    while k < nr:
        while k < nr and t >= t_max[k]:
            k += 1
        if k >= nr:
            break
        best[:] = np.inf
        x, y = base_of(g)
        if not _skip_window(variant, y, y_skip):
            dz = _hyp_dist(x, y, 0.0, 1.0)
            reach = dz + L + radii[k]
            for j in range(qx.shape[0]):
                if variant == BOLZA and qd[j] > reach:
                    break
                u, v = _pull_back(g, qx[j], qy[j])
                cha = math.sqrt(u * u + v * v) / v
                if cha >= coshr[k]:
                    continue
                s0 = 0.5 * math.log(u * u + v * v)
                thw = _pull_back_angle(g, qx[j], qy[j], qth[j])
                for kk in range(k, nr):
                    if cha >= coshr[kk]:
                        break
                    delta = math.acosh(coshr[kk] / cha)
                    lo = max(0.0, s0 - delta)
                    hi = min(L, s0 + delta)
                    if hi <= lo or t + lo >= best[kk]:
                        continue
                    r = radii[kk]
                    e = _first_below(lo, min(hi, best[kk] - t), u, v, thw, r, lip, r / (4.0 * lip), r * 1e-3)
                    if t + e < best[kk]:
                        best[kk] = t + e
        # a smaller ball can only be entered once the larger one is
        while k < nr and best[k] < np.inf:
            if best[k] <= t_max[k]:
                taus[k] = best[k]
                status[k] = 0
            k += 1
        t += L
        flow(g, L)
        renormalize(g)
        if reduce_inplace(g, variant, gens, inv_index, cx, cy, cap) < 0:
            for kk in range(k, nr):
                status[kk] = 2
            return taus, status
    return taus, status


@njit(cache=True)
def ball_entry_window(g0, qx, qy, r, eps):
    """Earliest s in [0, eps) at which the base of g0 diag(e^{s/2}, e^{-s/2})
    lies within r of one of the points q (lifted, no reduction); inf if none."""
    best = np.inf
    cr = math.cosh(r)
    for j in range(qx.shape[0]):
        u, v = _pull_back(g0, qx[j], qy[j])
        cha = math.sqrt(u * u + v * v) / v
        if cha >= cr:
            continue
        s0 = 0.5 * math.log(u * u + v * v)
        delta = math.acosh(cr / cha)
        if s0 + delta <= 0.0 or s0 - delta >= eps:
            continue
        e = max(0.0, s0 - delta)
        if e < best:
            best = e
    return best


@njit(cache=True)
def excursion_scan(g0, variant, gens, inv_index, cx, cy, qx, qy, qd, t_grid, L, cap, d_init, t_event_min):
    """Running minimum of the quotient distance from the orbit's base point to
    the target point, sampled at t_grid; also the running maximum over
    closest-approach events (t_i >= t_event_min) of -log(a_i)/log(t_i).

    Returns (dmin, event_sup, ok)."""
    ng = t_grid.shape[0]
    dmin_out = np.empty(ng)
    ev_out = np.empty(ng)
    g = g0.copy()
    renormalize(g)
    if reduce_inplace(g, variant, gens, inv_index, cx, cy, cap) < 0:
        return dmin_out, ev_out, False
    dmin = d_init
    ev = -np.inf
    t = 0.0
    gi = 0
    while gi < ng:
        w = min(L, t_grid[gi] - t)
        if w > 0.0:
            x, y = base_of(g)
            dz = _hyp_dist(x, y, 0.0, 1.0)
            reach = dz + w + dmin
            for j in range(qx.shape[0]):
                if variant == BOLZA and qd[j] > reach:
                    break
                u, v = _pull_back(g, qx[j], qy[j])
                cha = math.sqrt(u * u + v * v) / v
                s0 = 0.5 * math.log(u * u + v * v)
                sc = min(max(s0, 0.0), w)
                ch = cha * math.cosh(sc - s0)
                dd = math.acosh(max(ch, 1.0))
                if dd < dmin:
                    dmin = dd
                if 0.0 <= s0 < w and t + s0 >= t_event_min and cha < 2.0:
                    a = math.acosh(max(cha, 1.0))
                    if a > 0.0:
                        ratio = -math.log(a) / math.log(t + s0)
                    else:
                        ratio = np.inf
                    if ratio > ev:
                        ev = ratio
            t += w
            flow(g, w)
            renormalize(g)
            if reduce_inplace(g, variant, gens, inv_index, cx, cy, cap) < 0:
                return dmin_out, ev_out, False
        while gi < ng and t >= t_grid[gi]:
            dmin_out[gi] = dmin
            ev_out[gi] = ev
            gi += 1
    return dmin_out, ev_out, True


@njit(cache=True)
def _quotient_distance_modular(x, y, qx, qy):
    best = np.inf
    for j in range(qx.shape[0]):
        d = _hyp_dist(x, y, qx[j], qy[j])
        if d < best:
            best = d
    return best


@njit(cache=True)
def cusp_scan(g0, gens, inv_index, cx, cy, qx, qy, t_grid, L, cap):
    """Running maximum over the orbit of the modular-surface distance to the
    target point.  Each window is checked at its start and at the apex of
    the base point's height, where cusp excursions peak."""
    ng = t_grid.shape[0]
    out = np.empty(ng)
    g = g0.copy()
    h = np.empty((2, 2))
    renormalize(g)
    if reduce_inplace(g, MODULAR, gens, inv_index, cx, cy, cap) < 0:
        return out, False
    x, y = base_of(g)
    dmax = _quotient_distance_modular(x, y, qx, qy)
    t = 0.0
    gi = 0
    while gi < ng:
        w = min(L, t_grid[gi] - t)
        if w > 0.0:
            c = g[1, 0]
            d = g[1, 1]
            if c != 0.0:
                sstar = math.log(abs(d / c))
                if 0.0 < sstar < w:
                    h[:, :] = g
                    flow(h, sstar)
                    renormalize(h)
                    if reduce_inplace(h, MODULAR, gens, inv_index, cx, cy, cap) < 0:
                        return out, False
                    hx, hy = base_of(h)
                    dd = _quotient_distance_modular(hx, hy, qx, qy)
                    if dd > dmax:
                        dmax = dd
            t += w
            flow(g, w)
            renormalize(g)
            if reduce_inplace(g, MODULAR, gens, inv_index, cx, cy, cap) < 0:
                return out, False
            x, y = base_of(g)
            dd = _quotient_distance_modular(x, y, qx, qy)
            if dd > dmax:
                dmax = dd
        while gi < ng and t >= t_grid[gi]:
            out[gi] = dmax
            gi += 1
    return out, True


@njit(cache=True)
def ball_scan_batch(G, variant, gens, inv_index, cx, cy, qx, qy, qd, radii, t_max, L, y_skip, cap):
    n = G.shape[0]
    nr = radii.shape[0]
    taus = np.empty((n, nr))
    status = np.empty((n, nr), dtype=np.int64)
    for i in range(n):
        t, s = ball_scan(G[i], variant, gens, inv_index, cx, cy, qx, qy, qd, radii, t_max, L, y_skip, cap)
        taus[i] = t
        status[i] = s
    return taus, status


@njit(cache=True)
def sasaki_scan_batch(G, variant, gens, inv_index, cx, cy, qx, qy, qth, qd, radii, t_max, L, y_skip, cap, lip):
    n = G.shape[0]
    nr = radii.shape[0]
    taus = np.empty((n, nr))
    status = np.empty((n, nr), dtype=np.int64)
    for i in range(n):
        t, s = sasaki_scan(G[i], variant, gens, inv_index, cx, cy, qx, qy, qth, qd, radii, t_max, L, y_skip,
                           cap, lip)
        taus[i] = t
        status[i] = s
    return taus, status
