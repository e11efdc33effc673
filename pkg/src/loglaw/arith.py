"""Continued fractions, 64-bit fixed-point rotation numbers and exact
first-entry times for circle rotations."""

from __future__ import annotations

from fractions import Fraction
from math import isqrt
from typing import Iterable, Sequence

ONE64 = 1 << 64
Q_LIMIT = 10**12


def convergents(partial_quotients: Iterable[int], a0: int = 0) -> list[tuple[int, int]]:
    """Convergents p_k/q_k of [a0; a1, a2, ...] as integer pairs."""
    p_prev, p = 1, a0
    q_prev, q = 0, 1
    out = []
    for a in partial_quotients:
        a = int(a)
        if a < 1:
            raise ValueError("partial quotients must be positive integers")
        p_prev, p = p, a * p + p_prev
        q_prev, q = q, a * q + q_prev
        out.append((p, q))
    return out


def continued_fraction_value(partial_quotients: Sequence[int], a0: int = 0) -> Fraction:
    x = Fraction(0)
    for a in reversed(partial_quotients):
        x = 1 / (a + x)
    return a0 + x


def continued_fraction_of(x: Fraction | float, max_terms: int = 64) -> list[int]:
    """Partial quotients [a1, a2, ...] of x in (0, 1), finite for rationals."""
    x = Fraction(x)
    x -= x.numerator // x.denominator
    out = []
    while x and len(out) < max_terms:
        x = 1 / x
        a = x.numerator // x.denominator
        out.append(a)
        x -= a
    return out


def liouville_quotients(q_limit: int = Q_LIMIT, max_depth: int = 32) -> list[int]:
    """Partial quotients a_k = k**k, stopping at the first denominator above q_limit."""
    out = []
    q_prev, q = 0, 1
    for k in range(1, max_depth + 1):
        a = k**k
        out.append(a)
        q_prev, q = q, a * q + q_prev
        if q > q_limit:
            break
    return out


def golden_u64() -> int:
    """floor(((sqrt 5 - 1)/2) * 2**64), exact."""
    return (isqrt(5 << 128) - ONE64) >> 1


def to_u64(x: Fraction | float) -> int:
    """floor(frac(x) * 2**64) computed exactly from the binary value of x."""
    f = Fraction(x)
    f -= f.numerator // f.denominator
    return (f.numerator * ONE64) // f.denominator


def from_u64(v: int) -> float:
    return (int(v) >> 11) * 2.0**-53


def _min_multiple(a: int, m: int, lo: int, hi: int) -> int | None:
    """Least x >= 0 with lo <= (a*x) mod m <= hi, for 0 <= lo <= hi < m."""
    if lo == 0:
        return 0
    a %= m
    if a == 0:
        return None
    x = -(-lo // a)
    if a * x <= hi:
        return x
    # a*x - m*y lands in [lo, hi]: the least wrap count y solves the same
    # problem with (m mod a, a), a Euclid step
    y = _min_multiple(m % a, a, (-hi) % a, (-lo) % a)
    if y is None:
        return None
    return -(-(lo + m * y) // a)


def first_entry_mod(a: int, b: int, m: int, lo: int, hi: int) -> int | None:
    """Least n >= 0 with (a*n + b) mod m in the cyclic interval [lo, hi].

    ``lo > hi`` means the interval wraps through 0.  Returns None when no n
    exists (rational rotations that miss the interval forever).
    """
    lo, hi = lo % m, hi % m
    candidates = []
    if lo <= hi:
        pieces = [(lo, hi)]
    else:
        pieces = [(lo, m - 1), (0, hi)]
    for plo, phi in pieces:
        L = (plo - b) % m
        H = (phi - b) % m
        if L <= H:
            x = _min_multiple(a, m, L, H)
            if x is not None:
                candidates.append(x)
        else:
            for sl, sh in ((L, m - 1), (0, H)):
                x = _min_multiple(a, m, sl, sh)
                if x is not None:
                    candidates.append(x)
    return min(candidates) if candidates else None


def ball_interval_u64(center: float, radius: float) -> tuple[int, int]:
    """Integer cyclic interval of 64-bit phases theta with |theta/2**64 - center| < radius
    on the circle.  Coordinates of a phase are read as floor(theta / 2**11) * 2**-53,
    matching :func:`from_u64`, so the interval is expressed in that quantization."""
    c = Fraction(center)
    r = Fraction(radius)
    scale = 1 << 53
    # x = k / 2**53 is inside iff c - r < x < c + r (cyclically)
    k_lo = (c - r) * scale
    k_hi = (c + r) * scale
    klo = k_lo.numerator // k_lo.denominator + 1
    khi = -((-k_hi.numerator) // k_hi.denominator) - 1
    if khi - klo + 1 >= scale:
        return 0, ONE64 - 1
    klo %= scale
    khi %= scale
    return klo << 11, (khi << 11) | ((1 << 11) - 1)


def rotation_first_entry(alpha_u64: int, theta0_u64: int, center: float, radius: float) -> int | None:
    """Exact hitting time of the 64-bit rotation theta -> theta + alpha to the
    open ball of given radius around center (enumeration-free)."""
    lo, hi = ball_interval_u64(center, radius)
    return first_entry_mod(alpha_u64, theta0_u64, ONE64, lo, hi)
