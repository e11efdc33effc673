import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from loglaw import InvalidArgumentError, rng_stream
from loglaw.systems import (LinearFlow, Rotation, RotationSpec, Suspension, TorusMap, float_from_u64, map_step,
                            suspension_advance)

unit = st.floats(0, 1, exclude_max=True)
MASK = (1 << 64) - 1


def test_map_step_examples():
    assert np.allclose(map_step(TorusMap("cat"), [0.5, 0.5]), [0.5, 0.0])
    assert np.allclose(map_step(TorusMap("doubling"), [0.3]), [0.6])
    assert np.allclose(map_step(RotationSpec.custom(0.25), [0.9]), [0.15])


def test_map_step_rejects_non_maps():
    with pytest.raises(InvalidArgumentError):
        map_step(LinearFlow(1.0), [0.1, 0.2])


def test_golden_angle_full_precision():
    assert RotationSpec.golden().alpha == (math.sqrt(5) - 1) / 2


def test_liouville_angle_is_cached_with_denominators():
    spec = RotationSpec.liouville()
    assert spec.arithmetic_class == "liouville"
    assert 0 < spec.alpha < 1
    assert spec.denominators[-1] > 10**12


def test_linear_flow_is_unit_speed():
    for slope in (0.0, 0.5, 2.0, (math.sqrt(5) - 1) / 2):
        assert abs(np.linalg.norm(LinearFlow(slope).velocity) - 1) < 1e-15


@given(unit, unit, st.floats(1e-3, 0.999))
def test_rotation_is_an_isometry(x, y, alpha):
    r = RotationSpec.custom(alpha)

    def circ(a, b):
        d = abs(a - b) % 1.0
        return min(d, 1 - d)

    fx, fy = map_step(r, [x])[0], map_step(r, [y])[0]
    assert abs(circ(fx, fy) - circ(x, y)) < 1e-12


def test_suspension_fixed_point_examples():
    s = Suspension(TorusMap("cat"), 1.0, 0.0)
    (b, h), k = suspension_advance(s, ((0.0, 0.0), 0.0), 3.5)
    assert np.array_equal(b, [0.0, 0.0]) and h == 0.5 and k == 3


def test_suspension_short_time_no_crossing():
    s = Suspension(TorusMap("doubling"), 1.0, 0.5)
    (b, h), k = suspension_advance(s, ((0.3,), 0.1), 0.2)
    assert k == 0 and abs(h - 0.3) < 1e-15 and np.array_equal(b, [0.3])


def test_suspension_one_roof_exactly():
    s = Suspension(TorusMap("doubling"), 1.0, 0.5)
    roof = 1 + 0.5 * math.cos(2 * math.pi * 0.3)
    (b, h), k = suspension_advance(s, ((0.3,), 0.0), roof)
    assert k == 1 and h == 0.0 and np.allclose(b, [0.6])


def test_suspension_rejects_negative_time_and_bad_height():
    s = Suspension(TorusMap("cat"), 1.0, 0.5)
    with pytest.raises(InvalidArgumentError):
        suspension_advance(s, ((0.1, 0.1), 0.0), -1.0)
    with pytest.raises(InvalidArgumentError):
        suspension_advance(s, ((0.0, 0.1), 1.6), 1.0)


def test_roof_must_stay_positive():
    with pytest.raises(InvalidArgumentError):
        Suspension(TorusMap("cat"), 0.5, 0.5)


@given(unit, unit, st.floats(0, 1, exclude_max=True), st.floats(0, 40))
def test_crossings_reconstruct_flow_time(x, y, frac, dt):
    s = Suspension(TorusMap("cat"), 1.0, 0.5)
    base = np.array([x, y])
    h0 = frac * float(s.roof(base))
    (b, h), k = suspension_advance(s, (base, h0), dt)
    # time = (roof(x0) - h0) + roofs of the intermediate floors + final height
    total, cur = -h0, base
    for _ in range(k):
        total += float(s.roof(cur))
        cur = s.base.step(cur)
    assert np.array_equal(cur, b)
    assert abs(total + h - dt) < 1e-9


def test_suspension_samples_respect_roof():
    s = Suspension(TorusMap("doubling"), 1.0, 0.5)
    x = s.sample(rng_stream(0, 0), 20_000)
    assert np.all(x[:, -1] < s.roof(x[:, :-1]))
    # base marginal is tilted by the roof: E[cos 2 pi x] = c1 / (2 c0)
    m = np.mean(np.cos(2 * np.pi * x[:, 0]))
    assert abs(m - 0.25) < 3 * 0.75 / math.sqrt(20_000)


# exact engines against arbitrary-precision integer arithmetic

def test_cat_block_matches_integer_orbit():
    gen = rng_stream(9, 0).generator()
    m = TorusMap("cat")
    stt = m.random_state([gen], n=5)
    u0 = [int(v) for v in stt.arrays[0]]
    v0 = [int(v) for v in stt.arrays[1]]
    coords = m.block(stt, 300)
    for i in range(5):
        u, v = u0[i], v0[i]
        for n in range(300):
            assert coords[n, i, 0] == float_from_u64(np.uint64(u))
            assert coords[n, i, 1] == float_from_u64(np.uint64(v))
            u, v = (2 * u + v) & MASK, (u + v) & MASK
        assert int(stt.arrays[0][i]) == u and int(stt.arrays[1][i]) == v


def test_doubling_block_is_a_binary_shift():
    g = rng_stream(9, 1).generator()
    m = TorusMap("doubling")
    stt = m.random_state([g])
    w0 = int(stt.arrays[0][0])
    coords = m.block(stt, 128)[:, 0, 0]
    # replay the digit stream: first word, then the generator's refill buffer
    digits = (w0 << 128) | (int(stt.buffer[0, 0]) << 64) | int(stt.buffer[0, 1])
    for n in range(128):
        word = (digits >> (128 - n)) & MASK
        assert coords[n] == float_from_u64(np.uint64(word))


def test_rotation_block_matches_integer_orbit():
    r = Rotation(RotationSpec.golden())
    a = r.spec.alpha_u64
    stt = r.state_from_points([[0.123]])
    u = int(stt.arrays[0][0])
    coords = r.block(stt, 1000)[:, 0, 0]
    for n in range(1000):
        assert coords[n] == float_from_u64(np.uint64((u + n * a) & MASK))
