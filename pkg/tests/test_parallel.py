import numpy as np

from loglaw.core import torus_ball
from loglaw.estimators import run_ensemble
from loglaw.parallel import chunk_bounds, map_trajectories
from loglaw.systems import TorusMap


def test_chunks_cover_the_range():
    b = chunk_bounds(103, 10)
    assert b[0][0] == 0 and b[-1][1] == 103
    assert all(x[1] == y[0] for x, y in zip(b, b[1:]))


def test_results_come_back_in_trajectory_order():
    out = map_trajectories(lambda ids: ids.copy(), 50, workers=3, chunk=7)
    assert np.array_equal(np.concatenate(out), np.arange(50))


def test_worker_count_does_not_change_results():
    l = [0.1, 0.05, 0.025]
    a = run_ensemble(TorusMap("doubling"), torus_ball((0.3,)), l, 1e5, 40, seed=5, workers=1)
    b = run_ensemble(TorusMap("doubling"), torus_ball((0.3,)), l, 1e5, 40, seed=5, workers=3)
    assert np.array_equal(a.taus, b.taus) and np.array_equal(a.ids, b.ids)
