import json

import numpy as np
import pytest

from poisson_lab.suspension import (
    PointConfiguration,
    evolve,
    renewal_count_series,
    required_halo,
    sample_initial_configuration,
)
from poisson_lab.systems import RandomWalk, RenewalChain, ReturnDistribution


def _single(state, marks, horizon=5):
    return PointConfiguration(np.array([state], dtype=np.int64), np.asarray(marks, dtype=float).reshape(1, -1),
                              (1, 4), horizon, "renewal")


def test_countdown_descent(half):
    cfg = _single(3, [0.9, 0.1, 0.9, 0.9, 0.9])
    c = evolve(half, cfg, 5, [[1], [2], [3]]).counts
    # 3 -> 2 -> 1, then jumps to 2 (u = 0.9), 1, then jumps to 1 (u = 0.1)
    pos = [int(np.flatnonzero(row)[0]) + 1 for row in c]
    assert pos == [3, 2, 1, 2, 1, 1]


def test_halo_error(half):
    with pytest.raises(ValueError, match="halo 3 is too small"):
        sample_initial_configuration(half, 5, 10, seed=0, halo=3)
    walk = RandomWalk({2: "1/3", -1: "2/3"}, (-20, 20))
    assert required_halo(walk, 7) == 14
    assert required_halo(half, 7) == 7


def test_steps_beyond_horizon(half):
    cfg = sample_initial_configuration(half, 3, 4, seed=0)
    with pytest.raises(ValueError):
        evolve(half, cfg, 5)


def test_union_additivity(telescoping):
    a = sample_initial_configuration(telescoping, 6, 30, seed=1)
    b = sample_initial_configuration(telescoping, 6, 30, seed=2)
    u = evolve(telescoping, a.union(b), 30)
    s = evolve(telescoping, a, 30) + evolve(telescoping, b, 30)
    assert np.array_equal(u.counts, s.counts)


def test_renewal_series_matches_evolve(telescoping):
    for seed in range(3):
        cfg = sample_initial_configuration(telescoping, 8, 60, seed=seed)
        cells = [[1], [2, 3], [5, 6, 7]]
        a = evolve(telescoping, cfg, 60, cells).counts
        b = renewal_count_series(telescoping, cfg, 60, cells).counts
        assert np.array_equal(a, b)


def test_walk_counts_conserved_inside_halo(walk):
    cfg = sample_initial_configuration(walk, 10, 5, seed=0, window_min=-10)
    total = len(cfg)
    c = evolve(walk, cfg, 5)
    assert c.counts.shape == (6, 21)
    assert c.counts.sum(1).max() <= total


def test_reproducible(half):
    a = sample_initial_configuration(half, 4, 10, seed=7, replicate=2)
    b = sample_initial_configuration(half, 4, 10, seed=7, replicate=2)
    assert np.array_equal(a.states, b.states) and np.array_equal(a.marks, b.marks)


def test_csv_and_json(tmp_path, half):
    cfg = _single(2, [0.1, 0.1, 0.1])
    series = evolve(half, cfg, 3, [[1, 2], [3]])
    text = series.to_csv(tmp_path / "s.csv")
    lines = text.splitlines()
    assert lines[0] == "t,cell,count"
    assert lines[1] == "0,1-2,1"
    assert (tmp_path / "s.csv").read_text() == text
    d = json.loads(cfg.to_json())
    assert d["particles"] == [[2, 1]] and d["kind"] == "renewal"


def test_overlapping_cells_rejected(half):
    cfg = _single(2, [0.1])
    with pytest.raises(ValueError, match="overlap"):
        cfg.counts([[1, 2], [2]])
    with pytest.raises(ValueError):
        cfg.counts([[9]])
