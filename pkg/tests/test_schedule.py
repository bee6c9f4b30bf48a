import numpy as np
import pytest

from waveseq.seq2seq.model import AUTO, TEACHER
from waveseq.seq2seq.schedule import SchedulePolicy, draw_epoch_mode, epsilon


@pytest.mark.parametrize("k", [0.5, 1.0, 6.0, 20.0])
def test_epsilon_decreasing_and_start(k):
    assert epsilon(0, k) == k / (k + 1)
    vals = [epsilon(e, k) for e in range(60)]
    assert all(a > b for a, b in zip(vals, vals[1:]))
    assert all(0 < v < 1 for v in vals)


def test_epsilon_floor_for_k_equal_epochs():
    assert min(epsilon(e, 20) for e in range(20)) > 0.86


def test_epsilon_errors_and_overflow():
    with pytest.raises(ValueError):
        epsilon(0, 0)
    with pytest.raises(ValueError):
        epsilon(-1, 1)
    assert epsilon(10_000, 1) == 0.0


def test_forced_tail_and_rng_consumption():
    pol = SchedulePolicy(k=1e6, epochs=6)
    r1, r2 = np.random.default_rng(3), np.random.default_rng(3)
    modes = [pol.mode(e, r1) for e in range(6)]
    assert modes[-2:] == [AUTO, AUTO]
    assert modes[:4] == [TEACHER] * 4
    for _ in range(6):
        r2.random()
    assert r1.random() == r2.random()


def test_draw_frequency():
    rng = np.random.default_rng(0)
    n = sum(draw_epoch_mode(rng, 0.3) == TEACHER for _ in range(20000))
    assert abs(n / 20000 - 0.3) < 0.02


def test_reproducible_and_from_fraction():
    pol = SchedulePolicy.from_fraction(0.4, 10)
    assert pol.k == pytest.approx(4.0)
    a = [pol.mode(e, np.random.default_rng(9)) for e in range(10)]
    b = [pol.mode(e, np.random.default_rng(9)) for e in range(10)]
    assert a == b
    with pytest.raises(ValueError):
        SchedulePolicy(k=1, epochs=1)
