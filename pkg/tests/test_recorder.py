import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from nwtsim import load_bundled, nwt, ssa
from nwtsim.recorder import (RunStats, Trajectory, count_peaks, extinction_time, first_peak_height,
                             grid_size, steady_state_after)


def test_step_semantics():
    tr = Trajectory(["X"], 3.0)
    tr.advance(0.4, [0])   # event at 0.4; pre-event state 0
    tr.advance(1.6, [1])   # state after the 0.4 event
    tr.finish([2])
    assert tr.series("X").tolist() == [0, 1, 2, 2]


def test_event_on_grid_point_counts_as_before():
    tr = Trajectory(["X"], 2.0)
    tr.advance(1.0, [0])
    tr.finish([1])
    # grid point 1 shows the state after the event at exactly t=1
    assert tr.series("X").tolist() == [0, 1, 1]


def test_quiet_interval():
    tr = Trajectory(["X"], 4.0)
    tr.finish([7])
    assert tr.series("X").tolist() == [7] * 5


def test_grid_size():
    assert grid_size(10.0, 1.0) == 11
    assert grid_size(0.3, 0.1) == 4
    assert grid_size(2.5, 1.0) == 3


def test_truncated_grid():
    tr = Trajectory(["X"], 10.0)
    tr.advance(3.5, [4])
    tr.finish([0], t_end=3.5)
    assert len(tr.series("X")) == grid_size(3.5, 1.0) == 4
    assert len(tr.times) == 4


def test_flush_counts_and_bytes(tmp_path):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    small = Trajectory(["X", "Y"], 9.0, path=a, capacity=3)
    big = Trajectory(["X", "Y"], 9.0, path=b)
    for tr in (small, big):
        for i in range(10):
            tr.record_at(i, [i, 10 - i])
        tr.flush()
    assert small.flushes == 4
    assert a.read_bytes() == b.read_bytes()
    assert a.read_text().splitlines()[:2] == ["time,X,Y", "0.000000,0,10"]


@pytest.mark.parametrize("engine", [nwt, ssa])
def test_buffering_transparent_for_engines(tmp_path, engine):
    s = load_bundled("lotka")
    paths = []
    for cap in (1, 7, 10_000):
        p = tmp_path / f"{engine.__name__}_{cap}.csv"
        tr = Trajectory(s.species_labels(), 40.0, interval=0.5, path=p, capacity=cap)
        engine.run(engine.init(s, 40.0, seed=5), tr)
        paths.append(p.read_bytes())
    assert paths[0] == paths[1] == paths[2]


def test_real_format(tmp_path):
    p = tmp_path / "r.csv"
    tr = Trajectory(["A"], 1.0, integer=False, path=p)
    tr.record_at(0, [1 / 3])
    tr.record_at(1, [12345678.9])
    tr.flush()
    assert p.read_text() == "time,A\n0.000000,0.333333\n1.000000,1.23457e+07\n"


def test_record_out_of_order():
    tr = Trajectory(["A"], 2.0)
    with pytest.raises(ValueError):
        tr.record_at(1, [0])


def test_bad_interval():
    with pytest.raises(ValueError):
        Trajectory(["A"], 1.0, interval=0.0)


# peaks

def test_constant_has_no_peaks():
    assert count_peaks(np.full(50, 3.0), 0.1) == 0


def test_triangle():
    x = np.concatenate([np.arange(0, 11), np.arange(9, -1, -1)]).astype(float)
    assert count_peaks(x, 5.0) == 1


def test_sine_eight_periods():
    t = np.linspace(0, 8 * 2 * np.pi, 2000, endpoint=False)
    x = 5 + 3 * np.sin(t + 0.3)
    assert count_peaks(x, 1.5) == 8


def test_peaks_reject_non_positive():
    with pytest.raises(ValueError):
        count_peaks([1, 2, 1], 0.0)


@given(st.lists(st.integers(0, 100), min_size=3, max_size=80), st.integers(-1000, 1000),
       st.floats(0.5, 50))
@settings(max_examples=200, deadline=None)
def test_peaks_shift_invariant(xs, shift, prom):
    x = np.array(xs, float)
    assert count_peaks(x, prom) == count_peaks(x + shift, prom)


def test_first_peak_height():
    x = np.array([0, 5, 0, 10, 0, 3, 0], float)
    assert first_peak_height(x) == 5.0
    assert first_peak_height(np.zeros(5)) is None


# steady state

def test_constant_is_steady_from_zero():
    assert steady_state_after(np.full(30, 2.0), 5, 0.01) == 0.0


def test_damped_oscillation_settles():
    t = np.arange(0, 200.0)
    # peak-to-peak swing 100 exp(-t/tau) drops to the band (1.0) at t = 80
    tau = 80 / np.log(100)
    x = 100 + 50 * np.exp(-t / tau) * np.sin(2 * np.pi * t / 10)
    got = steady_state_after(x, 10, 0.01, times=t)
    assert got is not None
    assert abs(got - 80) <= 10


def test_persistent_oscillation_not_steady():
    t = np.arange(0, 300.0)
    assert steady_state_after(10 + np.sin(t / 3), 20, 0.01) is None


def test_steady_state_argument_checks():
    with pytest.raises(ValueError):
        steady_state_after([1, 1, 1], 1, 0.1)
    with pytest.raises(ValueError):
        steady_state_after([1, 1, 1], 2, 0.0)


# stats

def test_extinction_time():
    t = np.arange(6.0)
    assert extinction_time(t, [3, 2, 1, 0, 0, 1]) == 3.0
    assert extinction_time(t, [3, 2, 1, 1, 1, 1]) is None


def test_stats_lines_stable(tmp_path):
    stats = RunStats("nwt", seed=3, applied_rule_count=200, nondet_decision_count=1,
                     wall_seconds=1.234, extinction_times={"P2": None, "P1": 4.0})
    lines = stats.lines()
    assert "nondet_fraction=0.005000000" in lines
    assert lines[-2:] == ["extinction_time.P1=4.000000", "extinction_time.P2=none"]
    assert not any(l.startswith("wall_seconds") for l in lines)
    assert stats.lines(include_timing=True)[-1] == "wall_seconds=1.234"
    p = tmp_path / "x.stats"
    stats.write(p)
    assert p.read_text().splitlines() == lines


def test_fraction_with_no_rules():
    assert RunStats("nwt").nondet_fraction == 0.0
