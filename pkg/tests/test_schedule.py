import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import GRAPHS, graph1
from nussbaum_consensus.digraph import DiGraph, load_graph
from nussbaum_consensus.schedule import ScheduleError, SwitchSchedule, validate

SWITCHING = [load_graph(GRAPHS / f"switching_g{k}.txt") for k in (1, 2, 3)]
SWITCHING_SCHEDULE = SwitchSchedule.from_segments(SWITCHING, [(0.5, 0), (0.5, 1), (1.0, 2)], periodic=True)
RING = graph1(3, (1, 2), (2, 3), (3, 1))


def test_example_pattern_lookup():
    assert SWITCHING_SCHEDULE.topology_at(1.7) == 2
    assert SWITCHING_SCHEDULE.topology_at(2.3) == 0
    assert SWITCHING_SCHEDULE.topology_at(0.0) == 0
    assert SWITCHING_SCHEDULE.topology_at(0.75) == 1


def test_right_continuous_at_switches():
    assert SWITCHING_SCHEDULE.topology_at(0.5) == 1
    assert SWITCHING_SCHEDULE.topology_at(1.0) == 2
    assert SWITCHING_SCHEDULE.topology_at(2.0) == 0
    assert SWITCHING_SCHEDULE.topology_at(np.nextafter(0.5, 0)) == 0


def test_single_topology():
    s = SwitchSchedule.fixed(RING)
    assert all(s.topology_at(t) == 0 for t in (0.0, 1.0, 1e6))
    assert s.switches_between(0.0, 100.0) == []


def test_finite_schedule_out_of_range():
    s = SwitchSchedule.from_segments([RING, DiGraph.empty(3)], [(1.0, 0), (1.0, 1)])
    assert s.topology_at(2.0) == 1
    with pytest.raises(ScheduleError):
        s.topology_at(2.5)
    with pytest.raises(ScheduleError):
        s.topology_at(-0.1)


def test_equal_neighbours_merge():
    s = SwitchSchedule.from_segments([RING, DiGraph.empty(3)], [(1.0, 0), (1.0, 0), (0.5, 1)])
    assert s.switch_times == (2.0,)
    assert s.segments() == [(2.0, 0), (0.5, 1)]


@pytest.mark.parametrize(
    "kwargs",
    [
        dict(switch_times=(0.0,), indices=(1,), initial_index=0),
        dict(switch_times=(1.0, 1.0), indices=(1, 0), initial_index=0),
        dict(switch_times=(1.0,), indices=(5,), initial_index=0),
        dict(switch_times=(1.0,), indices=(0,), initial_index=0),
    ],
)
def test_invalid_construction(kwargs):
    with pytest.raises(ScheduleError):
        SwitchSchedule(topologies=(RING, DiGraph.empty(3)), **kwargs)


def test_infinite_segment_only_last():
    with pytest.raises(ScheduleError):
        SwitchSchedule.from_segments([RING, DiGraph.empty(3)], [(math.inf, 0), (1.0, 1)])
    with pytest.raises(ScheduleError):
        SwitchSchedule.from_segments([RING], [(math.inf, 0)], periodic=True)


def test_switches_between_periodic():
    assert SWITCHING_SCHEDULE.switches_between(0.0, 4.0) == [0.5, 1.0, 2.0, 2.5, 3.0]
    assert SWITCHING_SCHEDULE.switches_between(1.0, 2.5) == [2.0]


def test_periodic_wrap_without_change_is_not_a_switch():
    s = SwitchSchedule.from_segments([RING, DiGraph.empty(3)], [(1.0, 0), (1.0, 1), (1.0, 0)], periodic=True)
    assert s.switches_between(0.0, 6.0) == [1.0, 2.0, 4.0, 5.0]
    tau_min, gaps = s.dwell_times()
    # [0,1) is cut short by the first switch; afterwards G1 runs 2 s across each wrap
    assert tau_min == 1.0
    np.testing.assert_array_equal(gaps, [1.0, 2.0])


@given(st.floats(0.0, 50.0), st.integers(1, 5))
def test_periodic_invariance(t, k):
    assert SWITCHING_SCHEDULE.topology_at(t) == SWITCHING_SCHEDULE.topology_at(t + k * SWITCHING_SCHEDULE.period)


class TestDwellTimes:
    def test_example_pattern(self):
        tau_min, gaps = SWITCHING_SCHEDULE.dwell_times()
        assert tau_min == 0.5
        # G1 off at 0.5, back at 2.0; G2 off at 1.0, back at 2.5; G3 off at 2.0, back at 3.0
        np.testing.assert_array_equal(gaps, [1.5, 1.5, 1.0])

    def test_single_topology(self):
        tau_min, gaps = SwitchSchedule.fixed(RING).dwell_times()
        assert tau_min == math.inf
        np.testing.assert_array_equal(gaps, [0.0])

    def test_never_activated(self):
        s = SwitchSchedule.from_segments([RING, RING, DiGraph.empty(3)], [(1.0, 0), (math.inf, 2)])
        assert s.dwell_times()[1][1] == math.inf

    @given(
        st.lists(
            st.tuples(st.floats(0.01, 5.0), st.integers(0, 2)),
            min_size=1,
            max_size=12,
        )
    )
    @settings(max_examples=200)
    def test_tau_min_matches_scan(self, segments):
        s = SwitchSchedule.from_segments([RING, RING, DiGraph.empty(3)], segments)
        # brute force: walk the raw segments, merging repeats by hand
        starts, last = [], None
        t = 0.0
        for d, i in segments:
            if i != last:
                starts.append(t)
                last = i
            t += d
        expected = min(np.diff(starts), default=math.inf)
        assert s.dwell_times()[0] == pytest.approx(expected, rel=1e-12)


class TestValidate:
    def test_example_schedule_passes(self):
        report = validate(SWITCHING_SCHEDULE)
        assert report.passed
        assert report.joint_basis and report.dwell_ok and report.reactivation_ok

    def test_edgeless_fails_joint_basis(self):
        s = SwitchSchedule.from_segments([DiGraph.empty(2), DiGraph.empty(2)], [(1.0, 0), (1.0, 1)], periodic=True)
        report = validate(s)
        assert not report.joint_basis
        assert not report.passed

    def test_topology_seen_once_fails_reactivation(self):
        g1 = graph1(2, (1, 2))
        g2 = graph1(2, (2, 1))
        s = SwitchSchedule.from_segments([g1, g2], [(1.0, 0), (1.0, 1), (math.inf, 0)])
        report = validate(s)
        assert not report.joint_basis  # each basis is a lone vertex
        assert report.reactivation_gaps[0] == 1.0
        assert report.reactivation_gaps[1] == math.inf
        assert not report.reactivation_ok
        assert not report.passed

    def test_short_dwell_warns(self):
        s = SwitchSchedule.from_segments(SWITCHING, [(1e-9, 0), (1.0, 1), (1.0, 2)], periodic=True)
        report = validate(s, step=1e-3)
        assert report.tau_min == pytest.approx(1e-9)
        assert any("shorter than the integrator step" in w for w in report.warnings)
        assert "result = pass" in report.lines()
