"""Piecewise-constant switching between a fixed family of topologies."""
from __future__ import annotations

import math
from bisect import bisect_right
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .digraph import DiGraph, DimensionError, has_jointly_strongly_connected_basis


class ScheduleError(ValueError):
    pass


@dataclass(frozen=True)
class SwitchSchedule:
    """Which topology is active when.

    ``indices[j]`` (0-based) is active on ``[switch_times[j], switch_times[j+1])``
    and ``initial_index`` on ``[0, switch_times[0])``.  A periodic schedule
    repeats ``[0, period)``; otherwise the schedule is defined up to ``end``,
    which may be ``inf``.
    """

    topologies: tuple[DiGraph, ...]
    switch_times: tuple[float, ...]
    indices: tuple[int, ...]
    initial_index: int
    period: float | None = None
    end: float = math.inf

    def __post_init__(self):
        object.__setattr__(self, "topologies", tuple(self.topologies))
        object.__setattr__(self, "switch_times", tuple(float(t) for t in self.switch_times))
        object.__setattr__(self, "indices", tuple(int(i) for i in self.indices))
        if not self.topologies:
            raise ScheduleError("at least one topology is required")
        n = self.topologies[0].n
        if any(g.n != n for g in self.topologies):
            raise DimensionError("all topologies must share the same agent count")
        if len(self.switch_times) != len(self.indices):
            raise ScheduleError("switch_times and indices must have equal length")
        m = len(self.topologies)
        for i in (self.initial_index, *self.indices):
            if not 0 <= i < m:
                raise ScheduleError(f"topology index {i + 1} out of range 1..{m}")
        times = self.switch_times
        if times and times[0] <= 0:
            raise ScheduleError("first switch time must be positive")
        if any(b <= a for a, b in zip(times, times[1:])):
            raise ScheduleError("switch times must be strictly increasing")
        prev = (self.initial_index, *self.indices)
        if any(a == b for a, b in zip(prev, prev[1:])):
            raise ScheduleError("consecutive intervals must use different topologies")
        if self.period is not None:
            if not self.period > 0:
                raise ScheduleError("period must be positive")
            if times and times[-1] >= self.period:
                raise ScheduleError("switch times of a periodic schedule must lie inside one period")
            object.__setattr__(self, "end", math.inf)
        elif times and self.end <= times[-1]:
            raise ScheduleError("schedule end must come after the last switch")

    @classmethod
    def from_segments(
        cls,
        topologies: Sequence[DiGraph],
        segments: Sequence[tuple[float, int]],
        periodic: bool = False,
    ) -> "SwitchSchedule":
        """Build from ``(duration, index)`` pairs; equal neighbours are merged.

        Only the last segment of a non-periodic schedule may last forever.
        """
        if not segments:
            raise ScheduleError("at least one segment is required")
        starts, idx = [], []
        t = 0.0
        for k, (duration, index) in enumerate(segments):
            duration = float(duration)
            if not duration > 0:
                raise ScheduleError(f"segment {k + 1}: duration must be positive")
            if math.isinf(duration) and (periodic or k != len(segments) - 1):
                raise ScheduleError(f"segment {k + 1}: only the final segment of a non-periodic schedule may be infinite")
            if not idx or idx[-1] != index:
                starts.append(t)
                idx.append(int(index))
            t += duration
        return cls(
            topologies=tuple(topologies),
            switch_times=tuple(starts[1:]),
            indices=tuple(idx[1:]),
            initial_index=idx[0],
            period=t if periodic else None,
            end=t,
        )

    @classmethod
    def fixed(cls, graph: DiGraph) -> "SwitchSchedule":
        return cls((graph,), (), (), 0)

    @property
    def n(self) -> int:
        return self.topologies[0].n

    @property
    def periodic(self) -> bool:
        return self.period is not None

    def segments(self) -> list[tuple[float, int]]:
        """``(duration, index)`` pairs reproducing this schedule."""
        starts = (0.0, *self.switch_times)
        stop = self.period if self.periodic else self.end
        ends = (*self.switch_times, stop)
        return [(b - a, i) for a, b, i in zip(starts, ends, (self.initial_index, *self.indices))]

    def topology_at(self, t: float) -> int:
        if t < 0:
            raise ScheduleError(f"time {t} is negative")
        if self.periodic:
            t = math.fmod(t, self.period)
        elif t > self.end:
            raise ScheduleError(f"time {t} is past the end of the schedule ({self.end})")
        j = bisect_right(self.switch_times, t)
        return self.initial_index if j == 0 else self.indices[j - 1]

    def graph_at(self, t: float) -> DiGraph:
        return self.topologies[self.topology_at(t)]

    def switches_between(self, t0: float, t1: float) -> list[float]:
        """Instants in the open interval ``(t0, t1)`` where the active topology changes."""
        if not self.periodic:
            return [t for t in self.switch_times if t0 < t < t1]
        out = []
        wraps = self.initial_index != self.indices[-1] if self.indices else False
        base = (0.0, *self.switch_times) if wraps else self.switch_times
        k = math.floor(t0 / self.period)
        while k * self.period < t1:
            for s in base:
                t = k * self.period + s
                if t0 < t < t1:
                    out.append(t)
            k += 1
        return out

    def _activations(self) -> tuple[list[tuple[float, float, int]], float]:
        """Merged activation intervals ``(start, stop, index)`` and the horizon they cover.

        Periodic schedules are unrolled over two periods, enough for every
        topology's wraparound gap to show up.
        """
        if self.periodic:
            horizon = 2 * self.period
            seg = self.segments()
            raw = [(k * self.period + a, i) for k in range(2) for a, i in _starts(seg)]
        else:
            horizon = self.end
            raw = list(zip((0.0, *self.switch_times), (self.initial_index, *self.indices)))
        merged: list[list] = []
        for start, index in raw:
            if merged and merged[-1][2] == index:
                continue
            if merged:
                merged[-1][1] = start
            merged.append([start, horizon, index])
        return [tuple(m) for m in merged], horizon

    def dwell_times(self) -> tuple[float, np.ndarray]:
        """Smallest interval between consecutive switches, and each topology's worst reactivation gap.

        The interval before the first switch counts as an inter-switch gap.
        A topology that is deactivated and never comes back gets ``inf``, as
        does one that is never activated.
        """
        acts, horizon = self._activations()
        # the final interval ends at the horizon, not at a switch
        bounded = acts[:-1]
        tau_min = min((b - a for a, b, _ in bounded), default=math.inf)

        m = len(self.topologies)
        gaps = np.full(m, math.inf)
        for ell in range(m):
            mine = [(a, b) for a, b, i in acts if i == ell]
            if not mine:
                continue
            worst = 0.0
            for (_, stop), (start, _) in zip(mine, mine[1:]):
                worst = max(worst, start - stop)
            # two unrolled periods already expose a periodic wraparound gap
            if not self.periodic and mine[-1][1] < horizon:
                worst = math.inf
            gaps[ell] = worst
        return tau_min, gaps


def _starts(segments):
    t = 0.0
    for duration, index in segments:
        yield t, index
        t += duration


@dataclass
class ValidationReport:
    joint_basis: bool
    tau_min: float
    dwell_ok: bool
    reactivation_gaps: np.ndarray
    reactivation_ok: bool
    warnings: list[str] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return self.joint_basis and self.dwell_ok and self.reactivation_ok

    def lines(self) -> list[str]:
        gaps = ",".join(repr(float(g)) for g in self.reactivation_gaps)
        out = [
            f"joint_basis = {str(self.joint_basis).lower()}",
            f"tau_min = {self.tau_min!r}",
            f"dwell_ok = {str(self.dwell_ok).lower()}",
            f"reactivation_gaps = {gaps}",
            f"reactivation_ok = {str(self.reactivation_ok).lower()}",
        ]
        out += [f"warning = {w}" for w in self.warnings]
        out.append(f"result = {'pass' if self.passed else 'fail'}")
        return out


def validate(s: SwitchSchedule, step: float | None = None) -> ValidationReport:
    """Check the switching assumptions without raising.

    ``step`` is the integrator step the caller intends to use; dwell times
    shorter than it are flagged.
    """
    tau_min, gaps = s.dwell_times()
    active = np.zeros(len(s.topologies), dtype=bool)
    for _, _, i in s._activations()[0]:
        active[i] = True
    report = ValidationReport(
        joint_basis=has_jointly_strongly_connected_basis(list(s.topologies)),
        tau_min=tau_min,
        dwell_ok=tau_min > 0,
        reactivation_gaps=gaps,
        reactivation_ok=bool(np.all(np.isfinite(gaps))),
    )
    if step is not None and tau_min < step:
        report.warnings.append(f"tau_min {tau_min!r} is shorter than the integrator step {step!r}")
    for ell in np.nonzero(~active)[0]:
        report.warnings.append(f"topology G{ell + 1} is never activated")
    return report
