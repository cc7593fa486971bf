"""Fixed-step RK4 integration of the switched closed loop."""
from __future__ import annotations

import csv
import math
import warnings
from dataclasses import dataclass, field, replace
from typing import Callable

import numpy as np

from .digraph import DiGraph, is_strongly_connected, laplacian
from .dynamics import (
    ControllerParams,
    DIAugmentedState,
    SIAugmentedState,
    di_field,
    gain_vector,
    si_field,
)
from .schedule import SwitchSchedule

DEFAULT_STEP = 1e-3
DEFAULT_HORIZON = 40.0
DIVERGENCE_BOUND = 1e9
MODELS = ("si", "di")


class DivergenceError(RuntimeError):
    def __init__(self, t: float, index: int = 0):
        self.t = t
        self.index = index
        super().__init__(f"state left the bounded region (|state| > {DIVERGENCE_BOUND:g} or non-finite) at t = {t!r}")


def rk4_step(f: Callable[[np.ndarray], np.ndarray], y: np.ndarray, h: float) -> np.ndarray:
    k1 = f(y)
    k2 = f(y + 0.5 * h * k1)
    k3 = f(y + 0.5 * h * k2)
    k4 = f(y + h * k3)
    return y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def step_grid(t0: float, t1: float, step: float) -> np.ndarray:
    """Step endpoints from ``t0`` to exactly ``t1``; only the last step may be short."""
    m = max(1, math.ceil((t1 - t0) / step - 1e-9))
    grid = t0 + step * np.arange(m + 1)
    grid[-1] = t1
    return grid


def integrate(f, y0, t0: float, t1: float, step: float) -> np.ndarray:
    """Integrate an autonomous field from ``t0`` to ``t1``, returning the final state."""
    y = np.asarray(y0, dtype=float)
    grid = step_grid(t0, t1, step)
    for h in np.diff(grid):
        y = rk4_step(f, y, float(h))
    return y


@dataclass(frozen=True)
class Scenario:
    schedule: SwitchSchedule
    gains: tuple[float, ...]
    params: ControllerParams
    model: str
    x0: tuple[float, ...]
    v0: tuple[float, ...] | None = None
    horizon: float = DEFAULT_HORIZON
    step: float = DEFAULT_STEP
    record_every: int = 1

    def __post_init__(self):
        for name in ("gains", "x0", "v0"):
            value = getattr(self, name)
            if value is not None:
                object.__setattr__(self, name, tuple(float(c) for c in value))
        n = self.schedule.n
        if self.model not in MODELS:
            raise ValueError(f"model must be one of {MODELS}, got {self.model!r}")
        gain_vector(self.gains)
        if len(self.gains) != n or len(self.x0) != n:
            raise ValueError(f"gains and x0 must have {n} entries")
        if self.model == "di":
            self.params.require_rho()
            if self.v0 is None or len(self.v0) != n:
                raise ValueError(f"double-integrator scenarios need v0 with {n} entries")
        if not all(math.isfinite(c) for c in self.x0 + (self.v0 or ())):
            raise ValueError("initial conditions must be finite")
        if not (self.horizon > 0 and math.isfinite(self.horizon)):
            raise ValueError("horizon must be positive and finite")
        if not self.step > 0:
            raise ValueError("step must be positive")
        if self.horizon > self.schedule.end:
            raise ValueError(f"horizon {self.horizon} runs past the end of the schedule ({self.schedule.end})")
        if int(self.record_every) != self.record_every or self.record_every < 1:
            raise ValueError("record_every must be a positive integer")

    @property
    def n(self) -> int:
        return self.schedule.n

    def initial_state(self) -> np.ndarray:
        if self.model == "si":
            return SIAugmentedState.initial(self.x0).pack()
        return DIAugmentedState.initial(self.x0, self.v0).pack()

    def replace(self, **changes) -> "Scenario":
        return replace(self, **changes)


@dataclass(frozen=True)
class Trajectory:
    """Sampled closed-loop run.

    ``states`` rows are packed augmented states; ``products`` holds the
    per-agent ``x_i e_i`` (SI) or ``q_i r_i`` (DI) that the integral states
    accumulate.
    """

    model: str
    n: int
    times: np.ndarray
    active_topology: np.ndarray
    states: np.ndarray
    controls: np.ndarray
    nussbaum: np.ndarray
    products: np.ndarray
    switch_times: tuple[float, ...] = field(default=())

    @property
    def x(self) -> np.ndarray:
        return self.states[:, : self.n]

    @property
    def v(self) -> np.ndarray:
        if self.model != "di":
            raise ValueError("single-integrator trajectories have no velocities")
        return self.states[:, self.n : 2 * self.n]

    @property
    def z1(self) -> np.ndarray:
        k = 1 if self.model == "si" else 2
        return self.states[:, k * self.n : (k + 1) * self.n]

    @property
    def z2(self) -> np.ndarray:
        k = 2 if self.model == "si" else 3
        return self.states[:, k * self.n : (k + 1) * self.n]

    @property
    def final_state(self) -> np.ndarray:
        return self.states[-1]

    def header(self) -> list[str]:
        cols = ["t", "topology"] + [f"x{i}" for i in range(1, self.n + 1)]
        if self.model == "di":
            cols += [f"v{i}" for i in range(1, self.n + 1)]
        cols += [f"u{i}" for i in range(1, self.n + 1)]
        cols += [f"{'S' if self.model == 'si' else 'R'}{i}" for i in range(1, self.n + 1)]
        return cols

    def rows(self):
        pos = self.x
        vel = self.v if self.model == "di" else np.empty((len(self.times), 0))
        for k, t in enumerate(self.times):
            values = [t, *pos[k], *vel[k], *self.controls[k], *self.nussbaum[k]]
            yield [repr(float(t)), str(int(self.active_topology[k]) + 1)] + [repr(float(c)) for c in values[1:]]

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(self.header())
            writer.writerows(self.rows())


def _signals(model, y, l, lambda1, lambda2, rho):
    """Controls, Nussbaum values and integrand products at packed states ``y``."""
    n = l.shape[0]
    x = y[..., :n]
    if model == "si":
        z1, z2 = y[..., n : 2 * n], y[..., 2 * n :]
        e = x @ l.T
        s = 0.5 * x * x + lambda1 * z1 + 0.5 * lambda2 * z2 * z2
        u = s * np.cos(s) * e * (lambda1 * x * e + lambda2 * z2)
        return u, s, x * e
    v, zb1, zb2 = y[..., n : 2 * n], y[..., 2 * n : 3 * n], y[..., 3 * n :]
    q = v + rho * x
    r = q @ l.T
    big_r = 0.5 * q * q + 0.5 * rho * x * x + zb1 + 0.5 * lambda2 * zb2 * zb2
    u = big_r * np.cos(big_r) * ((rho + 1.0) * v + r * (lambda1 * q * r + lambda2 * zb2))
    return u, big_r, q * r


def _segments(sc: Scenario) -> list[float]:
    bounds = [0.0, *sc.schedule.switches_between(0.0, sc.horizon), sc.horizon]
    dwell = np.diff(bounds[:-1])
    if dwell.size and sc.step > dwell.min() * (1 + 1e-9):
        raise ValueError(f"step {sc.step} exceeds the shortest inter-switch interval {dwell.min()!r}")
    return bounds


def simulate(sc: Scenario) -> Trajectory:
    """Integrate ``sc`` over ``[0, horizon]``.

    Integration restarts at every switch so no step straddles a topology
    change; the state carries over continuously.  Samples are taken every
    ``record_every`` steps, at every switch and at the horizon.
    """
    return simulate_batch([sc])[0]


def simulate_batch(scenarios) -> list[Trajectory]:
    """Run several scenarios that differ only in gains, parameters and initial state.

    They are integrated side by side as one vectorised system, which is much
    cheaper than looping for parameter or sign sweeps.  A divergence in any
    member aborts the batch; :attr:`DivergenceError.index` names it.
    """
    scenarios = list(scenarios)
    if not scenarios:
        return []
    sc = scenarios[0]
    for other in scenarios[1:]:
        if (other.schedule, other.model, other.horizon, other.step, other.record_every) != (
            sc.schedule,
            sc.model,
            sc.horizon,
            sc.step,
            sc.record_every,
        ):
            raise ValueError("batched scenarios must share schedule, model, horizon, step and record_every")

    bounds = _segments(sc)
    model = sc.model
    b = np.array([o.gains for o in scenarios])
    lam1 = np.array([[o.params.lambda1] for o in scenarios])
    lam2 = np.array([[o.params.lambda2] for o in scenarios])
    rho = np.array([[o.params.rho if o.params.rho is not None else np.nan] for o in scenarios])
    laplacians = [laplacian(g) for g in sc.schedule.topologies]
    y = np.array([o.initial_state() for o in scenarios])

    times, topo, states = [], [], []

    def record(t, idx, y):
        times.append(t)
        topo.append(idx)
        states.append(y.copy())

    if model == "si":
        fields = [lambda y, l=l: si_field(y, l, b, lam1, lam2) for l in laplacians]
    else:
        fields = [lambda y, l=l: di_field(y, l, b, lam1, lam2, rho) for l in laplacians]

    # overflow on the way to divergence is reported by the bound check below
    with np.errstate(over="ignore", invalid="ignore"):
        count = 0
        for a, c in zip(bounds[:-1], bounds[1:]):
            idx = sc.schedule.topology_at(0.5 * (a + c))
            f = fields[idx]
            record(a, idx, y)
            grid = step_grid(a, c, sc.step)
            last = len(grid) - 2
            for k in range(len(grid) - 1):
                y = rk4_step(f, y, float(grid[k + 1] - grid[k]))
                count += 1
                # written so that NaN fails the comparison
                if not np.abs(y).max() <= DIVERGENCE_BOUND:
                    bad = ~np.all(np.abs(y) <= DIVERGENCE_BOUND, axis=1)
                    raise DivergenceError(float(grid[k + 1]), index=int(np.argmax(bad)))
                if k != last and count % sc.record_every == 0:
                    record(float(grid[k + 1]), idx, y)
        record(sc.horizon, idx, y)

    times_arr = np.array(times)
    topo_arr = np.array(topo, dtype=int)
    states_arr = np.array(states)
    u, nv, pr = (np.empty((len(times), len(scenarios), sc.n)) for _ in range(3))
    for idx in np.unique(topo_arr):
        rows = topo_arr == idx
        u[rows], nv[rows], pr[rows] = _signals(model, states_arr[rows], laplacians[idx], lam1, lam2, rho)
    return [
        Trajectory(
            model=model,
            n=sc.n,
            times=times_arr.copy(),
            active_topology=topo_arr.copy(),
            states=states_arr[:, j],
            controls=u[:, j],
            nussbaum=nv[:, j],
            products=pr[:, j],
            switch_times=tuple(bounds[1:-1]),
        )
        for j in range(len(scenarios))
    ]


def simulate_fixed_graph(
    graph: DiGraph,
    gains,
    params: ControllerParams,
    model: str,
    x0,
    v0=None,
    horizon: float = DEFAULT_HORIZON,
    step: float = DEFAULT_STEP,
    record_every: int = 1,
) -> Trajectory:
    if not is_strongly_connected(graph):
        warnings.warn("graph is not strongly connected; consensus is not guaranteed", stacklevel=2)
    sc = Scenario(
        schedule=SwitchSchedule.fixed(graph),
        gains=gains,
        params=params,
        model=model,
        x0=x0,
        v0=v0,
        horizon=horizon,
        step=step,
        record_every=record_every,
    )
    return simulate(sc)
