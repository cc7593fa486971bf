"""Diagnostics that make the consensus and boundedness claims checkable on a run."""
from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np
from scipy.integrate import cumulative_trapezoid

from .simulate import Trajectory

TAIL_FRACTION = 0.1


class ModelError(ValueError):
    """Diagnostic does not apply to this agent model."""


def consensus_diameter(tr: Trajectory) -> np.ndarray:
    x = tr.x
    return x.max(axis=1) - x.min(axis=1)


def velocity_diameter(tr: Trajectory) -> np.ndarray:
    if tr.model != "di":
        raise ModelError("velocity diameter needs a double-integrator trajectory")
    v = tr.v
    return v.max(axis=1) - v.min(axis=1)


def nussbaum_bound(b) -> np.ndarray:
    """``2 (pi + 1/|b_i|)``: how far ``S_i`` (or ``R_i``) may drift from its start."""
    return 2.0 * (np.pi + 1.0 / np.abs(np.asarray(b, dtype=float)))


@dataclass
class NussbaumCheck:
    deviation: np.ndarray  # per agent, max_t |S_i(t) - S_i(0)|
    bound: np.ndarray
    violations: np.ndarray  # per agent, number of offending samples

    @property
    def margin(self) -> np.ndarray:
        """Unused slack per agent; negative means the bound was exceeded."""
        return self.bound - self.deviation

    @property
    def agent_passed(self) -> np.ndarray:
        return self.violations == 0

    @property
    def passed(self) -> bool:
        return bool(np.all(self.agent_passed))


def nussbaum_bound_check(tr: Trajectory, b) -> NussbaumCheck:
    drift = np.abs(tr.nussbaum - tr.nussbaum[0])
    bound = nussbaum_bound(b)
    return NussbaumCheck(
        deviation=drift.max(axis=0),
        bound=bound,
        violations=(drift > bound).sum(axis=0),
    )


def tail_mask(times: np.ndarray, fraction: float = TAIL_FRACTION) -> np.ndarray:
    start, stop = times[0], times[-1]
    return times >= stop - fraction * (stop - start)


def product_decay(tr: Trajectory) -> tuple[np.ndarray, float]:
    """``max_i |x_i e_i|`` (SI) or ``max_i |q_i r_i|`` (DI) over time, plus its tail maximum."""
    series = np.abs(tr.products).max(axis=1)
    return series, float(series[tail_mask(tr.times)].max())


def velocity_decay(tr: Trajectory) -> float:
    if tr.model != "di":
        raise ModelError("velocity decay needs a double-integrator trajectory")
    return float(np.abs(tr.v[tail_mask(tr.times)]).max())


def integral_consistency(tr: Trajectory) -> np.ndarray:
    """Relative gap between the integrated ``z1`` states and a trapezoid rule over the samples.

    Only meaningful for SI runs, where ``z1_i`` is exactly the integral of
    ``(x_i e_i)^2``.
    """
    if tr.model != "si":
        raise ModelError("integral consistency is defined for single-integrator runs")
    quad = cumulative_trapezoid(tr.products**2, tr.times, axis=0, initial=0.0)[-1]
    z1 = tr.z1[-1]
    return np.abs(quad - z1) / np.maximum(np.abs(z1), np.finfo(float).tiny)


def _join(values) -> str:
    return ",".join(repr(float(v)) for v in values)


@dataclass
class DiagnosticsReport:
    times: np.ndarray
    consensus_diameter: np.ndarray
    velocity_diameter: np.ndarray | None
    nussbaum: NussbaumCheck
    product_series: np.ndarray
    product_tail: float
    velocity_tail: float | None
    sup_norms: dict[str, float]

    @property
    def initial_diameter(self) -> float:
        return float(self.consensus_diameter[0])

    @property
    def final_diameter(self) -> float:
        return float(self.consensus_diameter[-1])

    def lines(self) -> list[str]:
        out = [
            f"initial_diameter = {self.initial_diameter!r}",
            f"final_diameter = {self.final_diameter!r}",
        ]
        if self.velocity_diameter is not None:
            out.append(f"final_velocity_diameter = {float(self.velocity_diameter[-1])!r}")
        out += [
            f"nussbaum_bound = {_join(self.nussbaum.bound)}",
            f"nussbaum_deviation = {_join(self.nussbaum.deviation)}",
            f"nussbaum_margin = {_join(self.nussbaum.margin)}",
            f"nussbaum_bound_ok = {str(self.nussbaum.passed).lower()}",
            f"product_tail = {self.product_tail!r}",
        ]
        if self.velocity_tail is not None:
            out.append(f"velocity_tail = {self.velocity_tail!r}")
        out += [f"sup_{k} = {v!r}" for k, v in self.sup_norms.items()]
        return out

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            header = ["t", "consensus_diameter", "product_max"]
            if self.velocity_diameter is not None:
                header.append("velocity_diameter")
            writer.writerow(header)
            for k, t in enumerate(self.times):
                row = [t, self.consensus_diameter[k], self.product_series[k]]
                if self.velocity_diameter is not None:
                    row.append(self.velocity_diameter[k])
                writer.writerow([repr(float(c)) for c in row])


def diagnose(tr: Trajectory, b) -> DiagnosticsReport:
    series, tail = product_decay(tr)
    sup = {"x": float(np.abs(tr.x).max()), "u": float(np.abs(tr.controls).max())}
    di = tr.model == "di"
    if di:
        sup["v"] = float(np.abs(tr.v).max())
    sup["S" if not di else "R"] = float(np.abs(tr.nussbaum).max())
    return DiagnosticsReport(
        times=tr.times,
        consensus_diameter=consensus_diameter(tr),
        velocity_diameter=velocity_diameter(tr) if di else None,
        nussbaum=nussbaum_bound_check(tr, b),
        product_series=series,
        product_tail=tail,
        velocity_tail=velocity_decay(tr) if di else None,
        sup_norms=sup,
    )
