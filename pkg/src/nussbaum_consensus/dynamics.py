"""Nonlinear-PI consensus laws and the augmented closed-loop vector fields.

Every agent is scalar.  The integral terms of the controllers are carried as
extra ODE states so the control laws are memoryless functions of the
augmented state:

single integrator (SI), per agent ``i`` with ``e = L x``::

    S  = x^2/2 + l1 z1 + l2 z2^2/2
    u  = S cos(S) e (l1 x e + l2 z2)
    x' = b u,  z1' = (x e)^2,  z2' = x e

double integrator (DI), with ``q = v + rho x`` and ``r = L v + rho L x``::

    R  = q^2/2 + rho x^2/2 + zb1 + l2 zb2^2/2
    u  = R cos(R) [(rho + 1) v + r (l1 q r + l2 zb2)]
    x' = v,  v' = b u,  zb1' = l1 (q r)^2 + v^2,  zb2' = q r

The gains ``b`` enter only through the ``*_rhs`` functions; the control
functions never see them.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class ControllerParams:
    lambda1: float
    lambda2: float
    rho: float | None = None

    def __post_init__(self):
        if not self.lambda1 > 0:
            raise ValueError(f"lambda1 must be positive, got {self.lambda1}")
        if not self.lambda2 > 0:
            raise ValueError(f"lambda2 must be positive, got {self.lambda2}")
        if self.rho is not None and not self.rho > 0:
            raise ValueError(f"rho must be positive, got {self.rho}")

    def require_rho(self) -> float:
        if self.rho is None:
            raise ValueError("double-integrator control needs rho")
        return self.rho


def gain_vector(b) -> np.ndarray:
    b = np.asarray(b, dtype=float)
    if b.ndim != 1:
        raise ValueError("gains must be a 1-D array")
    if np.any(b == 0) or not np.all(np.isfinite(b)):
        raise ValueError("every gain must be finite and nonzero")
    return b


@dataclass
class SIAugmentedState:
    x: np.ndarray
    z1: np.ndarray
    z2: np.ndarray

    @property
    def n(self) -> int:
        return len(self.x)

    def pack(self) -> np.ndarray:
        return np.concatenate([self.x, self.z1, self.z2])

    @classmethod
    def unpack(cls, y: np.ndarray) -> "SIAugmentedState":
        x, z1, z2 = np.split(np.asarray(y, dtype=float), 3)
        return cls(x, z1, z2)

    @classmethod
    def initial(cls, x0) -> "SIAugmentedState":
        x0 = np.asarray(x0, dtype=float)
        return cls(x0.copy(), np.zeros_like(x0), np.zeros_like(x0))


@dataclass
class DIAugmentedState:
    x: np.ndarray
    v: np.ndarray
    zbar1: np.ndarray
    zbar2: np.ndarray

    @property
    def n(self) -> int:
        return len(self.x)

    def pack(self) -> np.ndarray:
        return np.concatenate([self.x, self.v, self.zbar1, self.zbar2])

    @classmethod
    def unpack(cls, y: np.ndarray) -> "DIAugmentedState":
        return cls(*np.split(np.asarray(y, dtype=float), 4))

    @classmethod
    def initial(cls, x0, v0) -> "DIAugmentedState":
        x0 = np.asarray(x0, dtype=float)
        v0 = np.asarray(v0, dtype=float)
        if x0.shape != v0.shape:
            raise ValueError("x0 and v0 must have the same length")
        return cls(x0.copy(), v0.copy(), np.zeros_like(x0), np.zeros_like(x0))


def neighborhood_errors(l: np.ndarray, y: np.ndarray) -> np.ndarray:
    """``sum_k a_ik (y_i - y_k)`` for every agent, i.e. ``L y``."""
    l = np.asarray(l, dtype=float)
    y = np.asarray(y, dtype=float)
    if l.ndim != 2 or l.shape[1] != y.shape[0]:
        raise ValueError(f"dimension mismatch: L is {l.shape}, y has {y.shape[0]} entries")
    return l @ y


# single integrator --------------------------------------------------------------


def si_nussbaum_value(x_i, z1_i, z2_i, p: ControllerParams):
    return 0.5 * x_i**2 + p.lambda1 * z1_i + 0.5 * p.lambda2 * z2_i**2


def si_controls(st: SIAugmentedState, e: np.ndarray, p: ControllerParams) -> np.ndarray:
    s = si_nussbaum_value(st.x, st.z1, st.z2, p)
    return s * np.cos(s) * e * (p.lambda1 * st.x * e + p.lambda2 * st.z2)


def si_control(i: int, st: SIAugmentedState, e: np.ndarray, p: ControllerParams) -> float:
    s = si_nussbaum_value(st.x[i], st.z1[i], st.z2[i], p)
    return float(s * np.cos(s) * e[i] * (p.lambda1 * st.x[i] * e[i] + p.lambda2 * st.z2[i]))


def si_field(y: np.ndarray, l: np.ndarray, b: np.ndarray, lambda1, lambda2) -> np.ndarray:
    """Closed-loop SI vector field on the packed state ``[x, z1, z2]``.

    ``y`` may carry leading batch axes; ``b`` and the lambdas broadcast
    against them.
    """
    n = l.shape[0]
    x = y[..., :n]
    z1 = y[..., n : 2 * n]
    z2 = y[..., 2 * n :]
    e = x @ l.T
    xe = x * e
    s = 0.5 * x * x + lambda1 * z1 + 0.5 * lambda2 * z2 * z2
    u = s * np.cos(s) * e * (lambda1 * xe + lambda2 * z2)
    return np.concatenate((b * u, xe * xe, xe), axis=-1)


def si_rhs(st: SIAugmentedState, l: np.ndarray, b, p: ControllerParams) -> SIAugmentedState:
    b = gain_vector(b)
    if not (st.n == b.shape[0] == np.shape(l)[0]):
        raise ValueError("state, gains and Laplacian disagree on the agent count")
    return SIAugmentedState.unpack(si_field(st.pack(), np.asarray(l, dtype=float), b, p.lambda1, p.lambda2))


# double integrator --------------------------------------------------------------


def di_nussbaum_value(st: DIAugmentedState, i, p: ControllerParams):
    """``R_i``; pass ``i = slice(None)`` for every agent at once."""
    rho = p.require_rho()
    x, v = st.x[i], st.v[i]
    q = v + rho * x
    return 0.5 * q**2 + 0.5 * rho * x**2 + st.zbar1[i] + 0.5 * p.lambda2 * st.zbar2[i] ** 2


def _di_terms(st: DIAugmentedState, l: np.ndarray, p: ControllerParams):
    rho = p.require_rho()
    q = st.v + rho * st.x
    r = neighborhood_errors(l, st.v) + rho * neighborhood_errors(l, st.x)
    return q, r


def di_controls(st: DIAugmentedState, l: np.ndarray, p: ControllerParams) -> np.ndarray:
    q, r = _di_terms(st, l, p)
    rr = di_nussbaum_value(st, slice(None), p)
    return rr * np.cos(rr) * ((p.rho + 1) * st.v + r * (p.lambda1 * q * r + p.lambda2 * st.zbar2))


def di_control(i: int, st: DIAugmentedState, l: np.ndarray, p: ControllerParams) -> float:
    return float(di_controls(st, l, p)[i])


def di_products(st: DIAugmentedState, l: np.ndarray, p: ControllerParams) -> np.ndarray:
    """``q_i r_i`` for every agent."""
    q, r = _di_terms(st, l, p)
    return q * r


def di_field(y: np.ndarray, l: np.ndarray, b: np.ndarray, lambda1, lambda2, rho) -> np.ndarray:
    """Closed-loop DI vector field on the packed state ``[x, v, zb1, zb2]``.

    Batch axes broadcast as in :func:`si_field`.
    """
    n = l.shape[0]
    x = y[..., :n]
    v = y[..., n : 2 * n]
    zb1 = y[..., 2 * n : 3 * n]
    zb2 = y[..., 3 * n :]
    q = v + rho * x
    r = q @ l.T
    qr = q * r
    big_r = 0.5 * q * q + 0.5 * rho * x * x + zb1 + 0.5 * lambda2 * zb2 * zb2
    u = big_r * np.cos(big_r) * ((rho + 1.0) * v + r * (lambda1 * qr + lambda2 * zb2))
    return np.concatenate((v, b * u, lambda1 * qr * qr + v * v, qr), axis=-1)


def di_rhs(st: DIAugmentedState, l: np.ndarray, b, p: ControllerParams) -> DIAugmentedState:
    b = gain_vector(b)
    if not (st.n == b.shape[0] == np.shape(l)[0]):
        raise ValueError("state, gains and Laplacian disagree on the agent count")
    y = di_field(st.pack(), np.asarray(l, dtype=float), b, p.lambda1, p.lambda2, p.require_rho())
    return DIAugmentedState.unpack(y)
