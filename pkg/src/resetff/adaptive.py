"""Adaptive feedforward: regressors, converging-region detection and the
flow/jump parameter update.

Parameters and regressors are stored lowest derivative first, so for a
second-order plant theta = [theta_k, theta_c, theta_m] pairs with
phi = [r, r', r''].
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .lti import TransferFunction, tf_to_ss, tustin

# Adaptation gains per feedback controller: (Gamma_F diagonal, Gamma_J diagonal)
DEFAULT_GAINS = {
    "PID": ((150000.0, 5.0, 1.0), (0.0, 0.0, 0.0)),
    "CI_PID": ((40000.0, 2.0, 0.2), (2.0, 0.0002, 0.00002)),
    "CGLP1_PID": ((100000.0, 3.0, 0.5), (5.0, 0.0001, 0.00005)),
    "CGLP2_PID": ((150000.0, 4.0, 0.5), (5.0, 0.00005, 0.00005)),
}


@dataclass
class AdaptiveState:
    theta: np.ndarray
    theta_J: np.ndarray

    def __post_init__(self):
        self.theta = np.asarray(self.theta, dtype=float)
        self.theta_J = np.asarray(self.theta_J, dtype=float)
        if self.theta.shape != self.theta_J.shape:
            raise ValueError("theta and theta_J must have the same shape")

    @classmethod
    def zeros(cls, m: int) -> "AdaptiveState":
        return cls(np.zeros(m), np.zeros(m))


def _diag(x, name):
    a = np.asarray(x, dtype=float)
    if a.ndim == 1:
        a = np.diag(a)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"{name} must be a square matrix or a diagonal vector")
    return a


@dataclass
class AdaptiveConfig:
    Gamma_F: np.ndarray
    Gamma_J: np.ndarray
    P_norm: np.ndarray = field(default_factory=lambda: np.diag([1000.0, 1.0, 1.0]))
    zeta: float = 1.0
    beta: int = 0
    omega_e: float = 2 * np.pi * 10.0
    xi_deadband: float = 0.0

    def __post_init__(self):
        self.Gamma_F = _diag(self.Gamma_F, "Gamma_F")
        self.Gamma_J = _diag(self.Gamma_J, "Gamma_J")
        self.P_norm = _diag(self.P_norm, "P_norm")
        for name in ("Gamma_F", "Gamma_J"):
            G = getattr(self, name)
            if np.any(G != np.diag(np.diag(G))) or np.any(np.diag(G) < 0):
                raise ValueError(f"{name} must be diagonal with non-negative entries")
        if np.min(np.linalg.eigvalsh(0.5 * (self.P_norm + self.P_norm.T))) < -1e-12:
            raise ValueError("P_norm must be positive semidefinite")
        if not self.zeta > 0:
            raise ValueError(f"zeta must be positive, got {self.zeta}")
        if self.beta not in (0, 1):
            raise ValueError(f"beta must be 0 or 1, got {self.beta}")
        if not self.omega_e > 0:
            raise ValueError(f"omega_e must be positive, got {self.omega_e}")
        m = self.Gamma_F.shape[0]
        if self.Gamma_J.shape != (m, m) or self.P_norm.shape != (m, m):
            raise ValueError("Gamma_F, Gamma_J and P_norm must have matching sizes")

    @property
    def m(self) -> int:
        return self.Gamma_F.shape[0]

    @classmethod
    def default_gains(cls, controller: str, omega_c: float, **kw) -> "AdaptiveConfig":
        gf, gj = DEFAULT_GAINS[controller]
        kw.setdefault("omega_e", omega_c / 10)
        return cls(np.diag(gf), np.diag(gj), **kw)


def phi_direct(derivatives) -> np.ndarray:
    """Regressor from known reference derivatives given highest first,
    ``[r^(n), ..., r', r]``; returned lowest first as ``[r, r', ..., r^(n)]``."""
    d = np.asarray(derivatives, dtype=float)
    if d.ndim != 1 or d.size < 1:
        raise ValueError("need a non-empty 1-D sequence of derivatives")
    return d[::-1].copy()


class FilteredRegressor:
    """Regressor [1/L, s/L, ..., s^n/L] r for a stable order-n polynomial L,
    each filter Tustin-discretized at Ts."""

    def __init__(self, lam, Ts: float):
        lam = np.asarray(lam, dtype=float)
        n = lam.size - 1
        if n < 1:
            raise ValueError("filter polynomial must have degree >= 1")
        if np.any(np.roots(lam).real >= 0):
            raise ValueError(f"filter polynomial {lam.tolist()} is not stable")
        fs = []
        for k in range(n + 1):
            num = np.zeros(k + 1)
            num[0] = 1.0
            fs.append(tustin(tf_to_ss(TransferFunction(num, lam)), Ts))
        self.filters = fs
        self.states = [np.zeros(f.n) for f in fs]

    @property
    def m(self) -> int:
        return len(self.filters)

    def __call__(self, r: float) -> np.ndarray:
        out = np.empty(self.m)
        for k, (f, x) in enumerate(zip(self.filters, self.states)):
            out[k] = (f.C @ x).item() + f.D * r
            self.states[k] = f.A @ x + f.B[:, 0] * r
        return out


def phi_filtered(r_sample: float, bank: FilteredRegressor) -> np.ndarray:
    return bank(r_sample)


def normalize(phi, P_norm, zeta: float) -> np.ndarray:
    phi = np.asarray(phi, dtype=float)
    return phi / (phi @ P_norm @ phi + zeta)


class XiFilter:
    """Sign of the high-passed absolute error, omega_e s/(s + omega_e) |e|.

    Returns +1 while |e| is (filtered) increasing, -1 while decreasing and 0
    inside the deadband.
    """

    def __init__(self, omega_e: float, Ts: float, deadband: float = 0.0):
        if not omega_e > 0:
            raise ValueError(f"omega_e must be positive, got {omega_e}")
        d = tustin(tf_to_ss(TransferFunction([1.0, 0.0], [1.0 / omega_e, 1.0])), Ts)
        self.a, self.b, self.c, self.d = d.A.item(), d.B.item(), d.C.item(), d.D
        self.x = 0.0
        self.deadband = deadband

    def __call__(self, e: float) -> int:
        ae = abs(e)
        out = self.c * self.x + self.d * ae
        self.x = self.a * self.x + self.b * ae
        if out > self.deadband:
            return 1
        if out < -self.deadband:
            return -1
        return 0


def xi_update(e_sample: float, xi_filter: XiFilter) -> int:
    return xi_filter(e_sample)


def psi(beta: int, xi: int) -> int:
    return max(beta, xi)


def flow_update(state: AdaptiveState, psi_value, u_fb, phi_n, Gamma_F, Ts) -> AdaptiveState:
    """Forward-Euler step of the gated gradient flow."""
    g = Ts * psi_value * u_fb * np.asarray(phi_n, dtype=float)
    return AdaptiveState(state.theta + np.diag(Gamma_F) * g, state.theta_J + g)


def jump_update(state: AdaptiveState, J: float, Gamma_J) -> AdaptiveState:
    """Apply the accumulated flow direction scaled by the control jump size,
    then clear the accumulator."""
    theta = state.theta + np.diag(Gamma_J) * abs(J) * state.theta_J
    return AdaptiveState(theta, np.zeros_like(state.theta_J))


def u_ff(theta, phi) -> float:
    return float(np.dot(theta, phi))


def theta_star(plant: TransferFunction) -> np.ndarray:
    """Ideal feedforward parameters den(s)/num of a zero-free plant, lowest
    power of s first."""
    if plant.num.size != 1:
        raise ValueError(f"plant has zeros (numerator {plant.num.tolist()}); only poles are parametrized")
    return (plant.den / plant.num[0])[::-1].copy()
