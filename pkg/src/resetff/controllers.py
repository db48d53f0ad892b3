"""Feedback controller presets, closed-loop assembly and the quadratic
stability certificate for reset control loops."""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .lti import (
    ContinuousStateSpace,
    DiscreteStateSpace,
    NotHurwitzError,
    TransferFunction,
    freq_response,
    lyap_solve,
    series,
    series_all,
    tf_to_ss,
    tustin,
)
from .reset import ResetElement, make_ci, make_cglp_first_order

JUMP_TOL = 1e-9


class ControllerKind(str, enum.Enum):
    PID = "PID"
    CI_PID = "CI_PID"
    CGLP1_PID = "CGLP1_PID"
    CGLP2_PID = "CGLP2_PID"


# corner frequencies as multiples of the crossover frequency omega_c
PRESET_RATIOS = {
    ControllerKind.PID: dict(omega_i=1 / 10, omega_d=1 / 3, omega_t=3.0, omega_f=10.0),
    ControllerKind.CI_PID: dict(omega_i=1 / 10, omega_d=1 / 1.2, omega_t=1.2, omega_f=10.0),
    ControllerKind.CGLP1_PID: dict(
        omega_i=1 / 10, omega_d=1 / 1.4, omega_t=1.4, omega_f=10.0, omega_r=1 / 4, omega_ralpha=1 / 4 / 1.4
    ),
    ControllerKind.CGLP2_PID: dict(
        omega_i=1 / 10, omega_d=1 / 2.5, omega_t=2.5, omega_f=10.0, omega_r=1 / 1.1, omega_ralpha=1 / 1.1 / 1.4
    ),
}


def _check_order(**freqs):
    names = list(freqs)
    vals = [freqs[k] for k in names]
    if not (vals[0] > 0 and all(a < b for a, b in zip(vals, vals[1:]))):
        raise ValueError("need 0 < " + " < ".join(names) + f", got {vals}")


def _pi(omega_i: float, kp: float = 1.0) -> ContinuousStateSpace:
    return tf_to_ss(TransferFunction([kp, kp * omega_i], [1.0, 0.0]))


def _leadlag(omega_d: float, omega_t: float) -> ContinuousStateSpace:
    return tf_to_ss(TransferFunction([1 / omega_d, 1.0], [1 / omega_t, 1.0]))


def _lowpass(omega_f: float) -> ContinuousStateSpace:
    return tf_to_ss(TransferFunction([1.0], [1 / omega_f, 1.0]))


def make_pid(kp: float, omega_i: float, omega_d: float, omega_t: float, omega_f: float) -> ContinuousStateSpace:
    """Series loop-shaping PID

        kp (s + omega_i)/s * (1 + s/omega_d)/(1 + s/omega_t) * 1/(1 + s/omega_f)
    """
    _check_order(omega_i=omega_i, omega_d=omega_d, omega_t=omega_t, omega_f=omega_f)
    return series_all(_pi(omega_i, kp), _leadlag(omega_d, omega_t), _lowpass(omega_f))


@dataclass(frozen=True)
class ControllerPreset:
    kind: ControllerKind
    omega_c: float
    gamma: float = 0.0  # reset fraction for the resetting state(s)

    @property
    def frequencies(self) -> dict[str, float]:
        return {k: r * self.omega_c for k, r in PRESET_RATIOS[self.kind].items()}


@dataclass
class DiscreteController:
    """Sampled controller: one discrete system with a jump map over its state."""

    sys: DiscreteStateSpace
    jump: np.ndarray
    has_reset: bool


@dataclass(frozen=True)
class FeedbackController:
    """Reset element (optional) feeding a linear series part.

    The reset element sees the tracking error directly, so its reset
    condition is the error zero crossing; ``linear`` already includes kp.
    """

    kind: ControllerKind
    reset: ResetElement | None
    linear: ContinuousStateSpace
    kp: float
    frequencies: dict = field(default_factory=dict)

    @property
    def n(self) -> int:
        return self.base_linear().n

    def base_linear(self) -> ContinuousStateSpace:
        if self.reset is None:
            return self.linear
        return series(self.reset.base, self.linear)

    def jump_matrix(self) -> np.ndarray:
        n = self.n
        M = np.eye(n)
        if self.reset is not None:
            nr = self.reset.n
            M[:nr, :nr] = self.reset.jump_matrix
        return M

    def discretize(self, Ts: float) -> DiscreteController:
        lin = tustin(self.linear, Ts)
        if self.reset is None:
            return DiscreteController(lin, np.eye(lin.n), False)
        d = series(self.reset.discretize(Ts), lin)
        return DiscreteController(d, self.jump_matrix(), True)

    def describe(self) -> dict:
        out = {"kind": self.kind.value, "kp": self.kp}
        out.update(self.frequencies)
        if self.reset is not None:
            out["reset"] = self.reset.name
            out["A_rho"] = self.reset.A_rho.ravel().tolist()
        return out


def _shape(preset: ControllerPreset, kp: float):
    f = preset.frequencies
    kind = preset.kind
    if kind is ControllerKind.PID:
        return None, make_pid(kp, f["omega_i"], f["omega_d"], f["omega_t"], f["omega_f"])
    _check_order(omega_i=f["omega_i"], omega_d=f["omega_d"], omega_t=f["omega_t"], omega_f=f["omega_f"])
    if kind is ControllerKind.CI_PID:
        # the whole integrator of the PI factor resets; (s + omega_i) follows it
        reset = make_ci().with_gamma(preset.gamma)
        num = kp * np.polymul([1.0, f["omega_i"]], [1 / f["omega_d"], 1.0])
        den = np.polymul([1 / f["omega_t"], 1.0], [1 / f["omega_f"], 1.0])
        return reset, tf_to_ss(TransferFunction(num, den))
    # CgLp: the lead's pole is the PID low-pass at omega_f
    reset, lead = make_cglp_first_order(f["omega_ralpha"], f["omega_r"], f["omega_f"], preset.gamma)
    lead = ContinuousStateSpace(lead.A, lead.B, kp * lead.C, kp * lead.D)
    return reset, series_all(lead, _pi(f["omega_i"]), _leadlag(f["omega_d"], f["omega_t"]))


def make_preset(kind, omega_c: float, plant: ContinuousStateSpace, gamma: float = 0.0) -> FeedbackController:
    """Build a feedback preset with kp set so that the base linear loop
    gain is exactly 1 at ``omega_c``."""
    preset = ControllerPreset(ControllerKind(kind), omega_c, gamma)
    reset, linear = _shape(preset, 1.0)
    unit = FeedbackController(preset.kind, reset, linear, 1.0)
    L = freq_response(plant, omega_c) * freq_response(unit.base_linear(), omega_c)
    kp = 1.0 / abs(L)
    reset, linear = _shape(preset, kp)
    return FeedbackController(preset.kind, reset, linear, kp, preset.frequencies)


@dataclass(frozen=True)
class ClosedLoop:
    """Flow/jump data of plant + reset controller with reference input r."""

    flow_A: np.ndarray
    input_B: np.ndarray
    jump_map: np.ndarray
    output_C: np.ndarray
    n_plant: int


def assemble_closed_loop(plant: ContinuousStateSpace, controller_base: ContinuousStateSpace, controller_jump=None) -> ClosedLoop:
    """Interconnect plant and controller with e = r - y, u = controller(e).

    ``controller_jump`` is the jump map over the controller state (identity
    on non-resettable states); None means no resets at all. The plant is
    taken strictly proper.
    """
    if plant.D != 0.0:
        raise ValueError("plant must be strictly proper")
    Ap, Bp, Cp = plant.A, plant.B, plant.C
    Ac, Bc, Cc, Dc = controller_base.A, controller_base.B, controller_base.C, controller_base.D
    n_p, n_c = plant.n, controller_base.n
    if controller_jump is None:
        controller_jump = np.eye(n_c)
    controller_jump = np.atleast_2d(np.asarray(controller_jump, dtype=float))
    if controller_jump.shape != (n_c, n_c):
        raise ValueError(f"controller jump map must be {n_c}x{n_c}, got {controller_jump.shape}")
    A = np.block([[Ap - Dc * Bp @ Cp, Bp @ Cc], [-Bc @ Cp, Ac]])
    B = np.vstack([Bp * Dc, Bc])
    jump = scipy.linalg.block_diag(np.eye(n_p), controller_jump)
    C = np.hstack([Cp, np.zeros((1, n_c))])
    return ClosedLoop(A, B, jump, C, n_p)


def closed_loop(plant: ContinuousStateSpace, controller: FeedbackController) -> ClosedLoop:
    return assemble_closed_loop(plant, controller.base_linear(), controller.jump_matrix())


@dataclass(frozen=True)
class Certificate:
    ok: bool
    P: np.ndarray | None = None
    reason: str = ""
    worst_eigenvalue: float | None = None

    def __bool__(self):
        return self.ok


def stability_certificate(cl: ClosedLoop, Q=None) -> Certificate:
    """Try V(x) = x' P x with A' P + P A = -Q (Q = I by default).

    The Lyapunov equation is solved in diagonally balanced coordinates
    z = T^-1 x (Q refers to those); the returned P is in the original ones.

    The flow condition holds by construction when flow_A is Hurwitz. The
    jump condition V(A_rho x) <= V(x) is checked on the jump set, i.e. the
    subspace where the output (hence the error, with r = 0) is zero. A
    failure only means this quadratic V does not work.
    """
    n = cl.flow_A.shape[0]
    Q = np.eye(n) if Q is None else Q
    # diagonal similarity x = T z; realizations here span ~10 decades
    _, (t, _) = scipy.linalg.matrix_balance(cl.flow_A, permute=False, separate=True)
    A = cl.flow_A * t[None, :] / t[:, None]
    jump = cl.jump_map * t[None, :] / t[:, None]
    C = cl.output_C * t[None, :]
    try:
        Pz = lyap_solve(A, Q)
    except NotHurwitzError as exc:
        return Certificate(False, None, f"not-hurwitz: {exc}", float(np.max(exc.eigenvalues.real)))
    N = scipy.linalg.null_space(C)
    dV = N.T @ (jump.T @ Pz @ jump - Pz) @ N
    P = Pz / t[:, None] / t[None, :]
    worst = float(np.max(np.linalg.eigvalsh(0.5 * (dV + dV.T))))
    if worst > JUMP_TOL:
        return Certificate(False, P, "jump-violated", worst)
    return Certificate(True, P, "", worst)
