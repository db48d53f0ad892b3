"""Reset elements and their sampled hybrid stepping.

A reset element is a base linear system whose (masked) states are mapped
through ``A_rho`` whenever its input error crosses zero. Stepping is done
on the Tustin discretization of the base system; the jump acts directly on
the discrete state, before the flow advance of the same sample.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .lti import ContinuousStateSpace, DiscreteStateSpace, TransferFunction, tf_to_ss, tustin


def is_schur(A_rho) -> bool:
    """True iff every eigenvalue of ``A_rho`` lies strictly inside the unit circle."""
    A = np.atleast_2d(np.asarray(A_rho, dtype=float))
    return A.size == 0 or bool(np.all(np.abs(np.linalg.eigvals(A)) < 1.0))


def is_reset_instant(e: float, e_prev: float) -> bool:
    """Sampled zero-crossing test: exact zero, or a strict sign change."""
    return e == 0.0 or e * e_prev < 0.0


def effective_jump(A_rho, mask) -> np.ndarray:
    """Jump matrix over all states: ``A_rho`` on masked states, identity elsewhere."""
    A_rho = np.atleast_2d(np.asarray(A_rho, dtype=float))
    mask = np.asarray(mask, dtype=bool)
    M = np.eye(mask.size)
    idx = np.flatnonzero(mask)
    M[np.ix_(idx, idx)] = A_rho[np.ix_(idx, idx)]
    return M


@dataclass(frozen=True)
class ResetElement:
    base: ContinuousStateSpace
    A_rho: np.ndarray
    reset_mask: np.ndarray
    name: str = "reset"
    _dcache: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        n = self.base.n
        A_rho = np.atleast_2d(np.asarray(self.A_rho, dtype=float))
        if A_rho.shape != (n, n):
            raise ValueError(f"A_rho must be {n}x{n}, got {A_rho.shape}")
        mask = np.asarray(self.reset_mask, dtype=bool).reshape(n)
        object.__setattr__(self, "A_rho", A_rho)
        object.__setattr__(self, "reset_mask", mask)

    @property
    def n(self) -> int:
        return self.base.n

    @property
    def jump_matrix(self) -> np.ndarray:
        return effective_jump(self.A_rho, self.reset_mask)

    @property
    def is_valid(self) -> bool:
        """Schur stability of the reset map restricted to the resettable states."""
        idx = np.flatnonzero(self.reset_mask)
        return is_schur(self.A_rho[np.ix_(idx, idx)])

    def discretize(self, Ts: float) -> DiscreteStateSpace:
        if Ts not in self._dcache:
            self._dcache[Ts] = tustin(self.base, Ts)
        return self._dcache[Ts]

    def with_gamma(self, gamma: float) -> "ResetElement":
        """Same element with A_rho = gamma * I on the resettable states."""
        return replace(self, A_rho=gamma * np.eye(self.n), _dcache={})


@dataclass
class ResetElementState:
    x_r: np.ndarray
    e_prev: float | None = None  # None until the first sample has been seen
    tau: float = 0.0

    @classmethod
    def zeros(cls, element: ResetElement) -> "ResetElementState":
        return cls(np.zeros(element.n))


def step(element: ResetElement, state: ResetElementState, e: float, Ts: float):
    """Advance the element by one sample.

    Returns ``(new_state, u, did_reset, J)`` where ``u`` is the output at
    this sample after any jump, and ``J`` the jump in output caused by the
    reset (zero when none fired). No reset fires on the very first sample.
    """
    d = element.discretize(Ts)
    x = state.x_r
    did_reset = state.e_prev is not None and is_reset_instant(e, state.e_prev)
    J = 0.0
    if did_reset:
        u_before = (d.C @ x).item() + d.D * e
        x = element.jump_matrix @ x
        u_after = (d.C @ x).item() + d.D * e
        J = u_after - u_before
    u = (d.C @ x).item() + d.D * e
    x_next = d.A @ x + d.B[:, 0] * e
    tau = 0.0 if did_reset else state.tau + Ts
    return ResetElementState(x_next, e, tau), u, did_reset, J


def make_ci() -> ResetElement:
    """Clegg integrator: a pure integrator reset to zero."""
    return ResetElement(ContinuousStateSpace([[0.0]], [[1.0]], [[1.0]], 0.0), [[0.0]], [True], name="CI")


def make_gfore(omega_r: float, gamma: float = 0.0) -> ResetElement:
    """Generalized first-order reset element; gamma=0 is plain FORE.

    ``gamma`` outside (-1, 1) is accepted; check ``is_valid`` before use.
    """
    if not omega_r > 0:
        raise ValueError(f"omega_r must be positive, got {omega_r}")
    base = ContinuousStateSpace([[-omega_r]], [[omega_r]], [[1.0]], 0.0)
    return ResetElement(base, [[gamma]], [True], name="GFORE")


def make_gsore(omega_r: float, beta_r: float, gamma: float = 0.0) -> ResetElement:
    if not omega_r > 0:
        raise ValueError(f"omega_r must be positive, got {omega_r}")
    if beta_r < 0:
        raise ValueError(f"beta_r must be non-negative, got {beta_r}")
    A = [[0.0, 1.0], [-omega_r**2, -2.0 * beta_r * omega_r]]
    base = ContinuousStateSpace(A, [[0.0], [omega_r**2]], [[1.0, 0.0]], 0.0)
    return ResetElement(base, gamma * np.eye(2), [True, True], name="GSORE")


def make_cglp_first_order(omega_ralpha: float, omega_r: float, omega_f: float, gamma: float = 0.0):
    """GFORE-based CgLp: resetting lag at ``omega_ralpha`` and the linear lead
    (s/omega_r + 1)/(s/omega_f + 1).

    Returns ``(reset_element, lead)``; only the GFORE state is resettable.
    """
    if not 0 < omega_ralpha < omega_r < omega_f:
        raise ValueError(
            f"need 0 < omega_ralpha < omega_r < omega_f, got {omega_ralpha}, {omega_r}, {omega_f}"
        )
    lead = tf_to_ss(TransferFunction([1.0 / omega_r, 1.0], [1.0 / omega_f, 1.0]))
    return make_gfore(omega_ralpha, gamma), lead
