"""Continuous and discrete SISO LTI systems.

Realization, interconnection, discretization, frequency response and a
small dense Lyapunov solver. Everything here is pure: inputs are never
mutated and results are fresh arrays.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

HURWITZ_TOL = 1e-9


class ImproperError(ValueError):
    """Raised for a transfer function with more zeros than poles."""


class NotHurwitzError(ValueError):
    """Raised when a matrix required to be Hurwitz has an eigenvalue with
    real part >= -HURWITZ_TOL."""

    def __init__(self, eigenvalues):
        self.eigenvalues = np.asarray(eigenvalues)
        worst = self.eigenvalues[np.argmax(self.eigenvalues.real)]
        super().__init__(
            f"matrix is not Hurwitz: max real part {worst.real:.6g} "
            f"(eigenvalues: {np.array2string(self.eigenvalues, precision=4)})"
        )


def _trim(coeffs) -> np.ndarray:
    c = np.atleast_1d(np.asarray(coeffs, dtype=float))
    nz = np.flatnonzero(c)
    if nz.size == 0:
        return np.zeros(1)
    return c[nz[0]:]


@dataclass(frozen=True)
class TransferFunction:
    """Ratio of two polynomials, coefficients highest degree first."""

    num: np.ndarray
    den: np.ndarray

    def __post_init__(self):
        num, den = _trim(self.num), _trim(self.den)
        if not np.any(den):
            raise ValueError("denominator is identically zero")
        if np.any(num) and num.size > den.size:
            raise ImproperError(
                f"improper transfer function: deg(num)={num.size - 1} > deg(den)={den.size - 1}"
            )
        object.__setattr__(self, "num", num)
        object.__setattr__(self, "den", den)

    @property
    def order(self) -> int:
        return self.den.size - 1

    def __call__(self, s):
        return np.polyval(self.num, s) / np.polyval(self.den, s)

    def __mul__(self, other: "TransferFunction") -> "TransferFunction":
        return TransferFunction(np.polymul(self.num, other.num), np.polymul(self.den, other.den))

    @classmethod
    def gain(cls, k: float) -> "TransferFunction":
        return cls([k], [1.0])


@dataclass(frozen=True)
class StateSpace:
    A: np.ndarray
    B: np.ndarray
    C: np.ndarray
    D: float

    def __post_init__(self):
        A = np.atleast_2d(np.asarray(self.A, dtype=float))
        n = 0 if A.size == 0 else A.shape[0]
        A = A.reshape(n, n) if A.size == 0 else A
        if A.shape != (n, n):
            raise ValueError(f"A must be square, got shape {A.shape}")
        B = np.asarray(self.B, dtype=float).reshape(n, 1)
        C = np.asarray(self.C, dtype=float).reshape(1, n)
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "B", B)
        object.__setattr__(self, "C", C)
        object.__setattr__(self, "D", float(np.asarray(self.D, dtype=float).reshape(())))

    @property
    def n(self) -> int:
        return self.A.shape[0]


@dataclass(frozen=True)
class ContinuousStateSpace(StateSpace):
    """dx/dt = A x + B u,  y = C x + D u."""

    @classmethod
    def gain(cls, k: float) -> "ContinuousStateSpace":
        return cls(np.zeros((0, 0)), np.zeros((0, 1)), np.zeros((1, 0)), k)


@dataclass(frozen=True)
class DiscreteStateSpace(StateSpace):
    """x[k+1] = A x[k] + B u[k],  y[k] = C x[k] + D u[k], sampled every Ts."""

    Ts: float = 1.0

    def __post_init__(self):
        super().__post_init__()
        if not self.Ts > 0:
            raise ValueError(f"sampling period must be positive, got {self.Ts}")


def tf_to_ss(tf: TransferFunction) -> ContinuousStateSpace:
    """Controllable canonical realization of a proper transfer function.

    The state is x = [z, z', ..., z^(n-1)] with a(s) z = u, so the last row
    of A carries the negated, monic denominator coefficients.

    Examples
    --------
    >>> ss = tf_to_ss(TransferFunction([8760.0], [1.0, 5.886, 7443.0]))
    >>> ss.A.tolist(), ss.C.tolist()
    ([[0.0, 1.0], [-7443.0, -5.886]], [[8760.0, 0.0]])
    """
    lead = tf.den[0]
    den = tf.den / lead
    n = den.size - 1
    num = np.concatenate([np.zeros(n + 1 - tf.num.size), tf.num / lead])
    d = num[0]
    # strictly proper remainder, highest degree first, length n
    rem = num[1:] - d * den[1:]
    A = np.zeros((n, n))
    if n:
        A[:-1, 1:] = np.eye(n - 1)
        A[-1, :] = -den[1:][::-1]
    B = np.zeros((n, 1))
    if n:
        B[-1, 0] = 1.0
    C = rem[::-1].reshape(1, n)
    return ContinuousStateSpace(A, B, C, d)


def series(first: StateSpace, second: StateSpace) -> StateSpace:
    """Cascade ``first`` into ``second`` (y = second(first(u))).

    The state of the result is [x_first, x_second]. Discrete operands must
    share a sampling period; the result has the type of ``first``.
    """
    if isinstance(first, DiscreteStateSpace) != isinstance(second, DiscreteStateSpace):
        raise TypeError("cannot cascade a continuous and a discrete system")
    n1, n2 = first.n, second.n
    A = np.zeros((n1 + n2, n1 + n2))
    A[:n1, :n1] = first.A
    A[n1:, :n1] = second.B @ first.C
    A[n1:, n1:] = second.A
    B = np.vstack([first.B, second.B * first.D])
    C = np.hstack([second.D * first.C, second.C])
    D = second.D * first.D
    if isinstance(first, DiscreteStateSpace):
        if not np.isclose(first.Ts, second.Ts, rtol=1e-12, atol=0):
            raise ValueError(f"sampling periods differ: {first.Ts} vs {second.Ts}")
        return DiscreteStateSpace(A, B, C, D, Ts=first.Ts)
    return ContinuousStateSpace(A, B, C, D)


def series_all(*systems: StateSpace) -> StateSpace:
    out = systems[0]
    for s in systems[1:]:
        out = series(out, s)
    return out


def tustin(sys: ContinuousStateSpace, Ts: float) -> DiscreteStateSpace:
    """Bilinear discretization, s <- (2/Ts)(z-1)/(z+1)."""
    if not Ts > 0:
        raise ValueError(f"sampling period must be positive, got {Ts}")
    n = sys.n
    if n == 0:
        return DiscreteStateSpace(sys.A, sys.B, sys.C, sys.D, Ts=Ts)
    a = Ts / 2.0
    M = np.eye(n) - a * sys.A
    if np.linalg.cond(M) > 1e12:
        raise np.linalg.LinAlgError("I - A*Ts/2 is singular; Tustin map undefined")
    Minv = np.linalg.inv(M)
    Ad = Minv @ (np.eye(n) + a * sys.A)
    Bd = Minv @ sys.B * Ts
    Cd = sys.C @ Minv
    Dd = sys.D + a * (sys.C @ Minv @ sys.B).item()
    return DiscreteStateSpace(Ad, Bd, Cd, Dd, Ts=Ts)


def zoh(sys: ContinuousStateSpace, Ts: float) -> DiscreteStateSpace:
    """Zero-order-hold discretization via the augmented matrix exponential."""
    if not Ts > 0:
        raise ValueError(f"sampling period must be positive, got {Ts}")
    n = sys.n
    M = np.zeros((n + 1, n + 1))
    M[:n, :n] = sys.A
    M[:n, n:] = sys.B
    E = scipy.linalg.expm(M * Ts)
    return DiscreteStateSpace(E[:n, :n], E[:n, n:], sys.C, sys.D, Ts=Ts)


def is_hurwitz(A, tol: float = HURWITZ_TOL) -> bool:
    A = np.atleast_2d(A)
    return A.size == 0 or bool(np.all(np.linalg.eigvals(A).real < -tol))


def lyap_solve(A, Q) -> np.ndarray:
    """Solve A^T P + P A = -Q for symmetric P by Kronecker vectorization.

    Raises NotHurwitzError if A is not Hurwitz, since P would then not be
    positive definite.
    """
    A = np.atleast_2d(np.asarray(A, dtype=float))
    Q = np.atleast_2d(np.asarray(Q, dtype=float))
    n = A.shape[0]
    eig = np.linalg.eigvals(A)
    if np.any(eig.real >= -HURWITZ_TOL):
        raise NotHurwitzError(eig)
    I = np.eye(n)
    # column-major vec: vec(A^T P) = (I kron A^T) vec(P), vec(P A) = (A^T kron I) vec(P)
    K = np.kron(I, A.T) + np.kron(A.T, I)
    lu = scipy.linalg.lu_factor(K)
    P = np.zeros((n, n))
    # a few rounds of iterative refinement; canonical-form A is badly scaled
    for _ in range(4):
        R = A.T @ P + P @ A + Q
        res = np.linalg.norm(R)
        if res <= 1e-10 * np.linalg.norm(Q):
            break
        dP = scipy.linalg.lu_solve(lu, -R.reshape(-1, order="F")).reshape(n, n, order="F")
        P = P + 0.5 * (dP + dP.T)
    res = np.linalg.norm(A.T @ P + P @ A + Q)
    if res > 1e-8 * max(np.linalg.norm(Q), 1e-300):
        raise np.linalg.LinAlgError(f"Lyapunov residual {res:.3g} exceeds tolerance")
    return P


def freq_response(sys: StateSpace, omega: float) -> complex:
    """C (sI - A)^-1 B + D at s = j*omega, or z = exp(j*omega*Ts) for
    discrete systems."""
    if isinstance(sys, DiscreteStateSpace):
        s = np.exp(1j * omega * sys.Ts)
    else:
        s = 1j * omega
    if sys.n == 0:
        return complex(sys.D)
    R = s * np.eye(sys.n) - sys.A
    if np.linalg.cond(R) > 1e13:
        raise np.linalg.LinAlgError(f"omega={omega} is (numerically) a pole")
    return complex((sys.C @ np.linalg.solve(R, sys.B)).item() + sys.D)


def dc_gain(sys: StateSpace) -> float:
    return freq_response(sys, 0.0).real


def simulate_discrete(sys: DiscreteStateSpace, u, x0=None) -> np.ndarray:
    """Output sequence of a discrete system driven by ``u``."""
    u = np.asarray(u, dtype=float)
    x = np.zeros(sys.n) if x0 is None else np.array(x0, dtype=float)
    A, B, C, D = sys.A, sys.B[:, 0], sys.C[0], sys.D
    y = np.empty_like(u)
    for k, uk in enumerate(u):
        y[k] = C @ x + D * uk
        x = A @ x + B * uk
    return y
