"""Fixed-step simulation of plant + reset feedback + adaptive feedforward.

One call to :func:`run` executes, for every sample k (t = k Ts):

1. reference and its derivatives, regressor phi
2. measured output and error e = r - y
3. reset test on (e_k, e_{k-1}); on reset the controller state jumps and
   the parameter jump update fires with the induced control jump J
4. converging-region gate psi from the sign of the high-passed |e|
5. Euler flow update of theta driven by the (post-jump) feedback output
6. controller flow step, u = u_fb + theta' phi + d
7. ZOH plant step

The plant is ZOH-discretized, every filter Tustin-discretized.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .adaptive import AdaptiveConfig, FilteredRegressor, XiFilter, theta_star
from .controllers import ControllerKind, FeedbackController, make_preset
from .lti import TransferFunction, tf_to_ss, zoh

DIVERGENCE_LIMIT = 1e12

PLANT_NUM = (8760.0,)
PLANT_DEN = (1.0, 5.886, 7443.0)
DEFAULT_AMPLITUDE = 2000.0  # reference units; see README
OMEGA_C = 2 * np.pi * 100.0


def stage_plant() -> TransferFunction:
    return TransferFunction(PLANT_NUM, PLANT_DEN)


@dataclass(frozen=True)
class MultiSineSpec:
    amplitude: float = DEFAULT_AMPLITUDE
    frequencies: tuple[float, ...] = (1.0, 5.0, 14.0)  # Hz

    def derivatives(self, t, order: int = 2) -> np.ndarray:
        """Rows r, r', ..., r^(order) evaluated at ``t`` (scalar or array)."""
        t = np.asarray(t, dtype=float)
        out = np.zeros((order + 1,) + t.shape)
        for f in self.frequencies:
            w = 2 * np.pi * f
            s, c = np.sin(w * t), np.cos(w * t)
            # d^k/dt^k sin(wt) cycles through sin, cos, -sin, -cos
            cyc = (s, c, -s, -c)
            for k in range(order + 1):
                out[k] += w**k * cyc[k % 4]
        return self.amplitude * out


def reference_eval(spec: MultiSineSpec, t: float) -> tuple[float, float, float]:
    r, rd, rdd = spec.derivatives(t, 2)
    return float(r), float(rd), float(rdd)


@dataclass(frozen=True)
class SineSpec:
    amplitude: float
    frequency: float  # Hz

    def __call__(self, t):
        return self.amplitude * np.sin(2 * np.pi * self.frequency * np.asarray(t, dtype=float))


@dataclass
class SimScenario:
    controller: ControllerKind = ControllerKind.CGLP1_PID
    plant: TransferFunction = field(default_factory=stage_plant)
    omega_c: float = OMEGA_C
    gamma: float = 0.0
    adaptive: AdaptiveConfig | None = None
    reference: MultiSineSpec = field(default_factory=MultiSineSpec)
    disturbance: SineSpec | None = None
    noise_std: float = 0.0
    quantization: float = 0.0
    seed: int = 0
    duration: float = 60.0
    fs: float = 10000.0
    theta_0: np.ndarray | None = None
    ff_enabled: bool = True
    regressor: str = "direct"
    lambda_poly: tuple[float, ...] | None = None
    name: str = "scenario"

    def __post_init__(self):
        self.controller = ControllerKind(self.controller)
        if not self.fs > 0:
            raise ValueError(f"fs must be positive, got {self.fs}")
        if not self.duration > 0:
            raise ValueError(f"duration must be positive, got {self.duration}")
        if self.adaptive is None:
            self.adaptive = AdaptiveConfig.default_gains(self.controller.value, self.omega_c)
        if self.regressor not in ("direct", "filtered"):
            raise ValueError(f"unknown regressor {self.regressor!r}")
        if self.regressor == "filtered" and self.lambda_poly is None:
            raise ValueError("filtered regressor needs lambda_poly")

    @property
    def Ts(self) -> float:
        return 1.0 / self.fs

    @property
    def steps(self) -> int:
        return int(math.floor(self.fs * self.duration + 1e-9))


@dataclass
class TimeSeriesLog:
    t: np.ndarray
    r: np.ndarray
    e: np.ndarray
    u_fb: np.ndarray
    u_ff: np.ndarray
    u_total: np.ndarray
    y: np.ndarray
    theta: np.ndarray
    psi: np.ndarray
    did_reset: np.ndarray
    J: np.ndarray
    diverged: bool = False
    metadata: dict = field(default_factory=dict)

    def __len__(self):
        return self.t.size

    @property
    def reset_count(self) -> int:
        return int(np.count_nonzero(self.did_reset))

    def window(self, window) -> np.ndarray:
        t0, t1 = window
        if t0 < -1e-12 or (len(self) and t1 > self.t[-1] + 1.5 * self._dt()):
            raise ValueError(f"window {window} outside log range [0, {self.t[-1] if len(self) else 0}]")
        mask = (self.t >= t0 - 1e-9) & (self.t < t1 - 1e-9)
        if not mask.any():
            raise ValueError(f"window {window} contains no samples")
        return mask

    def final_window(self, seconds: float):
        end = len(self) * self._dt()
        return (end - seconds, end)

    def _dt(self) -> float:
        return self.metadata.get("Ts", self.t[1] - self.t[0] if len(self) > 1 else 1.0)


def build_controller(scenario: SimScenario) -> FeedbackController:
    return make_preset(scenario.controller, scenario.omega_c, tf_to_ss(scenario.plant), scenario.gamma)


def run(scenario: SimScenario, controller: FeedbackController | None = None) -> TimeSeriesLog:
    """Simulate ``scenario``; deterministic for a fixed seed.

    A run whose output or control exceeds 1e12 in magnitude (or becomes
    non-finite) stops early with ``diverged=True`` and a truncated log.
    """
    sc = scenario
    Ts = sc.Ts
    N = sc.steps
    cfg = sc.adaptive
    if controller is None:
        controller = build_controller(sc)
    dctrl = controller.discretize(Ts)
    Ac, Bc, Cc, Dc = dctrl.sys.A, dctrl.sys.B[:, 0], dctrl.sys.C[0], dctrl.sys.D
    jump = dctrl.jump
    has_reset = dctrl.has_reset

    plant = zoh(tf_to_ss(sc.plant), Ts)
    Ap, Bp, Cp = plant.A, plant.B[:, 0], plant.C[0]

    m = cfg.m
    t = np.arange(N) * Ts
    if sc.regressor == "direct":
        if m - 1 > 3:
            raise ValueError("direct regressor supports up to third derivatives")
        phis = sc.reference.derivatives(t, m - 1).T.copy()
        bank = None
    else:
        phis = None
        bank = FilteredRegressor(sc.lambda_poly, Ts)
        if bank.m != m:
            raise ValueError(f"filter bank has {bank.m} outputs, parameters have {m}")
    r_all = sc.reference.derivatives(t, 0)[0]
    d_all = sc.disturbance(t) if sc.disturbance is not None else np.zeros(N)
    rng = np.random.default_rng(sc.seed)
    noise = rng.normal(0.0, sc.noise_std, N) if sc.noise_std > 0 else None
    q = sc.quantization


    xi = XiFilter(cfg.omega_e, Ts, cfg.xi_deadband)
    GF = np.diag(cfg.Gamma_F).copy()
    GJ = np.diag(cfg.Gamma_J).copy()
    Pn = cfg.P_norm
    zeta = cfg.zeta
    beta = cfg.beta
    ff_on = sc.ff_enabled

    theta = np.zeros(m) if sc.theta_0 is None else np.array(sc.theta_0, dtype=float)
    if theta.shape != (m,):
        raise ValueError(f"theta_0 must have {m} entries")
    theta_J = np.zeros(m)
    w = np.zeros(dctrl.sys.n)
    xp = np.zeros(plant.n)

    log_r = np.empty(N)
    log_e = np.empty(N)
    log_ufb = np.empty(N)
    log_uff = np.empty(N)
    log_u = np.empty(N)
    log_y = np.empty(N)
    log_th = np.empty((N, m))
    log_psi = np.empty(N, dtype=np.int8)
    log_reset = np.zeros(N, dtype=bool)
    log_J = np.zeros(N)

    e_prev = 0.0
    diverged = False
    k_end = N
    for k in range(N):
        r = r_all[k]
        phi = phis[k] if bank is None else bank(r)

        y = Cp @ xp
        if noise is not None:
            y += noise[k]
        if q > 0:
            y = q * round(y / q)
        e = r - y

        if has_reset and k > 0 and (e == 0.0 or e * e_prev < 0.0):
            u_before = Cc @ w
            w = jump @ w
            J = Cc @ w - u_before
            theta = theta + GJ * abs(J) * theta_J
            theta_J = np.zeros(m)
            log_reset[k] = True
            log_J[k] = J

        ps = max(beta, xi(e))

        u_fb = Cc @ w + Dc * e
        if ps:
            g = (Ts * ps * u_fb / (phi @ Pn @ phi + zeta)) * phi
            theta = theta + GF * g
            theta_J = theta_J + g

        w = Ac @ w + Bc * e
        uff = theta @ phi if ff_on else 0.0
        u = u_fb + uff + d_all[k]
        xp = Ap @ xp + Bp * u

        log_r[k] = r
        log_e[k] = e
        log_ufb[k] = u_fb
        log_uff[k] = uff
        log_u[k] = u
        log_y[k] = y
        log_th[k] = theta
        log_psi[k] = ps
        e_prev = e
        if not (abs(u) <= DIVERGENCE_LIMIT and abs(y) <= DIVERGENCE_LIMIT):
            diverged = True
            k_end = k + 1
            break

    sl = slice(0, k_end)
    meta = {
        "name": sc.name,
        "Ts": Ts,
        "controller": controller.describe(),
        "ff_enabled": ff_on,
        "steps": k_end,
    }
    return TimeSeriesLog(
        t=t[sl], r=log_r[sl], e=log_e[sl], u_fb=log_ufb[sl], u_ff=log_uff[sl], u_total=log_u[sl],
        y=log_y[sl], theta=log_th[sl], psi=log_psi[sl], did_reset=log_reset[sl], J=log_J[sl],
        diverged=diverged, metadata=meta,
    )


def rms_error(log: TimeSeriesLog, window) -> float:
    e = log.e[log.window(window)]
    return float(np.sqrt(np.mean(e**2)))


def error_reduction(log_with_ff: TimeSeriesLog, log_without_ff: TimeSeriesLog, window) -> float:
    base = rms_error(log_without_ff, window)
    if base == 0.0:
        raise ValueError("baseline RMS error is zero; reduction undefined")
    return 1.0 - rms_error(log_with_ff, window) / base


def theta_convergence_error(log: TimeSeriesLog, theta_ref, window) -> float:
    """Mean relative parameter error ||theta(t) - theta_ref|| / ||theta_ref||."""
    theta_ref = np.asarray(theta_ref, dtype=float)
    nref = np.linalg.norm(theta_ref)
    if nref == 0.0:
        raise ValueError("reference parameter vector is zero")
    th = log.theta[log.window(window)]
    return float(np.mean(np.linalg.norm(th - theta_ref, axis=1)) / nref)


def time_to_converge(log: TimeSeriesLog, theta_ref, threshold: float) -> float:
    """First time the relative parameter error drops below ``threshold``;
    ``inf`` if it never does."""
    theta_ref = np.asarray(theta_ref, dtype=float)
    rel = np.linalg.norm(log.theta - theta_ref, axis=1) / np.linalg.norm(theta_ref)
    hit = np.flatnonzero(rel < threshold)
    return float(log.t[hit[0]]) if hit.size else math.inf


def ideal_parameters(scenario: SimScenario) -> np.ndarray:
    return theta_star(scenario.plant)
