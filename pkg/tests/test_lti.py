import math

import numpy as np
import pytest
import scipy.linalg
from hypothesis import given, settings
from hypothesis import strategies as st

from resetff.lti import (
    ContinuousStateSpace,
    ImproperError,
    NotHurwitzError,
    TransferFunction,
    freq_response,
    lyap_solve,
    series,
    tf_to_ss,
    tustin,
    zoh,
)


def integrator():
    return tf_to_ss(TransferFunction([1.0], [1.0, 0.0]))


def test_tf_to_ss_integrator():
    ss = integrator()
    assert ss.A.tolist() == [[0.0]]
    assert ss.B.tolist() == [[1.0]]
    assert ss.C.tolist() == [[1.0]]
    assert ss.D == 0.0


def test_tf_to_ss_gain():
    ss = tf_to_ss(TransferFunction([2.5], [1.0]))
    assert ss.n == 0
    assert ss.D == 2.5


def test_tf_to_ss_plant(plant_tf):
    ss = tf_to_ss(plant_tf)
    np.testing.assert_array_equal(ss.A, [[0.0, 1.0], [-7443.0, -5.886]])
    np.testing.assert_array_equal(ss.B, [[0.0], [1.0]])
    np.testing.assert_array_equal(ss.C, [[8760.0, 0.0]])
    assert ss.D == 0.0
    for w in 2 * np.pi * np.logspace(0, np.log10(500), 20):
        s = 1j * w
        direct = 8760.0 / (s**2 + 5.886 * s + 7443.0)
        assert abs(freq_response(ss, w) - direct) / abs(direct) < 1e-9


def test_improper_rejected():
    with pytest.raises(ImproperError, match="improper"):
        TransferFunction([1.0, 0.0, 0.0], [1.0, 1.0])


def test_zero_denominator_rejected():
    with pytest.raises(ValueError):
        TransferFunction([1.0], [0.0, 0.0])


def test_biproper_feedthrough():
    # (2s + 3)/(s + 1) = 2 + 1/(s + 1)
    ss = tf_to_ss(TransferFunction([2.0, 3.0], [1.0, 1.0]))
    assert ss.D == 2.0
    assert freq_response(ss, 0.0) == pytest.approx(3.0)


@settings(max_examples=60, deadline=None)
@given(
    den=st.lists(st.floats(0.5, 2.0), min_size=1, max_size=5),
    num=st.lists(st.floats(-2.0, 2.0), min_size=1, max_size=6),
    seed=st.integers(0, 2**31),
)
def test_realization_fidelity(den, num, seed):
    den = [1.0] + den
    num = num[: len(den)]
    if not any(num):
        num = [1.0]
    tf = TransferFunction(num, den)
    ss = tf_to_ss(tf)
    rng = np.random.default_rng(seed)
    poles = np.roots(tf.den)
    for w in rng.uniform(0.05, 20.0, 20):
        if np.min(np.abs(poles - 1j * w)) < 1e-3:
            continue
        ref = tf(1j * w)
        if abs(ref) < 1e-6:
            continue
        assert abs(freq_response(ss, w) - ref) <= 1e-9 * abs(ref)


def test_series_identity(plant):
    one = ContinuousStateSpace.gain(1.0)
    g = series(plant, one)
    for w in (1.0, 30.0, 300.0):
        assert freq_response(g, w) == pytest.approx(freq_response(plant, w), rel=1e-12)


def test_series_double_integrator():
    g = series(integrator(), integrator())
    for w in (0.1, 1.0, 10.0):
        assert freq_response(g, w) == pytest.approx(1.0 / (1j * w) ** 2, rel=1e-12)


def test_series_gains():
    g = series(ContinuousStateSpace.gain(2.0), ContinuousStateSpace.gain(3.0))
    assert g.n == 0 and g.D == 6.0


def test_series_rejects_mixed_time_domains():
    with pytest.raises(TypeError):
        series(integrator(), tustin(integrator(), 0.1))


def test_tustin_integrator():
    Ts = 1e-3
    d = tustin(integrator(), Ts)
    w = (2 * np.pi / Ts) / 100
    z = np.exp(1j * w * Ts)
    ref = Ts / 2 * (z + 1) / (z - 1)
    assert abs(freq_response(d, w) - ref) / abs(ref) < 1e-9


def test_tustin_gain():
    d = tustin(ContinuousStateSpace.gain(4.0), 1e-4)
    assert d.n == 0 and d.D == 4.0


def test_tustin_lowpass_magnitude():
    wr = 2 * np.pi * 25
    lpf = tf_to_ss(TransferFunction([wr], [1.0, wr]))
    d = tustin(lpf, 1e-4)
    assert abs(abs(freq_response(d, wr)) / abs(freq_response(lpf, wr)) - 1) < 1e-3


def test_tustin_preserves_dc(plant):
    assert freq_response(tustin(plant, 1e-4), 0.0) == pytest.approx(8760 / 7443, rel=1e-12)


def test_tustin_singular_rejected():
    # pole at s = 2/Ts makes I - A Ts/2 singular
    ss = ContinuousStateSpace([[20.0]], [[1.0]], [[1.0]], 0.0)
    with pytest.raises(np.linalg.LinAlgError):
        tustin(ss, 0.1)


def test_zoh_integrator():
    d = zoh(integrator(), 0.01)
    assert d.A.item() == pytest.approx(1.0)
    assert d.B.item() == pytest.approx(0.01)


def test_zoh_scalar_decay():
    a, Ts = 3.0, 0.05
    d = zoh(ContinuousStateSpace([[-a]], [[1.0]], [[1.0]], 0.0), Ts)
    series_exp = sum((-a * Ts) ** k / math.factorial(k) for k in range(30))
    assert abs(d.A.item() - series_exp) < 1e-12
    assert d.B.item() == pytest.approx((1 - np.exp(-a * Ts)) / a, rel=1e-12)


def test_zoh_zero_matrix():
    B = np.array([[1.0], [2.0]])
    d = zoh(ContinuousStateSpace(np.zeros((2, 2)), B, [[1.0, 0.0]], 0.0), 0.2)
    np.testing.assert_allclose(d.A, np.eye(2), atol=1e-15)
    np.testing.assert_allclose(d.B, 0.2 * B, rtol=1e-14)


def _rk4_hold(ss, x, u, h, n):
    f = lambda x: ss.A @ x + ss.B[:, 0] * u
    for _ in range(n):
        k1 = f(x)
        k2 = f(x + h / 2 * k1)
        k3 = f(x + h / 2 * k2)
        k4 = f(x + h * k3)
        x = x + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
    return x


def test_zoh_matches_fine_rk4(plant, rng):
    Ts = 1e-4
    d = zoh(plant, Ts)
    u = rng.normal(size=1000)
    x_z = np.zeros(2)
    x_r = np.zeros(2)
    y_z, y_r = [], []
    for uk in u:
        x_z = d.A @ x_z + d.B[:, 0] * uk
        x_r = _rk4_hold(plant, x_r, uk, Ts / 100, 100)
        y_z.append(plant.C[0] @ x_z)
        y_r.append(plant.C[0] @ x_r)
    y_z, y_r = np.array(y_z), np.array(y_r)
    assert np.max(np.abs(y_z - y_r)) / np.max(np.abs(y_r)) < 1e-6


@pytest.mark.parametrize("A,Q,P", [([[-1.0]], [[2.0]], [[1.0]]), ([[-1.0]], [[1.0]], [[0.5]])])
def test_lyap_scalar(A, Q, P):
    np.testing.assert_allclose(lyap_solve(A, Q), P, rtol=1e-14)


def test_lyap_random_stable():
    rng = np.random.default_rng(7)
    M = rng.normal(size=(3, 3))
    A = M - (np.max(np.linalg.eigvals(M).real) + 1.0) * np.eye(3)
    Q = np.eye(3) + 0.1 * np.ones((3, 3))
    P = lyap_solve(A, Q)
    assert np.linalg.norm(A.T @ P + P @ A + Q) < 1e-8 * np.linalg.norm(Q)
    assert np.min(np.linalg.eigvalsh(P)) > 0
    np.testing.assert_allclose(P, P.T, atol=0)
    # independent solver agrees
    np.testing.assert_allclose(P, scipy.linalg.solve_continuous_lyapunov(A.T, -Q), rtol=1e-10)


def test_lyap_rejects_unstable():
    with pytest.raises(NotHurwitzError, match="not Hurwitz") as info:
        lyap_solve([[0.5, 0.0], [0.0, -1.0]], np.eye(2))
    assert np.max(info.value.eigenvalues.real) == pytest.approx(0.5)


def test_freq_response_examples(plant):
    assert freq_response(integrator(), 1.0) == pytest.approx(-1j)
    assert freq_response(plant, 1e-6) == pytest.approx(8760 / 7443, rel=1e-9)
    assert freq_response(ContinuousStateSpace.gain(3.0), 77.0) == 3.0 + 0j


def test_freq_response_at_pole_rejected():
    with pytest.raises(np.linalg.LinAlgError):
        freq_response(integrator(), 0.0)
