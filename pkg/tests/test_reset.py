import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from resetff.lti import ContinuousStateSpace, freq_response, simulate_discrete, tf_to_ss, TransferFunction
from resetff.reset import (
    ResetElement,
    ResetElementState,
    is_reset_instant,
    is_schur,
    make_cglp_first_order,
    make_ci,
    make_gfore,
    make_gsore,
    step,
)

TS = 1e-4
WC = 2 * np.pi * 100


def drive(element, e_seq, Ts=TS, x0=None):
    state = ResetElementState.zeros(element)
    if x0 is not None:
        state.x_r = np.array(x0, dtype=float)
    out, resets, jumps, states = [], [], [], []
    for e in e_seq:
        state, u, did, J = step(element, state, e, Ts)
        out.append(u)
        resets.append(did)
        jumps.append(J)
        states.append(state.x_r.copy())
    return np.array(out), np.array(resets), np.array(jumps), np.array(states)


def test_ci_matrices():
    ci = make_ci()
    assert ci.base.A.item() == 0 and ci.base.B.item() == 1
    assert ci.base.C.item() == 1 and ci.base.D == 0
    assert ci.A_rho.item() == 0
    assert ci.reset_mask.tolist() == [True]


def test_ci_unit_step_ramps_to_one():
    u, resets, _, _ = drive(make_ci(), np.ones(10001))
    assert not resets.any()
    # trapezoidal rule puts the ramp half a sample early
    assert u[-1] == pytest.approx(1.0 + TS / 2, abs=1e-12)


def test_ci_jump_to_zero():
    ci = make_ci()
    state = ResetElementState(np.array([3.0]), e_prev=0.4)
    new, u, did, J = step(ci, state, 0.0, TS)
    assert did
    assert J == pytest.approx(-3.0)
    assert u == 0.0
    # post-jump state 0, no input, so the flow leaves it at 0
    assert new.x_r.tolist() == [0.0]
    assert new.tau == 0.0


def test_gfore_matrices():
    g = make_gfore(WC, 0.0)
    assert g.base.A.item() == -WC and g.base.B.item() == WC
    assert g.base.C.item() == 1 and g.base.D == 0
    assert g.A_rho.item() == 0


def test_gfore_half_jump():
    g = make_gfore(10.0, 0.5)
    state = ResetElementState(np.array([2.0]), e_prev=1.0)
    _, _, did, J = step(g, state, -1.0, TS)
    assert did
    C = g.discretize(TS).C.item()
    assert J == pytest.approx(C * (1.0 - 2.0), rel=1e-12)
    np.testing.assert_allclose(g.jump_matrix @ [2.0], [1.0])


def test_gfore_rejects_nonpositive():
    with pytest.raises(ValueError):
        make_gfore(0.0)
    with pytest.raises(ValueError):
        make_gsore(-1.0, 0.5)
    with pytest.raises(ValueError):
        make_gsore(1.0, -0.5)


def test_gfore_gamma_one_is_linear():
    g = make_gfore(WC, 1.0)
    e = np.sin(2 * np.pi * 50 * np.arange(2000) * TS)
    u, resets, J, _ = drive(g, e)
    assert resets.any()
    assert np.all(J == 0.0)
    np.testing.assert_array_equal(u, simulate_discrete(g.discretize(TS), e))


def test_gsore_matrices():
    g = make_gsore(3.0, 0.2, 0.0)
    np.testing.assert_allclose(g.base.A, [[0, 1], [-9.0, -1.2]], rtol=1e-15)
    np.testing.assert_array_equal(g.base.B, [[0], [9.0]])
    np.testing.assert_array_equal(g.base.C, [[1.0, 0.0]])
    assert g.base.D == 0


def test_gsore_zero_gamma_zeroes_both():
    g = make_gsore(3.0, 0.2, 0.0)
    np.testing.assert_array_equal(g.jump_matrix @ [1.5, -2.0], [0.0, 0.0])


def test_gsore_critical_damping():
    ev = np.linalg.eigvals(make_gsore(1.0, 1.0).base.A)
    np.testing.assert_allclose(ev, [-1.0, -1.0], atol=1e-7)


def test_cglp1_preset_values():
    wr = WC / 4
    reset, lead = make_cglp_first_order(wr / 1.4, wr, 10 * WC)
    assert reset.base.A.item() == pytest.approx(-WC / 4 / 1.4)
    assert reset.reset_mask.tolist() == [True]
    assert lead.n == 1
    assert freq_response(lead, 0.0) == pytest.approx(1.0)
    hf = abs(freq_response(lead, 1e9))
    assert hf == pytest.approx(10 * WC / wr, rel=1e-6)


def test_cglp_order_rejected():
    with pytest.raises(ValueError, match="omega_ralpha"):
        make_cglp_first_order(2.0, 1.0, 10.0)
    with pytest.raises(ValueError):
        make_cglp_first_order(0.5, 1.0, 1.0)


@pytest.mark.parametrize(
    "e,e_prev,expected",
    [(-0.1, 0.2, True), (0.1, 0.2, False), (0.0, 0.5, True), (0.3, -1e-12, True), (-0.3, -0.2, False)],
)
def test_is_reset_instant(e, e_prev, expected):
    assert is_reset_instant(e, e_prev) is expected


@pytest.mark.parametrize(
    "A,expected", [([[0.5]], True), ([[1.0]], False), (-0.3 * np.eye(2), True), ([[-1.0]], False)]
)
def test_is_schur(A, expected):
    assert is_schur(A) is expected


def test_validity_flag():
    assert make_gfore(1.0, 0.5).is_valid
    assert not make_gfore(1.0, 1.2).is_valid


def _sign_changes(e):
    # independent oracle over consecutive samples, first sample excluded
    return int(sum(1 for a, b in zip(e[:-1], e[1:]) if b == 0.0 or a * b < 0))


def test_ci_sine_reset_count():
    t = np.arange(10000) * TS
    e = np.sin(2 * np.pi * t)
    _, resets, _, _ = drive(make_ci(), e)
    assert resets.sum() == _sign_changes(e)
    assert not resets[0]


def test_ci_sine_two_resets_through_one_second():
    # the window includes the sample just after t = 1 s
    t = np.arange(10002) * TS
    e = np.sin(2 * np.pi * t)
    _, resets, _, _ = drive(make_ci(), e)
    assert resets.sum() == 2 == _sign_changes(e)
    when = t[resets]
    np.testing.assert_allclose(when, [0.5, 1.0], atol=2 * TS)


def test_first_sample_never_resets():
    _, resets, _, _ = drive(make_ci(), [0.0, 0.0, 1.0])
    assert resets.tolist() == [False, True, False]


def test_tau_bookkeeping():
    e = np.array([1.0, 1.0, -1.0, -1.0, -1.0])
    state = ResetElementState.zeros(make_ci())
    taus = []
    for v in e:
        state, *_ = step(make_ci(), state, v, TS)
        taus.append(state.tau)
    np.testing.assert_allclose(taus, [TS, 2 * TS, 0.0, TS, 2 * TS])


element_strategy = st.sampled_from(
    [
        lambda: make_ci(),
        lambda: make_gfore(50.0),
        lambda: make_gsore(80.0, 0.3),
        lambda: make_cglp_first_order(10.0, 14.0, 200.0)[0],
    ]
)


@settings(max_examples=40, deadline=None)
@given(make=element_strategy, e=st.lists(st.floats(-5, 5), min_size=2, max_size=200))
def test_no_reset_limit_bit_exact(make, e):
    el = make()
    ident = ResetElement(el.base, np.eye(el.n), el.reset_mask)
    u, _, J, _ = drive(ident, e)
    assert np.all(J == 0.0)
    np.testing.assert_array_equal(u, simulate_discrete(ident.discretize(TS), e))


@settings(max_examples=30, deadline=None)
@given(make=element_strategy, e_prev=st.floats(0.01, 3))
def test_zero_state_jump_idempotent(make, e_prev):
    el = make()
    state = ResetElementState(np.zeros(el.n), e_prev=e_prev)
    new, _, did, J = step(el, state, 0.0, TS)
    assert did and J == 0.0
    np.testing.assert_array_equal(new.x_r, np.zeros(el.n))


@settings(max_examples=50, deadline=None)
@given(
    x=st.lists(st.floats(-100, 100), min_size=3, max_size=3),
    mask=st.lists(st.booleans(), min_size=3, max_size=3),
    gamma=st.floats(-0.9, 0.9),
)
def test_mask_correctness(x, mask, gamma):
    base = tf_to_ss(TransferFunction([1.0], [1.0, 6.0, 11.0, 6.0]))
    el = ResetElement(base, gamma * np.eye(3), mask)
    post = el.jump_matrix @ np.array(x)
    for i, m in enumerate(mask):
        if not m:
            assert post[i] == x[i]
        else:
            assert post[i] == pytest.approx(gamma * x[i])


def test_one_jump_per_sample():
    e = np.cos(2 * np.pi * 2500 * np.arange(400) * TS)  # sign changes every other sample
    _, resets, _, _ = drive(make_ci(), e)
    assert resets.dtype == bool and resets.size == e.size


def test_discretize_cached():
    ci = make_ci()
    assert ci.discretize(TS) is ci.discretize(TS)


def test_bad_rho_shape():
    with pytest.raises(ValueError):
        ResetElement(ContinuousStateSpace([[0.0]], [[1.0]], [[1.0]], 0.0), np.eye(2), [True])
