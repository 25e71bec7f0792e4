import math

import numpy as np
import pytest

from westcat.acoustic import (
    AcousticState,
    DegeneracyConfig,
    SolverOptions,
    acoustic_step,
    check_degeneracy,
    init_p2,
    initial_state,
    p_ttt_estimate,
)
from westcat.errors import (
    DegenerateInitialData,
    DegeneracyError,
    InsufficientHistoryError,
    InvalidValueError,
)
from westcat.grid import build_grid, gradient_sq, l2_norm
from westcat.linalg import negative_laplacian_operator, smallest_eigenvalue
from westcat.medium import MediumParams

G3 = build_grid(1, [1.0], [3])
LAP3 = 16.0 * np.array([[-2.0, 1.0, 0.0], [1.0, -2.0, 1.0], [0.0, 1.0, -2.0]])


def test_degeneracy_config_validation():
    DegeneracyConfig(0.5, 0.5)
    with pytest.raises(InvalidValueError):
        DegeneracyConfig(0.6, 0.5)
    with pytest.raises(InvalidValueError):
        DegeneracyConfig(0.5, 1.0)


def test_check_degeneracy_window():
    cfg = DegeneracyConfig(0.5, 0.4)
    assert check_degeneracy(np.array([0.9, 1.1]), cfg) == (0.9, 1.1)
    with pytest.raises(DegeneracyError):
        check_degeneracy(np.array([0.49, 1.0]), cfg, step=3)
    with pytest.raises(DegeneracyError):
        check_degeneracy(np.array([1.0, 1.41]), cfg)


def test_init_p2_zero():
    p = MediumParams()
    z = np.zeros(3)
    np.testing.assert_array_equal(init_p2(G3, p, z, z, z), 0.0)


def test_init_p2_hand_oracle():
    # k = beta / (rho c_a^2) = 1, h = 1, b = 1, spacing 0.25
    p = MediumParams(c_a=1.0, b=1.0, beta=1.0, rho=1.0)
    p0 = np.array([0.1, 0.2, 0.1])
    p1 = np.array([1.0, 0.0, -1.0])
    # Lap p0 = [0, -3.2, 0], Lap p1 = [-32, 0, 32], 2 k p1^2 = [2, 0, 2]
    # rhs = [-30, -3.2, 34], weights 1 - 2 p0 = [0.8, 0.6, 0.8]
    expected = np.array([-30.0 / 0.8, -3.2 / 0.6, 34.0 / 0.8])
    np.testing.assert_allclose(init_p2(G3, p, p0, p1, np.zeros(3)), expected, rtol=1e-12)


def test_init_p2_uses_temperature():
    p = MediumParams(c_a=1.0, beta=1.0, speed_poly=(0.5,), h1=0.5)
    p0 = np.array([0.1, 0.2, 0.1])
    p1 = np.array([1.0, 0.0, -1.0])
    th = np.full(3, 1.0)  # h = 1.5, k = 2/3
    h, k = 1.5, 2.0 / 3.0
    rhs = h * LAP3 @ p0 + LAP3 @ p1 + 2 * k * p1**2
    np.testing.assert_allclose(init_p2(G3, p, p0, p1, th), rhs / (1 - 2 * k * p0), rtol=1e-12)


def test_init_p2_degenerate():
    p = MediumParams(c_a=1.0, beta=1.0, rho=1.0)
    p0 = np.array([0.0, 0.5, 0.0])  # k p0 = 0.5
    with pytest.raises(DegenerateInitialData):
        init_p2(G3, p, p0, np.zeros(3), np.zeros(3))


def test_zero_step_is_zero():
    p = MediumParams()
    st = initial_state(G3, p, np.zeros(3), np.zeros(3), np.zeros(3), 0.01)
    new, diag = acoustic_step(G3, st, np.zeros(3), p)
    assert np.all(new.p_curr == 0)
    assert diag.picard_iterations == 1
    assert diag.min_coeff == diag.max_coeff == 1.0


def test_step_hand_assembly_oracle():
    # linear regime: beta = 0 removes the mass weight and the quadratic term
    p = MediumParams(c_a=1.2, b=0.7, beta=0.0)
    dt = 0.1
    H, b = 1.44, 0.7
    p_old = np.array([0.3, -0.1, 0.2])
    p_now = np.array([0.25, 0.0, 0.1])
    f = np.array([1.0, 2.0, -1.0])
    st = AcousticState(p_old, p_now, dt)
    new, diag = acoustic_step(G3, st, np.zeros(3), p, forcing=f,
                              opts=SolverOptions(cg_tol=1e-14))
    A = np.eye(3) / dt**2 - (H / 4 + b / (2 * dt)) * LAP3
    rhs = ((2 * p_now - p_old) / dt**2 + H / 4 * LAP3 @ (2 * p_now + p_old)
           - b / (2 * dt) * LAP3 @ p_old + f)
    np.testing.assert_allclose(new.p_curr, np.linalg.solve(A, rhs), rtol=1e-10, atol=1e-12)
    assert diag.picard_iterations <= 2


def test_step_nonlinear_fixed_point():
    # the converged Picard iterate satisfies the discrete nonlinear equation
    p = MediumParams(c_a=1.0, b=1.0, beta=2.0, speed_poly=(0.1,))
    g = build_grid(1, [1.0], [9])
    (x,) = g.coordinates()
    dt = 0.02
    p_old = 0.01 * np.sin(np.pi * x)
    p_now = 0.011 * np.sin(np.pi * x)
    th = 0.2 * np.sin(2 * np.pi * x)
    new, diag = acoustic_step(g, AcousticState(p_old, p_now, dt), th, p,
                              opts=SolverOptions(cg_tol=1e-14, picard_tol=1e-13))
    from westcat.grid import laplacian
    from westcat.medium import eval_medium
    ev = eval_medium(p, th)
    pp = new.p_curr
    p_t = (pp - p_old) / (2 * dt)
    resid = ((1 - 2 * ev.k * p_now) * (pp - 2 * p_now + p_old) / dt**2
             - ev.h * laplacian(g, (pp + 2 * p_now + p_old) / 4)
             - p.b * laplacian(g, p_t) - 2 * ev.k * p_t**2)
    assert np.max(np.abs(resid)) < 1e-8
    # Picard is a contraction here
    assert all(b < a for a, b in zip(diag.updates, diag.updates[1:]))
    assert diag.picard_iterations > 1


def _linear_mms_step(dt, n=15):
    p = MediumParams(c_a=1.0, b=0.5, beta=0.0)
    g = build_grid(1, [1.0], [n])
    (x,) = g.coordinates()
    S = np.sin(np.pi * x)
    lam_h = smallest_eigenvalue(negative_laplacian_operator(g), tol=1e-14)

    def exact(t):
        return S * math.cos(t)

    def forcing(t):
        # discrete eigenvalue removes the spatial error from the local step
        return S * (-math.cos(t) + lam_h * p.h0 * math.cos(t) - p.b * lam_h * math.sin(t))

    st = AcousticState(exact(-dt), exact(0.0), dt)
    new, _ = acoustic_step(g, st, np.zeros(n), p, forcing=forcing(0.0),
                           opts=SolverOptions(cg_tol=1e-15))
    return l2_norm(g, new.p_curr - exact(dt))


def test_linear_local_error_step_halving():
    e1, e2, e3 = (_linear_mms_step(dt) for dt in (0.04, 0.02, 0.01))
    # local error is at least third order in dt
    assert e1 / e2 > 7.0 and e2 / e3 > 7.0


@pytest.mark.parametrize("dt,n", [(0.001, 15), (0.05, 31), (0.5, 63), (2.0, 7)])
def test_linear_discrete_energy_nonincreasing(dt, n):
    p = MediumParams(c_a=1.3, b=0.2, beta=0.0)
    g = build_grid(1, [1.0], [n])
    rng = np.random.default_rng(n)
    st = AcousticState(rng.standard_normal(n), rng.standard_normal(n), dt)

    def energy(s):
        v = (s.p_curr - s.p_prev) / dt
        avg = 0.5 * (s.p_curr + s.p_prev)
        return 0.5 * l2_norm(g, v) ** 2 + 0.5 * p.h0 * gradient_sq(g, avg)

    e = energy(st)
    for _ in range(30):
        st, _ = acoustic_step(g, st, np.zeros(n), p, opts=SolverOptions(cg_tol=1e-13))
        e_new = energy(st)
        assert e_new <= e * (1 + 1e-10)
        e = e_new


def test_degeneracy_abort_during_step():
    p = MediumParams(c_a=1.0, b=1.0, beta=10.0)
    g = build_grid(1, [1.0], [7])
    (x,) = g.coordinates()
    amp = 0.02  # 1 - 2 k p = 0.6 at the peak, growing p pushes it below 0.5
    st = AcousticState(amp * np.sin(np.pi * x), 1.5 * amp * np.sin(np.pi * x), 0.05)
    with pytest.raises(DegeneracyError) as exc:
        for i in range(5):
            st, _ = acoustic_step(g, st, np.zeros(7), p, step=i)
    assert exc.value.step is not None


def test_initial_state_taylor():
    p = MediumParams()
    p0, p1, p2 = np.array([1.0, 2, 3]), np.array([0.5, 0, -1]), np.array([2.0, 2, 2])
    st = initial_state(G3, p, p0, p1, p2, 0.1)
    np.testing.assert_allclose(st.p_prev, p0 - 0.1 * p1 + 0.005 * p2)
    np.testing.assert_array_equal(st.p_curr, p0)


def test_p_ttt_estimate():
    st = AcousticState(np.zeros(3), np.zeros(3), 0.1)
    with pytest.raises(InsufficientHistoryError):
        p_ttt_estimate(st)
    st.p_tt_prev = np.ones(3)
    st.p_tt_curr = np.ones(3)
    np.testing.assert_array_equal(p_ttt_estimate(st), 0.0)
    st.p_tt_curr = np.ones(3) + 2.5 * 0.1
    np.testing.assert_allclose(p_ttt_estimate(st), 2.5)


def test_p_ttt_first_order_on_cubic():
    # p = t^4 / 12 has p_ttt = 2 t; against the newest p_tt time the backward quotient is O(dt) off
    def err(dt):
        ts = np.array([0.0, dt, 2 * dt, 3 * dt]) + 1.0
        p = ts**4 / 12
        st = AcousticState(p[1], p[2], dt, p_tt_curr=(p[2] - 2 * p[1] + p[0]) / dt**2)
        st.p_tt_prev, st.p_tt_curr = st.p_tt_curr, (p[3] - 2 * p[2] + p[1]) / dt**2
        return abs(float(p_ttt_estimate(st)) - 2 * (1.0 + 2 * dt))

    assert err(0.02) / err(0.01) == pytest.approx(2.0, rel=0.05)
