import math

import numpy as np
import pytest

from westcat.energy import (
    REPORT_FIELDS,
    AcousticSnapshot,
    EnergyReport,
    ThermalSnapshot,
    acoustic_energy_report,
    comparability_constant,
    fit_decay_rate,
    gronwall_check,
    thermal_energy_report,
)
from westcat.errors import (
    InsufficientHistoryError,
    NegativeWeightError,
    NonpositiveSampleError,
    TooFewSamplesError,
)
from westcat.grid import build_grid
from westcat.linalg import negative_laplacian_operator, smallest_eigenvalue
from westcat.medium import MediumParams

G3 = build_grid(1, [1.0], [3])
UNIT = MediumParams(c_a=1.0, b=1.0, beta=1.0, rho=1.0, rho_a=1.0, C_a=1.0, rho_b=1.0,
                    C_b=1.0, W=1.0, kappa_a=1.0, tau=1.0)


def test_thermal_zero():
    z = np.zeros(3)
    th = thermal_energy_report(G3, ThermalSnapshot(z, z, z), UNIT)
    assert (th.E_theta_0, th.E_theta_1, th.E_theta_total,
            th.D_theta_0, th.D_theta_1, th.D_theta_total) == (0,) * 6


def test_thermal_hand_oracle():
    # levels [1,2,1], [1,0,-1], [1,1,1] on spacing 0.25:
    # |.|^2 = 1.5, 0.5, 0.75; |grad|^2 = 16, 16; |Lap theta|^2 = 256
    snap = ThermalSnapshot(np.array([1.0, 2.0, 1.0]), np.array([1.0, 0.0, -1.0]), np.ones(3))
    th = thermal_energy_report(G3, snap, UNIT)
    assert th.E_theta_0 == pytest.approx(10.5, rel=1e-12)
    assert th.E_theta_1 == pytest.approx(9.125, rel=1e-12)
    assert th.D_theta_0 == pytest.approx(18.5, rel=1e-12)
    assert th.D_theta_1 == pytest.approx(18.0, rel=1e-12)
    assert th.E_theta_total == pytest.approx(291.625, rel=1e-12)
    assert th.D_theta_total == pytest.approx(324.5, rel=1e-12)
    assert th.theta_l2_sq == pytest.approx(1.5, rel=1e-12)


def test_thermal_scaling():
    rng = np.random.default_rng(0)
    g = build_grid(2, [1.0, 1.0], [5, 6])
    snap = ThermalSnapshot(*(rng.standard_normal(g.shape) for _ in range(3)))
    a = thermal_energy_report(g, snap, UNIT)
    b = thermal_energy_report(g, ThermalSnapshot(2 * snap.theta, 2 * snap.theta_t,
                                                 2 * snap.theta_tt), UNIT)
    for name in ("E_theta_0", "E_theta_1", "E_theta_total", "D_theta_0", "D_theta_1",
                 "D_theta_total"):
        assert getattr(b, name) == pytest.approx(4 * getattr(a, name), rel=1e-13)


def test_thermal_insufficient_history():
    with pytest.raises(InsufficientHistoryError):
        thermal_energy_report(G3, ThermalSnapshot(np.zeros(3), None, None), UNIT)


def test_acoustic_zero():
    z = np.zeros(3)
    ac = acoustic_energy_report(G3, AcousticSnapshot(z, z, z), z, UNIT)
    assert (ac.E1, ac.E2, ac.D1, ac.D2) == (0, 0, 0, 0)
    assert ac.min_coeff == ac.max_coeff == 1.0
    assert not ac.p_ttt_available


def test_acoustic_hand_oracle():
    # k = 1, h0 = b = 1; weights 1 - 2p = [0.8, 0.6, 0.8]
    # |sqrt(w) p_tt|^2 = 0.55, |grad p_t|^2 = 16, |Lap p|^2 = 2.56, |grad p_tt|^2 = 8,
    # |grad Lap p|^2 = 81.92, |Lap p_t|^2 = 512, |Lap p_tt|^2 = 128, |p_ttt|^2 = 1
    snap = AcousticSnapshot(np.array([0.1, 0.2, 0.1]), np.array([1.0, 0.0, -1.0]), np.ones(3),
                            np.array([2.0, 0.0, 0.0]))
    ac = acoustic_energy_report(G3, snap, np.zeros(3), UNIT)
    assert ac.E1 == pytest.approx(18.835, rel=1e-12)
    assert ac.E2 == pytest.approx(304.96, rel=1e-12)
    assert ac.D1 == pytest.approx(522.56, rel=1e-12)
    assert ac.D2 == pytest.approx(210.92, rel=1e-12)
    assert ac.min_coeff == pytest.approx(0.6, rel=1e-15)
    assert ac.max_coeff == pytest.approx(0.8, rel=1e-15)
    assert ac.p_ttt_available
    partial = acoustic_energy_report(G3, AcousticSnapshot(snap.p, snap.p_t, snap.p_tt), np.zeros(3), UNIT)
    assert partial.D2 == pytest.approx(209.92, rel=1e-12)
    assert not partial.p_ttt_available


def test_acoustic_unit_weight_when_k_zero():
    p = MediumParams(beta=0.0)
    rng = np.random.default_rng(1)
    u = [rng.standard_normal(3) for _ in range(3)]
    ac = acoustic_energy_report(G3, AcousticSnapshot(*u), np.zeros(3), p)
    no_ptt = acoustic_energy_report(G3, AcousticSnapshot(u[0], u[1], np.zeros(3)), np.zeros(3), p)
    assert ac.min_coeff == ac.max_coeff == 1.0
    assert ac.E1 - no_ptt.E1 == pytest.approx(0.5 * 0.25 * float(np.sum(u[2] ** 2)), rel=1e-12)


def test_acoustic_scaling_k_zero():
    p = MediumParams(beta=0.0)
    g = build_grid(2, [1.0, 1.0], [6, 5])
    rng = np.random.default_rng(2)
    fields = [rng.standard_normal(g.shape) for _ in range(4)]
    a = acoustic_energy_report(g, AcousticSnapshot(*fields), g.zeros(), p)
    b = acoustic_energy_report(g, AcousticSnapshot(*(3 * f for f in fields)), g.zeros(), p)
    for name in ("E1", "E2", "D1", "D2"):
        assert getattr(b, name) == pytest.approx(9 * getattr(a, name), rel=1e-13)


def test_acoustic_lower_bound_and_negative_weight():
    rng = np.random.default_rng(3)
    p = rng.uniform(-0.1, 0.2, 3)
    p_tt = rng.standard_normal(3)
    ac = acoustic_energy_report(G3, AcousticSnapshot(p, rng.standard_normal(3), p_tt), np.zeros(3), UNIT)
    assert ac.E1 >= 0.5 * ac.min_coeff * 0.25 * float(np.sum(p_tt**2))
    with pytest.raises(NegativeWeightError):
        acoustic_energy_report(G3, AcousticSnapshot(np.array([0.0, 0.6, 0.0]), np.zeros(3),
                                                    np.ones(3)), np.zeros(3), UNIT)


def test_combine_additivity():
    rng = np.random.default_rng(4)
    snap_t = ThermalSnapshot(*(rng.standard_normal(3) for _ in range(3)))
    snap_a = AcousticSnapshot(0.01 * rng.standard_normal(3), rng.standard_normal(3),
                              rng.standard_normal(3), rng.standard_normal(3))
    th = thermal_energy_report(G3, snap_t, UNIT)
    ac = acoustic_energy_report(G3, snap_a, snap_t.theta * 0, UNIT)
    r = EnergyReport.combine(0.5, th, ac)
    assert r.E_low == ac.E1 + th.E_theta_0
    assert r.E_high == ac.E1 + ac.E2 + th.E_theta_total
    assert r.D_low == ac.D1 + th.D_theta_0
    assert r.D_high == ac.D1 + ac.D2 + th.D_theta_total
    assert set(REPORT_FIELDS) >= {"t", "E_low", "E_high", "D_low", "D_high", "p_ttt_available"}
    for name in REPORT_FIELDS:
        v = getattr(r, name)
        if name not in ("t", "p_ttt_available"):
            assert v >= 0


def test_comparability_constant_holds_on_random_states():
    g = build_grid(1, [1.0], [31])
    lam = smallest_eigenvalue(negative_laplacian_operator(g))
    rng = np.random.default_rng(5)
    for tau in (0.0, 0.1, 1.0):
        p = MediumParams(tau=tau, kappa_a=0.1)
        c = comparability_constant(p, lam)
        for _ in range(50):
            th = thermal_energy_report(g, ThermalSnapshot(*(rng.standard_normal(31) for _ in range(3))), p)
            assert th.D_theta_0 >= c * th.E_theta_0 * (1 - 1e-12)
            assert th.D_theta_0 >= (p.ell + p.kappa_a * lam) * th.theta_l2_sq * (1 - 1e-12)


def test_fit_exact_exponential():
    t = np.linspace(0, 5, 50)
    fit = fit_decay_rate((t, 3 * np.exp(-2 * t)), window=(0, 5))
    assert fit.omega == pytest.approx(2.0, abs=1e-10)
    assert fit.r_squared == pytest.approx(1.0, abs=1e-12)
    assert fit.amplitude == pytest.approx(3.0, rel=1e-10)
    assert fit.window == (0.0, 5.0)


def test_fit_constant_series():
    t = np.linspace(0, 1, 10)
    fit = fit_decay_rate((t, np.full(10, 2.5)))
    assert fit.omega == 0.0 and fit.r_squared == 0.0


def test_fit_perturbed():
    t = np.linspace(0, 10, 500)
    fit = fit_decay_rate((t, np.exp(-t) * (1 + 0.01 * np.sin(40 * t))), window=(0, 10))
    assert fit.omega == pytest.approx(1.0, abs=0.02)
    assert fit.r_squared >= 0.99


def test_fit_errors():
    t = np.linspace(0, 1, 10)
    with pytest.raises(TooFewSamplesError):
        fit_decay_rate((t[:4], np.ones(4)))
    y = np.ones(10)
    y[5] = 0.0
    with pytest.raises(NonpositiveSampleError):
        fit_decay_rate((t, y))


def test_fit_default_window_drops_two():
    t = np.arange(6.0)
    y = np.exp(-t)
    y[:2] = 100.0
    fit = fit_decay_rate((t, y))
    assert fit.omega == pytest.approx(1.0, abs=1e-12)
    assert fit.window == (2.0, 5.0)


def test_gronwall_exact_exponential():
    nu = 0.7
    t = np.linspace(0, 5, 400)
    rep = gronwall_check((t, np.exp(-nu * t)), nu=nu)
    assert rep.passed and rep.hypothesis_passed and rep.conclusion_passed
    assert abs(rep.worst_margin) < 1e-4


def test_gronwall_increasing_fails_first_pair():
    t = np.linspace(0, 1, 20)
    rep = gronwall_check((t, 1 + t), nu=0.1)
    assert not rep.passed
    assert rep.first_failure == (t[0], t[1])


def test_gronwall_faster_decay_passes_and_slower_fails():
    t = np.linspace(0, 4, 200)
    assert gronwall_check((t, np.exp(-2 * t)), nu=1.0).passed
    assert not gronwall_check((t, np.exp(-0.5 * t)), nu=1.0).passed


def test_gronwall_rejects_negative():
    with pytest.raises(NonpositiveSampleError):
        gronwall_check((np.arange(3.0), np.array([1.0, -1.0, 0.5])), nu=1.0)
