"""Energy and dissipation functionals, decay-rate fits and Gronwall certificates.

All time derivatives come in as difference quotients produced by the
steppers, so the reported values describe the discrete trajectory.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, fields

import numpy as np

from .errors import InsufficientHistoryError, NonpositiveSampleError, TooFewSamplesError
from .grid import Grid, gradient_sq, l2_norm, laplacian, weighted_l2
from .medium import MediumParams, eval_medium


@dataclass
class ThermalSnapshot:
    theta: np.ndarray
    theta_t: np.ndarray | None
    theta_tt: np.ndarray | None


@dataclass
class AcousticSnapshot:
    p: np.ndarray
    p_t: np.ndarray
    p_tt: np.ndarray
    p_ttt: np.ndarray | None = None


@dataclass
class ThermalEnergies:
    E_theta_0: float
    E_theta_1: float
    E_theta_total: float
    D_theta_0: float
    D_theta_1: float
    D_theta_total: float
    theta_l2_sq: float


@dataclass
class AcousticEnergies:
    E1: float
    E2: float
    D1: float
    D2: float
    min_coeff: float
    max_coeff: float
    p_ttt_available: bool


@dataclass
class EnergyReport:
    t: float
    E_theta_0: float
    E_theta_1: float
    E_theta_total: float
    D_theta_0: float
    D_theta_1: float
    D_theta_total: float
    E1: float
    E2: float
    D1: float
    D2: float
    E_low: float
    E_high: float
    D_low: float
    D_high: float
    min_coeff: float
    max_coeff: float
    p_ttt_available: bool
    theta_l2_sq: float = 0.0

    @classmethod
    def combine(cls, t: float, th: ThermalEnergies, ac: AcousticEnergies) -> "EnergyReport":
        return cls(
            t=t,
            E_theta_0=th.E_theta_0, E_theta_1=th.E_theta_1, E_theta_total=th.E_theta_total,
            D_theta_0=th.D_theta_0, D_theta_1=th.D_theta_1, D_theta_total=th.D_theta_total,
            E1=ac.E1, E2=ac.E2, D1=ac.D1, D2=ac.D2,
            E_low=ac.E1 + th.E_theta_0,
            E_high=ac.E1 + ac.E2 + th.E_theta_total,
            D_low=ac.D1 + th.D_theta_0,
            D_high=ac.D1 + ac.D2 + th.D_theta_total,
            min_coeff=ac.min_coeff, max_coeff=ac.max_coeff,
            p_ttt_available=ac.p_ttt_available,
            theta_l2_sq=th.theta_l2_sq,
        )


REPORT_FIELDS = tuple(f.name for f in fields(EnergyReport))


def _sq(grid, u):
    return l2_norm(grid, u) ** 2


def thermal_energy_report(grid: Grid, snap: ThermalSnapshot, params: MediumParams) -> ThermalEnergies:
    """Temperature energies of orders 0 and 1, their totals and dissipation rates."""
    if snap.theta_t is None or snap.theta_tt is None:
        raise InsufficientHistoryError("thermal report needs theta_t and theta_tt")
    m, ell, tau, kappa = params.m, params.ell, params.tau, params.kappa_a
    th, th_t, th_tt = snap.theta, snap.theta_t, snap.theta_tt
    n0, n1, n2 = _sq(grid, th), _sq(grid, th_t), _sq(grid, th_tt)
    g0, g1 = gradient_sq(grid, th), gradient_sq(grid, th_t)
    lap0 = _sq(grid, laplacian(grid, th))
    a = 0.5 * (m + ell + tau * ell)
    E0 = a * n0 + 0.5 * tau * m * n1 + 0.5 * kappa * g0
    E1 = a * n1 + 0.5 * tau * m * n2 + 0.5 * kappa * g1
    D0 = ell * n0 + (m + tau * ell) * n1 + kappa * g0
    D1 = ell * n1 + (m + tau * ell) * n2 + kappa * g1
    E = E0 + E1 + tau * m * g1 + kappa * lap0
    D = D0 + D1 + (m + tau * ell) * g1 + kappa * lap0
    return ThermalEnergies(E0, E1, E, D0, D1, D, n0)


def acoustic_energy_report(grid: Grid, snap: AcousticSnapshot, theta_field,
                           params: MediumParams) -> AcousticEnergies:
    """Acoustic energies E1, E2 and dissipation rates D1, D2.

    The ``p_tt`` term of E1 is weighted by ``1 - 2 k(theta) p``; a negative
    weight raises :class:`~westcat.errors.NegativeWeightError`.  Without
    ``p_ttt`` the last term of D2 is dropped and ``p_ttt_available`` is False.
    """
    h0, b = params.h0, params.b
    p, p_t, p_tt = snap.p, snap.p_t, snap.p_tt
    w = 1.0 - 2.0 * eval_medium(params, grid.check(theta_field)).k * p
    lap_p = laplacian(grid, p)
    grad_ptt = gradient_sq(grid, p_tt)
    grad_lap_p = gradient_sq(grid, lap_p)
    lap_p_sq = _sq(grid, lap_p)
    lap_pt_sq = _sq(grid, laplacian(grid, p_t))
    E1 = 0.5 * (weighted_l2(grid, p_tt, w) ** 2 + (1.0 + h0) * gradient_sq(grid, p_t)
                + (b + h0) * lap_p_sq)
    E2 = 0.5 * ((1.0 + b) * grad_ptt + b * grad_lap_p + h0 * lap_pt_sq)
    D1 = b * grad_ptt + h0 * lap_p_sq + b * lap_pt_sq
    D2 = h0 * grad_lap_p + b * _sq(grid, laplacian(grid, p_tt))
    available = snap.p_ttt is not None
    if available:
        D2 += _sq(grid, snap.p_ttt)
    return AcousticEnergies(E1, E2, D1, D2, float(np.min(w)), float(np.max(w)), available)


def comparability_constant(params: MediumParams, lam_min: float) -> float:
    """Constant c with ``D_theta_0 >= c * E_theta_0`` (valid for tau <= 1).

    ``c = min(ell, kappa lam_min) / max(coefficients of E_theta_0)``.
    """
    m, ell, tau, kappa = params.m, params.ell, params.tau, params.kappa_a
    top = max(0.5 * (m + ell + tau * ell), 0.5 * tau * m, 0.5 * kappa)
    return min(ell, kappa * lam_min) / top


# ----------------------------------------------------------------------------
# decay fits and Gronwall certificates


def _series_arrays(series, field_name=None):
    if hasattr(series, "column"):
        return np.asarray(series.times, dtype=float), np.asarray(series.column(field_name), dtype=float)
    t, y = series
    return np.asarray(t, dtype=float), np.asarray(y, dtype=float)


@dataclass
class DecayFit:
    omega: float
    intercept: float
    r_squared: float
    window: tuple[float, float]

    @property
    def amplitude(self) -> float:
        return math.exp(self.intercept)


def fit_decay_rate(series, field_name: str | None = None, window=None) -> DecayFit:
    """Least-squares fit of ``log y = intercept - omega t`` on a time window.

    ``series`` is either an object with ``times`` and ``column(name)`` or a
    ``(times, values)`` pair.  The default window drops the first two samples.
    A constant series gives ``omega = 0`` and ``r_squared = 0``.
    """
    t, y = _series_arrays(series, field_name)
    if window is None:
        mask = np.arange(t.size) >= 2
    else:
        mask = (t >= window[0]) & (t <= window[1])
    t, y = t[mask], y[mask]
    if t.size < 3:
        raise TooFewSamplesError(f"need at least 3 samples in window, got {t.size}")
    if np.any(~(y > 0)):
        raise NonpositiveSampleError("decay fit needs strictly positive samples")
    ly = np.log(y)
    tm, lm = t.mean(), ly.mean()
    stt = float(np.sum((t - tm) ** 2))
    slope = float(np.sum((t - tm) * (ly - lm))) / stt
    intercept = lm - slope * tm
    ss_tot = float(np.sum((ly - lm) ** 2))
    ss_res = float(np.sum((ly - (intercept + slope * t)) ** 2))
    if ss_tot <= 1e-30 * max(1.0, float(np.sum(ly**2))):
        r2 = 0.0
        slope = 0.0 if ss_res <= 1e-30 * max(1.0, float(np.sum(ly**2))) else slope
    else:
        r2 = max(0.0, 1.0 - ss_res / ss_tot)
    return DecayFit(-slope, float(intercept), r2, (float(t[0]), float(t[-1])))


@dataclass
class GronwallReport:
    passed: bool
    hypothesis_passed: bool
    conclusion_passed: bool
    worst_pair: tuple[float, float]
    worst_margin: float
    first_failure: tuple[float, float] | None
    nu: float


def gronwall_check(series, field_name: str | None = None, nu: float = 1.0,
                   rel_tol: float = 1e-9) -> GronwallReport:
    """Check ``y(t) + nu int_s^t y <= y(s)`` on every sampled pair ``s < t``.

    The integral is the trapezoidal rule on the samples.  The allowed slack
    for a pair is twice the accumulated local trapezoid error bound
    ``dt^3 |y''| / 12`` (``y''`` from second differences), scaled by ``nu``,
    plus ``rel_tol * y(s)``.  When the hypothesis holds the conclusion
    ``y(t) <= y(0) exp(-nu t)`` is checked with the same slack.  Margins
    are reported relative to ``y(s)``; negative means violated.
    """
    t, y = _series_arrays(series, field_name)
    if np.any(y < 0):
        raise NonpositiveSampleError("Gronwall check needs nonnegative samples")
    n = t.size
    if n < 2:
        raise TooFewSamplesError("need at least two samples")
    dt = np.diff(t)
    integral = np.concatenate(([0.0], np.cumsum(0.5 * dt * (y[1:] + y[:-1]))))
    if n >= 3:
        ypp = np.abs(np.gradient(np.gradient(y, t), t))
        local = dt**3 / 12.0 * np.maximum(ypp[1:], ypp[:-1])
    else:
        local = np.zeros_like(dt)
    quad_err = np.concatenate(([0.0], np.cumsum(2.0 * local)))

    hyp_ok = True
    worst = math.inf
    worst_pair = (float(t[0]), float(t[-1]))
    first = None
    tiny = np.finfo(float).tiny
    for i in range(n - 1):
        ys = y[i]
        lhs = y[i + 1:] + nu * (integral[i + 1:] - integral[i])
        slack = nu * (quad_err[i + 1:] - quad_err[i]) + rel_tol * ys
        margin = ys - lhs
        ok = margin >= -slack
        rel = margin / max(ys, tiny)
        j = int(np.argmin(rel))
        if rel[j] < worst:
            worst = float(rel[j])
            worst_pair = (float(t[i]), float(t[i + 1 + j]))
        if not np.all(ok):
            hyp_ok = False
            if first is None:
                first = (float(t[i]), float(t[i + 1 + int(np.argmin(ok))]))
    conclusion_ok = True
    if hyp_ok:
        bound = y[0] * np.exp(-nu * (t - t[0]))
        conclusion_ok = bool(np.all(y <= bound * (1 + rel_tol) + nu * quad_err))
        if not conclusion_ok and first is None:
            idx = int(np.argmax(y - bound))
            first = (float(t[0]), float(t[idx]))
    return GronwallReport(hyp_ok and conclusion_ok, hyp_ok, conclusion_ok, worst_pair,
                          worst, first, nu)
