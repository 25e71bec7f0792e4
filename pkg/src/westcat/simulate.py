"""Coupled pressure/temperature time loop and the verification studies built on it.

One step from level n to n+1:

1. pressure step with the temperature frozen at level n;
2. heat source ``Q(p_t) + tau dQ/dt`` from the centered pressure derivatives at n;
3. temperature step;
4. with ``sweeps > 1`` steps 1-3 are repeated, the pressure coefficient now
   using the time-centered temperature ``(T+ + 2 T + T-) / 4``.

Energy reports are taken at level n once level n+1 exists, so every time
derivative is a centered difference quotient.
"""

from __future__ import annotations

import logging
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import acoustic, thermal
from .config import ScenarioConfig
from .energy import (
    AcousticSnapshot,
    EnergyReport,
    ThermalSnapshot,
    acoustic_energy_report,
    thermal_energy_report,
)
from .errors import (
    AssumptionViolation,
    ConvergenceError,
    DegeneracyError,
    HBelowFloorError,
    NumericBreakdownError,
    StudyRunFailed,
    TemperatureRangeError,
)
from .grid import Grid, l2_norm
from .medium import MediumParams, eval_medium, heat_source, q_source, q_source_dt, validate_assumptions

log = logging.getLogger(__name__)

COMPLETED = "completed"
DEGENERACY_ABORT = "degeneracy-abort"
SOLVER_FAILURE = "solver-failure"


@dataclass
class TimeSeries:
    times: list = field(default_factory=list)
    reports: list = field(default_factory=list)
    termination: str = COMPLETED
    abort_step: int | None = None
    message: str = ""
    final_time: float | None = None
    final_p: np.ndarray | None = None
    final_theta: np.ndarray | None = None
    snapshots: list = field(default_factory=list)
    max_picard: int = 0
    min_coeff: float = 1.0
    max_coeff: float = 1.0

    def column(self, name: str) -> np.ndarray:
        return np.array([getattr(r, name) for r in self.reports], dtype=float)

    def append(self, report: EnergyReport) -> None:
        if self.times and report.t <= self.times[-1]:
            raise ValueError("report times must be strictly increasing")
        self.times.append(report.t)
        self.reports.append(report)


# ----------------------------------------------------------------------------
# initial data


def preset_shape(grid: Grid, preset: str, width: float = 0.1) -> np.ndarray:
    coords = grid.coordinates()
    if preset == "sine-mode":
        shape = np.ones(grid.shape)
        for x, L in zip(coords, grid.extents):
            shape = shape * np.sin(np.pi * x / L)
        return shape
    if preset == "gaussian-bump":
        r2 = sum((x - 0.5 * L) ** 2 for x, L in zip(coords, grid.extents))
        return np.exp(-r2 / (2.0 * width**2))
    raise ValueError(f"unknown preset {preset!r}")


def initial_fields(cfg: ScenarioConfig, grid: Grid | None = None):
    grid = grid or cfg.grid.build()
    ini = cfg.initial
    shape = preset_shape(grid, ini.preset, ini.width)
    return (ini.p0_amp * shape, ini.p1_amp * shape,
            ini.theta0_amp * shape, ini.theta1_amp * shape)


# ----------------------------------------------------------------------------
# core integrator


@dataclass
class Forcing:
    """Optional manufactured forcings, callables of time returning grid arrays."""

    pressure: object = None
    temperature: object = None


def _check_range(theta: np.ndarray, validated_range, step: int) -> None:
    lo, hi = validated_range
    tmin, tmax = float(np.min(theta)), float(np.max(theta))
    if tmin < lo or tmax > hi:
        raise TemperatureRangeError(
            f"temperature [{tmin:.6g}, {tmax:.6g}] left validated range [{lo}, {hi}] at step {step}")


def integrate(cfg: ScenarioConfig, p0, p1, theta0, theta1, forcing: Forcing | None = None,
              params: MediumParams | None = None, grid: Grid | None = None) -> TimeSeries:
    """Run the coupled scheme from explicit initial fields.

    Degeneracy and solver failures end the run early with the partial series;
    leaving the validated temperature range is reported as a solver failure.
    """
    grid = grid or cfg.grid.build()
    params = params or cfg.medium.params()
    forcing = forcing or Forcing()
    degcfg = cfg.coupling.degeneracy()
    opts = cfg.coupling.solver()
    dt = cfg.time.dt
    n_steps = cfg.n_steps
    cadence = cfg.output.cadence
    snap_every = cfg.output.snapshot_cadence
    vrange = cfg.medium.validated_range
    fp = forcing.pressure
    fth = forcing.temperature
    series = TimeSeries()
    step = 0
    try:
        p2 = acoustic.init_p2(grid, params, p0, p1, theta0, degcfg,
                              fp(0.0) if fp else None)
        ac = acoustic.initial_state(grid, params, p0, p1, p2, dt)
        if params.tau > 0:
            theta2 = thermal.init_theta2(grid, params, theta0, theta1, p1, p2,
                                         fth(0.0) if fth else None)
            th = thermal.initial_state(grid, params, theta0, theta1, theta2, dt)
        else:
            th = thermal.initial_state(grid, params, theta0, dt=dt)
        parabolic = th.mode == thermal.PARABOLIC
        prev_source = None

        for step in range(n_steps + 1):
            t_n = step * dt
            theta_n = th.theta_curr
            _check_range(theta_n, vrange, step)
            f_p = fp(t_n) if fp else None
            f_th = None
            if fth:
                f_th = fth(t_n + 0.5 * dt) if parabolic else fth(t_n)
            coef_theta = theta_n
            for sweep in range(cfg.coupling.sweeps):
                new_ac, diag = acoustic.acoustic_step(grid, ac, coef_theta, params, f_p,
                                                      degcfg, opts, step=step)
                source = heat_source(params, new_ac.p_t_curr, new_ac.p_tt_curr)
                th_source = source
                if parabolic and prev_source is not None:
                    th_source = 1.5 * source - 0.5 * prev_source
                new_th = thermal.thermal_step(grid, th, th_source, params, f_th, opts)
                if th.theta_prev is not None:
                    coef_theta = 0.25 * (new_th.theta_curr + 2.0 * theta_n + th.theta_prev)
            prev_source = source
            ac, th = new_ac, new_th
            series.max_picard = max(series.max_picard, diag.picard_iterations)
            series.min_coeff = min(series.min_coeff, diag.min_coeff)
            series.max_coeff = max(series.max_coeff, diag.max_coeff)

            if step % cadence == 0 or step == n_steps:
                report = _report(grid, params, ac, th, t_n)
                if report is not None:
                    series.append(report)
            if snap_every and step % snap_every == 0:
                series.snapshots.append((t_n, ac.p_prev.copy(), th.theta_prev.copy()))
            if step + 1 == n_steps:
                series.final_time = (step + 1) * dt
                series.final_p = ac.p_curr.copy()
                series.final_theta = th.theta_curr.copy()
    except DegeneracyError as exc:
        series.termination = DEGENERACY_ABORT
        series.abort_step = exc.step if exc.step is not None else step
        series.message = str(exc)
        log.warning("degeneracy abort at step %s: %s", series.abort_step, exc)
    except (ConvergenceError, NumericBreakdownError, HBelowFloorError) as exc:
        series.termination = SOLVER_FAILURE
        series.abort_step = step
        series.message = f"step {step}: {exc}"
        log.warning("solver failure at step %s: %s", step, exc)
    return series


def _report(grid, params, ac, th, t_n):
    if th.theta_t_curr is None:
        return None  # parabolic start: no centered derivative yet
    ts = ThermalSnapshot(th.theta_prev, th.theta_t_curr, th.theta_tt_curr)
    p_ttt = acoustic.p_ttt_estimate(ac) if ac.p_tt_prev is not None else None
    snap = AcousticSnapshot(ac.p_prev, ac.p_t_curr, ac.p_tt_curr, p_ttt)
    return EnergyReport.combine(t_n, thermal_energy_report(grid, ts, params),
                                acoustic_energy_report(grid, snap, th.theta_prev, params))


def run_coupled(cfg: ScenarioConfig) -> TimeSeries:
    """Run a configured scenario after validating the medium on its range."""
    params = cfg.medium.params()
    report = validate_assumptions(params, cfg.medium.validated_range)
    if not report.passed:
        raise AssumptionViolation(report)
    grid = cfg.grid.build()
    return integrate(cfg, *initial_fields(cfg, grid), params=params, grid=grid)


# ----------------------------------------------------------------------------
# manufactured solutions


def _threads() -> int:
    try:
        return max(1, int(os.environ.get("WESTCAT_THREADS", "1")))
    except ValueError:
        return 1


def parallel_map(fn, items):
    """Map over independent runs, using up to ``WESTCAT_THREADS`` workers."""
    items = list(items)
    n = min(_threads(), len(items))
    if n <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=n) as pool:
        return list(pool.map(fn, items))


class Manufactured:
    """``p* = A_p S(x) cos t`` and ``T* = A_T S(x) exp(-t)``, S the first sine mode."""

    def __init__(self, grid: Grid, params: MediumParams, amp_p: float, amp_theta: float):
        self.grid = grid
        self.params = params
        self.amp_p = amp_p
        self.amp_theta = amp_theta
        self.shape = preset_shape(grid, "sine-mode")
        self.lam = sum((math.pi / L) ** 2 for L in grid.extents)

    def p(self, t, order=0):
        c = (math.cos(t), -math.sin(t), -math.cos(t))[order]
        return self.amp_p * c * self.shape

    def theta(self, t, order=0):
        return self.amp_theta * (-1.0) ** order * math.exp(-t) * self.shape

    def pressure_forcing(self, t):
        pr = self.params
        p, p_t, p_tt = self.p(t), self.p(t, 1), self.p(t, 2)
        med = eval_medium(pr, self.theta(t))
        lap = -self.lam
        return ((1.0 - 2.0 * med.k * p) * p_tt - med.h * lap * p - pr.b * lap * p_t
                - 2.0 * med.k * p_t * p_t)

    def temperature_forcing(self, t):
        pr = self.params
        m, ell, tau = pr.m, pr.ell, pr.tau
        th, th_t, th_tt = self.theta(t), self.theta(t, 1), self.theta(t, 2)
        p_t, p_tt = self.p(t, 1), self.p(t, 2)
        lhs = tau * m * th_tt + (m + tau * ell) * th_t + ell * th + pr.kappa_a * self.lam * th
        return lhs - q_source(pr, p_t) - tau * q_source_dt(pr, p_t, p_tt)


@dataclass
class MMSRow:
    h: float
    dt: float
    error_p: float
    error_theta: float
    order_p: float = float("nan")
    order_theta: float = float("nan")
    kind: str = "coupled"

    @property
    def error(self) -> float:
        if self.kind == "acoustic":
            return self.error_p
        if self.kind.startswith("thermal"):
            return self.error_theta
        return max(self.error_p, self.error_theta)

    @property
    def observed_order(self) -> float:
        if self.kind == "acoustic":
            return self.order_p
        if self.kind.startswith("thermal"):
            return self.order_theta
        return min(self.order_p, self.order_theta)


def _mms_setup(cfg: ScenarioConfig, kind: str, amplitude: float):
    medium = {}
    if kind == "acoustic":
        medium = {"beta": 0.0, "speed_poly": ()}
        amps = (1.0, 0.0)
    elif kind == "thermal-hyperbolic":
        amps = (0.0, 1.0)
        if not cfg.medium.tau > 0:
            medium = {"tau": 0.1}
    elif kind == "thermal-parabolic":
        amps = (0.0, 1.0)
        medium = {"tau": 0.0}
    elif kind == "coupled":
        amps = (amplitude, amplitude)
    else:
        raise ValueError(f"unknown MMS kind {kind!r}")
    return medium, amps


def mms_study(base: ScenarioConfig, levels=None, kind: str | None = None,
              dt_ratio: float | None = None) -> list[MMSRow]:
    """Manufactured-solution refinement study.

    ``levels`` is a list of interior node counts per axis (default: the base
    grid and its successive halvings).  The time step keeps the base ratio
    ``dt / h`` unless ``dt_ratio`` is given; the final time is the base one.
    """
    kind = kind or base.study.mms_kind
    n_levels = base.study.mms_levels
    if levels is None:
        n = base.grid.nodes[0]
        levels = []
        for _ in range(n_levels):
            levels.append(n)
            n = 2 * (n + 1) - 1
    if len(levels) < 3:
        raise ValueError("need at least three refinement levels")
    h_base = base.grid.extents[0] / (base.grid.nodes[0] + 1)
    ratio = dt_ratio if dt_ratio is not None else base.time.dt / h_base
    medium, (amp_p, amp_th) = _mms_setup(base, kind, base.study.mms_amplitude)
    # manufactured data can reach |theta| ~ 1 and needs a matching validated range
    vr = (min(base.medium.validated_range[0], -2.0), max(base.medium.validated_range[1], 2.0))
    medium = dict(medium, validated_range=vr)

    def run(n):
        nodes = tuple(n for _ in range(base.grid.dim))
        grid_h = base.grid.extents[0] / (n + 1)
        cfg = base.replace(grid={"nodes": nodes}, medium=medium,
                           time={"dt": ratio * grid_h},
                           output={"cadence": 10**9, "snapshot_cadence": 0})
        steps = base.time.t_final / cfg.time.dt
        if abs(steps - round(steps)) > 1e-9 * steps:
            raise ValueError(f"t_final is not a multiple of dt at level n={n}")
        grid = cfg.grid.build()
        params = cfg.medium.params()
        ms = Manufactured(grid, params, amp_p, amp_th)
        series = integrate(cfg, ms.p(0.0), ms.p(0.0, 1), ms.theta(0.0), ms.theta(0.0, 1),
                           Forcing(ms.pressure_forcing, ms.temperature_forcing),
                           params=params, grid=grid)
        if series.termination != COMPLETED:
            raise StudyRunFailed(series.termination, f"MMS run at n={n}: {series.message}")
        T = series.final_time
        ep = l2_norm(grid, series.final_p - ms.p(T))
        et = l2_norm(grid, series.final_theta - ms.theta(T))
        return MMSRow(grid_h, cfg.time.dt, ep, et, kind=kind)

    rows = parallel_map(run, levels)
    for prev, cur in zip(rows, rows[1:]):
        r = math.log(prev.h / cur.h)
        cur.order_p = _order(prev.error_p, cur.error_p, r)
        cur.order_theta = _order(prev.error_theta, cur.error_theta, r)
    return rows


def _order(e_coarse, e_fine, log_ratio):
    if e_coarse > 0 and e_fine > 0:
        return math.log(e_coarse / e_fine) / log_ratio
    return float("nan")


# ----------------------------------------------------------------------------
# relaxation-time limit


@dataclass
class TauRow:
    tau: float
    theta_gap: float
    p_gap: float


def tau_limit_study(cfg: ScenarioConfig, tau_list=None) -> list[TauRow]:
    """Compare the relaxed model at each ``tau`` with the ``tau = 0`` model at ``t_final``."""
    tau_list = tuple(cfg.study.tau_list if tau_list is None else tau_list)
    if any(not t > 0 for t in tau_list):
        raise ValueError("tau values must be positive")
    if any(a <= b for a, b in zip(tau_list, tau_list[1:])):
        raise ValueError("tau values must be strictly decreasing")
    grid = cfg.grid.build()
    p0, p1, th0, th1 = initial_fields(cfg, grid)

    def run(tau):
        c = cfg.replace(medium={"tau": tau})
        s = integrate(c, p0, p1, th0, th1, grid=grid)
        if s.termination != COMPLETED:
            raise StudyRunFailed(s.termination, f"tau={tau} run: {s.message}")
        return s

    runs = parallel_map(run, (0.0,) + tau_list)
    fourier, relaxed = runs[0], runs[1:]
    return [TauRow(tau, l2_norm(grid, s.final_theta - fourier.final_theta),
                   l2_norm(grid, s.final_p - fourier.final_p))
            for tau, s in zip(tau_list, relaxed)]
