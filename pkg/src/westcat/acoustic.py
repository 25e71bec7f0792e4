"""Implicit three-level stepper for the pressure equation.

The equation advanced is::

    (1 - 2 k(theta) p) p_tt - h(0) Lap p - b Lap p_t = 2 k(theta) p_t^2 + h~(theta) Lap p + f

with ``h(0) + h~(theta) = h(theta)`` combined into one nodewise stiffness
coefficient.  Time discretization at level n:

* ``p_tt = (p+ - 2 p + p-) / dt^2`` and ``p_t = (p+ - p-) / (2 dt)``;
* stiffness ``h(theta^n) Lap`` acts on the average ``(p+ + 2 p + p-) / 4``,
  damping ``b Lap`` on the central ``p_t``, both implicit in ``p+``;
* the mass coefficient ``1 - 2 k p`` is taken at level n, and the quadratic
  term ``2 k p_t^2`` is resolved by Picard iteration.

Every Picard iterate is one SPD solve: the system is row-scaled by the
nodewise stiffness so the matrix is ``diag(w / (dt^2 sigma)) - Lap_h``.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import (
    DegenerateInitialData,
    DegeneracyError,
    InsufficientHistoryError,
    InvalidValueError,
    PicardNoConvergence,
    SolverFailure,
)
from .grid import Grid, l2_norm, laplacian
from .linalg import SolveReport, assemble_operator, cg_solve
from .medium import MediumParams, eval_medium

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class DegeneracyConfig:
    """Admissible window for ``1 - 2 k(theta) p``.

    ``floor_alpha`` is the abort threshold for the minimum; ``cap_m`` bounds
    ``2 max|k p|``.  A step aborts if the coefficient leaves
    ``[floor_alpha, 1 + cap_m]`` and warns once ``2 max|k p| > cap_m``.
    """

    floor_alpha: float = 0.5
    cap_m: float = 0.5

    def __post_init__(self):
        if not (0 < self.cap_m < 1):
            raise InvalidValueError("cap_m", "must lie in (0, 1)")
        if not (0 < self.floor_alpha <= 1 - self.cap_m):
            raise InvalidValueError("floor_alpha", "need 0 < floor_alpha <= 1 - cap_m")


@dataclass(frozen=True)
class SolverOptions:
    cg_tol: float = 1e-10
    cg_maxit: int | None = None
    picard_tol: float = 1e-10
    max_picard: int = 25


@dataclass
class AcousticState:
    """Two pressure levels plus the latest centered derivatives.

    ``p_t_curr`` and ``p_tt_curr`` are the central difference quotients at
    time ``t - dt`` (the newest level where they are defined); ``p_tt_prev``
    is the one before that.  They are ``None`` until enough steps exist.
    """

    p_prev: np.ndarray
    p_curr: np.ndarray
    dt: float
    t: float = 0.0
    p_t_curr: np.ndarray | None = None
    p_tt_curr: np.ndarray | None = None
    p_tt_prev: np.ndarray | None = None

    def __post_init__(self):
        if not self.dt > 0:
            raise ValueError("dt must be positive")


@dataclass
class StepDiagnostics:
    picard_iterations: int
    cg_reports: list[SolveReport] = field(default_factory=list)
    updates: list[float] = field(default_factory=list)
    min_coeff: float = 1.0
    max_coeff: float = 1.0


def degeneracy_coefficient(params: MediumParams, theta, p) -> np.ndarray:
    return 1.0 - 2.0 * eval_medium(params, theta).k * np.asarray(p, dtype=float)


def check_degeneracy(coeff: np.ndarray, degcfg: DegeneracyConfig, step=None, *,
                     initial: bool = False) -> tuple[float, float]:
    lo = float(np.min(coeff))
    hi = float(np.max(coeff))
    if lo < degcfg.floor_alpha or hi > 1.0 + degcfg.cap_m:
        cls = DegenerateInitialData if initial else DegeneracyError
        where = "initial data" if initial else f"step {step}"
        raise cls(f"1 - 2 k p left [{degcfg.floor_alpha}, {1 + degcfg.cap_m}] at {where}: "
                  f"min {lo:.6g}, max {hi:.6g}", lo, hi, step)
    if max(1.0 - lo, hi - 1.0) > degcfg.cap_m:
        log.warning("2 max|k p| = %.4g exceeds cap_m = %.4g", max(1 - lo, hi - 1), degcfg.cap_m)
    return lo, hi


def init_p2(grid: Grid, params: MediumParams, p0, p1, theta0,
            degcfg: DegeneracyConfig | None = None, forcing=None) -> np.ndarray:
    """Second time derivative of the pressure at t = 0, read off the equation.

    Solves ``(1 - 2k(theta0) p0) p2 = h(theta0) Lap p0 + b Lap p1 + 2 k(theta0) p1^2 + f``
    nodewise.
    """
    degcfg = degcfg or DegeneracyConfig()
    p0, p1, theta0 = grid.check(p0), grid.check(p1), grid.check(theta0)
    med = eval_medium(params, theta0)
    w = 1.0 - 2.0 * med.k * p0
    check_degeneracy(w, degcfg, initial=True)
    rhs = med.h * laplacian(grid, p0) + params.b * laplacian(grid, p1) + 2.0 * med.k * p1 * p1
    if forcing is not None:
        rhs = rhs + grid.check(forcing)
    return rhs / w


def initial_state(grid: Grid, params: MediumParams, p0, p1, p2, dt: float) -> AcousticState:
    """Start the three-level scheme from a Taylor-synthesized level -1."""
    p0, p1, p2 = grid.check(p0), grid.check(p1), grid.check(p2)
    p_minus = p0 - dt * p1 + 0.5 * dt * dt * p2
    return AcousticState(p_prev=p_minus, p_curr=p0.copy(), dt=dt, t=0.0)


def acoustic_step(grid: Grid, state: AcousticState, theta_field, params: MediumParams,
                  forcing=None, degcfg: DegeneracyConfig | None = None,
                  opts: SolverOptions | None = None, step=None):
    """Advance the pressure by one step with the temperature frozen at ``theta_field``.

    Returns the new :class:`AcousticState` and :class:`StepDiagnostics`.
    """
    degcfg = degcfg or DegeneracyConfig()
    opts = opts or SolverOptions()
    dt = state.dt
    p_old, p_now = state.p_prev, state.p_curr
    med = eval_medium(params, grid.check(theta_field))
    k = med.k
    H = np.broadcast_to(med.h, grid.shape)

    w = 1.0 - 2.0 * k * p_now
    check_degeneracy(w, degcfg, step)
    sigma = 0.25 * H + params.b / (2.0 * dt)
    A = assemble_operator(w / (dt * dt * sigma), 1.0, grid)
    base = (w * (2.0 * p_now - p_old) / (dt * dt)
            + 0.25 * H * laplacian(grid, 2.0 * p_now + p_old)
            - params.b / (2.0 * dt) * laplacian(grid, p_old))
    if forcing is not None:
        base = base + grid.check(forcing)

    diag = StepDiagnostics(picard_iterations=0)
    guess = 2.0 * p_now - p_old
    prev_update = math.inf
    converged = False
    for it in range(1, opts.max_picard + 1):
        p_t = (guess - p_old) / (2.0 * dt)
        rhs = (base + 2.0 * k * p_t * p_t) / sigma
        new, rep = cg_solve(A, rhs, tol=opts.cg_tol, maxit=opts.cg_maxit, x0=guess)
        diag.cg_reports.append(rep)
        if not rep.converged:
            raise SolverFailure(f"CG did not converge in acoustic step {step} "
                                f"(residual {rep.final_residual:.3g})")
        check_degeneracy(1.0 - 2.0 * k * new, degcfg, step)
        update = l2_norm(grid, new - guess)
        size = l2_norm(grid, new)
        rel = 0.0 if update == 0.0 else update / max(size, np.finfo(float).tiny)
        diag.updates.append(rel)
        diag.picard_iterations = it
        guess = new
        if rel <= opts.picard_tol:
            converged = True
            break
        if update > prev_update:
            raise PicardNoConvergence(f"Picard update grew at iteration {it} of step {step}")
        prev_update = update
    if not converged:
        raise PicardNoConvergence(f"Picard did not converge in {opts.max_picard} iterations "
                                  f"at step {step}")

    p_new = guess
    coeff = 1.0 - 2.0 * k * p_new
    diag.min_coeff, diag.max_coeff = check_degeneracy(coeff, degcfg, step)
    new_state = replace(
        state,
        p_prev=p_now,
        p_curr=p_new,
        t=state.t + dt,
        p_t_curr=(p_new - p_old) / (2.0 * dt),
        p_tt_curr=(p_new - 2.0 * p_now + p_old) / (dt * dt),
        p_tt_prev=state.p_tt_curr,
    )
    return new_state, diag


def p_ttt_estimate(state: AcousticState) -> np.ndarray:
    """Backward difference of the two latest ``p_tt`` levels."""
    if state.p_tt_curr is None or state.p_tt_prev is None:
        raise InsufficientHistoryError("p_ttt needs two p_tt levels")
    return (state.p_tt_curr - state.p_tt_prev) / state.dt
