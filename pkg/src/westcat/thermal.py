"""Temperature steppers: hyperbolic (relaxed flux) and parabolic (Fourier) forms.

Hyperbolic form, advanced with a three-level scheme centered at level n::

    tau m T_tt + (m + tau ell) T_t + ell T - kappa Lap T = source + f

with ``T_tt`` and ``T_t`` central and the reaction/diffusion terms on the
average ``(T+ + 2 T + T-) / 4``.  The parabolic form ``m T_t + ell T - kappa
Lap T = source + f`` uses Crank-Nicolson.  Each step is one SPD solve.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .acoustic import SolverOptions
from .errors import SolverFailure, TauZeroError
from .grid import Grid, face_differences, laplacian
from .linalg import assemble_operator, cg_solve
from .medium import MediumParams, q_source, q_source_dt

HYPERBOLIC = "hyperbolic"
PARABOLIC = "parabolic"


@dataclass
class ThermalState:
    """Temperature levels; centered derivatives refer to time ``t - dt``.

    In parabolic mode ``theta_prev`` is only kept for difference quotients
    and plays no role in the dynamics (it is ``None`` before the first step).
    """

    theta_prev: np.ndarray | None
    theta_curr: np.ndarray
    dt: float
    t: float = 0.0
    mode: str = HYPERBOLIC
    theta_t_curr: np.ndarray | None = None
    theta_tt_curr: np.ndarray | None = None

    def __post_init__(self):
        if not self.dt > 0:
            raise ValueError("dt must be positive")
        if self.mode not in (HYPERBOLIC, PARABOLIC):
            raise ValueError(f"unknown thermal mode {self.mode!r}")


@dataclass
class FluxState:
    """Heat flux on grid faces, one array per axis (see ``grid.face_differences``)."""

    q: list
    t: float = 0.0


def init_theta2(grid: Grid, params: MediumParams, theta0, theta1, p1, p2,
                forcing=None) -> np.ndarray:
    """Second time derivative of the temperature at t = 0."""
    tau = params.tau
    if not tau > 0:
        raise TauZeroError("theta_tt(0) is only defined for tau > 0")
    m, ell = params.m, params.ell
    theta0, theta1 = grid.check(theta0), grid.check(theta1)
    p1, p2 = grid.check(p1), grid.check(p2)
    rhs = (-(m + tau * ell) * theta1 - ell * theta0
           + params.kappa_a * laplacian(grid, theta0)
           + q_source(params, p1) + tau * q_source_dt(params, p1, p2))
    if forcing is not None:
        rhs = rhs + grid.check(forcing)
    return rhs / (tau * m)


def initial_state(grid: Grid, params: MediumParams, theta0, theta1=None, theta2=None,
                  dt: float = 1e-3) -> ThermalState:
    theta0 = grid.check(theta0)
    if params.tau > 0:
        theta_minus = theta0 - dt * grid.check(theta1) + 0.5 * dt * dt * grid.check(theta2)
        return ThermalState(theta_minus, theta0.copy(), dt, 0.0, HYPERBOLIC)
    return ThermalState(None, theta0.copy(), dt, 0.0, PARABOLIC)


def _solve(A, rhs, guess, opts: SolverOptions, what: str):
    x, rep = cg_solve(A, rhs, tol=opts.cg_tol, maxit=opts.cg_maxit, x0=guess)
    if not rep.converged:
        raise SolverFailure(f"CG did not converge in {what} (residual {rep.final_residual:.3g})")
    return x


def thermal_step_hyperbolic(grid: Grid, state: ThermalState, source, params: MediumParams,
                            forcing=None, opts: SolverOptions | None = None) -> ThermalState:
    opts = opts or SolverOptions()
    if state.mode != HYPERBOLIC:
        raise ValueError("state is not in hyperbolic mode")
    tau = params.tau
    if not tau > 0:
        raise TauZeroError("hyperbolic step needs tau > 0")
    dt = state.dt
    m, ell, kappa = params.m, params.ell, params.kappa_a
    old, now = state.theta_prev, state.theta_curr
    mass_tt = tau * m / (dt * dt)
    damp = (m + tau * ell) / (2.0 * dt)
    A = assemble_operator(mass_tt + damp + 0.25 * ell, 0.25 * kappa, grid)
    avg = 2.0 * now + old
    rhs = (mass_tt * (2.0 * now - old) + damp * old
           - 0.25 * ell * avg + 0.25 * kappa * laplacian(grid, avg)
           + grid.check(source))
    if forcing is not None:
        rhs = rhs + grid.check(forcing)
    new = _solve(A, rhs, 2.0 * now - old, opts, "hyperbolic thermal step")
    return replace(state, theta_prev=now, theta_curr=new, t=state.t + dt,
                   theta_t_curr=(new - old) / (2.0 * dt),
                   theta_tt_curr=(new - 2.0 * now + old) / (dt * dt))


def thermal_step_parabolic(grid: Grid, state: ThermalState, source, params: MediumParams,
                           forcing=None, opts: SolverOptions | None = None) -> ThermalState:
    """Crank-Nicolson step; ``source`` and ``forcing`` should be mid-step values."""
    opts = opts or SolverOptions()
    if state.mode != PARABOLIC:
        raise ValueError("state is not in parabolic mode")
    dt = state.dt
    m, ell, kappa = params.m, params.ell, params.kappa_a
    now = state.theta_curr
    A = assemble_operator(m / dt + 0.5 * ell, 0.5 * kappa, grid)
    rhs = (m / dt - 0.5 * ell) * now + 0.5 * kappa * laplacian(grid, now) + grid.check(source)
    if forcing is not None:
        rhs = rhs + grid.check(forcing)
    new = _solve(A, rhs, now, opts, "parabolic thermal step")
    old = state.theta_prev
    if old is None:
        t_t = t_tt = None
    else:
        t_t = (new - old) / (2.0 * dt)
        t_tt = (new - 2.0 * now + old) / (dt * dt)
    return replace(state, theta_prev=now, theta_curr=new, t=state.t + dt,
                   theta_t_curr=t_t, theta_tt_curr=t_tt)


def thermal_step(grid: Grid, state: ThermalState, source, params: MediumParams,
                 forcing=None, opts: SolverOptions | None = None) -> ThermalState:
    if state.mode == HYPERBOLIC:
        return thermal_step_hyperbolic(grid, state, source, params, forcing, opts)
    return thermal_step_parabolic(grid, state, source, params, forcing, opts)


def zero_flux(grid: Grid, t: float = 0.0) -> FluxState:
    return FluxState([np.zeros_like(g) for g in face_differences(grid, grid.zeros())], t)


def fourier_flux(grid: Grid, theta, params: MediumParams) -> list:
    return [-params.kappa_a * g for g in face_differences(grid, theta)]


def flux_reconstruct(grid: Grid, flux: FluxState, theta_field, params: MediumParams,
                     dt: float) -> FluxState:
    """Exponential-integrator update of the relaxed flux law.

    ``q+ = exp(-dt/tau) q + (1 - exp(-dt/tau)) (-kappa grad theta)`` per face,
    with the gradient taken from ``theta_field``.
    """
    tau = params.tau
    if not tau > 0:
        raise TauZeroError("flux relaxation needs tau > 0")
    decay = math.exp(-dt / tau)
    target = fourier_flux(grid, theta_field, params)
    q = [decay * qi + (1.0 - decay) * ti for qi, ti in zip(flux.q, target)]
    return FluxState(q, flux.t + dt)
