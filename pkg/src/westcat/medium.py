"""Medium parameters, temperature-dependent acoustic coefficients, heat source.

The squared sound speed is a polynomial in the shifted temperature
``theta = Theta_bar - Theta_a``::

    h(theta) = c_a**2 * (1 + a_1 theta + ... + a_J theta**J)

so ``h(0) = c_a**2`` and the constant-speed case is ``speed_poly = ()``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from numpy.polynomial import polynomial as P

from .errors import HBelowFloorError, InvalidValueError


@dataclass(frozen=True)
class MediumParams:
    c_a: float = 1.0
    b: float = 1.0
    beta: float = 10.0
    rho: float = 1.0
    rho_a: float = 1.0
    C_a: float = 1.0
    rho_b: float = 1.0
    C_b: float = 1.0
    W: float = 1.0
    kappa_a: float = 0.1
    tau: float = 0.1
    theta_a: float = 37.0
    speed_poly: tuple[float, ...] = field(default=())
    h1: float = 0.5

    def __post_init__(self):
        object.__setattr__(self, "speed_poly", tuple(float(a) for a in self.speed_poly))
        positive = ("c_a", "b", "rho", "rho_a", "C_a", "kappa_a", "h1")
        nonneg = ("rho_b", "C_b", "W", "tau")
        for name in positive:
            v = getattr(self, name)
            if not (math.isfinite(v) and v > 0):
                raise InvalidValueError(name, f"must be positive, got {v}")
        for name in nonneg:
            v = getattr(self, name)
            if not (math.isfinite(v) and v >= 0):
                raise InvalidValueError(name, f"must be nonnegative, got {v}")
        if not math.isfinite(self.beta):
            raise InvalidValueError("beta", "must be finite")

    @property
    def m(self) -> float:
        return self.rho_a * self.C_a

    @property
    def ell(self) -> float:
        return self.rho_b * self.C_b * self.W

    @property
    def h0(self) -> float:
        return self.c_a**2

    @property
    def k1(self) -> float:
        return abs(self.beta) / (self.rho * self.h1)

    @property
    def q_coeff(self) -> float:
        """Prefactor ``2 b / (rho_a c_a^4)`` of the absorbed-power source."""
        return 2.0 * self.b / (self.rho_a * self.c_a**4)

    def h_coeffs(self) -> np.ndarray:
        """Power-series coefficients of h in theta, lowest order first."""
        return self.c_a**2 * np.concatenate(([1.0], np.asarray(self.speed_poly, dtype=float)))


@dataclass(frozen=True)
class MediumEval:
    h: np.ndarray | float
    h_tilde: np.ndarray | float
    k: np.ndarray | float


def eval_medium(params: MediumParams, theta) -> MediumEval:
    """Evaluate ``h``, ``h - h(0)`` and ``k = beta / (rho h)`` at ``theta``.

    Works nodewise on arrays.  Raises :class:`HBelowFloorError` when ``h``
    falls below ``params.h1`` anywhere.
    """
    theta = np.asarray(theta, dtype=float)
    coeffs = params.h_coeffs()
    h = P.polyval(theta, coeffs)
    # h - h(0) without cancellation: theta * (c_a^2 a_1 + c_a^2 a_2 theta + ...)
    h_tilde = theta * P.polyval(theta, coeffs[1:]) if len(coeffs) > 1 else np.zeros_like(theta)
    hmin = float(np.min(h)) if np.size(h) else params.h0
    if hmin < params.h1:
        raise HBelowFloorError(f"h = {hmin:.6g} below floor h1 = {params.h1:.6g}")
    k = params.beta / (params.rho * h)
    if theta.ndim == 0:
        return MediumEval(float(h), float(h_tilde), float(k))
    return MediumEval(h, h_tilde, k)


def q_source(params: MediumParams, p_t: np.ndarray) -> np.ndarray:
    """Absorbed acoustic power ``2 b / (rho_a c_a^4) * p_t^2``."""
    p_t = np.asarray(p_t, dtype=float)
    return params.q_coeff * p_t * p_t


def q_source_dt(params: MediumParams, p_t: np.ndarray, p_tt: np.ndarray) -> np.ndarray:
    """Time derivative of :func:`q_source`: ``4 b / (rho_a c_a^4) * p_t p_tt``."""
    return 2.0 * params.q_coeff * np.asarray(p_t, dtype=float) * np.asarray(p_tt, dtype=float)


def heat_source(params: MediumParams, p_t, p_tt) -> np.ndarray:
    """Right-hand side ``Q(p_t) + tau dQ/dt`` of the temperature equation."""
    src = q_source(params, p_t)
    if params.tau > 0:
        src = src + params.tau * q_source_dt(params, p_t, p_tt)
    return src


@dataclass
class AssumptionReport:
    h_min_observed: float
    gamma1: float
    gamma2: float
    k1: float
    passed: bool
    growth_constants: dict = field(default_factory=dict)
    failures: list = field(default_factory=list)

    def summary(self) -> str:
        status = "passed" if self.passed else "FAILED: " + "; ".join(self.failures)
        return (f"h_min={self.h_min_observed:.6g} k1={self.k1:.6g} "
                f"gamma1={self.gamma1:g} gamma2={self.gamma2:g} -> {status}")


def validate_assumptions(params: MediumParams, theta_range=(-10.0, 10.0),
                         samples: int = 201) -> AssumptionReport:
    """Sample h, k and their derivatives on ``theta_range`` and check H1-H3, K1-K2.

    Growth conditions are checked by estimating the smallest constant ``C``
    with ``|f(s)| <= C (1 + |s|^gamma)`` over the samples; a check fails only
    if that constant is not finite.  ``gamma1 = max(0, J - 2)`` for a degree-J
    polynomial and ``gamma2 = 2 + 2 gamma1`` (the growth of ``k''`` through
    ``k1^3 |h'|^2``).
    """
    if samples < 2:
        raise ValueError("need at least two samples")
    lo, hi = float(theta_range[0]), float(theta_range[1])
    if not (math.isfinite(lo) and math.isfinite(hi) and lo <= hi):
        raise ValueError(f"bad theta range {theta_range}")
    s = np.linspace(lo, hi, samples)
    coeffs = params.h_coeffs()
    degree = len(coeffs) - 1
    h = P.polyval(s, coeffs)
    dh = P.polyval(s, P.polyder(coeffs)) if degree >= 1 else np.zeros_like(s)
    d2h = P.polyval(s, P.polyder(coeffs, 2)) if degree >= 2 else np.zeros_like(s)
    gamma1 = float(max(0, degree - 2))
    gamma2 = 2.0 + 2.0 * gamma1
    failures = []
    h_min = float(np.min(h))
    if h_min < params.h1:
        failures.append(f"H1: min h = {h_min:.6g} < h1 = {params.h1:.6g}")

    constants = {}
    with np.errstate(divide="ignore", invalid="ignore"):
        safe_h = np.where(h > 0, h, np.nan)
        k = params.beta / (params.rho * safe_h)
        dk = -params.beta * dh / (params.rho * safe_h**2)
        d2k = (-params.beta * d2h / (params.rho * safe_h**2)
               + 2.0 * params.beta * dh**2 / (params.rho * safe_h**3))
    checks = {
        "H2": (d2h, gamma1),
        "H3": (dh, 1.0 + gamma1),
        "K2'": (dk, 1.0 + gamma2),
        "K2''": (d2k, gamma2),
    }
    for name, (vals, gamma) in checks.items():
        c = float(np.max(np.abs(vals) / (1.0 + np.abs(s) ** gamma)))
        constants[name] = c
        if not math.isfinite(c):
            failures.append(f"{name}: growth constant not finite on range")
    k1 = params.k1
    if h_min >= params.h1:
        kmax = float(np.max(np.abs(k)))
        constants["K1"] = kmax
        if kmax > k1 * (1.0 + 1e-14):
            failures.append(f"K1: max |k| = {kmax:.6g} > k1 = {k1:.6g}")
    else:
        failures.append("K1: k1 bound undefined while H1 fails")
    return AssumptionReport(h_min, gamma1, gamma2, k1, not failures, constants, failures)
