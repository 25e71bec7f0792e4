"""Finite-difference simulator for the Westervelt equation coupled to a
Pennes bioheat equation with Cattaneo (relaxed) heat flux, plus energy
diagnostics and verification studies."""

__version__ = "0.1.0"

from .config import ScenarioConfig, parse_config, serialize  # noqa: E402
from .grid import Grid, build_grid  # noqa: E402
from .medium import MediumParams  # noqa: E402
from .simulate import TimeSeries, mms_study, run_coupled, tau_limit_study  # noqa: E402

__all__ = [
    "Grid",
    "MediumParams",
    "ScenarioConfig",
    "TimeSeries",
    "build_grid",
    "mms_study",
    "parse_config",
    "run_coupled",
    "serialize",
    "tau_limit_study",
]
