"""Numerical lab for the defocusing fifth-order modified KdV equation

    u_t + u_xxxxx + 30 u^4 u_x - 10 u^2 u_xxx - 10 u_x^3 - 40 u u_x u_xx = 0:

direct scattering, pseudo-spectral evolution, long-time asymptotic formulas
and fourth-order Painleve II profile tools.
"""

from .core import (Config, DomainError, InvalidArgument, NumericalError, RegionThresholds,
                   Tolerances, load_config, make_kgrid, make_uniform_grid)

__version__ = "0.1.0"

__all__ = ["Config", "DomainError", "InvalidArgument", "NumericalError", "RegionThresholds",
           "Tolerances", "load_config", "make_kgrid", "make_uniform_grid", "__version__"]
