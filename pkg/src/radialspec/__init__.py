"""Spectra of e^(a-b) div(e^b grad) on balls and spherical shells, with ray geometry.

Modules: ``profiles`` (coefficients on a radial grid), ``eigensolver`` (modes per
angular degree), ``perturbation`` (first and second eigenvalue derivatives,
density of squared modes), ``rays`` (turning points, periodic broken rays, Abel
transform), ``wave_trace`` (smoothed trace and its peaks) and ``experiments``
(config-driven runs behind the ``radialspec`` command).
"""
from .eigensolver import Mode, Spectrum, full_spectrum, lowest_modes, solve_modes
from .profiles import (BoundaryCondition, OperatorVariant, RadialFunction, RadialProfile,
                       make_profile)

__all__ = ["BoundaryCondition", "Mode", "OperatorVariant", "RadialFunction", "RadialProfile",
           "Spectrum", "full_spectrum", "lowest_modes", "make_profile", "solve_modes"]
__version__ = "0.1.0"
