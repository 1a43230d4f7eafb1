"""Spectral numerics for normalised ground states of the fractional Choquard equation
with a lower-critical Hartree term."""

__version__ = "0.1.0"

from .errors import *  # noqa: F401,F403
from .params import ProblemParams
from .grid import Field, Grid, build_grid
from .spectral import frac_laplacian, hartree, norms, riesz_convolve
from .functionals import (EnergyBreakdown, FiberSample, energy, fiber, fiber_argmax, gradient,
                          lagrange_multiplier, scale)
from .constants import (c_p_lower_bound, critical_mass_check, derived_exponents, optimizer_field,
                        s_mu_estimate)
from .solver import SolverConfig, SolverResult, ground_state, project_pohozaev, residual
from .campaigns import (SweepReport, fit_powerlaw, run_critical_campaign, run_large_mass_campaign,
                        run_small_mass_campaign)
