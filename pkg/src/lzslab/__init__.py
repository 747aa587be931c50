"""Non-Hermitian Landau-Zener transitions and Landau-Zener-Stueckelberg interferometry.

Modules
-------
specfun     parabolic cylinder functions of complex order
twolevel    generic and real-gap non-Hermitian LZ models, closed-form evolution
propagator  adaptive integration of non-Hermitian Schroedinger equations
lzs         adiabatic-impulse model of two successive crossings
ssh         gain-and-loss SSH chain in a uniform field
waveguide   Gaussian beams in waveguide arrays
cli         command-line front end
"""
__version__ = "0.1.0"

from .errors import (BoundaryContamination, ConfigError, DegeneracyError, DegenerateGap,
                     DomainError, ExceptionalPointError, LZSError, NonConvergence,
                     QuadratureFailure, StepUnderflow, ZeroIntensity)
from .specfun import PcfEvalReport, pcf, pcf_value
from .twolevel import (BandPopulations, GenericLZParams, RealGapLZParams, band_populations,
                       closed_form_evolution)
from .lzs import LZSCase, analytic_populations, compose
from .ssh import SSHParams
from .waveguide import WaveguideConfig
