"""Spectral and dispersive numerics for the discrete Schrodinger operator ``-Delta + V``."""

from .edge import SpectralPoint, free_resolvent_kernel, puiseux_free_terms, resolve_branch
from .errors import (BranchAmbiguityError, ConvergenceError, EdgeSingularityError, LatticeError,
                     NonGenericError, SingularResolventError, ValidationError,
                     WindowTooSmallError)
from .evolution import (DecaySeries, EvolutionKernel, decay_series, evolve_ac_kernel,
                        evolve_ac_kernel_eig, evolve_free_kernel)
from .jost import JostData, ScatteringData, is_generic, jost_pair, scattering_coeffs, zero_energy_jost
from .lattice import LatticeKernel, LatticeWindow, Potential, apply_h, kernel_norm, weighted_norm
from .oscillatory import (CutoffPair, PhaseSpec, build_cutoffs, oscillatory_integral,
                          sup_over_a_decay)
from .resolvent import (TOperators, resolvent_at_zero, resolvent_kernel_jost,
                        resolvent_truncated_solve, t_operators)
from .spectrum import EigenPair, SpectralDecomposition, discrete_spectrum

__version__ = "0.1.0"
