"""Numerical toolkit for the Gaussian log-Sobolev deficit and its stability bounds."""
from .densities import (DmFunction, FamilyError, ProductDensity, RelativeDensity, bump, center,
                        floor, gaussian, make_family, mixture, scale, symmetric_dual, tensor, tilt)
from .functionals import (DivergenceError, NormalizationError, carlen_deficit, entropy,
                          fisher_information, functional_report, lp_distance_to_one, lsi_deficit,
                          rescale_to_dm, tensor_deficit)
from .transport1d import brenier_map, talagrand_deficit, w_to_gaussian, wasserstein
from .verify import InequalityRecord, SuiteConfig, run_suite, sequence_diagnostics

__version__ = "0.1.0"
