"""Generalized positive Linnik laws, tilted stable samplers and Bessel-spider checks.

Subpackages and modules:

- :mod:`~spider_linnik.samplers`: stable, tilted stable, Linnik and spider-occupation draws
- :mod:`~spider_linnik.analytic`: densities, Laplace transforms, Levy measure, quadrature
- :mod:`~spider_linnik.identities`: simulation checks of the identities in law
- :mod:`~spider_linnik.spider_sim`: discrete spider walks (alpha = 1/2)
- :mod:`~spider_linnik.cli`: command-line interface
"""

from .estimates import MCEstimate, TestReport, WeightedSample
from .rng import RandomSource
from .samplers import EXAMPLE1, EXAMPLE2, LinnikSpec, ParameterError, StableLaw, TiltSpec

__version__ = "0.1.0"

__all__ = ["EXAMPLE1", "EXAMPLE2", "LinnikSpec", "MCEstimate", "ParameterError", "RandomSource",
           "StableLaw", "TestReport", "TiltSpec", "WeightedSample", "__version__"]
