"""Randomized orthogonal-array sampling designs and their ANOVA analysis."""

__version__ = "0.1.0"

from .errors import *  # noqa: F401,F403
from .gf_oa import OrthogonalArray, Stage, construct_bose_oa, verify_strength
from .randomize import Role, SeedSpec, expand_to_latin, randomize_symbols, tang_randomize, uniform_permutation
from .sampler import (
    Design,
    UnitSample,
    check_bivariate_stratification,
    check_univariate_latin,
    coupled_digit_samples,
    sample_lhs,
    sample_oalh,
    sample_oalh_tang,
    sample_oas,
    sample_srs,
)
from .anova import Integrand, decompose, frem_l2, get_integrand, mu_mc, mu_quadrature
from .estimators import estimate, replicate_variance, standardize
from .harness import ExperimentConfig, ExperimentReport, run_clt_experiment, run_variance_sweep
