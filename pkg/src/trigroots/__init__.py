"""Numerical laboratory for real roots of random trigonometric polynomials.

The object of study is

    P_n(t) = n^{-1/2} * sum_{i=1}^n  y_{i1} cos(i t / n) + y_{i2} sin(i t / n)

with iid mean-zero, unit-variance coefficients y_{ij}, counted over one
period t in (-n*pi, n*pi].  The package simulates root counts, estimates
Var(N_n)/n against its kurtosis-dependent limit, computes the Gaussian
variance slope by quadrature, and probes the supporting machinery:
approximate delta-integral root counting, Edgeworth correctors,
non-resonance (Diophantine) conditions, characteristic-function decay and
small-ball probabilities.
"""

from trigroots.ensemble import (
    DistributionSpec,
    MomentProfile,
    CoefficientSample,
    gaussian,
    rademacher,
    uniform,
    discrete,
    parse_distribution,
    moments,
    sample,
    charfn_scalar,
    xi_norm_sq,
)
from trigroots.polyeval import (
    WindowSpec,
    EvaluationGrid,
    CovarianceMatrix,
    eval_point,
    eval_grid,
    basis_vectors,
    covariance_V,
)
from trigroots.rootcount import (
    RootCountResult,
    KacRiceResult,
    count_roots,
    count_kacrice,
    gaussian_expectation_exact,
)
from trigroots.mcstats import (
    VarianceEstimate,
    ExperimentRecord,
    run_experiment,
    slope_series,
    theoretical_slope,
    scaling_check,
)
from trigroots.cganalytic import (
    CgQuadratureConfig,
    CgResult,
    SpectralFunctions,
    g_funcs,
    rstar,
    cg_integrand,
    compute_cg,
    ystar,
    ystar_iid,
)

__version__ = "0.1.0"
