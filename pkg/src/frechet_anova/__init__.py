"""
Fréchet analysis of variance for samples of metric-space valued objects.

The package estimates Fréchet means and variances of distributions (under
the L2-Wasserstein metric), of matrices such as graph Laplacians (under the
Frobenius metric) and of Euclidean vectors, builds confidence intervals for
the Fréchet variance, and tests whether several groups of objects share one
distribution.
"""

__version__ = "0.1.0"

from .baselines import PairwiseDistances, energy_test, mmd_test
from .distributions import (
    ALGORITHM_ID,
    RandomStream,
    chi_square_quantile,
    chi_square_sf,
    derive_stream,
    std_normal_quantile,
)
from .exceptions import DegenerateError, DimensionError, FrechetError, InputError, ResamplingError
from .frechet import (
    FrechetSummary,
    IntervalEstimate,
    bootstrap_variance_interval,
    frechet_summary,
    stddev_interval,
    variance_interval,
)
from .generators import (
    ScenarioKind,
    ScenarioSpec,
    gen_ba_laplacian_sample,
    gen_beta_vector_sample,
    gen_gaussian_qd_sample,
    gen_truncated_mvt_sample,
    generate,
)
from .ksample import (
    GroupedSample,
    GroupSummaries,
    KSampleReport,
    asymptotic_test,
    bootstrap_test,
    fn_statistic,
    group_summaries,
    permutation_test,
    tn_statistic,
    un_statistic,
)
from .power import PowerCurve, StudyConfig, empirical_size_report, run_power_study
from .spaces import (
    EuclideanPoint,
    MatrixKind,
    ObjectSample,
    QuantileDistribution,
    Space,
    SquareMatrixObject,
    closed_form_mean,
    empirical_quantile_grid,
    frobenius_distance,
    laplacian_from_adjacency,
    wasserstein_distance,
)
