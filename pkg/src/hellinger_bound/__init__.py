"""Tight lower bound on the squared Hellinger distance given means and variances."""

from .closed_forms import (
    DiscretizedLaw,
    GaussianLaw,
    ShiftedExponentialLaw,
    discretize,
    discretize_pair,
    gaussian_h2,
    match_moments_exponential,
    match_moments_gaussian,
    shifted_exponential_h2,
)
from .core_types import (
    DiscretePair,
    MomentSpec,
    bhattacharyya,
    binary_hellinger_sq,
    hellinger_sq,
    moments_of,
)
from .errors import (
    BoundaryAttainer,
    ConvergenceFailure,
    DegenerateSpec,
    EqualMeans,
    HellingerBoundError,
    InfeasibleSupport,
    InsufficientCoverage,
    InvalidLaw,
    InvalidPair,
    InvalidParameters,
    InvalidSpec,
)
from .tight_bounds import (
    BinaryAttainer,
    BoundReport,
    beta_factors,
    bhattacharyya_upper_bound,
    binary_attainer,
    bound_report,
    comparison_bound,
    hellinger_lower_bound,
)
from .verifier import (
    RecordKind,
    VerificationConfig,
    VerificationRecord,
    batch_hellinger_sq,
    equal_means_sequence,
    minimize_h2,
    run_verification,
    sample_feasible_batch,
    sample_feasible_pair,
)

__version__ = "0.1.0"
