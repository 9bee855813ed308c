"""alignlab: optimal-alignment score Monte Carlo laboratory.

Exact and bit-parallel LCS scoring, reproducible parallel Monte Carlo
estimation of score moments and conditional means, the flip-transformation
experiment, closed-form fluctuation bounds, and empirical rate-function
machinery, served over a small HTTP API with a file-writing CLI client.
"""

__version__ = "0.1.0"

from .align import (  # noqa: F401
    ScoringScheme,
    SequencePair,
    asymmetry_check,
    brute_force_score,
    lcs_bitparallel,
    max_change_K,
    score_dp,
)
from .seqmodel import (  # noqa: F401
    BinaryModel,
    RngPlan,
    ZeroCountSet,
    binomial_pmf_log,
    count_zeros,
    enumerate_R,
    gaussian_local_pmf,
    make_zero_count_set,
    sample_conditional,
    sample_pair,
    transform_R,
)
