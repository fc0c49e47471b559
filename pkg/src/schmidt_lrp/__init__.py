"""Schmidt-number estimation from local random unitary and orthogonal projections."""

from . import baselines, estimator, haar, matlin, moments, shots, states
from .baselines import (
    build_3mubs,
    mub_criterion,
    second_moment_criterion,
    sn_from_3mubs,
    sn_from_second_moment,
    trace_distance_lower_bound,
)
from .errors import (
    DegenerateObservableError,
    DomainError,
    ResourceError,
    SchmidtLRPError,
    ShapeError,
    StateValidityError,
)
from .estimator import (
    FidelitySampleSet,
    bootstrap_confidence_interval,
    estimate_sn,
    per_sample_fidelity,
    t_confidence_interval,
    t_quantile,
)
from .haar import RandomStream, sample_haar_orthogonal, sample_haar_unitary
from .moments import (
    MomentSampleSet,
    ObservablePair,
    exact_Q,
    exact_R,
    expect_O,
    expect_U,
    fidelity_from_moments,
    projector_probabilities,
    rank_optimal,
    sn_from_fidelity,
)
from .states import StateModel, fidelity_direct, isotropic, max_entangled, thermal

__version__ = "0.1.0"
