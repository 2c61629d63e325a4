"""Uncertainty-limited joint polarization measurements on entangled photon
pairs: POVM construction, sixteen-outcome joint statistics, Poisson count
simulation, the bit-flip error model and the Bell-magnitude line fit."""

from .core import (
    CIRELSON_BOUND,
    InvalidStateError,
    JointPovm,
    MeasurementSetting,
    PolarizationObservable,
    TwoQubitState,
    UncertaintyViolationError,
    VisibilityPair,
    bell_expectation,
    bell_operator,
    build_joint_povm,
    maximally_mixed_state,
    observable_from_angle,
    partial_trace,
    polarizer_angles,
    povm_from_visibilities,
    random_two_qubit_state,
    side_observables,
    singlet_state,
    werner_state,
)
from .sim import (
    ALL_OUTCOMES,
    BAggregate,
    CountFileError,
    CountTable,
    JointDistribution,
    Outcome,
    QuasiDistribution,
    VisibilityEstimate,
    aggregate_b,
    b_value,
    conditional_state,
    format_count_table,
    interferometer_visibility,
    joint_distribution,
    joint_visibilities,
    parse_count_table,
    probabilities_from_counts,
    quasi_distribution,
    read_count_table,
    sample_counts,
    write_count_table,
)
from .analysis import (
    MINIMAL_OUTCOMES,
    BitFlipModel,
    FitResult,
    FlipRates,
    cirelson_floor,
    fit_bell_magnitude,
    flip_convolve,
    intrinsic_probs,
    pbflip_outcome,
    pbflip_uniform,
    predicted_probability,
)

__version__ = "0.1.0"
