"""No-signaling boxes amended with Bell-type joint measurements."""

from .core import (
    BellProbabilities,
    CompactState,
    JointBox,
    LocalState,
    MomentVector,
    Violation,
    compact_from_box,
    correlator,
    expand,
    local_from_moments,
    mixture,
    moments_from_local,
    product_box,
    uniform_box,
    validate_joint_box,
)
from .measurements import (
    MeasurementFamily,
    OperatorSet,
    bell_probs,
    noisy_bell_probs,
    operator_set,
    outcome_value,
    p4_product,
    positivity_report,
)

__all__ = [
    "BellProbabilities",
    "CompactState",
    "JointBox",
    "LocalState",
    "MeasurementFamily",
    "MomentVector",
    "OperatorSet",
    "Violation",
    "bell_probs",
    "compact_from_box",
    "correlator",
    "expand",
    "local_from_moments",
    "mixture",
    "moments_from_local",
    "noisy_bell_probs",
    "operator_set",
    "outcome_value",
    "p4_product",
    "positivity_report",
    "product_box",
    "uniform_box",
    "validate_joint_box",
]

__version__ = "0.1.0"
