"""Operation-fidelity distributions of quantum channels."""

from .errors import (
    DegenerateChannel,
    DimensionMismatch,
    EmptySample,
    FidShadowError,
    InapplicableMethod,
    NonConvergence,
    NotCommuting,
    NotSpanning,
    NotTracePreserving,
    ValidationError,
)
from .quantum_core import (
    ChannelSpec,
    EmpiricalDistribution,
    PureState,
    fidelity,
    haar_state,
    sample_fidelities,
    validate_channel,
)
from .numrange import crawford_number, extremal_fidelity, numerical_radius
from .discriminate import discriminate

__version__ = "0.1.0"

__all__ = [
    "ChannelSpec",
    "DegenerateChannel",
    "DimensionMismatch",
    "EmpiricalDistribution",
    "EmptySample",
    "FidShadowError",
    "InapplicableMethod",
    "NonConvergence",
    "NotCommuting",
    "NotSpanning",
    "NotTracePreserving",
    "PureState",
    "ValidationError",
    "crawford_number",
    "discriminate",
    "extremal_fidelity",
    "fidelity",
    "haar_state",
    "numerical_radius",
    "sample_fidelities",
    "validate_channel",
]
