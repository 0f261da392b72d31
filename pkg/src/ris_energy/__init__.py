"""Subarray and pilot-power design for RIS-aided uplink transmission of short payloads."""

__version__ = "0.1.0"

from .channel import ChannelRealization, ChannelScenario  # noqa: E402
from .energy import JointOptions, OptimizationResult, TransmissionPlan  # noqa: E402
from .montecarlo import McConfig, McEstimate  # noqa: E402
from .quantization import RisCodebook  # noqa: E402

__all__ = [
    "ChannelRealization",
    "ChannelScenario",
    "JointOptions",
    "McConfig",
    "McEstimate",
    "OptimizationResult",
    "RisCodebook",
    "TransmissionPlan",
]
