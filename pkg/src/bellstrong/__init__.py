"""Bell-type inequalities for two-channel polarizer experiments with lossy detection."""

from .core import (
    Angle,
    Apparatus,
    ArmOptics,
    DegenerateExperimentError,
    DomainError,
    InequalityName,
    InequalityReport,
    JointProbabilities,
    SinglesProbabilities,
    expectation,
)

__version__ = "0.1.0"

__all__ = [
    "Angle",
    "Apparatus",
    "ArmOptics",
    "DegenerateExperimentError",
    "DomainError",
    "InequalityName",
    "InequalityReport",
    "JointProbabilities",
    "SinglesProbabilities",
    "expectation",
]
