"""Shared value types for two-channel polarizer correlation experiments.

Angles are kept in degrees so the canonical settings (0, 30, 60, 22.5 ...)
are represented exactly; conversion to radians happens at the point of use.
Probabilities are validated on construction and never clamped.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Mapping

# Slack for float round-off when checking that probabilities sum to <= 1.
PROB_TOL = 1e-12


class DomainError(ValueError):
    """An input lies outside the domain of the model or formula."""


class DegenerateExperimentError(DomainError):
    """A normalizing rate (denominator) is zero."""


def check_unit_interval(name: str, value: float) -> float:
    value = float(value)
    if not math.isfinite(value):
        raise DomainError(f"{name} must be finite, got {value!r}")
    if value < 0.0 or value > 1.0:
        raise DomainError(f"{name} must lie in [0, 1], got {value!r}")
    return value


def check_correlation(name: str, value: float) -> float:
    value = float(value)
    if not math.isfinite(value) or abs(value) > 1.0 + PROB_TOL:
        raise DomainError(f"{name} must lie in [-1, 1], got {value!r}")
    return value


def degrees(angle: float | "Angle") -> float:
    """Return an angle-like value (``Angle`` or number of degrees) as a float."""
    return float(angle)


@dataclass(frozen=True, order=True)
class Angle:
    """Polarizer orientation in degrees."""

    deg: float

    def __post_init__(self) -> None:
        if not math.isfinite(float(self.deg)):
            raise DomainError(f"angle must be finite, got {self.deg!r}")
        object.__setattr__(self, "deg", float(self.deg))

    def __float__(self) -> float:
        return self.deg

    @property
    def radians(self) -> float:
        return math.radians(self.deg)

    def normalized(self) -> Angle:
        """Equivalent angle in [0, 360)."""
        r = self.deg % 360.0
        # -tiny % 360 rounds up to 360.0
        if r >= 360.0:
            r = 0.0
        return Angle(r)

    def separation(self, other: float | Angle) -> float:
        """|self - other| in degrees, the argument of symmetric predictions."""
        return abs(self.deg - float(other))

    def __add__(self, other: float | Angle) -> Angle:
        return Angle(self.deg + float(other))

    def __sub__(self, other: float | Angle) -> Angle:
        return Angle(self.deg - float(other))


@dataclass(frozen=True)
class ArmOptics:
    """Prism transmittances of one arm.

    ``t_par``/``t_perp`` are the transmitted-path transmittances for light
    polarized parallel/perpendicular to the transmitted channel, ``r_par``/
    ``r_perp`` the same for the reflected path.
    """

    t_par: float = 1.0
    t_perp: float = 0.0
    r_par: float = 1.0
    r_perp: float = 0.0

    def __post_init__(self) -> None:
        for name in ("t_par", "t_perp", "r_par", "r_perp"):
            object.__setattr__(self, name, check_unit_interval(name, getattr(self, name)))

    @classmethod
    def ideal(cls) -> ArmOptics:
        return cls(1.0, 0.0, 1.0, 0.0)

    @property
    def t_plus(self) -> float:
        return self.t_par + self.t_perp

    @property
    def t_minus(self) -> float:
        return self.t_par - self.t_perp

    @property
    def r_plus(self) -> float:
        return self.r_par + self.r_perp

    @property
    def r_minus(self) -> float:
        return self.r_par - self.r_perp


@dataclass(frozen=True)
class Apparatus:
    """Detector and prism parameters of a real (lossy) experiment.

    The two detectors face each other (back-to-back emission directions);
    ``phi_deg`` is the detector half-angle that fixes the solid angle.
    """

    eta: float = 1.0
    phi_deg: float = 180.0
    arm1: ArmOptics = field(default_factory=ArmOptics.ideal)
    arm2: ArmOptics = field(default_factory=ArmOptics.ideal)
    use_depolarization: bool = False

    def __post_init__(self) -> None:
        eta = float(self.eta)
        if not (0.0 < eta <= 1.0):
            raise DomainError(f"eta must lie in (0, 1], got {self.eta!r}")
        phi = float(self.phi_deg)
        if not (0.0 < phi <= 180.0):
            raise DomainError(f"phi_deg must lie in (0, 180], got {self.phi_deg!r}")
        object.__setattr__(self, "eta", eta)
        object.__setattr__(self, "phi_deg", phi)

    @property
    def solid_angle(self) -> float:
        return 2.0 * math.pi * (1.0 - math.cos(math.radians(self.phi_deg)))


@dataclass(frozen=True)
class JointProbabilities:
    """Coincidence probabilities p++, p+-, p-+, p-- for one setting pair.

    The undetected remainder ``1 - total`` is implicit.
    """

    pp: float
    pm: float
    mp: float
    mm: float

    def __post_init__(self) -> None:
        for name in ("pp", "pm", "mp", "mm"):
            object.__setattr__(self, name, check_unit_interval(name, getattr(self, name)))
        if self.total > 1.0 + PROB_TOL:
            raise DomainError(f"joint probabilities sum to {self.total!r} > 1")

    @property
    def total(self) -> float:
        return self.pp + self.pm + self.mp + self.mm

    def scaled(self, k: float) -> JointProbabilities:
        return JointProbabilities(k * self.pp, k * self.pm, k * self.mp, k * self.mm)

    def as_dict(self) -> dict[str, float]:
        return {"pp": self.pp, "pm": self.pm, "mp": self.mp, "mm": self.mm}

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> JointProbabilities:
        try:
            return cls(data["pp"], data["pm"], data["mp"], data["mm"])
        except KeyError as exc:
            raise DomainError(f"joint probabilities missing key {exc}") from None


@dataclass(frozen=True)
class SinglesProbabilities:
    """Single-arm detection probabilities p+ and p- at one setting."""

    p_plus: float
    p_minus: float

    def __post_init__(self) -> None:
        object.__setattr__(self, "p_plus", check_unit_interval("p_plus", self.p_plus))
        object.__setattr__(self, "p_minus", check_unit_interval("p_minus", self.p_minus))
        if self.total > 1.0 + PROB_TOL:
            raise DomainError(f"singles sum to {self.total!r} > 1")

    @property
    def total(self) -> float:
        return self.p_plus + self.p_minus

    def as_dict(self) -> dict[str, float]:
        return {"p_plus": self.p_plus, "p_minus": self.p_minus}

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> SinglesProbabilities:
        try:
            return cls(data["p_plus"], data["p_minus"])
        except KeyError as exc:
            raise DomainError(f"singles probabilities missing key {exc}") from None


def expectation(j: JointProbabilities) -> float:
    """Correlation pp - pm - mp + mm (not renormalized by the detected total)."""
    return j.pp - j.pm - j.mp + j.mm


class InequalityName(str, Enum):
    BELL1965 = "bell1965"
    CHSH = "chsh"
    ARDEHALI_IDEAL = "ardehali-ideal"
    ARDEHALI_STRONG = "ardehali-strong"
    ARDEHALI_STRONG_SYMMETRIC = "ardehali-strong-symmetric"
    CH = "ch"


@dataclass(frozen=True)
class InequalityReport:
    """Evaluated left-hand side of a correlation inequality against its bound.

    For a positive bound the violation factor is ``lhs / bound``. For a zero
    bound it is ``1 + excess`` with ``excess = lhs - bound``, so that in both
    cases the factor exceeds 1 exactly when the bound is violated.
    """

    name: InequalityName
    lhs: float
    bound: float
    settings: tuple[tuple[str, Angle], ...] = ()
    inputs_digest: Mapping[str, Any] = field(default_factory=dict)

    @property
    def excess(self) -> float:
        return self.lhs - self.bound

    @property
    def violation_factor(self) -> float:
        if self.bound > 0:
            return self.lhs / self.bound
        return 1.0 + self.excess

    @property
    def violated(self) -> bool:
        return self.lhs > self.bound

    def to_dict(self) -> dict[str, Any]:
        return {
            "inequality": self.name.value,
            "lhs": self.lhs,
            "bound": self.bound,
            "violation_factor": self.violation_factor,
            "excess": self.excess,
            "violated": self.violated,
            "unit": "deg",
            "settings": [{"label": label, "deg": a.deg} for label, a in self.settings],
            "inputs": dict(self.inputs_digest),
        }
