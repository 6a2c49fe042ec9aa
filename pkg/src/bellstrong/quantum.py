"""Quantum predictions for the J=1 -> J=0 atomic cascade photon pair.

Two branches: the ideal experiment (lossless prisms, unit efficiency, full
collection) and the real experiment with finite quantum efficiency, finite
detector aperture and imperfect prisms. The detectors are assumed back to
back; only that geometry has closed forms for the angular correlation and
depolarization factors.
"""

from __future__ import annotations

import math

from .core import (
    Angle,
    Apparatus,
    DomainError,
    JointProbabilities,
    SinglesProbabilities,
)

# Above this half-angle the small-aperture depolarization formula is only a
# rough approximation (experiments typically stay below 30 degrees).
DEPOLARIZATION_SMALL_ANGLE_DEG = 30.0
DEPOLARIZATION_MAX_DEG = 90.0


def _check_half_angle(phi_deg: float, *, allow_zero: bool = False) -> float:
    phi = float(phi_deg)
    lower_ok = phi >= 0.0 if allow_zero else phi > 0.0
    if not (lower_ok and phi <= 180.0) or math.isnan(phi):
        raise DomainError(f"detector half-angle must lie in (0, 180] degrees, got {phi_deg!r}")
    return phi


def solid_angle(phi_deg: float | Angle) -> float:
    """Solid angle in steradians of a cone with half-angle ``phi_deg``."""
    phi = _check_half_angle(float(phi_deg))
    return 2.0 * math.pi * (1.0 - math.cos(math.radians(phi)))


def angular_correlation(phi_deg: float | Angle) -> float:
    """Angular correlation g(pi, phi) for back-to-back detectors.

    ``phi_deg = 0`` is accepted as the point-detector limit (g = 1.5).
    """
    phi = _check_half_angle(float(phi_deg), allow_zero=True)
    c = math.cos(math.radians(phi))
    return 1.0 + c * c * (1.0 + c) ** 2 / 8.0


def depolarization(phi_deg: float | Angle) -> float:
    """Small-aperture depolarization factor F(pi, phi) ~ 1 - (2/3)(1 - cos phi)^2.

    Accepted on [0, 90] degrees. Past 30 degrees the approximation is loose;
    see :func:`depolarization_is_approximate`.
    """
    phi = float(phi_deg)
    if not (0.0 <= phi <= DEPOLARIZATION_MAX_DEG):
        raise DomainError(
            f"depolarization approximation needs phi in [0, {DEPOLARIZATION_MAX_DEG}] deg, got {phi_deg!r}"
        )
    u = 1.0 - math.cos(math.radians(phi))
    return 1.0 - 2.0 * u * u / 3.0


def depolarization_is_approximate(phi_deg: float | Angle) -> bool:
    return float(phi_deg) > DEPOLARIZATION_SMALL_ANGLE_DEG


def ideal_predictions(theta_deg: float | Angle) -> tuple[float, JointProbabilities, SinglesProbabilities]:
    """Correlation, joints and singles for ideal polarizers at separation theta.

    E = cos 2theta, pp = mm = cos^2(theta)/2 and, by normalization,
    pm = mp = sin^2(theta)/2. Singles are 1/2 in both channels.
    """
    t = math.radians(float(theta_deg))
    c2 = math.cos(t) ** 2
    s2 = math.sin(t) ** 2
    joint = JointProbabilities(c2 / 2.0, s2 / 2.0, s2 / 2.0, c2 / 2.0)
    return math.cos(2.0 * t), joint, SinglesProbabilities(0.5, 0.5)


def ideal_joint(a: float | Angle, b: float | Angle) -> JointProbabilities:
    return ideal_predictions(abs(float(a) - float(b)))[1]


def real_joint(apparatus: Apparatus, a: float | Angle, b: float | Angle) -> JointProbabilities:
    """Joint detection probabilities for a real experiment with settings a, b.

    Each channel pair gets the prefactor eta^2 (Omega/8pi)^2 g(pi, phi) times a
    bracket of prism terms plus a cos 2(a-b) modulation scaled by F (F = 1
    unless ``apparatus.use_depolarization``).
    """
    o1, o2 = apparatus.arm1, apparatus.arm2
    pre = (apparatus.eta * apparatus.solid_angle / (8.0 * math.pi)) ** 2
    pre *= angular_correlation(apparatus.phi_deg)
    f = depolarization(apparatus.phi_deg) if apparatus.use_depolarization else 1.0
    mod = f * math.cos(2.0 * math.radians(float(a) - float(b)))

    lines = {
        "pp": o1.t_plus * o2.t_plus + o1.t_minus * o2.t_minus * mod,
        "mm": o1.r_plus * o2.r_plus + o1.r_minus * o2.r_minus * mod,
        "pm": o1.t_plus * o2.r_plus - o1.t_minus * o2.r_minus * mod,
        "mp": o1.r_plus * o2.t_plus - o1.r_minus * o2.t_minus * mod,
    }
    for key, bracket in lines.items():
        # tiny negatives from cancellation are round-off, not physics
        if bracket < -1e-15:
            raise DomainError(
                f"p{key} bracket is negative ({bracket!r}) at a-b={float(a) - float(b)} deg; "
                "prism parameters are inconsistent"
            )
    return JointProbabilities(**{k: pre * max(v, 0.0) for k, v in lines.items()})


def real_singles(apparatus: Apparatus) -> SinglesProbabilities:
    """Singles p+ = p- = eta Omega / 8pi, independent of setting and prisms."""
    p = apparatus.eta * apparatus.solid_angle / (8.0 * math.pi)
    return SinglesProbabilities(p, p)
