"""Evaluators for two-arm correlation inequalities.

Every evaluator returns an :class:`~bellstrong.core.InequalityReport` whose
``inputs_digest`` uses the same keys the evaluator's keyword arguments use,
so a serialized report can be fed back through :func:`evaluate`.

Setting labels: ``a``/``a_prime`` belong to arm 1, ``b``/``b_prime`` to arm 2,
``r`` is the reference orientation. A joint such as ``j_bpa`` is measured with
arm 1 at ``a`` and arm 2 at ``b_prime``.

Correlations handed to the Bell and CHSH evaluators are the raw differences
pp - pm - mp + mm; whether to renormalize by the detected total is left to
the caller.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, fields
from typing import Any, Callable, Mapping

from .core import (
    Angle,
    DegenerateExperimentError,
    DomainError,
    InequalityName,
    InequalityReport,
    JointProbabilities,
    SinglesProbabilities,
    check_correlation,
    expectation,
)

Settings = Mapping[str, float] | None

# (arm 1 setting, arm 2 setting) labels for each joint of the strong form.
STRONG_PAIRS: dict[str, tuple[str, str]] = {
    "j_ab": ("a", "b"),
    "j_bpa": ("a", "b_prime"),
    "j_apb": ("a_prime", "b"),
    "j_apbp": ("a_prime", "b_prime"),
    "j_apr": ("a_prime", "r"),
    "j_rbp": ("r", "b_prime"),
    "j_rr": ("r", "r"),
}

# Largest-violation orientations: |a-b| = |b'-a| = 30, |a'-b| = 60, a' = b' = r.
OPTIMAL_SETTINGS: dict[str, float] = {"a": 30.0, "b": 60.0, "a_prime": 0.0, "b_prime": 0.0, "r": 0.0}


@dataclass(frozen=True)
class StrongInputs:
    """Coincidence probabilities at the seven setting pairs of the strong form."""

    j_ab: JointProbabilities
    j_bpa: JointProbabilities
    j_apb: JointProbabilities
    j_apbp: JointProbabilities
    j_apr: JointProbabilities
    j_rbp: JointProbabilities
    j_rr: JointProbabilities

    def scaled(self, k: float) -> StrongInputs:
        return StrongInputs(*(getattr(self, f.name).scaled(k) for f in fields(self)))

    def as_dict(self) -> dict[str, dict[str, float]]:
        return {f.name: getattr(self, f.name).as_dict() for f in fields(self)}

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> StrongInputs:
        try:
            return cls(**{f.name: JointProbabilities.from_dict(data[f.name]) for f in fields(cls)})
        except KeyError as exc:
            raise DomainError(f"strong inequality input missing {exc}") from None


def _settings(settings: Settings) -> tuple[tuple[str, Angle], ...]:
    if not settings:
        return ()
    return tuple((label, Angle(value)) for label, value in settings.items())


def bell_1965(e_ab: float, e_bpa: float, e_apb: float, *, settings: Settings = None) -> InequalityReport:
    """E(a,b) + E(b',a) - E(a',b) <= 1."""
    e_ab, e_bpa, e_apb = (check_correlation(n, v) for n, v in (("e_ab", e_ab), ("e_bpa", e_bpa), ("e_apb", e_apb)))
    return InequalityReport(
        InequalityName.BELL1965,
        lhs=e_ab + e_bpa - e_apb,
        bound=1.0,
        settings=_settings(settings),
        inputs_digest={"e_ab": e_ab, "e_bpa": e_bpa, "e_apb": e_apb},
    )


def chsh(e_ab: float, e_bpa: float, e_apb: float, e_apbp: float, *, settings: Settings = None) -> InequalityReport:
    """E(a,b) + E(b',a) - E(a',b) + E(a',b') <= 2."""
    vals = {n: check_correlation(n, v) for n, v in (("e_ab", e_ab), ("e_bpa", e_bpa), ("e_apb", e_apb), ("e_apbp", e_apbp))}
    return InequalityReport(
        InequalityName.CHSH,
        lhs=vals["e_ab"] + vals["e_bpa"] - vals["e_apb"] + vals["e_apbp"],
        bound=2.0,
        settings=_settings(settings),
        inputs_digest=vals,
    )


def ardehali_ideal(
    j_ab: JointProbabilities,
    j_bpa: JointProbabilities,
    j_apb: JointProbabilities,
    j_apbp: JointProbabilities,
    singles_ap: SinglesProbabilities,
    singles_bp: SinglesProbabilities,
    *,
    settings: Settings = None,
) -> InequalityReport:
    """Two-channel inequality with single-detection terms, bound 1.

    lhs = E(a,b) + E(b',a) - E(a',b) + 2pp(a',b') + 2mm(a',b')
          - p+(a') - p-(a') - p+(b') - p-(b')
    """
    lhs = (
        expectation(j_ab)
        + expectation(j_bpa)
        - expectation(j_apb)
        + 2.0 * j_apbp.pp
        + 2.0 * j_apbp.mm
        - singles_ap.total
        - singles_bp.total
    )
    digest = {
        "j_ab": j_ab.as_dict(),
        "j_bpa": j_bpa.as_dict(),
        "j_apb": j_apb.as_dict(),
        "j_apbp": j_apbp.as_dict(),
        "singles_ap": singles_ap.as_dict(),
        "singles_bp": singles_bp.as_dict(),
    }
    return InequalityReport(InequalityName.ARDEHALI_IDEAL, lhs, 1.0, _settings(settings), digest)


def strong_numerator_denominator(inputs: StrongInputs) -> tuple[float, float]:
    num = (
        expectation(inputs.j_ab)
        + expectation(inputs.j_bpa)
        - expectation(inputs.j_apb)
        + 2.0 * inputs.j_apbp.pp
        + 2.0 * inputs.j_apbp.mm
        - inputs.j_apr.total
        - inputs.j_rbp.total
    )
    return num, inputs.j_rr.total


def ardehali_strong(inputs: StrongInputs, *, settings: Settings = None) -> InequalityReport:
    """Coincidence-only ratio form; the emission count cancels.

    The single-detection terms are replaced by the total coincidence rates at
    (a', r) and (r, b'), and everything is divided by the total rate at (r, r).
    """
    num, den = strong_numerator_denominator(inputs)
    if den <= 0.0:
        raise DegenerateExperimentError("total coincidence rate at (r, r) is zero")
    return InequalityReport(InequalityName.ARDEHALI_STRONG, num / den, 1.0, _settings(settings), inputs.as_dict())


def ardehali_strong_symmetric(
    e30: float, e60: float, j0: JointProbabilities, *, settings: Settings = None
) -> InequalityReport:
    """Strong form reduced by rotational symmetry with a' = b' = r.

    ``e30`` and ``e60`` are the raw correlations at the single and double
    separations (30 and 60 degrees at the optimum), ``j0`` the joints with
    aligned polarizers. lhs = (2 e30 - e60 - 2 pm(0) - 2 mp(0)) / K with K the
    total of ``j0``.
    """
    k = j0.total
    if k <= 0.0:
        raise DegenerateExperimentError("K (total coincidence rate at 0 deg) is zero")
    lhs = (2.0 * float(e30) - float(e60) - 2.0 * j0.pm - 2.0 * j0.mp) / k
    digest = {"e30": float(e30), "e60": float(e60), "j0": j0.as_dict()}
    return InequalityReport(InequalityName.ARDEHALI_STRONG_SYMMETRIC, lhs, 1.0, _settings(settings), digest)


def ch(
    p_phi: float,
    p_3phi: float,
    p_ap_inf: float,
    p_inf_b: float,
    p_inf_inf: float,
    *,
    settings: Settings = None,
) -> InequalityReport:
    """One-channel CH form (3p(phi) - p(3phi) - p(a',inf) - p(inf,b)) / p(inf,inf) <= 0."""
    vals = {"p_phi": p_phi, "p_3phi": p_3phi, "p_ap_inf": p_ap_inf, "p_inf_b": p_inf_b, "p_inf_inf": p_inf_inf}
    for name, v in vals.items():
        v = float(v)
        if not math.isfinite(v) or v < 0.0:
            raise DomainError(f"{name} must be a non-negative rate, got {v!r}")
        vals[name] = v
    if vals["p_inf_inf"] <= 0.0:
        raise DegenerateExperimentError("p(inf, inf) is zero")
    lhs = (3.0 * vals["p_phi"] - vals["p_3phi"] - vals["p_ap_inf"] - vals["p_inf_b"]) / vals["p_inf_inf"]
    return InequalityReport(InequalityName.CH, lhs, 0.0, _settings(settings), vals)


def _from_ideal_inputs(inputs: Mapping[str, Any], settings: Settings) -> InequalityReport:
    j = {k: JointProbabilities.from_dict(inputs[k]) for k in ("j_ab", "j_bpa", "j_apb", "j_apbp")}
    return ardehali_ideal(
        **j,
        singles_ap=SinglesProbabilities.from_dict(inputs["singles_ap"]),
        singles_bp=SinglesProbabilities.from_dict(inputs["singles_bp"]),
        settings=settings,
    )


_DISPATCH: dict[InequalityName, Callable[[Mapping[str, Any], Settings], InequalityReport]] = {
    InequalityName.BELL1965: lambda d, s: bell_1965(d["e_ab"], d["e_bpa"], d["e_apb"], settings=s),
    InequalityName.CHSH: lambda d, s: chsh(d["e_ab"], d["e_bpa"], d["e_apb"], d["e_apbp"], settings=s),
    InequalityName.ARDEHALI_IDEAL: _from_ideal_inputs,
    InequalityName.ARDEHALI_STRONG: lambda d, s: ardehali_strong(StrongInputs.from_dict(d), settings=s),
    InequalityName.ARDEHALI_STRONG_SYMMETRIC: lambda d, s: ardehali_strong_symmetric(
        d["e30"], d["e60"], JointProbabilities.from_dict(d["j0"]), settings=s
    ),
    InequalityName.CH: lambda d, s: ch(d["p_phi"], d["p_3phi"], d["p_ap_inf"], d["p_inf_b"], d["p_inf_inf"], settings=s),
}


def evaluate(name: str | InequalityName, inputs: Mapping[str, Any], settings: Settings = None) -> InequalityReport:
    """Evaluate inequality ``name`` from a plain mapping of inputs (report schema)."""
    try:
        key = InequalityName(name)
    except ValueError:
        raise DomainError(f"unknown inequality {name!r}") from None
    try:
        return _DISPATCH[key](inputs, settings)
    except KeyError as exc:
        raise DomainError(f"{key.value}: missing input {exc}") from None
