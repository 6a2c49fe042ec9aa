"""Local hidden-variable models and their ensemble statistics.

A model supplies a sampler for the hidden state and one response function
per arm. ``respond_arm2`` receives only the hidden state and arm 2's own
setting, so a model written against this interface cannot let arm 2 see
arm 1's setting: locality holds by construction.

Responses are vectorized: ``lam`` is an array of hidden states (first axis
indexes emissions) and each response returns ``(q_plus, q_minus)`` arrays
of detection probabilities in the two channels. Whatever is left,
``1 - q_plus - q_minus``, is the probability that the arm registers nothing.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, fields
from typing import Any, Mapping, NamedTuple, Sequence

import numpy as np

from .core import Angle, DomainError, JointProbabilities, SinglesProbabilities
from .inequalities import STRONG_PAIRS, StrongInputs, ardehali_strong, strong_numerator_denominator

SHARD_SIZE = 1 << 18
RESPONSE_TOL = 1e-12


class ModelContractError(DomainError):
    """A model produced response probabilities outside [0, 1] or summing past 1."""


class UnsupportedModelError(TypeError):
    """The operation needs a hidden state with known uniform density."""


class UnknownModelError(LookupError):
    pass


class LhvModel:
    """Base class for hidden-variable models.

    Subclasses that set ``lambda_interval`` declare a scalar hidden state
    uniformly distributed on that interval (radians); this enables the
    default sampler and exact quadrature via :func:`integrate`. Models with
    any other hidden state override :meth:`sample_lambda` and leave
    ``lambda_interval`` as ``None``.
    """

    name = "custom"
    lambda_interval: tuple[float, float] | None = None

    def sample_lambda(self, rng: np.random.Generator, size: int) -> np.ndarray:
        if self.lambda_interval is None:
            raise NotImplementedError(f"{type(self).__name__} must implement sample_lambda")
        lo, hi = self.lambda_interval
        return rng.uniform(lo, hi, size)

    def respond_arm1(self, lam: np.ndarray, setting_deg: float) -> tuple[np.ndarray, np.ndarray]:
        raise NotImplementedError

    def respond_arm2(self, lam: np.ndarray, setting_deg: float) -> tuple[np.ndarray, np.ndarray]:
        raise NotImplementedError

    def params(self) -> dict[str, Any]:
        return {}


class _SameResponseModel(LhvModel):
    """Both arms share one response rule (still a function of lam and own setting only)."""

    lambda_interval = (0.0, math.pi)

    def __init__(self, d: float = 1.0):
        d = float(d)
        if not (d > 0.0) or not math.isfinite(d):
            raise DomainError(f"detection scale d must be positive, got {d!r}")
        self.d = d

    def params(self) -> dict[str, Any]:
        return {"d": self.d}

    def response(self, lam, setting_deg):
        raise NotImplementedError

    def respond_arm1(self, lam, setting_deg):
        return self.response(lam, setting_deg)

    def respond_arm2(self, lam, setting_deg):
        return self.response(lam, setting_deg)


class NoiseModel(_SameResponseModel):
    """q+ = q- = d/2 regardless of setting."""

    name = "noise"

    def response(self, lam, setting_deg):
        q = np.full(np.shape(lam)[:1], self.d / 2.0)
        return q, q.copy()


class MalusProductModel(_SameResponseModel):
    """Polarization angle lam; Malus-law channel probabilities scaled by d."""

    name = "malus-product"

    def response(self, lam, setting_deg):
        u = math.radians(setting_deg) - np.asarray(lam)
        c2 = np.cos(u) ** 2
        return self.d * c2, self.d * (1.0 - c2)


class ThresholdModel(_SameResponseModel):
    """Deterministic channel choice by the sign of cos 2(setting - lam), fired with probability d."""

    name = "threshold"

    def response(self, lam, setting_deg):
        plus = np.cos(2.0 * (math.radians(setting_deg) - np.asarray(lam))) >= 0.0
        return self.d * plus, self.d * ~plus


class LopsidedModel(_SameResponseModel):
    """Setting-dependent total detection that still respects the channel-sum bound.

    With c = cos 2(setting - lam): q+ = d(1 + c)/4 and q- = d(1 - c + (1 - c^2)/2)/4.
    Each channel stays <= d/2 while the total ranges over [d/2, 5d/8], so the
    per-lambda bound against any reference orientation holds but the totals
    are not setting independent.
    """

    name = "lopsided"

    def response(self, lam, setting_deg):
        c = np.cos(2.0 * (math.radians(setting_deg) - np.asarray(lam)))
        return self.d * (1.0 + c) / 4.0, self.d * (1.0 - c + (1.0 - c * c) / 2.0) / 4.0


MODELS: dict[str, type[LhvModel]] = {
    cls.name: cls for cls in (NoiseModel, MalusProductModel, ThresholdModel, LopsidedModel)
}


def make_model(name: str, **params: Any) -> LhvModel:
    try:
        cls = MODELS[name]
    except KeyError:
        raise UnknownModelError(f"unknown model {name!r}; choose from {sorted(MODELS)}") from None
    return cls(**params)


@dataclass(frozen=True)
class CountLedger:
    """Outcome counts for one setting pair; ``0`` means the arm did not fire."""

    n_pp: int = 0
    n_pm: int = 0
    n_p0: int = 0
    n_mp: int = 0
    n_mm: int = 0
    n_m0: int = 0
    n_0p: int = 0
    n_0m: int = 0
    n_00: int = 0
    n_total: int = 0

    def __post_init__(self) -> None:
        if sum(self.cells()) != self.n_total:
            raise ValueError("outcome counts do not partition n_total")

    def cells(self) -> tuple[int, ...]:
        return tuple(getattr(self, f.name) for f in fields(self)[:9])

    @classmethod
    def from_cells(cls, cells: Sequence[int]) -> CountLedger:
        cells = [int(c) for c in cells]
        return cls(*cells, n_total=sum(cells))

    def __add__(self, other: CountLedger) -> CountLedger:
        return CountLedger.from_cells([a + b for a, b in zip(self.cells(), other.cells())])

    def joint(self) -> JointProbabilities:
        n = self.n_total
        return JointProbabilities(self.n_pp / n, self.n_pm / n, self.n_mp / n, self.n_mm / n)

    def singles_arm1(self) -> SinglesProbabilities:
        n = self.n_total
        return SinglesProbabilities((self.n_pp + self.n_pm + self.n_p0) / n, (self.n_mp + self.n_mm + self.n_m0) / n)

    def singles_arm2(self) -> SinglesProbabilities:
        n = self.n_total
        return SinglesProbabilities((self.n_pp + self.n_mp + self.n_0p) / n, (self.n_pm + self.n_mm + self.n_0m) / n)

    def as_dict(self) -> dict[str, int]:
        return {f.name: getattr(self, f.name) for f in fields(self)}


class Estimate(NamedTuple):
    joint: JointProbabilities
    singles_arm1: SinglesProbabilities
    singles_arm2: SinglesProbabilities
    ledger: CountLedger


def _checked_response(model: LhvModel, arm: int, lam: np.ndarray, setting_deg: float):
    respond = model.respond_arm1 if arm == 1 else model.respond_arm2
    q_plus, q_minus = respond(lam, setting_deg)
    n = np.shape(lam)[0]
    q_plus = np.broadcast_to(np.asarray(q_plus, dtype=float), (n,))
    q_minus = np.broadcast_to(np.asarray(q_minus, dtype=float), (n,))
    bad = (
        ~np.isfinite(q_plus)
        | ~np.isfinite(q_minus)
        | (q_plus < -RESPONSE_TOL)
        | (q_minus < -RESPONSE_TOL)
        | (q_plus + q_minus > 1.0 + RESPONSE_TOL)
    )
    if bad.any():
        i = int(np.argmax(bad))
        raise ModelContractError(
            f"model {model.name!r} arm {arm} at setting {setting_deg} deg: "
            f"q_plus={float(q_plus[i])!r}, q_minus={float(q_minus[i])!r} for lambda={np.asarray(lam)[i].tolist()!r}"
        )
    return q_plus, q_minus


def _outcomes(u: np.ndarray, q_plus: np.ndarray, q_minus: np.ndarray) -> np.ndarray:
    # 0 = '+', 1 = '-', 2 = no detection
    return np.where(u < q_plus, 0, np.where(u < q_plus + q_minus, 1, 2))


def _shard_counts(model: LhvModel, a: float, b: float, m: int, seed_seq: np.random.SeedSequence) -> np.ndarray:
    rng = np.random.default_rng(seed_seq)
    lam = model.sample_lambda(rng, m)
    q1 = _checked_response(model, 1, lam, a)
    q2 = _checked_response(model, 2, lam, b)
    o1 = _outcomes(rng.random(m), *q1)
    o2 = _outcomes(rng.random(m), *q2)
    return np.bincount(3 * o1 + o2, minlength=9)


def estimate(
    model: LhvModel,
    a: float | Angle,
    b: float | Angle,
    n: int,
    seed: int | Sequence[int],
    threads: int | None = 1,
) -> Estimate:
    """Monte Carlo estimate of joint and single probabilities at settings (a, b).

    Emissions are split into fixed shards of ``SHARD_SIZE``, each seeded from
    ``SeedSequence(seed).spawn``; the tally is therefore identical for any
    ``threads`` value.
    """
    if n < 1:
        raise DomainError(f"n must be >= 1, got {n}")
    a, b = float(a), float(b)
    n_shards = -(-n // SHARD_SIZE)
    children = np.random.SeedSequence(seed).spawn(n_shards)
    sizes = [min(SHARD_SIZE, n - k * SHARD_SIZE) for k in range(n_shards)]

    def run(k: int) -> np.ndarray:
        return _shard_counts(model, a, b, sizes[k], children[k])

    if threads is not None and threads > 1 and n_shards > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            parts = list(pool.map(run, range(n_shards)))
    else:
        parts = [run(k) for k in range(n_shards)]
    ledger = CountLedger.from_cells(np.sum(parts, axis=0))
    return Estimate(ledger.joint(), ledger.singles_arm1(), ledger.singles_arm2(), ledger)


def _quadrature_nodes(model: LhvModel, points: int) -> np.ndarray:
    if model.lambda_interval is None:
        raise UnsupportedModelError(f"{type(model).__name__} has no uniform scalar hidden state to integrate over")
    if points < 1:
        raise DomainError(f"quadrature_points must be >= 1, got {points}")
    lo, hi = model.lambda_interval
    # midpoint rule: spectrally accurate for the smooth periodic built-ins
    return lo + (hi - lo) * (np.arange(points) + 0.5) / points


def integrate(model: LhvModel, a: float | Angle, b: float | Angle, quadrature_points: int = 4096) -> JointProbabilities:
    """Ensemble joint probabilities by quadrature over the hidden state."""
    lam = _quadrature_nodes(model, quadrature_points)
    p1, m1 = _checked_response(model, 1, lam, float(a))
    p2, m2 = _checked_response(model, 2, lam, float(b))
    return JointProbabilities(
        float(np.mean(p1 * p2)), float(np.mean(p1 * m2)), float(np.mean(m1 * p2)), float(np.mean(m1 * m2))
    )


def integrate_singles(model: LhvModel, setting: float | Angle, arm: int, quadrature_points: int = 4096) -> SinglesProbabilities:
    lam = _quadrature_nodes(model, quadrature_points)
    q_plus, q_minus = _checked_response(model, arm, lam, float(setting))
    return SinglesProbabilities(float(np.mean(q_plus)), float(np.mean(q_minus)))


@dataclass(frozen=True)
class AssumptionCheck:
    passed: bool
    lambdas_checked: int
    witness: dict[str, Any] | None = None

    def as_dict(self) -> dict[str, Any]:
        return {"passed": self.passed, "lambdas_checked": self.lambdas_checked, "witness": self.witness}


def _channel_sums(model, settings, r, lambdas, seed):
    rng = np.random.default_rng(np.random.SeedSequence(seed))
    lam = model.sample_lambda(rng, lambdas)
    for arm in (1, 2):
        ref_plus, ref_minus = _checked_response(model, arm, lam, float(r))
        ref_total = ref_plus + ref_minus
        for s in settings:
            q_plus, q_minus = _checked_response(model, arm, lam, float(s))
            yield lam, arm, float(s), q_plus, q_minus, ref_total


def check_supplementary(
    model: LhvModel, settings: Sequence[float | Angle], r: float | Angle, lambdas: int, seed: int
) -> AssumptionCheck:
    """Check q+-(s|lam) <= q+(r|lam) + q-(r|lam) for each arm, setting, channel and sampled lam.

    A failure is reported with the first offending hidden state as witness.
    """
    if not settings:
        raise DomainError("settings must be non-empty")
    for lam, arm, s, q_plus, q_minus, ref_total in _channel_sums(model, settings, r, lambdas, seed):
        for channel, q in (("+", q_plus), ("-", q_minus)):
            bad = q > ref_total + RESPONSE_TOL
            if bad.any():
                i = int(np.argmax(bad))
                return AssumptionCheck(False, lambdas, {
                    "lambda": np.asarray(lam)[i].tolist(),
                    "arm": arm,
                    "setting_deg": s,
                    "r_deg": float(r),
                    "channel": channel,
                    "value": float(q[i]),
                    "bound": float(ref_total[i]),
                })
    return AssumptionCheck(True, lambdas)


def check_gr(
    model: LhvModel, settings: Sequence[float | Angle], r: float | Angle, lambdas: int, seed: int
) -> AssumptionCheck:
    """Check that the channel sum at every setting equals the sum at ``r`` (to 1e-12)."""
    if not settings:
        raise DomainError("settings must be non-empty")
    for lam, arm, s, q_plus, q_minus, ref_total in _channel_sums(model, settings, r, lambdas, seed):
        diff = np.abs(q_plus + q_minus - ref_total)
        bad = diff > RESPONSE_TOL
        if bad.any():
            i = int(np.argmax(bad))
            return AssumptionCheck(False, lambdas, {
                "lambda": np.asarray(lam)[i].tolist(),
                "arm": arm,
                "setting_deg": s,
                "r_deg": float(r),
                "value": float(q_plus[i] + q_minus[i]),
                "bound": float(ref_total[i]),
            })
    return AssumptionCheck(True, lambdas)


# Coefficients on (pp, pm, mp, mm) of each joint in the strong-form numerator.
_NUMERATOR_WEIGHTS = {
    "j_ab": (1, -1, -1, 1),
    "j_bpa": (1, -1, -1, 1),
    "j_apb": (-1, 1, 1, -1),
    "j_apbp": (2, 0, 0, 2),
    "j_apr": (-1, -1, -1, -1),
    "j_rbp": (-1, -1, -1, -1),
    "j_rr": (0, 0, 0, 0),
}


def _linear_variance(ledger: CountLedger, weights: Sequence[float]) -> float:
    # multinomial variance of sum_k w_k * (count_k / n)
    j = ledger.joint()
    p = np.array([j.pp, j.pm, j.mp, j.mm])
    w = np.asarray(weights, dtype=float)
    return float((w * w) @ p - (w @ p) ** 2) / ledger.n_total


def strong_sigma(ledgers: Mapping[str, CountLedger]) -> float:
    """Delta-method standard error of the strong-form ratio from independent runs."""
    inputs = StrongInputs(**{k: ledgers[k].joint() for k in STRONG_PAIRS})
    num, den = strong_numerator_denominator(inputs)
    var_num = sum(_linear_variance(ledgers[k], w) for k, w in _NUMERATOR_WEIGHTS.items())
    var_den = _linear_variance(ledgers["j_rr"], (1, 1, 1, 1))
    return math.sqrt(var_num / den**2 + num**2 * var_den / den**4)


@dataclass(frozen=True)
class StrongEstimate:
    report: Any
    sigma: float
    ledgers: Mapping[str, CountLedger]


def estimate_strong(
    model: LhvModel,
    settings: Mapping[str, float],
    n: int,
    seed: int,
    threads: int | None = 1,
) -> StrongEstimate:
    """Run one independent estimate per setting pair of the strong form and evaluate it.

    ``settings`` maps ``a``, ``b``, ``a_prime``, ``b_prime`` and ``r`` to degrees.
    """
    ledgers = {}
    for idx, (key, (arm1, arm2)) in enumerate(STRONG_PAIRS.items()):
        est = estimate(model, settings[arm1], settings[arm2], n, (seed, idx), threads)
        ledgers[key] = est.ledger
    inputs = StrongInputs(**{k: led.joint() for k, led in ledgers.items()})
    report = ardehali_strong(inputs, settings=settings)
    return StrongEstimate(report, strong_sigma(ledgers), ledgers)
