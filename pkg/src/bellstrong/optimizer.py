"""Orientation search for the largest left-hand side of an inequality.

The reference, a' and b' are pinned to 0 deg and the remaining settings are
tied as a = t, b = 2t, which keeps |a-b| = |b'-a| = t and |a'-b| = 2t. The
scan covers t in [0, 90] on a grid, then golden-section search refines the
best cell.
"""

from __future__ import annotations

import itertools
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Any, Callable

import numpy as np

from . import inequalities as ineq
from .core import (
    Apparatus,
    DomainError,
    InequalityName,
    InequalityReport,
    JointProbabilities,
    SinglesProbabilities,
    expectation,
)
from .lhv import LhvModel, integrate, integrate_singles
from .quantum import ideal_joint, real_joint, real_singles

INV_PHI = (math.sqrt(5.0) - 1.0) / 2.0


class IdealQuantumSource:
    """Lossless polarizers and detectors."""

    def joint(self, a: float, b: float) -> JointProbabilities:
        return ideal_joint(a, b)

    def singles(self, setting: float, arm: int) -> SinglesProbabilities:
        return SinglesProbabilities(0.5, 0.5)

    def describe(self) -> dict[str, Any]:
        return {"source": "ideal"}


@dataclass(frozen=True)
class RealQuantumSource:
    apparatus: Apparatus

    def joint(self, a: float, b: float) -> JointProbabilities:
        return real_joint(self.apparatus, a, b)

    def singles(self, setting: float, arm: int) -> SinglesProbabilities:
        return real_singles(self.apparatus)

    def describe(self) -> dict[str, Any]:
        return {"source": "real", "eta": self.apparatus.eta, "phi_deg": self.apparatus.phi_deg}


@dataclass(frozen=True)
class LhvSource:
    """Exact (quadrature) ensemble statistics of a hidden-variable model."""

    model: LhvModel
    quadrature_points: int = 4096

    def joint(self, a: float, b: float) -> JointProbabilities:
        return integrate(self.model, a, b, self.quadrature_points)

    def singles(self, setting: float, arm: int) -> SinglesProbabilities:
        return integrate_singles(self.model, setting, arm, self.quadrature_points)

    def describe(self) -> dict[str, Any]:
        return {"source": "lhv", "model": self.model.name, **self.model.params()}


def evaluate_at(name: str | InequalityName, source, settings: dict[str, float]) -> InequalityReport:
    """Evaluate inequality ``name`` with probabilities drawn from ``source``.

    ``settings`` maps ``a``, ``b``, ``a_prime``, ``b_prime`` and ``r`` (degrees).
    """
    name = InequalityName(name)
    s = settings
    if name is InequalityName.CH:
        raise DomainError("ch needs one-channel rates; no built-in source provides them")
    if name is InequalityName.ARDEHALI_STRONG:
        inputs = ineq.StrongInputs(**{k: source.joint(s[x], s[y]) for k, (x, y) in ineq.STRONG_PAIRS.items()})
        return ineq.ardehali_strong(inputs, settings=s)
    if name is InequalityName.ARDEHALI_STRONG_SYMMETRIC:
        return ineq.ardehali_strong_symmetric(
            expectation(source.joint(s["a"], s["b"])),
            expectation(source.joint(s["a_prime"], s["b"])),
            source.joint(s["r"], s["r"]),
            settings=s,
        )
    j_ab = source.joint(s["a"], s["b"])
    j_bpa = source.joint(s["a"], s["b_prime"])
    j_apb = source.joint(s["a_prime"], s["b"])
    j_apbp = source.joint(s["a_prime"], s["b_prime"])
    if name is InequalityName.ARDEHALI_IDEAL:
        return ineq.ardehali_ideal(
            j_ab, j_bpa, j_apb, j_apbp,
            source.singles(s["a_prime"], 1), source.singles(s["b_prime"], 2),
            settings=s,
        )
    e = [expectation(j) for j in (j_ab, j_bpa, j_apb)]
    if name is InequalityName.BELL1965:
        return ineq.bell_1965(*e, settings=s)
    return ineq.chsh(*e, expectation(j_apbp), settings=s)


def symmetric_settings(t: float) -> dict[str, float]:
    return {"a": t, "b": 2.0 * t, "a_prime": 0.0, "b_prime": 0.0, "r": 0.0}


def golden_section_max(f: Callable[[float], float], lo: float, hi: float, tol: float) -> tuple[float, float]:
    """Maximize a unimodal ``f`` on [lo, hi] until the bracket is narrower than ``tol``."""
    c = hi - INV_PHI * (hi - lo)
    d = lo + INV_PHI * (hi - lo)
    fc, fd = f(c), f(d)
    while hi - lo > tol:
        if fc >= fd:
            hi, d, fd = d, c, fc
            c = hi - INV_PHI * (hi - lo)
            fc = f(c)
        else:
            lo, c, fc = c, d, fd
            d = lo + INV_PHI * (hi - lo)
            fd = f(d)
    x = 0.5 * (lo + hi)
    fx = f(x)
    # one parabolic step through the three interior points sharpens a smooth peak
    pts = sorted([(c, fc), (x, fx), (d, fd)])
    (x0, f0), (x1, f1), (x2, f2) = pts
    denom = (x1 - x0) * (f1 - f2) - (x1 - x2) * (f1 - f0)
    if denom != 0.0:
        xp = x1 - 0.5 * ((x1 - x0) ** 2 * (f1 - f2) - (x1 - x2) ** 2 * (f1 - f0)) / denom
        if lo <= xp <= hi:
            fp = f(xp)
            if fp > fx:
                x, fx = xp, fp
    return x, fx


@dataclass(frozen=True)
class ScanResult:
    inequality: InequalityName
    t_best: float
    lhs_best: float
    report: InequalityReport
    curve: list[tuple[float, float]] = field(repr=False)

    @property
    def settings(self) -> dict[str, float]:
        return symmetric_settings(self.t_best)


def _map(fn, items, threads):
    if threads is not None and threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            return list(pool.map(fn, items))
    return [fn(x) for x in items]


def scan_symmetric(
    inequality: str | InequalityName,
    source,
    grid_step: float = 1.0,
    refine_tolerance: float = 0.01,
    threads: int | None = None,
) -> ScanResult:
    """Grid over t in [0, 90] deg for a = t, b = 2t, then golden-section refinement."""
    if not (0.0 < grid_step <= 15.0):
        raise DomainError(f"grid_step must lie in (0, 15] deg, got {grid_step!r}")
    if not refine_tolerance > 0.0:
        raise DomainError(f"refine_tolerance must be positive, got {refine_tolerance!r}")
    name = InequalityName(inequality)

    def objective(t: float) -> float:
        return evaluate_at(name, source, symmetric_settings(t)).lhs

    n = math.ceil(90.0 / grid_step - 1e-9)
    ts = np.linspace(0.0, 90.0, n + 1)
    values = _map(objective, [float(t) for t in ts], threads)
    i = int(np.argmax(values))
    lo, hi = float(ts[max(i - 1, 0)]), float(ts[min(i + 1, n)])
    t_best, lhs_best = golden_section_max(objective, lo, hi, refine_tolerance)
    if values[i] > lhs_best:
        # flat or non-unimodal cell: keep the grid point
        t_best, lhs_best = float(ts[i]), float(values[i])
    report = evaluate_at(name, source, symmetric_settings(t_best))
    curve = [(float(t), float(v)) for t, v in zip(ts, values)]
    return ScanResult(name, t_best, lhs_best, report, curve)


def scan_full(
    inequality: str | InequalityName,
    source,
    grid_step: float = 5.0,
    threads: int | None = None,
) -> tuple[dict[str, float], float]:
    """Exploratory grid over (a, b, a') in [0, 180) with b' = r = 0; no refinement."""
    if not (0.0 < grid_step <= 15.0):
        raise DomainError(f"grid_step must lie in (0, 15] deg, got {grid_step!r}")
    name = InequalityName(inequality)
    axis = np.arange(0.0, 180.0, grid_step)
    grid = [
        {"a": float(a), "b": float(b), "a_prime": float(ap), "b_prime": 0.0, "r": 0.0}
        for a, b, ap in itertools.product(axis, axis, axis)
    ]
    values = _map(lambda s: evaluate_at(name, source, s).lhs, grid, threads)
    i = int(np.argmax(values))
    return grid[i], float(values[i])
