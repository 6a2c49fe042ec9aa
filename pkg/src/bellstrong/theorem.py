"""Numerical verification of the bilinear bound Z <= 0 on a box.

For x1+, x1-, x2+, x2- in [0, U] and y1+, y1-, y2+, y2- in [0, V] the
nineteen-term expression Z is non-positive. Z is affine in each of the
eight variables separately, so its maximum over the box is attained at one
of the 2^8 vertices; enumerating them is an exact check. Uniform random
sampling is kept as independent corroboration.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import astuple, dataclass

import numpy as np

from .core import DomainError

TOL = 1e-12
VARIABLES = ("x1p", "x1m", "x2p", "x2m", "y1p", "y1m", "y2p", "y2m")
_CHUNK = 1 << 20


@dataclass(frozen=True)
class ZInputs:
    x1p: float
    x1m: float
    x2p: float
    x2m: float
    y1p: float
    y1m: float
    y2p: float
    y2m: float
    U: float = 1.0
    V: float = 1.0

    def __post_init__(self) -> None:
        for name in (*VARIABLES, "U", "V"):
            object.__setattr__(self, name, float(getattr(self, name)))
        _check_caps(self.U, self.V)
        for name in VARIABLES:
            v = getattr(self, name)
            cap = self.U if name[0] == "x" else self.V
            if not (0.0 <= v <= cap) or math.isnan(v):
                raise DomainError(f"{name}={v!r} outside [0, {cap!r}]")

    def variables(self) -> tuple[float, ...]:
        return astuple(self)[:8]


def _check_caps(U: float, V: float) -> None:
    if not (U > 0 and V > 0 and math.isfinite(U) and math.isfinite(V)):
        raise DomainError(f"caps must be positive and finite, got U={U!r}, V={V!r}")


def _z(x1p, x1m, x2p, x2m, y1p, y1m, y2p, y2m, U, V):
    # works on floats and numpy arrays alike
    return (
        x1p * y1p
        + x1m * y1m
        - x1p * y1m
        - x1m * y1p
        + y2p * x1p
        + y2m * x1m
        - y2p * x1m
        - y2m * x1p
        - y1p * x2p
        - y1m * x2m
        + y1p * x2m
        + y1m * x2p
        + 2 * x2p * y2p
        + 2 * x2m * y2m
        - V * x2p
        - V * x2m
        - U * y2p
        - U * y2m
        - U * V
    )


def z_value(inputs: ZInputs) -> float:
    return float(_z(*astuple(inputs)))


def z_array(x: np.ndarray, y: np.ndarray, U: float, V: float) -> np.ndarray:
    """Vectorized Z for ``x`` of shape (n, 4) = (x1+, x1-, x2+, x2-) and ``y`` likewise."""
    return _z(*x.T, *y.T, U, V)


def verify_vertices(U: float, V: float) -> tuple[float, ZInputs]:
    """Exact maximum of Z over the box, by enumerating all 256 vertices."""
    _check_caps(U, V)
    corners = np.array(list(itertools.product((0.0, 1.0), repeat=8)))
    x = corners[:, :4] * U
    y = corners[:, 4:] * V
    z = z_array(x, y, U, V)
    i = int(np.argmax(z))
    best = ZInputs(*x[i], *y[i], U=U, V=V)
    return float(z[i]), best


def verify_random(U: float, V: float, n: int, seed: int) -> float:
    """Largest Z seen over ``n`` uniform draws from the box.

    Draws are made in fixed-size chunks, each from its own child of
    ``SeedSequence(seed)``, so the result depends only on (U, V, n, seed).
    """
    _check_caps(U, V)
    if n < 1:
        raise DomainError(f"n must be >= 1, got {n}")
    n_chunks = -(-n // _CHUNK)
    children = np.random.SeedSequence(seed).spawn(n_chunks)
    best = -math.inf
    for k, child in enumerate(children):
        m = min(_CHUNK, n - k * _CHUNK)
        rng = np.random.default_rng(child)
        x = rng.random((m, 4)) * U
        y = rng.random((m, 4)) * V
        best = max(best, float(np.max(z_array(x, y, U, V))))
    return best
