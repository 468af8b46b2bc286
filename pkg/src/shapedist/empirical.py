"""Empirical distribution objects: sampling, ECDF, and its running integral.

Sampling uses a counter-based generator (Philox) keyed by a 64-bit seed so
replicates are reproducible bit-for-bit regardless of execution order or
worker count.  The ECDF and its integral are exposed both as O(log n) point
evaluators (via sorted prefix sums) and as exact piecewise-polynomial curves
for the norm machinery in :mod:`shapedist.curves`.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .curves import PiecewisePoly, modulus, sup_norm  # noqa: F401  (re-exported)
from .models import AnalyticModel

__all__ = [
    "EmpiricalData",
    "sample",
    "seed_for",
    "ecdf",
    "ecdf_left",
    "integrated_ecdf",
    "ecdf_curve",
    "integrated_ecdf_curve",
    "sup_norm",
    "modulus",
]

_M64 = (1 << 64) - 1


def _splitmix64(z: int) -> int:
    z = (z + 0x9E3779B97F4A7C15) & _M64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _M64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _M64
    return z ^ (z >> 31)


def seed_for(base_seed: int, n: int, replicate: int) -> int:
    """Derive the per-replicate generator key: ``base_seed xor hash(n, replicate)``."""
    h = _splitmix64(_splitmix64(n) ^ (replicate + 0x94D049BB133111EB))
    return (base_seed ^ h) & _M64


@dataclass(frozen=True)
class EmpiricalData:
    """A sorted i.i.d. sample with cached prefix sums."""

    x: np.ndarray
    seed: int | None = None

    def __post_init__(self):
        x = np.sort(np.asarray(self.x, dtype=float))
        if len(x) == 0:
            raise ValueError("empty sample")
        object.__setattr__(self, "x", x)

    @property
    def n(self) -> int:
        return len(self.x)

    @cached_property
    def _prefix(self) -> np.ndarray:
        return np.concatenate([[0.0], np.cumsum(self.x)])


def sample(model: AnalyticModel, n: int, seed: int) -> EmpiricalData:
    """Draw ``n`` points from ``model`` by inverse-CDF over Philox uniforms."""
    if n < 1:
        raise ValueError("sample size must be >= 1")
    gen = np.random.Generator(np.random.Philox(key=int(seed) & _M64))
    u = gen.random(n)
    return EmpiricalData(np.asarray(model.Finv(u), dtype=float), seed=int(seed))


def ecdf(data: EmpiricalData, t):
    """Right-continuous empirical CDF: ``#(X_i <= t) / n``."""
    t = np.asarray(t, dtype=float)
    out = np.searchsorted(data.x, t, side="right") / data.n
    return out if out.ndim else float(out)


def ecdf_left(data: EmpiricalData, t):
    """Left limit of the empirical CDF: ``#(X_i < t) / n``."""
    t = np.asarray(t, dtype=float)
    out = np.searchsorted(data.x, t, side="left") / data.n
    return out if out.ndim else float(out)


def integrated_ecdf(data: EmpiricalData, t):
    """Running integral of the ECDF: ``(1/n) * sum (t - X_i)_+``."""
    t = np.asarray(t, dtype=float)
    i = np.searchsorted(data.x, t, side="right")
    out = (t * i - data._prefix[i]) / data.n
    return out if out.ndim else float(out)


def ecdf_curve(data: EmpiricalData, upto: float | None = None) -> PiecewisePoly:
    """The ECDF as an exact step curve.

    The curve always extends past the largest observation (at least to
    ``upto`` when given) with a constant-1 piece, so the value *at* the top
    order statistic and its left limit are both representable.  Evaluations
    beyond the data are the true continuation of the ECDF.
    """
    xs, counts = np.unique(data.x, return_counts=True)
    vals = np.cumsum(counts) / data.n
    hi = float(xs[-1]) + max(1.0, float(xs[-1]))
    if upto is not None:
        hi = max(hi, float(upto))
    if xs[0] > 0.0:
        bx = np.concatenate([[0.0], xs, [hi]])
        cv = np.concatenate([[0.0], vals])
    else:
        bx = np.concatenate([xs, [hi]])
        cv = vals
    c = np.zeros((len(bx) - 1, 4))
    c[:, 0] = cv
    return PiecewisePoly(bx, c)


def integrated_ecdf_curve(data: EmpiricalData, upto: float | None = None) -> PiecewisePoly:
    """The running ECDF integral as an exact piecewise-linear curve."""
    return ecdf_curve(data, upto).antiderivative(0.0)
