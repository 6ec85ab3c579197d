"""Time curves on a planning horizon.

Two representations are used throughout the package:

* :class:`StepCurve` -- piecewise-constant values on a knot grid.  Market
  inputs (return rates, volatilities) live here and all their integrals are
  exact segment sums.
* :class:`Curve` -- piecewise Chebyshev interpolants on ``[0, T]``.  Policy
  coefficients and value-function coefficients are smooth inside each
  market segment (exponentials of integrals), so a moderate-degree
  interpolant per segment reproduces them to machine precision.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np
from numpy.polynomial import chebyshev as C

#: Interpolation nodes per segment for :class:`Curve`.
NODES = 24


@dataclass(frozen=True)
class StepCurve:
    """Right-continuous piecewise-constant curve.

    Segment ``k`` covers ``[knots[k], knots[k+1])``; the last segment extends
    to infinity.  ``values`` has shape ``(len(knots), *value_shape)``.
    """

    knots: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        knots = np.atleast_1d(np.asarray(self.knots, dtype=float))
        values = np.asarray(self.values, dtype=float)
        if knots[0] != 0.0:
            raise ValueError("first knot must be 0")
        if np.any(np.diff(knots) <= 0):
            raise ValueError("knots must be strictly increasing")
        if values.shape[0] != knots.shape[0]:
            raise ValueError(
                f"values has {values.shape[0]} segments but there are {knots.size} knots"
            )
        object.__setattr__(self, "knots", knots)
        object.__setattr__(self, "values", values)

    @classmethod
    def constant(cls, value) -> "StepCurve":
        value = np.asarray(value, dtype=float)
        return cls(np.zeros(1), value[None, ...])

    @property
    def value_shape(self) -> tuple:
        return self.values.shape[1:]

    @property
    def is_constant(self) -> bool:
        return self.knots.size == 1

    def index(self, t):
        return np.clip(np.searchsorted(self.knots, t, side="right") - 1, 0, None)

    def __call__(self, t):
        return self.values[self.index(t)]

    def segments(self, a: float, b: float):
        """Yield ``(lo, hi, value)`` for each piece of ``[a, b]``."""
        if b < a:
            raise ValueError(f"empty interval [{a}, {b}]")
        edges = np.concatenate([self.knots, [np.inf]])
        for k in range(self.knots.size):
            lo, hi = max(a, edges[k]), min(b, edges[k + 1])
            if hi > lo:
                yield lo, hi, self.values[k]

    def breakpoints(self, a: float, b: float) -> np.ndarray:
        inner = self.knots[(self.knots > a) & (self.knots < b)]
        return np.concatenate([[a], inner, [b]])

    def integral(self, a: float, b: float):
        """Exact integral over ``[a, b]``."""
        total = np.zeros(self.value_shape)
        for lo, hi, v in self.segments(a, b):
            total = total + (hi - lo) * v
        return total

    def moment_integral(self, a: float, b: float):
        """Exact ``int_a^b (s - a) f(s) ds``."""
        total = np.zeros(self.value_shape)
        for lo, hi, v in self.segments(a, b):
            total = total + 0.5 * ((hi - a) ** 2 - (lo - a) ** 2) * v
        return total

    def map(self, fn: Callable[[np.ndarray], np.ndarray]) -> "StepCurve":
        """Apply ``fn`` segment-wise."""
        return StepCurve(self.knots, np.stack([np.asarray(fn(v), dtype=float) for v in self.values]))


def _cheb_points(n: int) -> np.ndarray:
    # first-kind points: strictly interior, so a node never sits on a jump
    k = np.arange(n)
    return -np.cos((2 * k + 1) * np.pi / (2 * n))


_X = _cheb_points(NODES)
_V = C.chebvander(_X, NODES - 1)
_V_INV = np.linalg.inv(_V)


class Curve:
    """Piecewise Chebyshev interpolant of a (possibly array-valued) function.

    Built by sampling a vectorised function at ``NODES`` interior Chebyshev
    points on each segment between consecutive ``breaks``.
    """

    def __init__(self, breaks, coef):
        self.breaks = np.asarray(breaks, dtype=float)
        self.coef = np.asarray(coef, dtype=float)
        widths = np.diff(self.breaks)
        anti = C.chebint(self.coef, m=1, lbnd=-1, axis=1) * (widths / 2).reshape(
            (-1,) + (1,) * (self.coef.ndim - 1)
        )
        self._anti = anti
        seg_total = C.chebval(1.0, np.moveaxis(anti, 1, 0))
        if seg_total.ndim > 1:
            seg_total = seg_total.reshape(anti.shape[0], *anti.shape[2:])
        self._seg_total = np.asarray(seg_total)
        after = np.cumsum(self._seg_total[::-1], axis=0)[::-1]
        self._tail_after = np.concatenate([after[1:], np.zeros((1,) + after.shape[1:])])

    @classmethod
    def from_function(cls, fn, breaks) -> "Curve":
        breaks = np.asarray(breaks, dtype=float)
        t = _nodes(breaks)
        samples = np.asarray(fn(t.ravel()), dtype=float)
        samples = samples.reshape(t.shape + samples.shape[1:])
        coef = np.tensordot(_V_INV, samples, axes=([1], [1]))
        return cls(breaks, np.moveaxis(coef, 0, 1))

    @classmethod
    def constant(cls, value, breaks) -> "Curve":
        value = np.asarray(value, dtype=float)
        breaks = np.asarray(breaks, dtype=float)
        coef = np.zeros((breaks.size - 1, NODES) + value.shape)
        coef[:, 0] = value
        return cls(breaks, coef)

    @classmethod
    def from_steps(cls, steps: StepCurve, breaks) -> "Curve":
        breaks = np.asarray(breaks, dtype=float)
        mids = 0.5 * (breaks[:-1] + breaks[1:])
        vals = steps(mids)
        coef = np.zeros((breaks.size - 1, NODES) + steps.value_shape)
        coef[:, 0] = vals
        return cls(breaks, coef)

    @property
    def horizon(self) -> float:
        return float(self.breaks[-1])

    @property
    def value_shape(self) -> tuple:
        return self.coef.shape[2:]

    def _locate(self, t):
        t = np.asarray(t, dtype=float)
        k = np.clip(np.searchsorted(self.breaks, t, side="right") - 1, 0, self.breaks.size - 2)
        a, b = self.breaks[k], self.breaks[k + 1]
        x = 2.0 * (t - a) / (b - a) - 1.0
        return k, x

    def __call__(self, t):
        scalar = np.ndim(t) == 0
        k, x = self._locate(np.atleast_1d(t))
        out = _clenshaw(self.coef[k], x)
        return out[0] if scalar else out

    def tail_integral(self, t):
        """``int_t^T f(s) ds`` with ``T`` the last break."""
        scalar = np.ndim(t) == 0
        k, x = self._locate(np.atleast_1d(t))
        partial = _clenshaw(self._anti[k], x)
        out = self._seg_total[k] - partial + self._tail_after[k]
        return out[0] if scalar else out

    def total(self):
        return self.tail_integral(self.breaks[0])

    def nodes(self) -> np.ndarray:
        return _nodes(self.breaks).ravel()


def _nodes(breaks: np.ndarray) -> np.ndarray:
    a, b = breaks[:-1, None], breaks[1:, None]
    return a + 0.5 * (_X[None, :] + 1.0) * (b - a)


def _clenshaw(coef: np.ndarray, x: np.ndarray) -> np.ndarray:
    """Evaluate per-point Chebyshev series; ``coef`` is ``(P, deg+1, ...)``."""
    x = x.reshape((-1,) + (1,) * (coef.ndim - 2))
    b1 = np.zeros((coef.shape[0],) + coef.shape[2:])
    b2 = np.zeros_like(b1)
    for j in range(coef.shape[1] - 1, 0, -1):
        b1, b2 = 2.0 * x * b1 - b2 + coef[:, j], b1
    return x * b1 - b2 + coef[:, 0]


def merge_breaks(*groups, lo: float = 0.0, hi: float) -> np.ndarray:
    """Union of breakpoints clipped to ``[lo, hi]``."""
    pts = [np.array([lo, hi])]
    for g in groups:
        g = np.asarray(g, dtype=float)
        pts.append(g[(g > lo) & (g < hi)])
    out = np.unique(np.concatenate(pts))
    # drop slivers produced by floating-point near-duplicates
    keep = np.concatenate([[True], np.diff(out) > 1e-13 * max(1.0, hi)])
    out = out[keep]
    out[-1] = hi
    return out
