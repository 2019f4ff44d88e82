"""Piecewise power functions on (0, inf).

A :class:`PiecewisePower` is ``f(x) = coef[i] * x**expo[i]`` on the segment
``(edges[i-1], edges[i]]`` with ``edges[-1] = 0`` and a final unbounded
segment.  Products, real powers and integrals over any sub-interval stay
in closed form, which is what lets the criterion integrals, the Levy
density and the truncation statistics be computed exactly rather than by
quadrature.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterator

import numpy as np


@dataclass(frozen=True)
class PiecewisePower:
    edges: tuple[float, ...]
    exponents: tuple[float, ...]
    coefs: tuple[float, ...]

    def __post_init__(self):
        if len(self.exponents) != len(self.edges) + 1 or len(self.coefs) != len(self.exponents):
            raise ValueError("need len(exponents) == len(coefs) == len(edges) + 1")
        e = np.asarray(self.edges, dtype=float)
        if e.size and (np.any(e <= 0) or np.any(np.diff(e) <= 0) or not np.all(np.isfinite(e))):
            raise ValueError("edges must be finite, positive and strictly increasing")
        if any(not (c > 0 and math.isfinite(c)) for c in self.coefs):
            raise ValueError("coefficients must be positive and finite")
        for name in ("edges", "exponents", "coefs"):
            object.__setattr__(self, name, tuple(float(x) for x in getattr(self, name)))

    @classmethod
    def monomial(cls, coef: float = 1.0, exponent: float = 0.0) -> "PiecewisePower":
        return cls((), (float(exponent),), (float(coef),))

    @classmethod
    def continuous(cls, c0: float, edges, exponents) -> "PiecewisePower":
        """Build from the first coefficient, fixing the rest by continuity."""
        edges = tuple(float(b) for b in edges)
        exponents = tuple(float(p) for p in exponents)
        coefs = [float(c0)]
        for b, p_lo, p_hi in zip(edges, exponents[:-1], exponents[1:]):
            coefs.append(coefs[-1] * b ** (p_lo - p_hi))
        return cls(edges, exponents, tuple(coefs))

    @property
    def n_segments(self) -> int:
        return len(self.exponents)

    @property
    def inner_exponent(self) -> float:
        return self.exponents[0]

    @property
    def outer_exponent(self) -> float:
        return self.exponents[-1]

    def segments(self) -> Iterator[tuple[float, float, float, float]]:
        """Yield ``(lo, hi, coef, exponent)`` for every segment."""
        lo = 0.0
        for i, (k, p) in enumerate(zip(self.coefs, self.exponents)):
            hi = self.edges[i] if i < len(self.edges) else math.inf
            yield lo, hi, k, p
            lo = hi

    def segment_index(self, x):
        return np.searchsorted(np.asarray(self.edges, dtype=float), x, side="left")

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        idx = self.segment_index(x)
        k = np.asarray(self.coefs)[idx]
        p = np.asarray(self.exponents)[idx]
        out = k * x**p
        return float(out) if out.ndim == 0 else out

    def __mul__(self, other) -> "PiecewisePower":
        if isinstance(other, (int, float)):
            return PiecewisePower(self.edges, self.exponents, tuple(k * other for k in self.coefs))
        if not isinstance(other, PiecewisePower):
            return NotImplemented
        edges = tuple(sorted(set(self.edges) | set(other.edges)))
        # representative point inside each merged segment
        probes = _probes(edges)
        ia = self.segment_index(probes)
        ib = other.segment_index(probes)
        exps = tuple(self.exponents[a] + other.exponents[b] for a, b in zip(ia, ib))
        coefs = tuple(self.coefs[a] * other.coefs[b] for a, b in zip(ia, ib))
        return PiecewisePower(edges, exps, coefs)

    __rmul__ = __mul__

    def power(self, q: float) -> "PiecewisePower":
        return PiecewisePower(
            self.edges,
            tuple(p * q for p in self.exponents),
            tuple(k**q for k in self.coefs),
        )

    def times_power(self, q: float) -> "PiecewisePower":
        """Multiply by ``x**q``."""
        return PiecewisePower(self.edges, tuple(p + q for p in self.exponents), self.coefs)

    def integral(self, a: float = 0.0, b: float = math.inf) -> float:
        """Exact integral over ``[a, b]``; ``math.inf`` when it diverges."""
        if a < 0 or b < a:
            raise ValueError("need 0 <= a <= b")
        total = 0.0
        for lo, hi, k, p in self.segments():
            lo, hi = max(lo, a), min(hi, b)
            if hi <= lo:
                continue
            piece = _power_integral(k, p, lo, hi)
            if piece == math.inf:
                return math.inf
            total += piece
        return total

    def cumulative(self, x):
        """Vectorized ``int_0^x f``; ``inf`` everywhere if the inner piece diverges."""
        x = np.asarray(x, dtype=float)
        if self.exponents[0] <= -1.0:
            out = np.full(x.shape, np.inf)
            return float(out) if out.ndim == 0 else out
        lows = np.concatenate(([0.0], self.edges))
        prefix = np.zeros(len(lows))
        for i, (lo, hi, k, p) in enumerate(self.segments()):
            if i + 1 < len(lows):
                prefix[i + 1] = prefix[i] + _power_integral(k, p, lo, hi)
        idx = self.segment_index(x)
        lo = lows[idx]
        k = np.asarray(self.coefs)[idx]
        q = np.asarray(self.exponents)[idx] + 1.0
        with np.errstate(divide="ignore", invalid="ignore"):
            span = np.log(x / lo)
            qs = np.where(q == 0, 1.0, q)
            part = np.where(
                lo == 0,
                k * x**q / qs,
                np.where(q == 0, k * span, k * lo**q * np.expm1(q * span) / qs),
            )
        out = prefix[idx] + np.where(x > 0, part, 0.0)
        return float(out) if out.ndim == 0 else out

    def to_dict(self) -> dict:
        return {"edges": list(self.edges), "exponents": list(self.exponents), "coefs": list(self.coefs)}


def _probes(edges) -> np.ndarray:
    if not edges:
        return np.array([1.0])
    e = np.asarray(edges, dtype=float)
    mids = np.sqrt(e[:-1] * e[1:]) if e.size > 1 else np.empty(0)
    return np.concatenate(([e[0] / 2], mids, [e[-1] * 2]))


def _power_integral(k: float, p: float, lo: float, hi: float) -> float:
    """``int_lo^hi k x**p dx`` with 0 <= lo < hi <= inf."""
    q = p + 1.0
    if lo == 0.0:
        if q <= 0:
            return math.inf
        if hi == math.inf:
            return math.inf
        return k * hi**q / q
    if hi == math.inf:
        if q >= 0:
            return math.inf
        return -k * lo**q / q
    span = math.log(hi / lo)
    if q == 0.0:
        return k * span
    # expm1 keeps accuracy when q is close to zero
    return k * lo**q * math.expm1(q * span) / q
