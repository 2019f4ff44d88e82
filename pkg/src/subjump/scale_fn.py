"""Scale functions in piecewise-power canonical form.

A scale function is a homeomorphism of [0, inf) whose growth between any
two radii is pinched between two powers.  Here it is stored as a prefactor
``c0`` and a list of ``(r_max, beta)`` segments; the value on the first
segment is ``c0 * r**beta`` and continuity fixes everything after it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Iterable

import numpy as np

from .errors import ScaleBoundViolation
from .piecewise import PiecewisePower, _probes

# dyadic radii 2**-30 .. 2**30, about 18 decades
DYADIC_GRID = 2.0 ** np.arange(-30, 31)


@dataclass(frozen=True)
class ScaleBounds:
    C: float
    beta_lo: float
    beta_hi: float

    def __post_init__(self):
        if not self.C >= 1:
            raise ValueError(f"C must be >= 1, got {self.C}")
        if not 0 < self.beta_lo <= self.beta_hi:
            raise ValueError(f"need 0 < beta_lo <= beta_hi, got {self.beta_lo}, {self.beta_hi}")


@dataclass(frozen=True)
class ScaleFunction:
    c0: float
    segments: tuple[tuple[float, float], ...]
    _breaks: np.ndarray = field(init=False, repr=False, compare=False)
    _betas: np.ndarray = field(init=False, repr=False, compare=False)
    _knots: np.ndarray = field(init=False, repr=False, compare=False)
    _anchor_r: np.ndarray = field(init=False, repr=False, compare=False)
    _anchor_v: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        segs = tuple((float(r), float(b)) for r, b in self.segments)
        object.__setattr__(self, "segments", segs)
        if not (self.c0 > 0 and math.isfinite(self.c0)):
            raise ValueError("c0 must be positive and finite")
        if not segs:
            raise ValueError("at least one segment required")
        if segs[-1][0] != math.inf:
            raise ValueError("last segment must extend to infinity")
        breaks = np.array([r for r, _ in segs[:-1]], dtype=float)
        betas = np.array([b for _, b in segs], dtype=float)
        if np.any(betas <= 0) or not np.all(np.isfinite(betas)):
            raise ValueError("exponents must be positive and finite")
        if breaks.size and (breaks[0] <= 0 or np.any(np.diff(breaks) <= 0) or not np.all(np.isfinite(breaks))):
            raise ValueError("breakpoints must be positive and strictly increasing")
        knots = np.empty_like(breaks)
        prev_r, prev_v = 0.0, 0.0
        for i, r in enumerate(breaks):
            knots[i] = self.c0 * r ** betas[0] if i == 0 else prev_v * (r / prev_r) ** betas[i]
            prev_r, prev_v = r, knots[i]
        object.__setattr__(self, "_breaks", breaks)
        object.__setattr__(self, "_betas", betas)
        object.__setattr__(self, "_knots", knots)
        # segment i is anchor_v[i] * (r / anchor_r[i])**beta[i]
        object.__setattr__(self, "_anchor_r", np.concatenate(([1.0], breaks)))
        object.__setattr__(self, "_anchor_v", np.concatenate(([self.c0], knots)))

    @classmethod
    def power(cls, beta: float, c0: float = 1.0) -> "ScaleFunction":
        return cls(c0, ((math.inf, beta),))

    @property
    def breakpoints(self) -> np.ndarray:
        return self._breaks.copy()

    @property
    def exponents(self) -> np.ndarray:
        return self._betas.copy()

    @property
    def inner_exponent(self) -> float:
        return float(self._betas[0])

    @property
    def beta_lo(self) -> float:
        return float(self._betas.min())

    @property
    def beta_hi(self) -> float:
        return float(self._betas.max())

    def __call__(self, r):
        r = np.asarray(r, dtype=float)
        if np.any(r < 0):
            raise ValueError("scale functions are defined on r >= 0")
        idx = np.searchsorted(self._breaks, r, side="left")
        out = self._anchor_v[idx] * (r / self._anchor_r[idx]) ** self._betas[idx]
        return float(out) if out.ndim == 0 else out

    def inverse(self, t):
        t = np.asarray(t, dtype=float)
        if np.any(t < 0):
            raise ValueError("inverse is defined on t >= 0")
        idx = np.searchsorted(self._knots, t, side="left")
        out = self._anchor_r[idx] * (t / self._anchor_v[idx]) ** (1.0 / self._betas[idx])
        return float(out) if out.ndim == 0 else out

    def as_piecewise(self) -> PiecewisePower:
        coefs = [self.c0]
        for r, v, beta in zip(self._breaks, self._knots, self._betas[1:]):
            coefs.append(float(v / r**beta))
        return PiecewisePower(tuple(self._breaks), tuple(self._betas), tuple(coefs))

    def to_json(self) -> dict:
        return {
            "c0": self.c0,
            "segments": [
                {"r_max": "inf" if r == math.inf else r, "beta": b} for r, b in self.segments
            ],
        }

    @classmethod
    def from_json(cls, obj: dict) -> "ScaleFunction":
        segs = []
        for s in obj["segments"]:
            r = s["r_max"]
            segs.append((math.inf if r in ("inf", "Infinity", None) else float(r), float(s["beta"])))
        return cls(float(obj["c0"]), tuple(segs))


def eval_scale(psi: ScaleFunction, r):
    return psi(r)


def inverse(psi: ScaleFunction, t):
    return psi.inverse(t)


def composition(psi_j: ScaleFunction, psi_c: ScaleFunction) -> ScaleFunction:
    """The scale function ``t -> psi_j(psi_c^{-1}(t))`` in canonical form.

    Its breakpoints live in value space: the images under ``psi_c`` of both
    functions' radius breakpoints.  On each piece the exponent is
    ``beta_j / beta_c``.
    """
    t_breaks = sorted(set(psi_c(psi_c.breakpoints).tolist()) | set(np.atleast_1d(psi_c(psi_j.breakpoints)).tolist()))
    probes_t = _probes(t_breaks)
    probes_r = psi_c.inverse(probes_t)
    ic = np.searchsorted(psi_c._breaks, probes_r, side="left")
    ij = np.searchsorted(psi_j._breaks, probes_r, side="left")
    expo = psi_j._betas[ij] / psi_c._betas[ic]
    bj0, bc0 = psi_j._betas[0], psi_c._betas[0]
    c0 = psi_j.c0 * psi_c.c0 ** (-bj0 / bc0)
    segs = list(zip(t_breaks + [math.inf], expo.tolist()))
    return ScaleFunction(float(c0), tuple(segs))


def compose_inverse(psi_j: ScaleFunction, psi_c: ScaleFunction, t):
    """``psi_j(psi_c^{-1}(t))`` evaluated directly."""
    t = np.asarray(t, dtype=float)
    if np.any(t <= 0):
        raise ValueError("t must be positive")
    return psi_j(psi_c.inverse(t))


def empirical_scale_bounds(
    func: Callable[[np.ndarray], np.ndarray], grid: Iterable[float] = DYADIC_GRID
) -> ScaleBounds:
    """Grid estimate of ``(C, beta_lo, beta_hi)`` for a positive increasing function.

    The exponents are the extreme secant slopes of ``log func`` against
    ``log r`` between neighbouring grid points; ``C`` is then the smallest
    constant that makes the two-sided bound hold on every grid pair.
    """
    r = np.asarray(sorted(set(float(x) for x in grid)), dtype=float)
    if r.size < 3:
        raise ValueError("need at least three grid radii")
    lf = np.log(np.asarray(func(r), dtype=float))
    lr = np.log(r)
    if not np.all(np.isfinite(lf)):
        raise ScaleBoundViolation("non-finite or non-positive value on the grid")
    slopes = np.diff(lf) / np.diff(lr)
    if np.any(slopes <= 0):
        raise ScaleBoundViolation("function is not strictly increasing on the grid")
    lo, hi = float(slopes.min()), float(slopes.max())
    dlf = lf[None, :] - lf[:, None]
    dlr = lr[None, :] - lr[:, None]
    upper = np.triu(np.ones_like(dlf, dtype=bool), k=1)
    excess = np.maximum(dlf - hi * dlr, lo * dlr - dlf)[upper]
    C = float(np.exp(max(0.0, excess.max())))
    return ScaleBounds(C, lo, hi)


def certify_scale_bounds(psi: ScaleFunction, grid: Iterable[float] = DYADIC_GRID, rtol: float = 1e-9) -> ScaleBounds:
    """Two-sided power bounds with ``C = 1`` and the extreme exponents.

    The claimed bound is re-checked on every pair of grid radii (plus the
    breakpoints); any violation means the representation is broken.
    """
    bounds = ScaleBounds(1.0, psi.beta_lo, psi.beta_hi)
    r = np.unique(np.concatenate((np.asarray(list(grid), dtype=float), psi.breakpoints)))
    lf = np.log(psi(r))
    lr = np.log(r)
    dlf = lf[None, :] - lf[:, None]
    dlr = lr[None, :] - lr[:, None]
    upper = np.triu(np.ones_like(dlf, dtype=bool), k=1)
    slack = rtol * (1.0 + np.abs(dlf))
    bad = ((dlf > bounds.beta_hi * dlr + slack) | (dlf < bounds.beta_lo * dlr - slack)) & upper
    if bad.any():
        i, j = np.argwhere(bad)[0]
        raise ScaleBoundViolation(f"power bound violated between r={r[i]:g} and R={r[j]:g}")
    return bounds
