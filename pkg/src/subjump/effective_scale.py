"""The effective scale ``psi_c(r) / I(r)`` with ``I(r) = int_0^r psi_c(s)/(s psi_j(s)) ds``.

``I`` carries additive constants across breakpoints, so the effective scale
is not itself a piecewise power.  It is exposed as an exact evaluator and
its power bounds are certified on grids.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .errors import CriterionDivergent
from .piecewise import PiecewisePower
from .scale_fn import DYADIC_GRID, ScaleBounds, ScaleFunction, empirical_scale_bounds
from .subordination import criterion_integrand

COROLLARY_KEYS = ("cor1", "cor2", "cor3", "cor4a", "cor4b")


@dataclass(frozen=True)
class EffectiveScale:
    psi_c: ScaleFunction
    psi_j: ScaleFunction
    integrand: PiecewisePower

    @classmethod
    def build(cls, psi_c: ScaleFunction, psi_j: ScaleFunction) -> "EffectiveScale":
        integrand = criterion_integrand(psi_c, psi_j)
        if integrand.inner_exponent <= -1.0:
            raise CriterionDivergent("effective scale")
        return cls(psi_c, psi_j, integrand)

    def I(self, r):
        return self.integrand.cumulative(r)

    def __call__(self, r):
        r = np.asarray(r, dtype=float)
        if np.any(r <= 0):
            raise ValueError("r must be positive")
        out = np.asarray(self.psi_c(r)) / np.asarray(self.I(r))
        return float(out) if out.ndim == 0 else out

    def table(self, r_grid: Sequence[float]) -> str:
        r = np.asarray(r_grid, dtype=float)
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["r", "psi_c", "psi_j", "I", "psi_hat"])
        cols = (r, self.psi_c(r), self.psi_j(r), self.I(r), self(r))
        for row in zip(*(np.atleast_1d(c) for c in cols)):
            w.writerow([repr(float(x)) for x in row])
        return buf.getvalue()


def effective_scale_eval(psi_c: ScaleFunction, psi_j: ScaleFunction, r):
    return EffectiveScale.build(psi_c, psi_j)(r)


def certify_effective_bounds(
    psi_c: ScaleFunction, psi_j: ScaleFunction, grid: Iterable[float] = DYADIC_GRID
) -> ScaleBounds:
    """Grid-certified ``(C, beta_lo, beta_hi)`` of the effective scale.

    Raises :class:`~subjump.errors.ScaleBoundViolation` if the effective
    scale fails to be positive and increasing on the grid.
    """
    return empirical_scale_bounds(EffectiveScale.build(psi_c, psi_j), grid)


def _constants(hat: EffectiveScale, r: np.ndarray) -> dict[str, float]:
    pc, pj, ph = hat.psi_c(r), hat.psi_j(r), hat(r)
    small, large = r <= 1.0, r >= 1.0
    # max over r <= R of [ph(R)/ph(r)] / [pc(R)/pc(r)]: running minimum of log(ph/pc)
    L = np.log(ph) - np.log(pc)
    cor3 = float(np.exp(np.max(L - np.minimum.accumulate(L))))
    return {
        "cor1": float(np.max(ph / pj)),
        "cor2": float(np.max(pc[small] / pj[small])),
        "cor3": cor3,
        "cor4a": float(np.max(ph[large] / pc[large])),
        "cor4b": float(np.max(pc[small] / ph[small])),
    }


@dataclass(frozen=True)
class CorollaryCheck:
    constants: dict
    refined: dict
    drift: dict
    passed: bool
    max_drift: float


def verify_corollary_inequalities(
    psi_c: ScaleFunction, psi_j: ScaleFunction, r_grid: Sequence[float], max_drift: float = 0.05
) -> CorollaryCheck:
    """Smallest grid constants for the five comparisons between
    ``psi_c``, ``psi_j`` and the effective scale.

    ``cor1``: hat <= C psi_j for all r; ``cor2``: psi_c <= C psi_j for r <= 1;
    ``cor3``: hat(R)/hat(r) <= C psi_c(R)/psi_c(r) for r <= R;
    ``cor4a``: hat <= C psi_c for r >= 1; ``cor4b``: psi_c <= C hat for r <= 1.

    A constant passes when it is finite and moves by less than ``max_drift``
    (relative) when the grid density is doubled.
    """
    hat = EffectiveScale.build(psi_c, psi_j)
    r = np.unique(np.append(np.asarray(r_grid, dtype=float), 1.0))
    if np.any(r <= 0):
        raise ValueError("r_grid must be positive")
    if r[0] > 1.0 or r[-1] < 1.0 or math.log10(r[-1] / r[0]) < 6 - 1e-9:
        raise ValueError("r_grid must straddle 1 and span at least 6 decades")
    fine = np.unique(np.concatenate((r, np.sqrt(r[:-1] * r[1:]))))
    base, ref = _constants(hat, r), _constants(hat, fine)
    drift = {k: abs(ref[k] - base[k]) / base[k] for k in COROLLARY_KEYS}
    ok = all(math.isfinite(ref[k]) and math.isfinite(base[k]) and drift[k] < max_drift for k in COROLLARY_KEYS)
    return CorollaryCheck(base, ref, drift, ok, max_drift)
