"""Subordinators with Levy density ``1 / (t psi_j(psi_c^{-1}(t)))``.

The criterion integrals are exact because every integrand is a piecewise
power.  The subordinator exists only when ``int_0^1 psi_c(s)/(s psi_j(s)) ds``
is finite; everything that would build or use it on a divergent pair raises
:class:`~subjump.errors.CriterionDivergent`.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from scipy import special

from .errors import CriterionDivergent, JumpKernelDivergence
from .heat_kernel import HeatKernelModel, VolumeModel, phi_sup
from .piecewise import PiecewisePower, _power_integral
from .quadrature import log_quad
from .scale_fn import ScaleFunction, composition

DIVERGENT = math.inf


def is_divergent(value: float) -> bool:
    return value == math.inf


def criterion_integrand(psi_c: ScaleFunction, psi_j: ScaleFunction) -> PiecewisePower:
    """``s -> psi_c(s) / (s psi_j(s))``."""
    return (psi_c.as_piecewise() * psi_j.as_piecewise().power(-1.0)).times_power(-1.0)


def criterion_integral(psi_c: ScaleFunction, psi_j: ScaleFunction) -> float:
    """``int_0^1 psi_c(s) / (s psi_j(s)) ds``, or ``DIVERGENT``."""
    return criterion_integrand(psi_c, psi_j).integral(0.0, 1.0)


def criterion_equivalent(psi_c: ScaleFunction, psi_j: ScaleFunction) -> float:
    """``int_0^1 dt / psi_j(psi_c^{-1}(t))``, or ``DIVERGENT``."""
    return composition(psi_j, psi_c).as_piecewise().power(-1.0).integral(0.0, 1.0)


def sufficient_condition(psi_j: ScaleFunction) -> float:
    """``int_0^1 s / psi_j(s) ds``, or ``DIVERGENT``."""
    return psi_j.as_piecewise().power(-1.0).times_power(1.0).integral(0.0, 1.0)


def exponent_rule(psi_c: ScaleFunction, psi_j: ScaleFunction) -> bool:
    """Convergence read off the innermost exponents alone."""
    return psi_c.inner_exponent > psi_j.inner_exponent


@dataclass(frozen=True)
class LevyMeasure:
    psi_c: ScaleFunction
    psi_j: ScaleFunction
    density: PiecewisePower
    criterion_value: float
    drift: float = 0.0

    @property
    def finite(self) -> bool:
        return not is_divergent(self.criterion_value)

    def require_finite(self, what: str = "construction") -> None:
        if not self.finite:
            raise CriterionDivergent(what)

    def __call__(self, t):
        return self.density(t)

    def levy_mass(self) -> float:
        """``int_0^inf (1 ^ s) rho(s) ds``."""
        return self.density.times_power(1.0).integral(0.0, 1.0) + self.density.integral(1.0, math.inf)


def build_levy_measure(psi_c: ScaleFunction, psi_j: ScaleFunction) -> LevyMeasure:
    g = composition(psi_j, psi_c).as_piecewise()
    density = g.power(-1.0).times_power(-1.0)
    return LevyMeasure(psi_c, psi_j, density, criterion_integral(psi_c, psi_j))


# below this multiple of 1/lambda, 1 - exp(-x) is replaced by x - x^2/2
_SMALL_X = 1e-6
# beyond this multiple of 1/lambda, exp(-x) < 1e-26 is dropped
_LARGE_X = 60.0


def _bernstein_part(rho: PiecewisePower, lam: float, lower: float) -> float:
    """``int_lower^inf (1 - exp(-lam s)) rho(s) ds``."""
    s_small, s_big = _SMALL_X / lam, _LARGE_X / lam
    total = 0.0
    if lower < s_small:
        total += lam * rho.times_power(1.0).integral(lower, s_small)
        total -= 0.5 * lam**2 * rho.times_power(2.0).integral(lower, s_small)
    a = max(lower, s_small)
    if a < s_big:
        val, _ = log_quad(
            lambda s: -np.expm1(-lam * s) * rho(s), a, s_big,
            breakpoints=rho.edges + (1.0 / lam,), rtol=1e-12,
        )
        total += val
    total += rho.integral(max(a, s_big), math.inf)
    return total


def laplace_exponent(nu: LevyMeasure, lam: float) -> float:
    """``phi(lam) = a lam + int (1 - e^{-s lam}) nu(ds)``."""
    nu.require_finite("Laplace exponent")
    if lam < 0:
        raise ValueError("lambda must be nonnegative")
    if lam == 0:
        return 0.0
    return nu.drift * lam + _bernstein_part(nu.density, lam, 0.0)


def truncation_stats(nu: LevyMeasure, epsilon: float) -> tuple[float, float]:
    """``(int_eps^inf rho, int_0^eps s rho)``: jump rate above ``epsilon`` and
    the mean contribution of the jumps below it."""
    nu.require_finite("truncation")
    if epsilon <= 0:
        raise ValueError("epsilon must be positive")
    return nu.density.integral(epsilon, math.inf), nu.density.times_power(1.0).integral(0.0, epsilon)


def truncated_laplace_exponent(nu: LevyMeasure, lam: float, epsilon: float) -> float:
    """Laplace exponent of the sampled process: jumps below ``epsilon`` are
    replaced by their mean as a drift."""
    tail, small = truncation_stats(nu, epsilon)
    if lam == 0:
        return 0.0
    return (nu.drift + small) * lam + _bernstein_part(nu.density, lam, epsilon)


@dataclass(frozen=True)
class SamplerConfig:
    epsilon: float = 1e-3
    horizon: float = 1.0
    seed: int = 0

    def __post_init__(self):
        if not self.epsilon > 0:
            raise ValueError("epsilon must be positive")
        if not self.horizon > 0:
            raise ValueError("horizon must be positive")
        if not 0 <= int(self.seed) < 2**64:
            raise ValueError("seed must be a 64-bit unsigned integer")


class SubordinatorSampler:
    """Compound-Poisson sampler for jumps above ``epsilon`` plus drift.

    Jump sizes come from the normalized tail density by exact inverse CDF,
    segment by segment.
    """

    def __init__(self, nu: LevyMeasure, epsilon: float):
        nu.require_finite("sampling")
        self.nu = nu
        self.epsilon = float(epsilon)
        self.tail_mass, self.small_drift = truncation_stats(nu, epsilon)
        lo, hi, q, mass = [], [], [], []
        for a, b, k, p in nu.density.segments():
            a = max(a, epsilon)
            if b <= a:
                continue
            lo.append(a)
            hi.append(b)
            q.append(p + 1.0)
            mass.append(_power_integral(k, p, a, b))
        self._lo = np.array(lo)
        self._q = np.array(q)
        with np.errstate(over="ignore"):
            self._ratio_q = np.where(self._q == 0, 0.0, (np.array(hi) / self._lo) ** self._q)
        self._log_ratio = np.log(np.array(hi) / self._lo)
        cum = np.cumsum(mass)
        self._cum = cum / cum[-1]

    @property
    def drift(self) -> float:
        return self.nu.drift + self.small_drift

    def jumps(self, rng: np.random.Generator, size: int) -> np.ndarray:
        u = rng.random(size)
        v = rng.random(size)
        seg = np.minimum(np.searchsorted(self._cum, u, side="right"), self._cum.size - 1)
        lo, q = self._lo[seg], self._q[seg]
        with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
            # F^{-1} within a segment: lo * (1 + v ((hi/lo)^q - 1))^{1/q}
            x = lo * (1.0 + v * (self._ratio_q[seg] - 1.0)) ** (1.0 / q)
            x_log = lo * np.exp(v * self._log_ratio[seg])
        return np.where(q == 0, x_log, x)

    def increments(self, rng: np.random.Generator, dt: float, size: int, return_counts: bool = False):
        """``size`` i.i.d. draws of ``S_dt``, optionally with their jump counts."""
        counts = rng.poisson(self.tail_mass * dt, size)
        sizes = self.jumps(rng, int(counts.sum()))
        owner = np.repeat(np.arange(size), counts)
        out = self.drift * dt + np.bincount(owner, weights=sizes, minlength=size)
        return (out, counts) if return_counts else out


def sample_increment(
    nu: LevyMeasure, config: SamplerConfig, dt: float, rng: np.random.Generator, size: Optional[int] = None
):
    """One draw (or ``size`` i.i.d. draws) of ``S_dt``."""
    sampler = SubordinatorSampler(nu, config.epsilon)
    out = sampler.increments(rng, dt, 1 if size is None else size)
    return float(out[0]) if size is None else out


@dataclass(frozen=True)
class JumpKernelValue:
    value: float
    quad_error: float
    small_t_bound: float
    large_t_bound: float
    t_lo: float
    t_hi: float


_TAIL_RTOL = 1e-10


def jump_kernel_detail(model: HeatKernelModel, nu: LevyMeasure, d: float) -> JumpKernelValue:
    """``J(d) = 1/2 int_0^inf p_t(d) rho(t) dt`` with certified tail bounds.

    The integral runs over ``[t_lo, t_hi]`` in ``log t``.  Above ``t_hi`` the
    kernel is bounded by its on-diagonal value, leaving a piecewise-power
    integral.  Below ``t_lo`` the off-diagonal exponent is bounded from below
    by its value at the first-segment critical radius, ``K t^{-q}``, which
    turns the remainder into an upper incomplete gamma function.
    """
    nu.require_finite("jump kernel")
    if not d > 0:
        raise ValueError("d must be positive")
    if nu.psi_c != model.psi_c:
        raise ValueError("Levy measure and heat kernel model use different psi_c")
    psi = model.psi_c
    h = nu.density * model.volume.over_inverse(psi).power(-1.0) * (0.5 * model.amplitude)
    if h.outer_exponent >= -1.0:
        raise JumpKernelDivergence(f"large-t integral diverges at d={d:g}")

    def g(t):
        return h(t) * np.exp(-phi_sup(psi, d, t))

    beta1, c0 = psi.inner_exponent, psi.c0
    q = 1.0 / (beta1 - 1.0)
    K1 = (1.0 - 1.0 / beta1) * d * (beta1 / (c0 * d)) ** (-q)
    r1 = psi.breakpoints[0] if psi.breakpoints.size else math.inf
    t_valid = c0 * d * r1 ** (beta1 - 1.0) / beta1
    if h.edges:
        t_valid = min(t_valid, h.edges[0])
    k, p = h.coefs[0], h.exponents[0]
    s = -(p + 1.0) / q

    def small_bound(t_lo):
        W = K1 * t_lo ** (-q)
        return k / q * K1 ** ((p + 1.0) / q) * special.gammaincc(s, W) * special.gamma(s)

    breaks = h.edges + tuple(np.atleast_1d(psi(psi.breakpoints)).tolist())
    tc = float(psi(d))
    t_lo, t_hi = min(tc * 1e-2, t_valid), tc * 1e2
    rough, _ = log_quad(g, t_lo, t_hi, breaks, rtol=1e-8)
    for _ in range(200):
        if small_bound(t_lo) <= _TAIL_RTOL * rough:
            break
        t_lo /= 10.0
    for _ in range(200):
        if h.integral(t_hi, math.inf) <= _TAIL_RTOL * rough:
            break
        t_hi *= 10.0
    value, err = log_quad(g, t_lo, t_hi, breaks, rtol=1e-11)
    return JumpKernelValue(value, err, float(small_bound(t_lo)), h.integral(t_hi, math.inf), t_lo, t_hi)


def jump_kernel(model: HeatKernelModel, nu: LevyMeasure, d: float) -> float:
    return jump_kernel_detail(model, nu, d).value


@dataclass
class ComparabilityReport:
    d: np.ndarray
    J: np.ndarray
    V: np.ndarray
    psi_j: np.ndarray
    ratio: np.ndarray
    C_max: float
    slope_tol: float
    ratio_min: float = field(init=False)
    ratio_max: float = field(init=False)
    C_emp: float = field(init=False)
    log_slope: float = field(init=False)
    end_slope: float = field(init=False)
    passed: bool = field(init=False)
    failure: Optional[str] = None

    def __post_init__(self):
        finite = np.isfinite(self.ratio) & (self.ratio > 0)
        if not finite.all():
            bad = self.d[~finite][0]
            self.failure = self.failure or f"non-finite kernel at d={bad:g}"
            self.ratio_min = self.ratio_max = self.C_emp = self.log_slope = self.end_slope = math.nan
            self.passed = False
            return
        self.ratio_min = float(self.ratio.min())
        self.ratio_max = float(self.ratio.max())
        self.C_emp = max(1.0 / self.ratio_min, self.ratio_max)
        x, y = np.log10(self.d), np.log10(self.ratio)
        # drift of log10(ratio) per decade: over the whole grid (reported) and
        # over the first and last decade, where unbounded drift must show up;
        # a bounded ratio may still step between plateaus in the interior
        self.log_slope = float(np.polyfit(x, y, 1)[0])
        ends = [x <= x[0] + 1.0, x >= x[-1] - 1.0]
        self.end_slope = max(abs(float(np.polyfit(x[m], y[m], 1)[0])) for m in ends)
        in_band = self.ratio_min >= 1.0 / self.C_max and self.ratio_max <= self.C_max
        self.passed = bool(in_band and self.end_slope <= self.slope_tol)
        if not in_band:
            self.failure = f"ratio outside [1/{self.C_max:g}, {self.C_max:g}]"
        elif not self.passed:
            self.failure = f"log-ratio drift {self.end_slope:.3g} per decade exceeds {self.slope_tol:g}"

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["d", "J", "V", "psi_j", "ratio"])
        for row in zip(self.d, self.J, self.V, self.psi_j, self.ratio):
            w.writerow([repr(float(x)) for x in row])
        return buf.getvalue()

    def summary(self, criterion: Optional[float] = None) -> dict:
        out = {
            "C_emp": self.C_emp, "C_max": self.C_max, "ratio_min": self.ratio_min,
            "ratio_max": self.ratio_max, "log_slope_per_decade": self.log_slope, "end_slope_per_decade": self.end_slope,
            "slope_tol": self.slope_tol, "pass": self.passed, "failure": self.failure,
        }
        if criterion is not None:
            out["criterion"] = None if is_divergent(criterion) else criterion
        return out

    @classmethod
    def from_csv(cls, text: str, C_max: float = 1e3, slope_tol: float = 0.05) -> "ComparabilityReport":
        rows = list(csv.DictReader(io.StringIO(text)))
        cols = {k: np.array([float(r[k]) for r in rows]) for k in ("d", "J", "V", "psi_j", "ratio")}
        return cls(cols["d"], cols["J"], cols["V"], cols["psi_j"], cols["ratio"], C_max, slope_tol)


def verify_jump_comparability(
    model: HeatKernelModel,
    nu: LevyMeasure,
    psi_j: ScaleFunction,
    volume: VolumeModel,
    d_grid: Sequence[float],
    C_max: float = 1e3,
    slope_tol: float = 0.05,
) -> ComparabilityReport:
    """Check ``J(d) V(d) psi_j(d)`` stays bounded above and below on ``d_grid``.

    Passing needs the ratio inside ``[1/C_max, C_max]`` and a log-log slope
    of at most ``slope_tol`` over the first and the last decade of the grid.
    """
    nu.require_finite("jump kernel comparability")
    d = np.asarray(d_grid, dtype=float)
    if d.size < 2 or np.any(d <= 0) or np.any(np.diff(d) <= 0):
        raise ValueError("d_grid must be positive and strictly increasing")
    if math.log10(d[-1] / d[0]) < 4 - 1e-9:
        raise ValueError("d_grid must span at least 4 decades")
    if d[1] > 10 * d[0] or d[-2] < d[-1] / 10:
        raise ValueError("d_grid needs two points in its first and in its last decade")
    J = np.empty_like(d)
    failure = None
    for i, x in enumerate(d):
        try:
            J[i] = jump_kernel(model, nu, x)
        except JumpKernelDivergence as exc:
            J[i] = math.inf
            failure = failure or str(exc)
    V = np.asarray(volume(d), dtype=float)
    pj = np.asarray(psi_j(d), dtype=float)
    return ComparabilityReport(d, J, V, pj, J * V * pj, C_max, slope_tol, failure=failure)
