"""Exact Gaussian and envelope-shaped sub-Gaussian heat kernels.

Both kernel kinds are written as ``A / V(psi_c^{-1}(t)) * exp(-Phi(d, t))``
with ``Phi`` the off-diagonal exponent of ``psi_c``; for the Gaussian,
``A = omega_n (4 pi)^{-n/2}`` reproduces ``(4 pi t)^{-n/2} exp(-d^2/4t)``
exactly.  Volumes are homogeneous: ``V(r) = c_V r^alpha_v``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .piecewise import PiecewisePower
from .scale_fn import ScaleFunction


def unit_ball_volume(n: int) -> float:
    return math.pi ** (n / 2) / math.gamma(n / 2 + 1)


def phi_sup(psi: ScaleFunction, R, t):
    """``sup_{r>0} (R/r - t/psi(r))``, exactly, for a piecewise-power ``psi``.

    On a segment ``a r^beta`` with ``beta > 1`` the interior critical point
    ``r* = (beta t / (a R))^{1/(beta-1)}`` is a maximum worth
    ``(1 - 1/beta) R / r*``; otherwise the segment is monotone and only its
    endpoints matter.  The ``r -> inf`` limit contributes 0, so the result
    is never negative.  Returns ``inf`` when the supremum is infinite, which
    happens as ``r -> 0`` if the inner exponent is below 1.
    """
    R = np.asarray(R, dtype=float)
    t = np.asarray(t, dtype=float)
    if np.any(t <= 0) or np.any(R < 0):
        raise ValueError("need t > 0 and R >= 0")
    R, t = np.broadcast_arrays(R, t)
    best = np.zeros(R.shape)
    pos = R > 0
    beta0, c0 = psi.inner_exponent, psi.c0
    if beta0 < 1:
        best[pos] = np.inf
    elif beta0 == 1:
        best[pos & (R > t / c0)] = np.inf
    pp = psi.as_piecewise()
    with np.errstate(divide="ignore", over="ignore", invalid="ignore"):
        for lo, hi, a, beta in pp.segments():
            if math.isfinite(hi):
                best = np.maximum(best, R / hi - t / psi(hi))
            if beta > 1:
                rstar = (beta * t / (a * R)) ** (1.0 / (beta - 1.0))
                inside = pos & (rstar > lo) & (rstar <= hi)
                val = (1.0 - 1.0 / beta) * R / rstar
                best = np.where(inside, np.maximum(best, val), best)
    return float(best) if best.ndim == 0 else best


def gaussian_kernel(n: int, t, d):
    """``(4 pi t)^{-n/2} exp(-d^2 / 4t)``."""
    t = np.asarray(t, dtype=float)
    d = np.asarray(d, dtype=float)
    if np.any(t <= 0) or np.any(d < 0):
        raise ValueError("need t > 0 and d >= 0")
    out = (4 * math.pi * t) ** (-n / 2) * np.exp(-(d**2) / (4 * t))
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class VolumeModel:
    alpha_v: float
    c_V: float = 1.0

    def __post_init__(self):
        if not (self.alpha_v > 0 and self.c_V > 0):
            raise ValueError("alpha_v and c_V must be positive")

    def __call__(self, r):
        out = self.c_V * np.asarray(r, dtype=float) ** self.alpha_v
        return float(out) if out.ndim == 0 else out

    @property
    def doubling_constant(self) -> float:
        return 2.0**self.alpha_v

    @property
    def reverse_doubling(self) -> tuple[float, float]:
        """``(A, C)`` with ``V(A r) >= C V(r)``."""
        return 2.0, 2.0**self.alpha_v

    def over_inverse(self, psi: ScaleFunction) -> PiecewisePower:
        """``t -> V(psi^{-1}(t))`` as a piecewise power of ``t``."""
        return inverse_piecewise(psi).power(self.alpha_v) * self.c_V


def inverse_piecewise(psi: ScaleFunction) -> PiecewisePower:
    pp = psi.as_piecewise()
    knots = tuple(float(v) for v in np.atleast_1d(psi(psi.breakpoints)))
    return PiecewisePower(knots, tuple(1.0 / b for b in pp.exponents), tuple(k ** (-1.0 / b) for k, b in zip(pp.coefs, pp.exponents)))


def _is_square(psi: ScaleFunction) -> bool:
    return psi.c0 == 1.0 and len(psi.segments) == 1 and psi.segments[0][1] == 2.0


@dataclass(frozen=True)
class HeatKernelModel:
    kind: str
    psi_c: ScaleFunction
    volume: VolumeModel
    C1: float
    c1: float
    c2: float
    c3: float
    delta: float
    n: Optional[int] = None

    def __post_init__(self):
        if min(self.C1, self.c1, self.c2, self.c3) <= 0:
            raise ValueError("HKE constants must be positive")
        if not 0 < self.delta <= 1:
            raise ValueError("delta must lie in (0, 1]")
        if self.kind == "gaussian":
            if self.n is None or self.n < 1:
                raise ValueError("gaussian model needs a positive dimension n")
            if not _is_square(self.psi_c):
                raise ValueError("gaussian model requires psi_c(r) = r^2")
            if self.volume.alpha_v != self.n or not math.isclose(self.volume.c_V, unit_ball_volume(self.n), rel_tol=1e-14):
                raise ValueError("gaussian model requires the Euclidean ball volume")
        elif self.kind == "subgaussian":
            if self.psi_c.beta_lo <= 1:
                raise ValueError("sub-Gaussian model needs every exponent of psi_c above 1")
        else:
            raise ValueError(f"unknown kernel kind {self.kind!r}")

    @classmethod
    def gaussian(cls, n: int, delta: float = 1.0) -> "HeatKernelModel":
        omega = unit_ball_volume(n)
        amp = omega * (4 * math.pi) ** (-n / 2)
        model = cls(
            "gaussian", ScaleFunction.power(2.0), VolumeModel(float(n), omega),
            C1=amp, c1=1.0, c2=1.0, c3=amp * math.exp(-(delta**2) / 4), delta=delta, n=n,
        )
        model.check_envelopes()
        return model

    @classmethod
    def subgaussian(
        cls, psi_c: ScaleFunction, alpha_v: float, c_V: float = 1.0, C1: float = 1.0,
        c1: float = 1.0, c2: float = 1.0, c3: Optional[float] = None, delta: float = 1.0,
        check: bool = True,
    ) -> "HeatKernelModel":
        """Envelope-shaped model; ``check=False`` skips the sandwich test on
        the (t, d) grid, for building bare envelopes with arbitrary constants."""
        if c3 is None:
            # largest constant compatible with the near-diagonal lower bound
            c3 = float(np.exp(-np.max(phi_sup(psi_c, delta * psi_c.inverse(_T_GRID), _T_GRID)))) * (1 - 1e-12)
        model = cls("subgaussian", psi_c, VolumeModel(alpha_v, c_V), C1, c1, c2, c3, delta)
        if check:
            model.check_envelopes()
        return model

    @property
    def amplitude(self) -> float:
        """``A`` in ``p_t(d) = A / V(psi_c^{-1}(t)) exp(-Phi(d, t))``."""
        return self.C1 if self.kind == "gaussian" else 1.0

    def on_diagonal(self, t):
        return 1.0 / self.volume(self.psi_c.inverse(t))

    def check_envelopes(self):
        t, d = _envelope_grid(self.psi_c)
        p = model_kernel(self, t, d)
        up = hke_upper(self, t, d)
        low = hke_lower_near(self, t, d)
        applies = ~np.isnan(low)
        if np.any(p > up * (1 + 1e-12)) or np.any(p[applies] < low[applies] * (1 - 1e-12)):
            raise ValueError("model kernel escapes its HKE envelopes; adjust C1, c1, c2, c3 or delta")

    def to_json(self) -> dict:
        if self.kind == "gaussian":
            return {"kind": "gaussian", "n": self.n}
        return {
            "kind": "subgaussian", "psi_c": self.psi_c.to_json(), "alpha_v": self.volume.alpha_v,
            "c_V": self.volume.c_V, "C1": self.C1, "c1": self.c1, "c2": self.c2, "c3": self.c3,
            "delta": self.delta,
        }

    @classmethod
    def from_json(cls, obj: dict) -> "HeatKernelModel":
        if obj["kind"] == "gaussian":
            return cls.gaussian(int(obj["n"]), float(obj.get("delta", 1.0)))
        return cls.subgaussian(
            ScaleFunction.from_json(obj["psi_c"]), float(obj["alpha_v"]), float(obj.get("c_V", 1.0)),
            float(obj.get("C1", 1.0)), float(obj.get("c1", 1.0)), float(obj.get("c2", 1.0)),
            None if obj.get("c3") is None else float(obj["c3"]), float(obj.get("delta", 1.0)),
        )


_T_GRID = np.logspace(-8, 8, 161)


def _envelope_grid(psi: ScaleFunction) -> tuple[np.ndarray, np.ndarray]:
    # 40 times x 25 distances, distances measured in units of psi^{-1}(t)
    t = np.logspace(-6, 6, 40)
    frac = np.concatenate(([0.0], np.logspace(-3, 1.5, 24)))
    T, F = np.meshgrid(t, frac, indexing="ij")
    return T.ravel(), F.ravel() * psi.inverse(T.ravel())


def hke_upper(model: HeatKernelModel, t, d):
    """``C1 / V(psi^{-1}(t)) * exp(-c1 Phi(c2 d, t))``."""
    phi = phi_sup(model.psi_c, model.c2 * np.asarray(d, dtype=float), t)
    return model.C1 * model.on_diagonal(t) * np.exp(-model.c1 * phi)


def hke_lower_near(model: HeatKernelModel, t, d):
    """``c3 / V(psi^{-1}(t))`` where ``d <= delta psi^{-1}(t)``, else NaN (not applicable).

    Scalars return ``None`` when the bound does not apply.
    """
    t = np.asarray(t, dtype=float)
    d = np.asarray(d, dtype=float)
    applies = d <= model.delta * model.psi_c.inverse(t)
    val = np.where(applies, model.c3 * model.on_diagonal(t), np.nan)
    if val.ndim == 0:
        return float(val) if applies else None
    return val


def model_kernel(model: HeatKernelModel, t, d):
    if model.kind == "gaussian":
        return gaussian_kernel(model.n, t, d)
    out = model.on_diagonal(t) * np.exp(-phi_sup(model.psi_c, d, t))
    return float(out) if np.ndim(out) == 0 else out
