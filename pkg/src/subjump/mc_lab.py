"""Monte Carlo exit times and jump tails on lattices and the Sierpinski gasket.

Exit is from the open ball ``{d(center, y) < r}``: the first step landing at
distance ``>= r``.  Lattices use the l-infinity metric; the gasket uses the
Euclidean metric of its unit-triangle embedding, measured in edge lengths.

Paths are simulated in fixed-size blocks.  Block ``b`` of radius ``i`` draws
from ``SeedSequence(seed, spawn_key=(tag, i, b))``, so results do not depend
on how many workers process the blocks.
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from scipy import stats

from . import kernels
from .subordination import LevyMeasure, SamplerConfig, SubordinatorSampler

BLOCK = 256
CHUNK = 1024
TICK_CHUNK = 64
MAX_LEVEL = 9
MAX_DIM = 3
# subordinated step counts are capped here; sqrt(1e15) is far beyond any radius
STEP_CAP = 1e15

_TAG_DIFFUSION, _TAG_SUBORDINATED, _TAG_TAIL = 1, 2, 3


@dataclass(frozen=True)
class WalkGraph:
    kind: str
    n: int = 0
    level: int = 0
    coords: Optional[np.ndarray] = field(default=None, repr=False)
    nbr: Optional[np.ndarray] = field(default=None, repr=False)
    deg: Optional[np.ndarray] = field(default=None, repr=False)

    @property
    def vertex_count(self) -> float:
        return math.inf if self.kind == "lattice" else len(self.coords)

    def neighbors(self, v):
        """Neighbours of a vertex: a coordinate tuple on lattices, an index on the gasket."""
        if self.kind == "lattice":
            v = tuple(v)
            out = []
            for a in range(self.n):
                for s in (1, -1):
                    w = list(v)
                    w[a] += s
                    out.append(tuple(w))
            return out
        return [int(w) for w in self.nbr[v, : self.deg[v]]]

    def degree(self, v) -> int:
        return 2 * self.n if self.kind == "lattice" else int(self.deg[v])

    def vertex_index(self, i: int, j: int) -> int:
        """Gasket vertex at triangular coordinates ``(i, j)``."""
        hit = np.flatnonzero((self.coords[:, 0] == i) & (self.coords[:, 1] == j))
        if hit.size == 0:
            raise KeyError((i, j))
        return int(hit[0])

    def default_center(self):
        if self.kind == "lattice":
            return (0,) * self.n
        return self.vertex_index(2 ** (self.level - 1), 0)

    def max_radius(self) -> float:
        return math.inf if self.kind == "lattice" else 2.0 ** (self.level - 1)

    def to_json(self) -> dict:
        return {"kind": "lattice", "n": self.n} if self.kind == "lattice" else {"kind": "sierpinski", "level": self.level}


def build_graph(spec: dict) -> WalkGraph:
    """``{"kind": "lattice", "n": 1..3}`` or ``{"kind": "sierpinski", "level": 0..9}``."""
    kind = spec.get("kind")
    if kind == "lattice":
        n = int(spec["n"])
        if not 1 <= n <= MAX_DIM:
            raise ValueError(f"lattice dimension must be in 1..{MAX_DIM}")
        return WalkGraph("lattice", n=n)
    if kind == "sierpinski":
        level = int(spec["level"])
        if not 0 <= level <= MAX_LEVEL:
            raise ValueError(f"gasket level must be in 0..{MAX_LEVEL}")
        return _sierpinski(level)
    raise ValueError(f"unknown graph kind {kind!r}")


def _sierpinski(level: int) -> WalkGraph:
    # triangular coordinates: vertex (i, j) sits at i*(1, 0) + j*(1/2, sqrt(3)/2)
    tris = [(0, 0)]
    size = 2**level
    while size > 1:
        size //= 2
        tris = [(i + di, j + dj) for i, j in tris for di, dj in ((0, 0), (size, 0), (0, size))]
    edges = set()
    for i, j in tris:
        a, b, c = (i, j), (i + 1, j), (i, j + 1)
        edges.update({tuple(sorted((a, b))), tuple(sorted((a, c))), tuple(sorted((b, c)))})
    verts = sorted({v for e in edges for v in e}, key=lambda v: (v[1], v[0]))
    index = {v: k for k, v in enumerate(verts)}
    nbr = np.full((len(verts), 4), -1, dtype=np.int64)
    deg = np.zeros(len(verts), dtype=np.int64)
    for a, b in sorted(edges):
        ia, ib = index[a], index[b]
        nbr[ia, deg[ia]] = ib
        deg[ia] += 1
        nbr[ib, deg[ib]] = ia
        deg[ib] += 1
    return WalkGraph("sierpinski", level=level, coords=np.array(verts, dtype=np.int64), nbr=nbr, deg=deg)


def fit_exponent(xs, ys, weights=None, level: float = 0.95) -> tuple[float, tuple[float, float]]:
    """Weighted least squares of ``log y`` on ``log x``.

    The confidence interval uses the residual variance with a Student t
    quantile on ``len(xs) - 2`` degrees of freedom.
    """
    x = np.log(np.asarray(xs, dtype=float))
    yv = np.asarray(ys, dtype=float)
    if x.size < 3 or yv.size != x.size:
        raise ValueError("need at least three (x, y) points")
    if np.any(yv <= 0) or not np.all(np.isfinite(x)):
        raise ValueError("xs and ys must be positive")
    y = np.log(yv)
    w = np.ones_like(x) if weights is None else np.asarray(weights, dtype=float)
    if np.any(w <= 0):
        raise ValueError("weights must be positive")
    xm = np.sum(w * x) / w.sum()
    sxx = np.sum(w * (x - xm) ** 2)
    if sxx <= 1e-300 * max(1.0, np.sum(w * x**2)):
        raise ValueError("degenerate input: all x values coincide")
    ym = np.sum(w * y) / w.sum()
    slope = float(np.sum(w * (x - xm) * (y - ym)) / sxx)
    resid = y - ym - slope * (x - xm)
    dof = x.size - 2
    s2 = float(np.sum(w * resid**2) / dof)
    half = float(stats.t.ppf(0.5 + level / 2, dof) * math.sqrt(s2 / sxx))
    return slope, (slope - half, slope + half)


@dataclass
class ExitTimeEstimate:
    radii: list
    mean_exit: list
    stderr: list
    n_paths: int
    fitted_exponent: float
    exponent_ci: tuple
    flagged: list
    config: dict = field(default_factory=dict)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["r", "mean", "stderr", "n_paths"])
        for r, m, s in zip(self.radii, self.mean_exit, self.stderr):
            w.writerow([repr(float(r)), repr(float(m)), repr(float(s)), self.n_paths])
        return buf.getvalue()

    def summary(self) -> dict:
        return {
            "exponent": self.fitted_exponent,
            "ci": list(self.exponent_ci),
            "flagged_radii": self.flagged,
            "seed": self.config.get("seed"),
            "config_hash": config_hash(self.config),
        }


def config_hash(config: dict) -> str:
    blob = json.dumps(config, sort_keys=True, separators=(",", ":"), default=str)
    return hashlib.sha256(blob.encode()).hexdigest()[:16]


def _rng(seed: int, *key: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(int(seed), spawn_key=tuple(key)))


def _blocks(paths: int) -> list[int]:
    full, rest = divmod(paths, BLOCK)
    return [BLOCK] * full + ([rest] if rest else [])


def _run_blocks(fn, tasks, workers: int):
    if workers <= 1:
        return [fn(*t) for t in tasks]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(lambda t: fn(*t), tasks))


def _lattice_block(n: int, radius: int, size: int, rng: np.random.Generator) -> np.ndarray:
    pos = np.zeros((size, n), dtype=np.int64)
    t = np.zeros(size, dtype=np.int64)
    active = np.arange(size)
    while active.size:
        dirs = rng.integers(0, 2 * n, size=(active.size, CHUNK), dtype=np.int64)
        p, tt = pos[active], t[active]
        out = kernels.lattice_advance(p, tt, dirs, radius)
        pos[active], t[active] = p, tt
        active = active[~out]
    return t


def _gasket_block(graph: WalkGraph, start: int, dist2: np.ndarray, r2: int, size: int, rng) -> np.ndarray:
    vert = np.full(size, start, dtype=np.int64)
    t = np.zeros(size, dtype=np.int64)
    active = np.arange(size)
    while active.size:
        u = rng.random((active.size, CHUNK))
        v, tt = vert[active], t[active]
        out = kernels.graph_advance(v, tt, u, graph.nbr, graph.deg, dist2, r2)
        vert[active], t[active] = v, tt
        active = active[~out]
    return t


def _summarize(radii, samples, config) -> ExitTimeEstimate:
    means = [float(np.mean(s)) for s in samples]
    errs = [float(np.std(s, ddof=1) / math.sqrt(len(s))) for s in samples]
    weights = [(m / e) ** 2 if e > 0 else 1e12 for m, e in zip(means, errs)]
    if len(radii) >= 3:
        expo, ci = fit_exponent(radii, means, weights)
    else:
        expo, ci = math.nan, (math.nan, math.nan)
    flagged = [float(r) for r, m, e in zip(radii, means, errs) if e / m > 0.1]
    return ExitTimeEstimate(
        [float(r) for r in radii], means, errs, len(samples[0]), expo, ci, flagged, config
    )


def _check_radii(graph: WalkGraph, radii) -> list[int]:
    radii = [int(r) for r in radii]
    if any(r < 1 for r in radii) or sorted(set(radii)) != radii:
        raise ValueError("radii must be positive, distinct and increasing")
    if radii[-1] > graph.max_radius():
        raise ValueError(f"radius {radii[-1]} exceeds half the graph diameter")
    return radii


def exit_time_diffusion(
    graph: WalkGraph,
    center=None,
    radii: Sequence[int] = (4, 8, 16, 32),
    paths_per_radius: int = 10_000,
    seed: int = 0,
    workers: int = 1,
) -> ExitTimeEstimate:
    """Mean exit times of the simple random walk from balls about ``center``."""
    radii = _check_radii(graph, radii)
    tasks, owners = [], []
    if graph.kind == "lattice":
        for i, r in enumerate(radii):
            for b, size in enumerate(_blocks(paths_per_radius)):
                tasks.append((graph.n, r, size, _rng(seed, _TAG_DIFFUSION, i, b)))
                owners.append(i)
        results = _run_blocks(_lattice_block, tasks, workers)
    else:
        start = graph.default_center() if center is None else int(center)
        dc = graph.coords - graph.coords[start]
        dist2 = dc[:, 0] ** 2 + dc[:, 0] * dc[:, 1] + dc[:, 1] ** 2
        for i, r in enumerate(radii):
            for b, size in enumerate(_blocks(paths_per_radius)):
                tasks.append((graph, start, dist2, r * r, size, _rng(seed, _TAG_DIFFUSION, i, b)))
                owners.append(i)
        results = _run_blocks(_gasket_block, tasks, workers)
    samples = [np.concatenate([res for res, o in zip(results, owners) if o == i]) for i in range(len(radii))]
    config = {"mode": "diffusion", "graph": graph.to_json(), "radii": radii, "paths": paths_per_radius,
              "seed": int(seed)}
    return _summarize(radii, samples, config)


def lattice_displacement(rng: np.random.Generator, m: np.ndarray, n: int) -> np.ndarray:
    """Displacement of an ``m``-step simple random walk on Z^n, for each entry of ``m``."""
    m = np.asarray(m, dtype=np.int64)
    counts = m[:, None] if n == 1 else rng.multinomial(m, [1.0 / n] * n)
    return 2 * rng.binomial(counts, 0.5) - counts


def _subordinated_block(n: int, radius: int, sampler: SubordinatorSampler, size: int, rng) -> np.ndarray:
    pos = np.zeros((size, n), dtype=np.int64)
    clock = np.zeros(size)
    steps = np.zeros(size, dtype=np.int64)
    t = np.zeros(size, dtype=np.int64)
    active = np.arange(size)
    while active.size:
        A = active.size
        inc = sampler.increments(rng, 1.0, A * TICK_CHUNK).reshape(A, TICK_CHUNK)
        cl = clock[active][:, None] + np.cumsum(inc, axis=1)
        ns = np.floor(np.minimum(cl, STEP_CAP) + 0.5).astype(np.int64)
        m = np.diff(ns, axis=1, prepend=steps[active][:, None])
        disp = lattice_displacement(rng, m.ravel(), n).reshape(A, TICK_CHUNK, n)
        p, tt = pos[active], t[active]
        out = kernels.jump_walk_advance(p, tt, disp, radius)
        pos[active], t[active] = p, tt
        clock[active], steps[active] = cl[:, -1], ns[:, -1]
        active = active[~out]
    return t


def _require_lattice(graph: WalkGraph):
    if graph.kind != "lattice":
        raise ValueError("subordinated walks are implemented on lattices only")


def exit_time_subordinated(
    graph: WalkGraph,
    nu: LevyMeasure,
    config: SamplerConfig,
    center=None,
    radii: Sequence[int] = (16, 32, 64, 128),
    paths: int = 10_000,
    seed: Optional[int] = None,
    workers: int = 1,
) -> ExitTimeEstimate:
    """Exit times, in unit clock ticks, of ``Y_k = X_{round(S_k)}``."""
    nu.require_finite("subordinated walk")
    _require_lattice(graph)
    radii = _check_radii(graph, radii)
    seed = config.seed if seed is None else seed
    sampler = SubordinatorSampler(nu, config.epsilon)
    tasks, owners = [], []
    for i, r in enumerate(radii):
        for b, size in enumerate(_blocks(paths)):
            tasks.append((graph.n, r, sampler, size, _rng(seed, _TAG_SUBORDINATED, i, b)))
            owners.append(i)
    results = _run_blocks(_subordinated_block, tasks, workers)
    samples = [np.concatenate([res for res, o in zip(results, owners) if o == i]) for i in range(len(radii))]
    cfg = {"mode": "subordinated", "graph": graph.to_json(), "radii": radii, "paths": paths,
           "seed": int(seed), "epsilon": config.epsilon, "psi_c": nu.psi_c.to_json(), "psi_j": nu.psi_j.to_json()}
    return _summarize(radii, samples, cfg)


@dataclass
class TailTable:
    d: list
    prob: list
    counts: list
    samples: int
    slope: float
    ci: tuple

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["d", "tail_prob", "count", "samples"])
        for d, p, c in zip(self.d, self.prob, self.counts):
            w.writerow([repr(float(d)), repr(float(p)), int(c), self.samples])
        return buf.getvalue()

    def summary(self) -> dict:
        return {"slope": self.slope, "ci": list(self.ci), "samples": self.samples}


_TAIL_BLOCK = 16384


def _tail_block(n: int, sampler: Optional[SubordinatorSampler], size: int, rng) -> np.ndarray:
    if sampler is None:
        m = np.ones(size, dtype=np.int64)
    else:
        s = sampler.increments(rng, 1.0, size)
        m = np.floor(np.minimum(s, STEP_CAP) + 0.5).astype(np.int64)
    return np.abs(lattice_displacement(rng, m, n)).max(axis=1)


def jump_tail_stats(
    graph: WalkGraph,
    nu: Optional[LevyMeasure],
    config: SamplerConfig,
    samples: int = 200_000,
    seed: Optional[int] = None,
    d_grid: Sequence[float] = (8, 16, 32, 64, 128, 256),
    workers: int = 1,
) -> TailTable:
    """Empirical ``P(|Y_1 - Y_0| > d)`` and its log-log slope.

    ``nu=None`` is the identity time change: a single nearest-neighbour step.
    """
    _require_lattice(graph)
    sampler = None
    if nu is not None:
        nu.require_finite("jump tail sampling")
        sampler = SubordinatorSampler(nu, config.epsilon)
    seed = config.seed if seed is None else seed
    full, rest = divmod(samples, _TAIL_BLOCK)
    sizes = [_TAIL_BLOCK] * full + ([rest] if rest else [])
    tasks = [(graph.n, sampler, size, _rng(seed, _TAG_TAIL, b)) for b, size in enumerate(sizes)]
    disp = np.concatenate(_run_blocks(_tail_block, tasks, workers))
    d = np.asarray(d_grid, dtype=float)
    counts = np.array([int(np.count_nonzero(disp > x)) for x in d])
    prob = counts / samples
    keep = counts > 0
    if keep.sum() >= 3:
        slope, ci = fit_exponent(d[keep], prob[keep], counts[keep])
    else:
        slope, ci = math.nan, (math.nan, math.nan)
    return TailTable(d.tolist(), prob.tolist(), counts.tolist(), samples, slope, ci)
