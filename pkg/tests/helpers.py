"""Random piecewise-power scale functions for property tests and batteries."""

import math

import numpy as np
from hypothesis import strategies as st

from subjump import ScaleFunction

# a coarse exponent lattice makes equal inner exponents (the borderline case) common
BETA_LATTICE = np.round(np.arange(0.5, 4.01, 0.25), 2)


def random_scale(rng: np.random.Generator, max_segments: int = 3, betas=BETA_LATTICE) -> ScaleFunction:
    k = int(rng.integers(1, max_segments + 1))
    breaks = np.sort(10.0 ** rng.uniform(-3, 3, k - 1))
    while k > 1 and np.any(np.diff(breaks) <= 0):
        breaks = np.sort(10.0 ** rng.uniform(-3, 3, k - 1))
    beta = rng.choice(betas, size=k)
    c0 = float(10.0 ** rng.uniform(-1, 1))
    return ScaleFunction(c0, tuple(zip([*breaks.tolist(), math.inf], beta.tolist())))


@st.composite
def scale_functions(draw, max_segments: int = 3, beta_min: float = 0.3, beta_max: float = 4.0):
    k = draw(st.integers(1, max_segments))
    logs = draw(st.lists(st.floats(-4, 4), min_size=k - 1, max_size=k - 1, unique=True))
    breaks = sorted(10.0**x for x in logs)
    if len(set(breaks)) < len(breaks):
        breaks = sorted(set(breaks))
    betas = draw(st.lists(st.floats(beta_min, beta_max), min_size=len(breaks) + 1, max_size=len(breaks) + 1))
    c0 = draw(st.floats(0.1, 10.0))
    return ScaleFunction(c0, tuple(zip([*breaks, math.inf], betas)))
