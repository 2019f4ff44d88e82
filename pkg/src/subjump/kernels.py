"""Inner loops of the walk simulations.

Each kernel advances a batch of walkers through a pre-drawn chunk of
randomness and stops a walker at its first exit, so the numba loop and the
numpy version see the same random numbers and return identical results.
Arrays ``pos``/``vert`` and ``t`` are updated in place; the return value
flags walkers that exited during this chunk.
"""

import numpy as np

from ._accel import USE_NUMBA, njit


def lattice_advance_loop(pos, t, dirs, radius):
    P, K = dirs.shape
    exited = np.zeros(P, dtype=np.bool_)
    for p in range(P):
        for k in range(K):
            d = dirs[p, k]
            ax = d // 2
            if d % 2 == 0:
                pos[p, ax] += 1
            else:
                pos[p, ax] -= 1
            t[p] += 1
            if abs(pos[p, ax]) >= radius:
                exited[p] = True
                break
    return exited


def lattice_advance_numpy(pos, t, dirs, radius):
    P, K = dirs.shape
    n = pos.shape[1]
    steps = np.zeros((P, K, n), dtype=np.int64)
    rows = np.arange(P)[:, None]
    cols = np.arange(K)[None, :]
    steps[rows, cols, dirs // 2] = 1 - 2 * (dirs % 2)
    traj = pos[:, None, :] + np.cumsum(steps, axis=1)
    out = np.abs(traj).max(axis=2) >= radius
    exited = out.any(axis=1)
    first = np.where(exited, out.argmax(axis=1), K - 1)
    pos[:] = traj[np.arange(P), first]
    t += first + 1
    return exited


def jump_walk_advance_loop(pos, t, disp, radius):
    P, K, n = disp.shape
    exited = np.zeros(P, dtype=np.bool_)
    for p in range(P):
        for k in range(K):
            far = 0
            for a in range(n):
                pos[p, a] += disp[p, k, a]
                far = max(far, abs(pos[p, a]))
            t[p] += 1
            if far >= radius:
                exited[p] = True
                break
    return exited


def jump_walk_advance_numpy(pos, t, disp, radius):
    P, K, _ = disp.shape
    traj = pos[:, None, :] + np.cumsum(disp, axis=1)
    out = np.abs(traj).max(axis=2) >= radius
    exited = out.any(axis=1)
    first = np.where(exited, out.argmax(axis=1), K - 1)
    pos[:] = traj[np.arange(P), first]
    t += first + 1
    return exited


def graph_advance_loop(vert, t, u, nbr, deg, dist2, r2):
    P, K = u.shape
    exited = np.zeros(P, dtype=np.bool_)
    for p in range(P):
        v = vert[p]
        for k in range(K):
            v = nbr[v, int(u[p, k] * deg[v])]
            t[p] += 1
            if dist2[v] >= r2:
                exited[p] = True
                break
        vert[p] = v
    return exited


def graph_advance_numpy(vert, t, u, nbr, deg, dist2, r2):
    P, K = u.shape
    exited = np.zeros(P, dtype=bool)
    live = np.arange(P)
    for k in range(K):
        if live.size == 0:
            break
        v = vert[live]
        v = nbr[v, (u[live, k] * deg[v]).astype(np.int64)]
        vert[live] = v
        t[live] += 1
        out = dist2[v] >= r2
        exited[live[out]] = True
        live = live[~out]
    return exited


if USE_NUMBA:
    lattice_advance = njit(lattice_advance_loop)
    jump_walk_advance = njit(jump_walk_advance_loop)
    graph_advance = njit(graph_advance_loop)
else:
    lattice_advance = lattice_advance_numpy
    jump_walk_advance = jump_walk_advance_numpy
    graph_advance = graph_advance_numpy

BACKEND = "numba" if USE_NUMBA else "numpy"
