"""Shared builders for randomized solver instances."""

import numpy as np

from cmclab import GridGeometry, RegionMask, MinCutProblem


def random_small_problem(rng, d=None, max_free=16):
    """Random labeling instance with at most max_free free cells.

    Dimensions, spacing, stencil, fixed labels, lambda, cell weights, and
    the active region are all drawn at random; every remaining cell is split
    between the two fixed masks so the free count stays below the brute
    force budget.
    """
    if d is None:
        d = int(rng.integers(2, 4))
    if d == 2:
        dims = tuple(int(v) for v in rng.integers(3, 6, size=2))
    else:
        dims = tuple(int(v) for v in rng.integers(2, 4, size=3))
    ncells = int(np.prod(dims))
    h = float(2.0 ** rng.integers(-3, 2))
    stencil = "cc" if rng.random() < 0.5 else "face"
    grid = GridGeometry(dims, h=h, stencil=stencil)

    n_free = int(rng.integers(1, min(max_free, ncells) + 1))
    order = rng.permutation(ncells)
    free = np.zeros(ncells, dtype=bool)
    free[order[:n_free]] = True
    fin = np.zeros(ncells, dtype=bool)
    fout = np.zeros(ncells, dtype=bool)
    for idx in order[n_free:]:
        if rng.random() < 0.5:
            fin[idx] = True
        else:
            fout[idx] = True

    weights = None
    if rng.random() < 0.4:
        weights = rng.uniform(0.2, 3.0, size=dims)
    active = None
    if rng.random() < 0.3:
        act = free | (rng.random(ncells) < 0.5)
        active = RegionMask(grid, act.reshape(dims))

    return MinCutProblem(
        grid, float(rng.uniform(-2.0, 6.0)),
        fixed_in=RegionMask(grid, fin.reshape(dims)),
        fixed_out=RegionMask(grid, fout.reshape(dims)),
        cell_weight=weights, active_region=active)
