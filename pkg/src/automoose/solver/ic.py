"""Voronoi initial condition on a periodic cell grid."""

from __future__ import annotations

import numpy as np

from .prng import SplitMix64


def voronoi_ic(seed: int, grain_num: int, nx: int, ny: int,
               extent_x: float, extent_y: float):
    """Label every cell by its nearest grain center under periodic distance.

    Centers come from successive splitmix64 draws (x then y per grain).
    Returns the integer label grid and the adjacency set of label pairs
    that share a cell edge.
    """
    if grain_num < 1:
        raise ValueError("grain_num must be >= 1")
    rng = SplitMix64(seed)
    centers = np.empty((grain_num, 2))
    for g in range(grain_num):
        centers[g, 0] = rng.next_unit() * extent_x
        centers[g, 1] = rng.next_unit() * extent_y
    x = (np.arange(nx) + 0.5) * (extent_x / nx)
    y = (np.arange(ny) + 0.5) * (extent_y / ny)
    X, Y = np.meshgrid(x, y, indexing="ij")
    best = np.full((nx, ny), np.inf)
    labels = np.zeros((nx, ny), dtype=np.int32)
    for g in range(grain_num):
        dx = np.abs(X - centers[g, 0])
        dx = np.minimum(dx, extent_x - dx)
        dy = np.abs(Y - centers[g, 1])
        dy = np.minimum(dy, extent_y - dy)
        d2 = dx * dx + dy * dy
        closer = d2 < best
        labels[closer] = g
        best[closer] = d2[closer]
    adjacency = set()
    for axis in (0, 1):
        neighbour = np.roll(labels, -1, axis=axis)
        mask = labels != neighbour
        for a, b in zip(labels[mask].tolist(), neighbour[mask].tolist()):
            adjacency.add((min(a, b), max(a, b)))
    return labels, adjacency
