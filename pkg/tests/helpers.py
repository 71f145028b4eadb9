"""Generators shared by several test modules."""

import numpy as np
from shapely.geometry import box
from shapely.ops import unary_union

from activescan.geometry import Polygon


def random_block_set(seed: int, n_blocks: int = 12, span: int = 6) -> set[tuple[int, int]]:
    """A 4-connected set of unit blocks grown from (0, 0)."""
    rng = np.random.default_rng(seed)
    blocks = {(0, 0)}
    while len(blocks) < n_blocks:
        i, j = sorted(blocks)[rng.integers(len(blocks))]
        di, dj = ((1, 0), (0, 1), (-1, 0), (0, -1))[rng.integers(4)]
        n = (i + di, j + dj)
        if 0 <= n[0] < span and 0 <= n[1] < span:
            blocks.add(n)
    return blocks


def rectilinear_polygon(blocks, unit: float, origin=(0.0, 0.0)) -> Polygon:
    """Outline of a union of grid blocks, holes filled."""
    shape = unary_union([
        box(origin[0] + i * unit, origin[1] + j * unit, origin[0] + (i + 1) * unit, origin[1] + (j + 1) * unit)
        for i, j in blocks
    ])
    return Polygon(list(shape.exterior.coords))
