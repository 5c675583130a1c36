"""Reference systems used by the tests, the acceptance suite and the CLI configs."""

from __future__ import annotations

import numpy as np

from .comparison import Linear
from .ifs import AffineMap, IfsSystem

# A @ A == 0.2 * I exactly in binary floating point
SWAP_MATRIX = np.array([[0.0, 2.0], [0.1, 0.0]])


def cantor(probs=(0.5, 0.5)) -> IfsSystem:
    """``x/3`` and ``x/3 + 2/3`` on the line; a contraction with ``phi(t) = t/3``."""
    return IfsSystem((AffineMap([[1 / 3]], [0.0]), AffineMap([[1 / 3]], [2 / 3])),
                     tuple(probs), Linear(1 / 3), 1)


def binary_uniform() -> IfsSystem:
    """``x/2`` and ``x/2 + 1/2``; its invariant measure is Lebesgue on [0, 1]."""
    return IfsSystem((AffineMap([[0.5]], [0.0]), AffineMap([[0.5]], [0.5])),
                     (0.5, 0.5), Linear(0.5), 1)


def swap_single(p: int = 2) -> IfsSystem:
    """One linear map that expands by 2 but whose square is ``0.2 I``."""
    return IfsSystem((AffineMap(SWAP_MATRIX, [0.0, 0.0]),), (1.0,), Linear(0.2), p)


def swap_pair(p: int = 2) -> IfsSystem:
    """Two copies of the swap matrix with offsets ``(0, 0)`` and ``(1, 0)``."""
    return IfsSystem((AffineMap(SWAP_MATRIX, [0.0, 0.0]), AffineMap(SWAP_MATRIX, [1.0, 0.0])),
                     (0.5, 0.5), Linear(0.2), p)
