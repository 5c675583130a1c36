"""Test functions ``g: R^d -> R`` integrated against measures.

All variants evaluate on ``(..., d)`` arrays and return ``(...)`` arrays.
"""

from __future__ import annotations

import numpy as np

from .metric import PointCloud, pairwise


class TestFunction:
    """Base class; subclasses implement ``__call__`` on point arrays."""

    __test__ = False  # keep pytest from collecting this class
    lipschitz: float = float("inf")

    def __add__(self, other):
        return Combination(((1.0, self), (1.0, other)))

    def __rmul__(self, scale):
        return Combination(((float(scale), self),))


class Constant(TestFunction):
    def __init__(self, value: float = 1.0):
        self.value = float(value)
        self.lipschitz = 0.0

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        return np.full(x.shape[:-1], self.value)

    def to_json(self):
        return {"type": "constant", "value": self.value}


class Coordinate(TestFunction):
    def __init__(self, axis: int = 0):
        self.axis = int(axis)
        self.lipschitz = 1.0

    def __call__(self, x):
        return np.asarray(x, dtype=float)[..., self.axis]

    def to_json(self):
        return {"type": "coordinate", "axis": self.axis}


class Polynomial(TestFunction):
    """``sum_k coeffs[k] * x[axis]**k``; Lipschitz constant is only finite on bounded sets."""

    def __init__(self, coeffs, axis: int = 0):
        self.coeffs = tuple(float(c) for c in coeffs)
        self.axis = int(axis)
        self.lipschitz = 0.0 if len(self.coeffs) <= 1 else (
            abs(self.coeffs[1]) if len(self.coeffs) == 2 else float("inf"))

    def __call__(self, x):
        t = np.asarray(x, dtype=float)[..., self.axis]
        out = np.zeros_like(t)
        for c in reversed(self.coeffs):
            out = out * t + c
        return out

    def lipschitz_on(self, lo: float, hi: float) -> float:
        """Bound of ``|g'|`` on ``[lo, hi]`` from the absolute coefficients."""
        r = max(abs(lo), abs(hi))
        return float(sum(k * abs(c) * r ** (k - 1) for k, c in enumerate(self.coeffs) if k))

    def to_json(self):
        return {"type": "polynomial", "coeffs": list(self.coeffs), "axis": self.axis}


class LipschitzGrid(TestFunction):
    """Values on a finite cloud with a declared Lipschitz constant.

    Off the grid the function is its McShane extension, so it is defined on
    the whole space with the same constant.
    """

    def __init__(self, cloud: PointCloud, values, lipschitz: float):
        values = np.asarray(values, dtype=float).reshape(-1)
        if len(values) != len(cloud):
            raise ValueError(f"{len(values)} values for {len(cloud)} grid points")
        empirical = grid_lipschitz(cloud.points, values)
        if empirical > lipschitz * (1 + 1e-12) + 1e-15:
            raise ValueError(f"declared L={lipschitz} below the grid constant {empirical}")
        self.cloud = cloud
        self.values = values
        self.lipschitz = float(lipschitz)

    def __call__(self, x):
        from .transport import mcshane_extend
        return mcshane_extend(self.cloud, self.values, self.lipschitz, x)

    def to_json(self):
        return {"type": "lipschitz_grid", "points": self.cloud.to_list(),
                "values": self.values.tolist(), "L": self.lipschitz}


class Combination(TestFunction):
    """Finite linear combination of test functions."""

    def __init__(self, terms):
        self.terms = tuple(terms)
        self.lipschitz = sum(abs(a) * g.lipschitz for a, g in self.terms)

    def __call__(self, x):
        out = None
        for a, g in self.terms:
            v = a * g(x)
            out = v if out is None else out + v
        return out


def grid_lipschitz(points: np.ndarray, values: np.ndarray) -> float:
    """Largest ``|f(x) - f(y)| / d(x, y)`` over distinct grid pairs."""
    if len(points) < 2:
        return 0.0
    d = pairwise(points, points)
    dv = np.abs(values[:, None] - values[None, :])
    mask = d > 0
    return float((dv[mask] / d[mask]).max()) if mask.any() else 0.0


def from_json(spec: dict) -> TestFunction:
    kind = spec.get("type")
    if kind == "constant":
        return Constant(spec.get("value", 1.0))
    if kind == "coordinate":
        return Coordinate(spec.get("axis", 0))
    if kind == "polynomial":
        return Polynomial(spec["coeffs"], spec.get("axis", 0))
    if kind == "lipschitz_grid":
        return LipschitzGrid(PointCloud(spec["points"]), spec["values"], float(spec["L"]))
    raise ValueError(f"unknown test function type {kind!r}")
