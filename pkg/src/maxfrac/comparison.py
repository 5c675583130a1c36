"""Comparison functions: increasing gauges whose iterates vanish.

Only three families are supported (``linear``, ``rational`` and
``tabulated``) because for each of them ``phi(t) < t`` and
``phi^[k](t) -> 0`` can be enforced when the object is built.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import ClassVar

import numpy as np

from .errors import EmptyInputError


class ComparisonFn:
    """Base class. Subclasses implement :meth:`_apply` on arrays."""

    kind: ClassVar[str] = ""

    def __call__(self, t):
        return self.eval(t)

    def eval(self, t):
        """Evaluate at ``t >= 0``; accepts scalars or arrays."""
        arr = np.asarray(t, dtype=float)
        if np.any(arr < 0):
            raise ValueError("comparison functions are defined on [0, inf)")
        out = self._apply(arr)
        return float(out) if out.ndim == 0 else out

    def iterate(self, t, k: int):
        """``k``-fold composition; ``k = 0`` returns ``t``."""
        if k < 0:
            raise ValueError("k must be >= 0")
        value = np.asarray(t, dtype=float)
        if np.any(value < 0):
            raise ValueError("comparison functions are defined on [0, inf)")
        for _ in range(k):
            if not np.any(value):
                break
            value = self._apply(value)
        return float(value) if value.ndim == 0 else value

    def _apply(self, t: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def to_json(self) -> dict:
        raise NotImplementedError


@dataclass(frozen=True)
class Linear(ComparisonFn):
    """``phi(t) = c t`` with ``0 <= c < 1``."""

    c: float
    kind: ClassVar[str] = "linear"

    def __post_init__(self):
        if not (0.0 <= self.c < 1.0):
            raise ValueError(f"linear comparison needs 0 <= c < 1, got {self.c}")

    def _apply(self, t):
        return self.c * t

    def to_json(self):
        return {"type": "linear", "c": self.c}


@dataclass(frozen=True)
class Rational(ComparisonFn):
    """``phi(t) = t / (1 + t)``; ``phi^[k](t) = t / (1 + k t)``."""

    kind: ClassVar[str] = "rational"

    def _apply(self, t):
        return t / (1.0 + t)

    def to_json(self):
        return {"type": "rational"}


@dataclass(frozen=True)
class Tabulated(ComparisonFn):
    """Piecewise-linear interpolation of a breakpoint table.

    The table must start at ``(0, 0)``, be strictly increasing in ``t``,
    non-decreasing in value, stay strictly below the diagonal and end with a
    slope below one; beyond the last breakpoint that slope is continued.
    """

    points: tuple
    kind: ClassVar[str] = "tabulated"

    def __post_init__(self):
        pts = tuple((float(t), float(v)) for t, v in self.points)
        if len(pts) < 2:
            raise ValueError("tabulated comparison needs at least two breakpoints")
        ts = np.array([p[0] for p in pts])
        vs = np.array([p[1] for p in pts])
        if ts[0] != 0.0 or vs[0] != 0.0:
            raise ValueError("tabulated comparison must start at (0, 0)")
        if np.any(np.diff(ts) <= 0):
            raise ValueError("breakpoints must be strictly increasing in t")
        if np.any(np.diff(vs) < 0):
            raise ValueError("breakpoint values must be non-decreasing")
        if np.any(vs[1:] >= ts[1:]):
            raise ValueError("breakpoint values must satisfy v < t for t > 0")
        if self._last_slope(ts, vs) >= 1.0:
            raise ValueError("last slope must be < 1")
        object.__setattr__(self, "points", pts)

    @staticmethod
    def _last_slope(ts, vs):
        return (vs[-1] - vs[-2]) / (ts[-1] - ts[-2])

    def _apply(self, t):
        ts = np.array([p[0] for p in self.points])
        vs = np.array([p[1] for p in self.points])
        out = np.interp(t, ts, vs)
        beyond = t > ts[-1]
        if np.any(beyond):
            slope = self._last_slope(ts, vs)
            out = np.where(beyond, vs[-1] + slope * (t - ts[-1]), out)
        return out

    def to_json(self):
        return {"type": "tabulated", "points": [list(p) for p in self.points]}


def from_json(spec: dict) -> ComparisonFn:
    kind = spec.get("type")
    if kind == "linear":
        return Linear(float(spec["c"]))
    if kind == "rational":
        return Rational()
    if kind == "tabulated":
        return Tabulated(tuple(tuple(p) for p in spec["points"]))
    raise ValueError(f"unknown comparison function type {kind!r}")


@dataclass
class ComparisonReport:
    monotonicity_violations: list   # (t1, t2, phi(t1), phi(t2)) with t1 < t2, phi(t1) > phi(t2)
    iterate_failures: list          # (t, phi^[k_max](t)) above tol
    diagonal_violations: list       # (t, phi(t)) with phi(t) >= t > 0

    @property
    def passed(self) -> bool:
        return not (self.monotonicity_violations or self.iterate_failures
                    or self.diagonal_violations)


def check_comparison(phi: ComparisonFn, grid, k_max: int, tol: float) -> ComparisonReport:
    """Check both defining clauses of a comparison function on a grid."""
    grid = np.asarray(grid, dtype=float).reshape(-1)
    if grid.size == 0:
        raise EmptyInputError("grid must be nonempty")
    if np.any(grid < 0) or np.any(np.diff(grid) < 0):
        raise ValueError("grid must be sorted and nonnegative")
    values = np.asarray(phi.eval(grid), dtype=float).reshape(-1)
    mono = [(float(grid[i]), float(grid[i + 1]), float(values[i]), float(values[i + 1]))
            for i in np.flatnonzero(values[1:] < values[:-1])]
    diag = [(float(t), float(v)) for t, v in zip(grid, values) if t > 0 and v >= t]
    final = np.asarray(phi.iterate(grid, k_max), dtype=float).reshape(-1)
    fails = [(float(t), float(v)) for t, v in zip(grid, final) if v >= tol]
    return ComparisonReport(mono, fails, diag)
