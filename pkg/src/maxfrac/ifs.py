"""Iterated function systems of phi-max-contractions with probabilities.

Maps act on ``(..., d)`` float arrays. A system bundles the maps, the
selection probabilities, the comparison function ``phi`` and the depth ``p``
at which the max-contraction condition

    max_{|w| = p} d(f_w x, f_w y) <= phi( max_{|w| < p} d(f_w x, f_w y) )

is claimed to hold.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import comparison
from .comparison import ComparisonFn
from .errors import CapExceededError, ConvergenceError, DimensionError, EmptyInputError
from .metric import PointCloud, as_points, directed_hausdorff, hausdorff
from .symbolic import iter_word_images

# relative size below which a margin is treated as floating-point noise
ROUNDING_RTOL = 1e-13

PROB_TOL = 1e-12


class AffineMap:
    """``x -> A x + b``."""

    kind = "affine"

    def __init__(self, matrix, offset):
        A = np.atleast_2d(np.asarray(matrix, dtype=float))
        b = np.atleast_1d(np.asarray(offset, dtype=float))
        if A.shape != (len(b), len(b)):
            raise DimensionError(f"matrix {A.shape} does not match offset of length {len(b)}")
        if not (np.all(np.isfinite(A)) and np.all(np.isfinite(b))):
            raise ValueError("affine map entries must be finite")
        self.matrix = A
        self.offset = b
        self.matrix.setflags(write=False)
        self.offset.setflags(write=False)

    @property
    def dim(self) -> int:
        return len(self.offset)

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        if self.dim == 1:
            return x * self.matrix[0, 0] + self.offset[0]
        return x @ self.matrix.T + self.offset

    def to_json(self) -> dict:
        return {"type": "affine", "matrix": self.matrix.tolist(), "offset": self.offset.tolist()}

    def __repr__(self):
        return f"AffineMap({self.matrix.tolist()}, {self.offset.tolist()})"


class PiecewiseLinearMap:
    """Continuous piecewise-linear map of the line through ``(x, y)`` breakpoints.

    Outside the breakpoint range the first and last segments are extended
    linearly.
    """

    kind = "interval_pw"
    dim = 1

    def __init__(self, points):
        pts = np.asarray(points, dtype=float)
        if pts.ndim != 2 or pts.shape[1] != 2 or len(pts) < 2:
            raise ValueError("interval_pw needs at least two (x, y) breakpoints")
        if np.any(np.diff(pts[:, 0]) <= 0):
            raise ValueError("interval_pw breakpoints must be strictly increasing")
        self.xs = pts[:, 0].copy()
        self.ys = pts[:, 1].copy()
        self._lo_slope = (self.ys[1] - self.ys[0]) / (self.xs[1] - self.xs[0])
        self._hi_slope = (self.ys[-1] - self.ys[-2]) / (self.xs[-1] - self.xs[-2])

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        out = np.interp(x, self.xs, self.ys)
        out = np.where(x < self.xs[0], self.ys[0] + self._lo_slope * (x - self.xs[0]), out)
        return np.where(x > self.xs[-1], self.ys[-1] + self._hi_slope * (x - self.xs[-1]), out)

    def to_json(self) -> dict:
        return {"type": "interval_pw", "points": np.column_stack([self.xs, self.ys]).tolist()}

    def __repr__(self):
        return f"PiecewiseLinearMap({np.column_stack([self.xs, self.ys]).tolist()})"


def map_from_json(spec: dict):
    kind = spec.get("type")
    if kind == "affine":
        return AffineMap(spec["matrix"], spec["offset"])
    if kind == "interval_pw":
        return PiecewiseLinearMap(spec["points"])
    raise ValueError(f"unknown map type {kind!r}")


@dataclass(frozen=True)
class IfsSystem:
    maps: tuple
    probs: tuple
    phi: ComparisonFn
    depth: int = 1

    def __post_init__(self):
        maps = tuple(self.maps)
        probs = tuple(float(p) for p in self.probs)
        if not maps:
            raise ValueError("a system needs at least one map")
        if len(probs) != len(maps):
            raise ValueError(f"{len(maps)} maps but {len(probs)} probabilities")
        dims = {f.dim for f in maps}
        if len(dims) != 1:
            raise DimensionError(f"maps disagree on dimension: {sorted(dims)}")
        # a single map necessarily carries probability one
        lo_ok = all(p > 0 for p in probs)
        hi_ok = all(p < 1 for p in probs) or len(probs) == 1
        if not (lo_ok and hi_ok):
            raise ValueError("probabilities must lie in (0, 1)")
        if abs(math.fsum(probs) - 1.0) > PROB_TOL:
            raise ValueError(f"probabilities sum to {math.fsum(probs)}, not 1")
        if int(self.depth) < 1:
            raise ValueError("depth p must be >= 1")
        object.__setattr__(self, "maps", maps)
        object.__setattr__(self, "probs", probs)
        object.__setattr__(self, "depth", int(self.depth))

    @property
    def m(self) -> int:
        return len(self.maps)

    @property
    def dim(self) -> int:
        return self.maps[0].dim

    def images(self, points: np.ndarray) -> np.ndarray:
        """All ``f_i(points)`` stacked map by map, shape ``(m * n, d)``."""
        return np.concatenate([f(points) for f in self.maps], axis=0)

    @classmethod
    def from_json(cls, spec: dict) -> "IfsSystem":
        maps = tuple(map_from_json(s) for s in spec["maps"])
        system = cls(maps, tuple(spec["probs"]), comparison.from_json(spec["phi"]),
                     int(spec.get("p", 1)))
        if "dim" in spec and int(spec["dim"]) != system.dim:
            raise DimensionError(f"declared dim {spec['dim']} but maps act on R^{system.dim}")
        return system

    def to_json(self) -> dict:
        return {"dim": self.dim, "maps": [f.to_json() for f in self.maps],
                "probs": list(self.probs), "phi": self.phi.to_json(), "p": self.depth}


def rounding_floor(lhs, rhs, scale, depth: int):
    """Size below which ``rhs - lhs`` is indistinguishable from rounding.

    Word images are computed with ``depth`` map applications, each adding an
    absolute error of order ``eps * scale`` (the coordinate magnitude).
    """
    eps = np.finfo(float).eps
    return ROUNDING_RTOL * np.maximum(lhs, rhs) + 4.0 * (depth + 1) * eps * scale


def pair_scale(x: np.ndarray, y: np.ndarray) -> np.ndarray:
    return np.maximum(1.0, np.maximum(np.abs(x).max(axis=1), np.abs(y).max(axis=1)))


def _clean_margin(margin, floor):
    return np.where(np.abs(margin) <= floor, 0.0, margin)


def word_distance_maxima(system: IfsSystem, x: np.ndarray, y: np.ndarray, n: int) -> np.ndarray:
    """``max_{|w| = n} d(f_w x_k, f_w y_k)`` for each pair ``k``."""
    P = len(x)
    stacked = np.concatenate([x, y], axis=0)
    out = np.zeros(P)
    for imgs, _ in iter_word_images(system.maps, n, stacked):
        diff = imgs[:, :P] - imgs[:, P:]
        out = np.maximum(out, np.sqrt(np.einsum("wpd,wpd->wp", diff, diff)).max(axis=0))
    return out


def level_maxima(system: IfsSystem, x: np.ndarray, y: np.ndarray, n_max: int) -> np.ndarray:
    """Rows ``0..n_max`` of per-pair word-distance maxima (row 0 is ``d(x, y)``)."""
    rows = [word_distance_maxima(system, x, y, k) for k in range(n_max + 1)]
    return np.vstack(rows)


@dataclass
class VerificationReport:
    passed: bool
    worst_margin: float
    n_pairs: int
    witness: tuple | None = None      # (x, y) of the worst pair
    witness_lhs: float = 0.0
    witness_rhs: float = 0.0
    failures: int = 0
    tol: float = 0.0

    def to_json(self) -> dict:
        return {
            "passed": self.passed, "worst_margin": self.worst_margin, "n_pairs": self.n_pairs,
            "failures": self.failures, "tol": self.tol,
            "witness": None if self.witness is None else [list(map(float, w)) for w in self.witness],
            "witness_lhs": self.witness_lhs, "witness_rhs": self.witness_rhs,
        }


def sample_pairs(domain: PointCloud, n_pairs: int, rng: np.random.Generator):
    """Half domain-point pairs, half convex combinations of domain points."""
    pts = domain.points
    n_direct = n_pairs - n_pairs // 2
    n_mix = n_pairs - n_direct
    i = rng.integers(0, len(pts), size=n_direct)
    j = rng.integers(0, len(pts), size=n_direct)
    if len(pts) > 1:
        # avoid zero-distance pairs where possible
        j = np.where(i == j, (j + 1) % len(pts), j)
    xs, ys = [pts[i]], [pts[j]]
    if n_mix:
        idx = rng.integers(0, len(pts), size=(4, n_mix))
        lam = rng.random((2, n_mix, 1))
        xs.append(lam[0] * pts[idx[0]] + (1 - lam[0]) * pts[idx[1]])
        ys.append(lam[1] * pts[idx[2]] + (1 - lam[1]) * pts[idx[3]])
    return np.concatenate(xs), np.concatenate(ys)


def verify_phi_max(system: IfsSystem, domain: PointCloud, n_pairs: int = 1000,
                   rng_seed: int = 0, tol: float = 0.0) -> VerificationReport:
    """Sampled check of the max-contraction condition at the system's depth.

    A failure (``lhs > rhs + tol`` on some pair) is a certificate; a pass
    only covers the sampled pairs.
    """
    if not isinstance(domain, PointCloud):
        domain = PointCloud(domain)
    if domain.dim != system.dim:
        raise DimensionError(f"domain is {domain.dim}-dimensional, system acts on R^{system.dim}")
    if n_pairs < 1:
        raise ValueError("n_pairs must be >= 1")
    rng = np.random.default_rng(rng_seed)
    x, y = sample_pairs(domain, n_pairs, rng)
    p = system.depth
    table = level_maxima(system, x, y, p)
    lhs = table[p]
    rhs = np.asarray(system.phi.eval(table[:p].max(axis=0)), dtype=float)
    margin = _clean_margin(rhs - lhs, rounding_floor(lhs, rhs, pair_scale(x, y), p))
    k = int(np.argmin(margin))
    failed = lhs > rhs + tol
    failed &= margin < 0
    return VerificationReport(
        passed=not bool(failed.any()), worst_margin=float(margin[k]), n_pairs=len(lhs),
        witness=(x[k].copy(), y[k].copy()), witness_lhs=float(lhs[k]),
        witness_rhs=float(rhs[k]), failures=int(failed.sum()), tol=tol)


def fractal_step(system: IfsSystem, cloud: PointCloud) -> PointCloud:
    """Union of the images of ``cloud`` under every map, deduplicated."""
    if cloud.dim != system.dim:
        raise DimensionError(f"cloud is {cloud.dim}-dimensional, system acts on R^{system.dim}")
    return PointCloud(system.images(cloud.points), cloud.tol)


def fractal_iterate(system: IfsSystem, cloud: PointCloud, n: int) -> PointCloud:
    for _ in range(n):
        cloud = fractal_step(system, cloud)
    return cloud


@dataclass
class AttractorResult:
    cloud: PointCloud
    trace: list = field(default_factory=list)   # H(K_{n+1}, K_n) per step
    converged: bool = False
    ratio: float = float("nan")                 # observed per-step contraction ratio
    error_bound: float = float("nan")           # trace[-1] * r / (1 - r) when r < 1


def _observed_ratio(trace: list) -> float:
    ratios = [b / a for a, b in zip(trace[:-1], trace[1:]) if a > 0]
    if not ratios:
        return float("nan")
    tail = ratios[-4:]
    return float(np.exp(np.mean(np.log(np.maximum(tail, np.finfo(float).tiny)))))


def attractor(system: IfsSystem, seed: PointCloud, tol: float = 1e-4, max_iter: int = 100,
              max_points: int = 500_000) -> AttractorResult:
    """Picard iteration of the fractal operator from ``seed``.

    Stops once two successive iterates are closer than ``tol`` in Hausdorff
    distance. Raises :class:`ConvergenceError` (carrying the partial result)
    when ``max_iter`` steps are not enough.
    """
    if tol <= 0:
        raise ValueError("tol must be > 0")
    if not isinstance(seed, PointCloud):
        seed = PointCloud(seed)
    current = seed
    trace: list[float] = []
    for _ in range(max_iter):
        if len(current) * system.m > max_points:
            raise CapExceededError(
                f"attractor cloud would exceed {max_points} points",
            )
        nxt = fractal_step(system, current)
        trace.append(hausdorff(nxt, current))
        current = nxt
        if trace[-1] < tol:
            break
    result = AttractorResult(current, trace, bool(trace and trace[-1] < tol), _observed_ratio(trace))
    r = result.ratio
    if r < 1:
        result.error_bound = trace[-1] * r / (1 - r)
    if not result.converged:
        raise ConvergenceError(f"attractor did not reach tol={tol} in {max_iter} steps", result)
    return result


@dataclass
class HullResult:
    cloud: PointCloud
    forward_gap: float   # sup over F(hull) of the distance to the hull


def absorbing_hull(system: IfsSystem, support: PointCloud, attractor_cloud: PointCloud,
                   n: int) -> HullResult:
    """``A  u  supp  u  F(supp)  u ... u  F^n(supp)`` with its forward-invariance gap."""
    if n < 0:
        raise ValueError("n must be >= 0")
    if support.dim != attractor_cloud.dim:
        raise DimensionError("support and attractor clouds differ in dimension")
    parts = [attractor_cloud.points, support.points]
    orbit = support
    for _ in range(n):
        orbit = fractal_step(system, orbit)
        parts.append(orbit.points)
    hull = PointCloud(np.concatenate(parts, axis=0), attractor_cloud.tol)
    gap = directed_hausdorff(fractal_step(system, hull), hull)
    return HullResult(hull, gap)


def cloud_of(points, dim: int | None = None) -> PointCloud:
    arr = as_points(points, dim)
    if len(arr) == 0:
        raise EmptyInputError("empty point list")
    return PointCloud(arr)
