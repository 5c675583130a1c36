"""Discrete measures and the Markov / dual operators of a system.

The Markov operator pushes a measure forward,
``M(mu) = sum_i p_i mu o f_i^{-1}``; the dual operator pulls a function back,
``B(g) = sum_i p_i g o f_i``. They are adjoint:
``int g dM^n(nu) = int B^n g dnu``. ``B^n g`` is evaluated through its word
expansion ``sum_{|w| = n} p_w g o f_w`` rather than by nesting closures.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import CapExceededError, ConvergenceError, DimensionError, EmptyInputError
from .functions import TestFunction
from .ifs import IfsSystem, level_maxima, pair_scale, rounding_floor
from .metric import DEDUP_TOL, PointCloud, as_points, dedup_map, pairwise
from .symbolic import iter_word_images

MASS_TOL = 1e-10

MAX_ATOMS = 2_000_000


def rebalance(weights: np.ndarray) -> np.ndarray:
    """Shift the rounding residual onto the heaviest atom so the mass is exactly 1."""
    w = np.array(weights, dtype=float)
    k = int(np.argmax(w))
    for _ in range(8):
        residual = 1.0 - math.fsum(w)
        if residual == 0.0:
            break
        w[k] += residual
    return w


def coalesce(points: np.ndarray, weights: np.ndarray, tol: float = DEDUP_TOL):
    """Merge atoms closer than ``tol``; merged weights add."""
    keep, owner = dedup_map(points, tol)
    merged = np.bincount(owner, weights=weights, minlength=len(keep))
    return points[keep], merged


@dataclass(frozen=True)
class DiscreteMeasure:
    """Finitely many weighted atoms with unit total mass."""

    points: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        pts = as_points(self.points)
        w = np.asarray(self.weights, dtype=float).reshape(-1)
        if len(pts) == 0:
            raise EmptyInputError("a measure needs at least one atom")
        if len(w) != len(pts):
            raise ValueError(f"{len(pts)} atoms but {len(w)} weights")
        if np.any(~np.isfinite(w)) or np.any(w <= 0):
            raise ValueError("atom weights must be positive and finite")
        if abs(math.fsum(w) - 1.0) > MASS_TOL:
            raise ValueError(f"total mass {math.fsum(w)} is not 1")
        pts = np.ascontiguousarray(pts)
        w = np.ascontiguousarray(w)
        pts.setflags(write=False)
        w.setflags(write=False)
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "weights", w)

    @classmethod
    def from_atoms(cls, points, weights=None, tol: float = DEDUP_TOL) -> "DiscreteMeasure":
        """Coalesce, normalise and rebalance raw atoms."""
        pts = as_points(points)
        w = np.full(len(pts), 1.0 / max(len(pts), 1)) if weights is None else \
            np.asarray(weights, dtype=float).reshape(-1)
        pts, w = coalesce(pts, w, tol)
        return cls(pts, rebalance(w / math.fsum(w)))

    @classmethod
    def dirac(cls, point) -> "DiscreteMeasure":
        return cls(as_points(point, np.size(point)), np.ones(1))

    @classmethod
    def uniform(cls, points) -> "DiscreteMeasure":
        return cls.from_atoms(points)

    @property
    def dim(self) -> int:
        return self.points.shape[1]

    def __len__(self) -> int:
        return len(self.points)

    @property
    def mass(self) -> float:
        return math.fsum(self.weights)

    def support(self) -> PointCloud:
        return PointCloud(self.points)

    def integrate(self, g) -> float:
        """``int g dmu`` with a fixed (atom-order) summation."""
        return float(np.dot(self.weights, np.asarray(g(self.points), dtype=float)))

    def moments(self) -> dict:
        mean = self.weights @ self.points
        second = self.weights @ (self.points ** 2)
        centred = self.weights @ ((self.points - mean) ** 2)
        return {"mean": mean.tolist(), "second_moment": second.tolist(),
                "variance": centred.tolist(), "atoms": len(self)}


def markov_step(system: IfsSystem, mu: DiscreteMeasure, tol: float = DEDUP_TOL) -> DiscreteMeasure:
    """``sum_i sum_j p_i w_j delta_{f_i(x_j)}`` with coalescing and exact unit mass."""
    if mu.dim != system.dim:
        raise DimensionError(f"measure is {mu.dim}-dimensional, system acts on R^{system.dim}")
    pts = system.images(mu.points)
    w = np.concatenate([p * mu.weights for p in system.probs])
    pts, w = coalesce(pts, w, tol)
    return DiscreteMeasure(pts, rebalance(w))


@dataclass(frozen=True)
class PrunePolicy:
    """Drop atoms lighter than ``w_min`` while the cumulative dropped mass stays within ``budget``."""

    w_min: float = 1e-14
    budget: float = 1e-8


@dataclass
class IterationDiagnostics:
    steps: int = 0
    atom_counts: list = field(default_factory=list)
    pruned_mass: float = 0.0
    budget: float = 0.0


def _prune(mu: DiscreteMeasure, policy: PrunePolicy, diag: IterationDiagnostics) -> DiscreteMeasure:
    light = mu.weights < policy.w_min
    if not light.any() or light.all():
        return mu
    dropped = math.fsum(mu.weights[light])
    if diag.pruned_mass + dropped > policy.budget:
        return mu
    diag.pruned_mass += dropped
    w = mu.weights[~light]
    return DiscreteMeasure(mu.points[~light], rebalance(w / math.fsum(w)))


def markov_iterate(system: IfsSystem, mu: DiscreteMeasure, n: int,
                   prune: PrunePolicy | None = None, max_atoms: int = MAX_ATOMS):
    """``n``-fold Markov step. Returns ``(measure, diagnostics)``."""
    if n < 0:
        raise ValueError("n must be >= 0")
    diag = IterationDiagnostics(budget=prune.budget if prune else 0.0)
    diag.atom_counts.append(len(mu))
    for _ in range(n):
        if len(mu) * system.m > max_atoms:
            raise CapExceededError(f"next step would create {len(mu) * system.m} atoms "
                                   f"(cap {max_atoms})")
        mu = markov_step(system, mu)
        if prune is not None:
            mu = _prune(mu, prune, diag)
        diag.steps += 1
        diag.atom_counts.append(len(mu))
    return mu, diag


class DualImage(TestFunction):
    """``B(g)``: the pointwise sum ``sum_i p_i g(f_i(x))``."""

    def __init__(self, system: IfsSystem, g):
        self.system = system
        self.g = g

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        out = None
        for p, f in zip(self.system.probs, self.system.maps):
            v = p * np.asarray(self.g(f(x)), dtype=float)
            out = v if out is None else out + v
        return out


def dual_apply(system: IfsSystem, g) -> DualImage:
    return DualImage(system, g)


def dual_iterate(system: IfsSystem, g, n: int, x) -> np.ndarray | float:
    """``B^n g`` at ``x`` (one point or an ``(k, d)`` array) via the word sum."""
    if n < 0:
        raise ValueError("n must be >= 0")
    x_arr = np.asarray(x, dtype=float)
    single = x_arr.ndim <= 1
    pts = as_points(x_arr, system.dim) if single else x_arr
    if pts.shape[1] != system.dim:
        raise DimensionError(f"points are {pts.shape[1]}-dimensional, system acts on R^{system.dim}")
    total = np.zeros(len(pts))
    for imgs, weights in iter_word_images(system.maps, n, pts, system.probs):
        values = np.asarray(g(imgs), dtype=float)          # (W, k)
        total = total + weights @ values
    return float(total[0]) if single else total


def oscillation(g, domain, eps: float) -> float:
    """``max |g(x) - g(y)|`` over domain pairs with ``d(x, y) <= eps``."""
    if eps < 0:
        raise ValueError("eps must be >= 0")
    pts = domain.points if isinstance(domain, PointCloud) else as_points(domain)
    if len(pts) == 0:
        raise EmptyInputError("empty domain")
    values = np.asarray(g(pts), dtype=float)
    best = 0.0
    rows = max(1, (1 << 21) // len(pts))
    for i in range(0, len(pts), rows):
        d = pairwise(pts[i:i + rows], pts)
        dv = np.abs(values[i:i + rows, None] - values[None, :])
        dv = np.where(d <= eps, dv, 0.0)
        best = max(best, float(dv.max()))
    return best


def sample_close_pairs(domain: PointCloud, eps: float, n_pairs: int, rng: np.random.Generator):
    """Exactly ``n_pairs`` pairs with ``d(x, y) <= eps`` anchored at domain points.

    A third are axis probes ``x +- eps e_k`` (these attain directional
    stretch factors exactly), a third are domain pairs already within
    ``eps``, and the rest go in uniformly random directions at random radii.
    """
    pts = domain.points
    d = pts.shape[1]

    def within(x, y):
        keep = np.sqrt(np.sum((x - y) ** 2, axis=1)) <= eps
        return x[keep], y[keep]

    def random_probes(k):
        base = pts[rng.integers(0, len(pts), size=k)]
        u = rng.normal(size=(k, d))
        u /= np.maximum(np.linalg.norm(u, axis=1, keepdims=True), 1e-300)
        return within(base, base + eps * rng.random((k, 1)) * u)

    n_axis = n_pairs // 3
    n_dom = n_pairs // 3
    xs, ys = [], []
    if n_axis:
        base = pts[rng.integers(0, len(pts), size=n_axis)]
        k = np.arange(n_axis)
        offsets = np.zeros((n_axis, d))
        offsets[k, (k // 2) % d] = np.where(k % 2 == 0, eps, -eps)
        x, y = within(base, base + offsets)
        xs.append(x)
        ys.append(y)
    if n_dom and len(pts) > 1:
        i = rng.integers(0, len(pts), size=8 * n_dom)
        j = rng.integers(0, len(pts), size=8 * n_dom)
        x, y = within(pts[i], pts[j])
        xs.append(x[:n_dom])
        ys.append(y[:n_dom])
    have = sum(len(x) for x in xs)
    while have < n_pairs:
        x, y = random_probes(n_pairs - have)
        xs.append(x)
        ys.append(y)
        have += len(x)
    return np.concatenate(xs)[:n_pairs], np.concatenate(ys)[:n_pairs]


@dataclass
class ContractionProfile:
    eps: float
    a_hat: np.ndarray            # a_hat[n] for n = 0..n_max (a_hat[0] = sampled max d(x, y))
    pair_table: np.ndarray       # (n_max + 1, n_pairs) per-pair word-distance maxima
    recursion_violations: int    # pairs/levels breaking b_{n+p} <= phi(max b_n..b_{n+p-1})
    claim_violations: int        # pairs/levels breaking b_{pk+j} <= phi^[k](max b_1..b_p)
    envelope: np.ndarray         # phi^[k](M_hat) at each level n = pk + j, NaN at n = 0
    recursion_ok: np.ndarray     # per level n: all pairs satisfy the n-th recursion inequality
    claim_ok: np.ndarray         # per level n: all pairs within the claim envelope
    envelope_ok: np.ndarray      # per level n: a_hat[n] <= envelope[n] up to rounding
    n_pairs: int = 0

    def rows(self):
        for n in range(1, len(self.a_hat)):
            yield (n, float(self.a_hat[n]), bool(self.recursion_ok[n]),
                   float(self.envelope[n]), bool(self.claim_ok[n]))


def _exceeds(lhs, rhs, scale, depth):
    return lhs - rhs > rounding_floor(lhs, rhs, scale, depth)


def contraction_profile(system: IfsSystem, domain: PointCloud, eps: float, n_max: int,
                        n_pairs: int = 1000, rng_seed: int = 0) -> ContractionProfile:
    """Sampled lower bounds of ``a_n(eps)`` and the pointwise recursion checks."""
    if not isinstance(domain, PointCloud):
        domain = PointCloud(domain)
    if domain.dim != system.dim:
        raise DimensionError("domain and system differ in dimension")
    if n_max < 1:
        raise ValueError("n_max must be >= 1")
    if eps < 0:
        raise ValueError("eps must be >= 0")
    rng = np.random.default_rng(rng_seed)
    x, y = sample_close_pairs(domain, eps, n_pairs, rng)
    if len(x) == 0:
        raise EmptyInputError(f"no sampled pair with d(x, y) <= {eps}")
    table = level_maxima(system, x, y, n_max)
    scale = pair_scale(x, y)
    p, phi = system.depth, system.phi
    a_hat = table.max(axis=1)

    recursion_ok = np.ones(n_max + 1, dtype=bool)
    recursion_bad = 0
    for n in range(0, n_max - p + 1):
        bound = np.asarray(phi.eval(table[n:n + p].max(axis=0)), dtype=float)
        bad = _exceeds(table[n + p], bound, scale, n + p)
        recursion_bad += int(bad.sum())
        recursion_ok[n + p] &= not bad.any()

    claim_ok = np.ones(n_max + 1, dtype=bool)
    claim_bad = 0
    envelope = np.full(n_max + 1, np.nan)
    pair_m = table[1:p + 1].max(axis=0) if n_max >= p else table[1:].max(axis=0)
    m_hat = float(a_hat[1:p + 1].max())
    for n in range(1, n_max + 1):
        k = (n - 1) // p
        envelope[n] = phi.iterate(m_hat, k)
        bound = np.asarray(phi.iterate(pair_m, k), dtype=float)
        bad = _exceeds(table[n], bound, scale, n)
        claim_bad += int(bad.sum())
        claim_ok[n] = not bad.any()
    envelope_ok = np.ones(n_max + 1, dtype=bool)
    levels = np.arange(1, n_max + 1)
    envelope_ok[1:] = ~_exceeds(a_hat[1:], envelope[1:], float(scale.max()), levels)
    return ContractionProfile(eps, a_hat, table, recursion_bad, claim_bad, envelope,
                              recursion_ok, claim_ok, envelope_ok, len(x))


@dataclass
class InvariantResult:
    measure: DiscreteMeasure
    trace: list = field(default_factory=list)   # W1(mu_{n+1}, mu_n) per step
    converged: bool = False
    diagnostics: IterationDiagnostics | None = None


def step_distance(mu: DiscreteMeasure, nu: DiscreteMeasure) -> float:
    """W1 for trace bookkeeping: exact CDF formula on the line, network simplex otherwise."""
    from .transport import wasserstein1, wasserstein1_1d
    if mu.dim == 1:
        return wasserstein1_1d(mu, nu)
    return wasserstein1(mu, nu).cost


def invariant_measure(system: IfsSystem, nu0: DiscreteMeasure, tol: float = 1e-4,
                      max_iter: int = 200, prune: PrunePolicy | None = PrunePolicy(),
                      max_atoms: int = MAX_ATOMS, distance=step_distance) -> InvariantResult:
    """Iterate the Markov operator until successive W1 steps drop below ``tol``."""
    if tol <= 0:
        raise ValueError("tol must be > 0")
    diag = IterationDiagnostics(budget=prune.budget if prune else 0.0)
    diag.atom_counts.append(len(nu0))
    mu = nu0
    trace: list[float] = []
    for _ in range(max_iter):
        if len(mu) * system.m > max_atoms:
            raise CapExceededError(f"next step would create {len(mu) * system.m} atoms "
                                   f"(cap {max_atoms}); enable or tighten pruning")
        nxt = markov_step(system, mu)
        if prune is not None:
            nxt = _prune(nxt, prune, diag)
        diag.steps += 1
        diag.atom_counts.append(len(nxt))
        trace.append(distance(nxt, mu))
        mu = nxt
        if trace[-1] < tol:
            break
    result = InvariantResult(mu, trace, bool(trace and trace[-1] < tol), diag)
    if not result.converged:
        raise ConvergenceError(f"Markov iteration did not reach tol={tol} in {max_iter} steps",
                               result)
    return result


def chaos_game(system: IfsSystem, x0, n_samples: int, burn_in: int = 100,
               rng_seed: int = 0) -> DiscreteMeasure:
    """Empirical measure of a random-iteration trajectory (PCG64, seeded)."""
    if n_samples < 1:
        raise ValueError("n_samples must be >= 1")
    rng = np.random.default_rng(rng_seed)
    choices = rng.choice(system.m, size=burn_in + n_samples, p=np.asarray(system.probs))
    x = as_points(x0, system.dim)[:1].copy()
    out = np.empty((n_samples, system.dim))
    maps = system.maps
    for step, i in enumerate(choices.tolist()):
        x = maps[i](x)
        if step >= burn_in:
            out[step - burn_in] = x[0]
    return DiscreteMeasure.from_atoms(out)
