"""Exact Wasserstein-1 (Hutchinson) distance between discrete measures.

The supremum over 1-Lipschitz test functions is computed through its dual,
an optimal-transport problem with ground cost ``d(x, y)``, solved exactly by
network simplex. From the dual variables ``v`` of the target the witness

    f(z) = min_j ( d(z, y_j) - v_j )

is built. It is 1-Lipschitz on the whole space and reaches the optimal
value, so every solve carries its own certificate: the gap between
``sum a_i c_ij plan_ij`` and ``int f dmu - int f dnu``.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass

import numpy as np

from .errors import DimensionError, MassMismatchError
from .measure import MASS_TOL, DiscreteMeasure
from .metric import PointCloud, as_points, pairwise

MAX_ATOMS_PER_SIDE = 2000

# POT probes every array backend at import time; only numpy is needed here
for _key in ("PYTORCH", "JAX", "CUPY", "TENSORFLOW"):
    os.environ.setdefault(f"POT_BACKEND_DISABLE_{_key}", "1")


@dataclass
class TransportResult:
    cost: float
    plan: np.ndarray                # (k, 3) rows of (source index, target index, mass)
    potential_source: np.ndarray    # witness f at the atoms of mu
    potential_target: np.ndarray    # witness f at the atoms of nu
    dual_objective: float

    @property
    def gap(self) -> float:
        return abs(self.cost - self.dual_objective)


def _check_pair(mu: DiscreteMeasure, nu: DiscreteMeasure):
    if mu.dim != nu.dim:
        raise DimensionError(f"dimension mismatch: {mu.dim} vs {nu.dim}")
    if abs(mu.mass - nu.mass) > MASS_TOL:
        raise MassMismatchError(f"masses differ: {mu.mass} vs {nu.mass}")


def wasserstein1(mu: DiscreteMeasure, nu: DiscreteMeasure) -> TransportResult:
    """Optimal cost, an optimal plan and a 1-Lipschitz witness potential."""
    import ot

    _check_pair(mu, nu)
    if max(len(mu), len(nu)) > MAX_ATOMS_PER_SIDE:
        raise ValueError(f"exact solver is limited to {MAX_ATOMS_PER_SIDE} atoms per side")
    a = np.array(mu.weights)
    b = np.array(nu.weights)
    # emd requires exactly equal sums
    b = b * (math.fsum(a) / math.fsum(b))
    C = pairwise(mu.points, nu.points)
    plan, log = ot.emd(a, b, C, numItermax=50_000_000, log=True)
    if log.get("warning"):
        raise RuntimeError(f"network simplex did not finish: {log['warning']}")
    v = np.asarray(log["v"], dtype=float)
    f_src = (C - v[None, :]).min(axis=1)
    f_tgt = (pairwise(nu.points, nu.points) - v[None, :]).min(axis=1)
    i, j = np.nonzero(plan > 0)
    triples = np.column_stack([i, j, plan[i, j]]).astype(float)
    cost = math.fsum((plan[i, j] * C[i, j]).tolist())
    dual = math.fsum((a * f_src).tolist()) - math.fsum((nu.weights * f_tgt).tolist())
    return TransportResult(cost, triples, f_src, f_tgt, dual)


def wasserstein1_1d(mu: DiscreteMeasure, nu: DiscreteMeasure) -> float:
    """``int |F_mu - F_nu| dt`` from the sorted merged atoms (line only)."""
    if mu.dim != 1 or nu.dim != 1:
        raise DimensionError("the CDF formula needs one-dimensional measures")
    _check_pair(mu, nu)
    x = np.concatenate([mu.points[:, 0], nu.points[:, 0]])
    w = np.concatenate([mu.weights, -nu.weights])
    order = np.argsort(x, kind="stable")
    x, w = x[order], w[order]
    cdf_gap = np.cumsum(w)[:-1]
    return float(np.dot(np.abs(cdf_gap), np.diff(x)))


def lipschitz_constant(cloud: PointCloud, values) -> float:
    """Largest difference quotient of ``values`` over distinct cloud points."""
    from .functions import grid_lipschitz
    return grid_lipschitz(cloud.points, np.asarray(values, dtype=float).reshape(-1))


def mcshane_extend(cloud: PointCloud, values, lipschitz: float, x):
    """``sup_y ( f(y) - L d(x, y) )``: extends ``f`` off ``cloud`` with the same constant.

    ``x`` may be a single point or a ``(..., d)`` array; the result has the
    matching leading shape.
    """
    values = np.asarray(values, dtype=float).reshape(-1)
    if len(values) != len(cloud):
        raise ValueError(f"{len(values)} values for {len(cloud)} points")
    empirical = lipschitz_constant(cloud, values)
    if empirical > lipschitz * (1 + 1e-12) + 1e-15:
        raise ValueError(f"declared L={lipschitz} is below the grid constant {empirical}")
    x = np.asarray(x, dtype=float)
    d = cloud.dim
    single = x.ndim <= 1 and (x.size == d)
    flat = x.reshape(-1, d)
    out = np.empty(len(flat))
    rows = max(1, (1 << 20) // len(cloud))
    for i in range(0, len(flat), rows):
        dist = pairwise(flat[i:i + rows], cloud.points)
        block = (values[None, :] - lipschitz * dist).max(axis=1)
        # on Y the sup is attained at y itself; tight constraints may round above it
        hit = dist == 0.0
        on_cloud = hit.any(axis=1)
        block[on_cloud] = values[hit[on_cloud].argmax(axis=1)]
        out[i:i + rows] = block
    if single:
        return float(out[0])
    return out.reshape(x.shape[:-1]) if x.ndim > 1 else out


def restrict(f, cloud: PointCloud) -> np.ndarray:
    """Values of ``f`` on the cloud."""
    return np.asarray(f(cloud.points), dtype=float)


def embed(mu: DiscreteMeasure, ground: PointCloud, tol: float = 1e-12) -> DiscreteMeasure:
    """View a measure carried by ``ground`` as a measure on the ambient space."""
    if mu.dim != ground.dim:
        raise DimensionError("measure and ground set differ in dimension")
    d = pairwise(mu.points, ground.points).min(axis=1)
    if np.any(d > tol):
        k = int(np.argmax(d))
        raise ValueError(f"atom {mu.points[k].tolist()} lies outside the ground set")
    return DiscreteMeasure(mu.points.copy(), mu.weights.copy())


def measure_on(ground: PointCloud, weights) -> DiscreteMeasure:
    """Measure on ``ground`` from a weight per ground point (zeros dropped)."""
    w = np.asarray(weights, dtype=float).reshape(-1)
    keep = w > 0
    return DiscreteMeasure(ground.points[keep], w[keep])


def hutchinson_on(ground: PointCloud, mu1: DiscreteMeasure, mu2: DiscreteMeasure) -> float:
    """Supremum over 1-Lipschitz functions *on the ground set only*, as a linear program.

    Maximise ``sum_y (mu1{y} - mu2{y}) f(y)`` subject to
    ``f(y) - f(y') <= d(y, y')`` with ``f(y_0) = 0``. This solves the function
    side directly and shares nothing with the network-simplex route.
    """
    from scipy.optimize import linprog

    pts = ground.points
    n = len(pts)
    diff = _weights_on(ground, mu1) - _weights_on(ground, mu2)
    if n == 1:
        return 0.0
    D = pairwise(pts, pts)
    I, J = np.nonzero(~np.eye(n, dtype=bool))
    A = np.zeros((len(I), n))
    A[np.arange(len(I)), I] = 1.0
    A[np.arange(len(I)), J] = -1.0
    bounds = [(0.0, 0.0)] + [(None, None)] * (n - 1)
    res = linprog(-diff, A_ub=A, b_ub=D[I, J], bounds=bounds, method="highs",
                  options={"primal_feasibility_tolerance": 1e-10,
                           "dual_feasibility_tolerance": 1e-10})
    if res.status != 0:
        raise RuntimeError(f"linear program failed: {res.message}")
    return float(abs(np.dot(diff, res.x)))


def _weights_on(ground: PointCloud, mu: DiscreteMeasure) -> np.ndarray:
    d = pairwise(mu.points, ground.points)
    idx = d.argmin(axis=1)
    if np.any(d[np.arange(len(idx)), idx] > 1e-12):
        raise ValueError("measure has atoms outside the ground set")
    return np.bincount(idx, weights=mu.weights, minlength=len(ground))


