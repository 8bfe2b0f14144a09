"""Exhaustive ground truth for tiny instances.

``brute_force`` tries every assignment of atoms to at most k groups, with the
p-th mean of each group solved tightly.  ``grid_lower_bound`` gives a
certified lower bound for the minimal p-th mean value of one cell from a
grid scan plus a Lipschitz slack, independent of the descent solver.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from . import pmean as pm
from .norms import NormDescriptor
from .space import MeasureSpace

ORACLE_TOL = 1e-11
MAX_ATOMS = 12
MAX_K = 4
MAX_ASSIGNMENTS = 17_000_000


@dataclass
class OracleResult:
    cost: float
    partition: list  # list of atom-index lists, one per nonempty group
    centers: np.ndarray
    enumerated: int

    def to_json_dict(self) -> dict:
        return {
            "cost": self.cost,
            "partition": [[int(i) for i in g] for g in self.partition],
            "centers": [[float(x) for x in c] for c in self.centers],
            "enumerated": self.enumerated,
        }


def brute_force(space: MeasureSpace, norm: NormDescriptor, p: float, k: int,
                max_atoms: int = MAX_ATOMS, max_k: int = MAX_K,
                max_assignments: int = MAX_ASSIGNMENTS) -> OracleResult:
    """Global optimum of ``||f - g||_p`` over simple functions with at most k values.

    On an infinite-mass space group 0 is pinned to the center 0; the other
    groups get their p-th means.
    """
    n = space.n
    if p == np.inf:
        raise ValueError("brute_force supports p < inf only")
    if not p >= 1:
        raise ValueError(f"p must be in [1, inf), got {p}")
    if k < 1:
        raise ValueError("k must be at least 1")
    if n < 1:
        raise ValueError("space has no atoms")
    if n > max_atoms or k > max_k:
        raise ValueError(f"instance too large for the oracle: n={n} (max {max_atoms}), k={k} (max {max_k})")
    pinned = space.infinite_mass
    free = n if pinned else n - 1
    total = k**free
    if total > max_assignments:
        raise ValueError(f"instance too large for the oracle: {total} assignments (max {max_assignments})")

    w = space.weights
    vals = space.values
    zero_terms = w * norm.eval(vals) ** p
    cache = {}

    def group(mask):
        # (p-th power value, center) of a free group
        hit = cache.get(mask)
        if hit is None:
            cell = [i for i in range(n) if mask >> i & 1]
            res = pm.solve_pmean(space, cell, norm, p, tol=ORACLE_TOL)
            hit = (pm.m_p_value(space, cell, norm, p, res.point), res.point)
            cache[mask] = hit
        return hit

    best = (np.inf, None)
    for tail in itertools.product(range(k), repeat=free):
        labels = tail if pinned else (0,) + tail
        masks = [0] * k
        for i, g in enumerate(labels):
            masks[g] |= 1 << i
        total_p = 0.0
        for g, mask in enumerate(masks):
            if not mask:
                continue
            if pinned and g == 0:
                total_p += sum(zero_terms[i] for i in range(n) if mask >> i & 1)
            else:
                total_p += group(mask)[0]
        if total_p < best[0]:
            best = (total_p, labels)

    labels = best[1]
    partition, centers = [], []
    for g in range(k):
        members = [i for i, lab in enumerate(labels) if lab == g]
        if pinned and g == 0:
            partition.append(members)
            centers.append(np.zeros(space.dim))
        elif members:
            partition.append(members)
            centers.append(group(sum(1 << i for i in members))[1])
    return OracleResult(float(max(best[0], 0.0)) ** (1.0 / p), partition, np.array(centers), total)


def _coercivity_radius(w, f, norm, p):
    # every minimizer x satisfies ||x|| mass^{1/p} <= M(x)^{1/p} + ||f 1_A||_p <= M(y)^{1/p} + ||f 1_A||_p
    mass = w.sum()
    y = (w[:, None] * f).sum(axis=0) / mass
    m_y = float(np.sum(w * norm.eval(f - y) ** p))
    f_norm = float(np.sum(w * norm.eval(f) ** p)) ** (1.0 / p)
    return (m_y ** (1.0 / p) + f_norm) / mass ** (1.0 / p)


def grid_lower_bound(space: MeasureSpace, cell, norm: NormDescriptor, p: float, box, resolution: int) -> float:
    """Certified lower bound for ``min_x M_p(x)`` over the cell.

    ``box`` is ``(lo, hi)`` with one entry per coordinate and must contain
    every possible minimizer; this is checked through the coercivity radius
    and the box is rejected otherwise.  ``resolution`` is the number of grid
    points per axis.  The bound is the smallest grid value minus the
    Lipschitz constant of ``M_p`` on the box times the covering radius of the
    grid.
    """
    if p == np.inf or not p >= 1:
        raise ValueError(f"grid_lower_bound needs 1 <= p < inf, got {p}")
    resolution = int(resolution)
    if resolution < 2:
        raise ValueError("resolution must be at least 2")
    idx = np.asarray(cell, dtype=np.int64).reshape(-1)
    if idx.size == 0:
        raise ValueError("empty cell")
    w, f = space.weights[idx], space.values[idx]
    d = space.dim
    lo, hi = (np.asarray(b, dtype=float).reshape(-1) for b in box)
    if lo.shape != (d,) or hi.shape != (d,) or np.any(hi < lo):
        raise ValueError("box must be (lo, hi) with lo <= hi coordinatewise")

    # the set of minimizers lies in the norm ball of radius rho about 0;
    # |x_i| <= rho / ||e_i|| bounds each coordinate of that ball
    rho = _coercivity_radius(w, f, norm, p)
    unit = norm.eval(np.eye(d))
    reach = rho / unit
    if np.any(lo > -reach) or np.any(hi < reach):
        raise ValueError(f"box does not contain the coercivity ball (coordinate reach {reach.tolist()})")

    axes = [np.linspace(lo[i], hi[i], resolution) for i in range(d)]
    grid = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, d)
    vals = np.empty(grid.shape[0])
    for start in range(0, grid.shape[0], 4096):
        chunk = grid[start:start + 4096]
        vals[start:start + 4096] = (w[None, :] * norm.eval(chunk[:, None, :] - f[None, :, :]) ** p).sum(axis=1)

    # any box point is within half a grid cell of a grid point (coordinatewise)
    half = (hi - lo) / (2 * (resolution - 1))
    delta = float(norm.eval(half))
    center = (lo + hi) / 2
    box_radius = float(norm.eval((hi - lo) / 2))
    spread = norm.eval(f - center) + box_radius
    lipschitz = p * float(np.sum(w * spread ** (p - 1)))
    return max(0.0, float(vals.min()) - lipschitz * delta)
