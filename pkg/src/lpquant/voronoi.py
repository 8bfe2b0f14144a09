"""Voronoi cells of a finite center set, restricted to atom memberships.

Cells are never built as geometric sets.  An atom belongs to the disjoint
cell ``D_j`` where ``j`` is the lowest index whose distance is within the
tie tolerance of the minimum, i.e. ``D_1 = V_1`` and
``D_j = V_j minus (D_1 u ... u D_{j-1})``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .norms import NormDescriptor
from .simplefn import SimpleFunction, _validate
from .space import MeasureSpace

DEFAULT_TIE_TOL = 1e-9


@dataclass(frozen=True, eq=False)
class VoronoiDiagram:
    """``tie_tol`` is relative to the largest pairwise center distance."""

    centers: np.ndarray
    norm: NormDescriptor
    tie_tol: float = DEFAULT_TIE_TOL
    abs_tol: float = field(init=False)

    def __post_init__(self):
        c = np.array(self.centers, dtype=float)
        if c.ndim == 1:
            c = c.reshape(-1, 1)
        if c.shape[0] < 1:
            raise ValueError("a diagram needs at least one center")
        if not self.tie_tol >= 0:
            raise ValueError("tie_tol must be nonnegative")
        c.flags.writeable = False
        object.__setattr__(self, "centers", c)
        sep = self.pairwise()
        scale = float(np.max(sep)) if c.shape[0] > 1 else 1.0
        object.__setattr__(self, "abs_tol", self.tie_tol * scale)
        iu = np.triu_indices(c.shape[0], 1)
        if iu[0].size and np.min(sep[iu]) <= self.abs_tol:
            raise ValueError("diagram centers must be pairwise distinct beyond the tie tolerance")

    def pairwise(self) -> np.ndarray:
        return self.norm.eval(self.centers[:, None, :] - self.centers[None, :, :])

    def distances(self, points) -> np.ndarray:
        """(n, k) matrix of ``||point - x_i||``."""
        points = np.atleast_2d(np.asarray(points, dtype=float))
        return self.norm.eval(points[:, None, :] - self.centers[None, :, :])

    def assign_all(self, points) -> np.ndarray:
        dist = self.distances(points)
        near = dist <= dist.min(axis=1, keepdims=True) + self.abs_tol
        return np.argmax(near, axis=1)


def assign(diagram: VoronoiDiagram, point, norm: NormDescriptor = None) -> int:
    if norm is not None and norm != diagram.norm:
        diagram = VoronoiDiagram(diagram.centers, norm, diagram.tie_tol)
    return int(diagram.assign_all(np.asarray(point, dtype=float).reshape(1, -1))[0])


def boundary_mass(space: MeasureSpace, diagram: VoronoiDiagram, norm: NormDescriptor = None,
                  tol: float = None) -> float:
    """Mass of atoms whose two smallest center distances differ by at most ``tol``.

    ``tol`` is absolute; None means the diagram's tie tolerance.
    """
    if norm is not None and norm != diagram.norm:
        diagram = VoronoiDiagram(diagram.centers, norm, diagram.tie_tol)
    if diagram.centers.shape[0] < 2:
        return 0.0
    tol = diagram.abs_tol if tol is None else tol
    dist = np.sort(diagram.distances(space.values), axis=1)
    on_boundary = dist[:, 1] - dist[:, 0] <= tol
    return float(space.weights[on_boundary].sum())


def project(space: MeasureSpace, norm: NormDescriptor, p: float, h: SimpleFunction,
            tie_tol: float = DEFAULT_TIE_TOL) -> SimpleFunction:
    """Keep the centers of ``h`` and move every atom to its Voronoi cell.

    Never increases ``cost(space, norm, p, .)``.  The background keeps its
    center.
    """
    _validate(space, h)
    diagram = VoronoiDiagram(h.centers, norm, tie_tol)
    return SimpleFunction(h.centers, diagram.assign_all(space.values), h.background)


def voronoi_residual(space: MeasureSpace, norm: NormDescriptor, h: SimpleFunction,
                     tie_tol: float = DEFAULT_TIE_TOL) -> float:
    """Mass-weighted excess ``max(0, ||f_a - x_c(a)|| - min_i ||f_a - x_i|| - tol)``.

    Zero exactly when ``h`` is in f-Voronoi form up to ties.
    """
    _validate(space, h)
    diagram = VoronoiDiagram(h.centers, norm, tie_tol)
    dist = diagram.distances(space.values)
    own = dist[np.arange(space.n), h.assignment]
    excess = np.maximum(0.0, own - dist.min(axis=1) - diagram.abs_tol)
    return float(space.weights @ excess)


def boundary_reassign(space: MeasureSpace, norm: NormDescriptor, p: float, h: SimpleFunction, target_zone,
                      tie_tol: float = DEFAULT_TIE_TOL) -> SimpleFunction:
    """Rebuild the partition with the zone ``Z`` of boundary atoms of the first cell.

    ``D_1(Z) = Z u int(V_1)`` and ``D_i(Z) = V_i minus (D_1(Z) u ... u D_{i-1}(Z))``.
    Atoms on the boundary of ``V_1`` outside ``Z`` go to the lowest other cell
    that contains them.  The cost is unchanged because only tied atoms move.
    """
    _validate(space, h)
    diagram = VoronoiDiagram(h.centers, norm, tie_tol)
    tol = diagram.abs_tol
    if voronoi_residual(space, norm, h, tie_tol) > 0:
        raise ValueError("boundary_reassign needs h in f-Voronoi form")
    dist = diagram.distances(space.values)
    dmin = dist.min(axis=1, keepdims=True)
    in_v = dist <= dmin + tol
    tied_with_first = in_v[:, 0] & (in_v[:, 1:].any(axis=1) if h.k > 1 else False)
    zone = np.zeros(space.n, dtype=bool)
    zone_idx = np.asarray(list(target_zone), dtype=np.int64)
    zone[zone_idx] = True
    bad = zone & ~tied_with_first
    if bad.any():
        raise ValueError(f"zone atoms {np.flatnonzero(bad).tolist()} are not on the boundary of the first cell")
    assign = np.argmax(in_v, axis=1)
    released = tied_with_first & ~zone
    if released.any():
        # lowest index i >= 1 whose closed cell holds the atom
        assign[released] = 1 + np.argmax(in_v[released, 1:], axis=1)
    assign[zone] = 0
    return SimpleFunction(h.centers, assign, h.background)
