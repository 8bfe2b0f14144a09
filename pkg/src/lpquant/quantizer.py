"""Best approximation by simple functions with at most k values.

Lloyd-style alternation: Voronoi projection of the atoms, then a p-th mean
per cell.  Neither half-step can raise the cost, so each restart produces a
nonincreasing trace.  Empty cells are refilled with the atom carrying the
largest share of the error, and spaces of infinite mass keep one center
pinned at 0 for the whole run.
"""

from __future__ import annotations

import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import pmean as pm
from .norms import NormDescriptor
from .simplefn import SimpleFunction, cost, reduce, residual_norms
from .space import MeasureSpace
from .voronoi import DEFAULT_TIE_TOL, VoronoiDiagram, boundary_mass, voronoi_residual

log = logging.getLogger(__name__)


class NoSplitError(ValueError):
    """Every atom already equals its center: f takes at most as many values as h."""


@dataclass(frozen=True)
class QuantizerConfig:
    p: float = 2.0
    k: int = 2
    restarts: int = 10
    seed: int = 0
    tol: float = 1e-9
    max_iter: int = 1000
    tie_tol: float = DEFAULT_TIE_TOL
    jobs: int = 1

    def __post_init__(self):
        if not (self.p >= 1):
            raise ValueError(f"p must be in [1, inf], got {self.p}")
        for name in ("k", "restarts", "max_iter", "jobs"):
            v = getattr(self, name)
            if int(v) != v or v < 1:
                raise ValueError(f"{name} must be a positive integer, got {v!r}")
        if int(self.seed) != self.seed or self.seed < 0:
            raise ValueError(f"seed must be an unsigned integer, got {self.seed!r}")
        if not self.tol > 0:
            raise ValueError(f"tol must be positive, got {self.tol}")
        if not self.tie_tol >= 0:
            raise ValueError(f"tie_tol must be nonnegative, got {self.tie_tol}")

    def to_json_dict(self) -> dict:
        return {
            "p": "inf" if self.p == np.inf else self.p,
            "k": self.k,
            "restarts": self.restarts,
            "seed": self.seed,
            "tol": self.tol,
            "max_iter": self.max_iter,
            "tie_tol": self.tie_tol,
            "jobs": self.jobs,
        }


@dataclass(frozen=True)
class Certificate:
    voronoi_residual: float
    pmean_eps: list
    boundary_mass: Optional[float]
    degree: int

    def to_json_dict(self) -> dict:
        return {
            "voronoi_residual": self.voronoi_residual,
            "pmean_eps": list(self.pmean_eps),
            "boundary_mass": self.boundary_mass,
            "degree": self.degree,
        }


@dataclass
class QuantizeReport:
    best: SimpleFunction
    cost: float
    certificate: Certificate
    trace: list  # per restart: [(iteration, cost), ...]
    seed_used: int
    best_restart: int = 0
    restart_costs: list = field(default_factory=list)

    def to_json_dict(self) -> dict:
        return {
            "best": self.best.to_json_dict(),
            "cost": self.cost,
            "certificate": self.certificate.to_json_dict(),
            "trace": [[[it, c] for it, c in run] for run in self.trace],
            "seed_used": self.seed_used,
            "best_restart": self.best_restart,
            "restart_costs": list(self.restart_costs),
        }


@dataclass
class TraceResult:
    steps: list  # [(centers, cost), ...]
    displacements: list
    flagged: bool


# ---------------------------------------------------------------------------


def reseed_split(space: MeasureSpace, norm: NormDescriptor, p: float, current: SimpleFunction) -> np.ndarray:
    """Value of the atom with the largest ``w_a ||f_a - x_c(a)||^p``.

    Adding it as a center strictly lowers the cost when that maximum is
    positive.
    """
    r = residual_norms(space, norm, current)
    score = r if p == np.inf else space.weights * r**p
    i = int(np.argmax(score))
    if not score[i] > 0:
        raise NoSplitError("every atom coincides with its center; no split possible")
    return space.values[i].copy()


def _init_centers(space, norm, p, k, rng, pinned):
    vals, w = space.values, space.weights
    if pinned:
        chosen = [np.zeros(space.dim)]
    else:
        chosen = [vals[rng.choice(space.n, p=w / w.sum())].copy()]
    dist = norm.eval(vals - chosen[0])
    while len(chosen) < k:
        score = dist if p == np.inf else w * dist**p
        total = score.sum()
        if not total > 0:
            break
        i = rng.choice(space.n, p=score / total)
        chosen.append(vals[i].copy())
        dist = np.minimum(dist, norm.eval(vals - vals[i]))
    return np.array(chosen)


class _CellSolver:
    """Cold-started, memoized per-cell means; results depend only on the cell."""

    def __init__(self, space, norm, p, tol):
        self.space, self.norm, self.p, self.tol = space, norm, p, tol
        self.cache = {}

    def __call__(self, cell) -> pm.PMeanResult:
        key = tuple(int(i) for i in cell)
        res = self.cache.get(key)
        if res is None:
            if self.p == np.inf:
                res = pm.chebyshev_center(self.space, key, self.norm, tol=self.tol)
            else:
                res = pm.solve_pmean(self.space, key, self.norm, self.p, tol=self.tol)
            self.cache[key] = res
        return res


def _project(space, norm, centers, tie_tol):
    return VoronoiDiagram(centers, norm, tie_tol).assign_all(space.values)


def _fill_and_project(space, norm, p, centers, pinned, tie_tol):
    """Project; refill empty (or duplicated) cells by splitting. Returns (centers, assignment)."""
    bg = 0 if pinned else None
    attempts = 2 * len(centers) + 2
    for attempt in range(attempts):
        # a center too close to an earlier one is treated as an empty cell
        alive = []
        for j in range(len(centers)):
            clash = any(np.array_equal(centers[j], centers[i]) for i in alive)
            if not clash:
                alive.append(j)
        sub = centers[alive]
        try:
            assign_sub = _project(space, norm, sub, tie_tol)
        except ValueError:
            # near-duplicates beyond exact equality: keep the lowest index of each cluster
            keep = [alive[0]]
            for j in alive[1:]:
                try:
                    VoronoiDiagram(centers[keep + [j]], norm, tie_tol)
                    keep.append(j)
                except ValueError:
                    pass
            alive = keep
            sub = centers[alive]
            assign_sub = _project(space, norm, sub, tie_tol)
        assign = np.asarray(alive)[assign_sub]
        used = set(assign.tolist())
        empty = [j for j in range(len(centers)) if j not in used and not (pinned and j == 0)]
        if not empty:
            return centers, assign
        h = SimpleFunction(sub, assign_sub, bg)
        try:
            x = reseed_split(space, norm, p, h)
        except NoSplitError:
            x = None
        if x is None or attempt == attempts - 1 or any(np.array_equal(x, c) for c in centers):
            # nothing left to split: settle for fewer values
            keep = [j for j in range(len(centers)) if j not in empty]
            remap = {old: new for new, old in enumerate(keep)}
            return centers[keep], np.array([remap[a] for a in assign.tolist()], dtype=np.int64)
        centers = centers.copy()
        centers[empty[0]] = x


def _run_restart(space, norm, cfg, restart, solver, tail=0):
    """One seeded alternation run. Returns (h, trace, center history)."""
    rng = np.random.default_rng(cfg.seed + restart)
    pinned = space.infinite_mass
    bg = 0 if pinned else None
    p = cfg.p
    centers = _init_centers(space, norm, p, cfg.k, rng, pinned)
    centers, assign = _fill_and_project(space, norm, p, centers, pinned, cfg.tie_tol)
    current = cost(space, norm, p, SimpleFunction(centers, assign, bg))
    trace = [(0, current)]
    history = [centers.copy()]
    extra = 0
    converged = False
    for it in range(1, cfg.max_iter + 1):
        new_centers = centers.copy()
        for j in range(len(centers)):
            if pinned and j == 0:
                continue
            cell = np.flatnonzero(assign == j)
            res = solver(cell)
            if pm.m_p_value(space, cell, norm, p, res.point) <= pm.m_p_value(space, cell, norm, p, centers[j]):
                new_centers[j] = res.point
        h = SimpleFunction(new_centers, assign, bg)
        new_cost = cost(space, norm, p, h)
        centers = new_centers
        small_gain = current - new_cost <= cfg.tol * current
        current = new_cost
        trace.append((it, current))
        history.append(centers.copy())
        proj_centers, new_assign = _fill_and_project(space, norm, p, centers, pinned, cfg.tie_tol)
        same_centers = proj_centers.shape == centers.shape and np.array_equal(proj_centers, centers)
        if same_centers and np.array_equal(new_assign, assign):
            stable = True
        elif same_centers and small_gain and voronoi_residual(space, norm, h, cfg.tie_tol) == 0:
            # only tie flips remain; the current partition is already a Voronoi fixed point
            stable = True
        else:
            stable = False
            centers, assign = proj_centers, new_assign
            current = cost(space, norm, p, SimpleFunction(centers, assign, bg))
        if converged:
            # extra alternation steps past the stop rule, for the center trace
            extra += 1
            if extra >= tail:
                break
        elif stable:
            converged = True
            if tail == 0:
                break
    h = SimpleFunction(centers, assign, bg)
    return reduce(space, h), trace, history


def _restart_worker(args):
    space, norm, cfg, restart = args
    solver = _CellSolver(space, norm, cfg.p, cfg.tol)
    h, trace, _ = _run_restart(space, norm, cfg, restart, solver)
    return h, trace


def certify(space: MeasureSpace, norm: NormDescriptor, config: QuantizerConfig, g: SimpleFunction) -> Certificate:
    """Structural residuals of ``g``; reports only, never raises on failure."""
    p = config.p
    resid = voronoi_residual(space, norm, g, config.tie_tol)
    eps = []
    for j, cell in enumerate(g.cells()):
        if space.infinite_mass and j == g.background:
            # infinite mass: any nonzero value has infinite cost, so 0 is the exact mean
            eps.append(0.0)
        elif cell.size == 0:
            eps.append(float("nan"))
        else:
            eps.append(float(pm.mean_certificate(space, cell, norm, p, g.centers[j])))
    bmass = None
    if p != np.inf:
        bmass = boundary_mass(space, VoronoiDiagram(g.centers, norm, config.tie_tol))
    return Certificate(resid, eps, bmass, reduce(space, g).k)


def lloyd(space: MeasureSpace, norm: NormDescriptor, config: QuantizerConfig) -> QuantizeReport:
    """Multi-restart alternation; the best restart (ties to the lowest index) is reported."""
    if space.n == 0:
        raise ValueError("space has no atoms")
    if norm.dim != space.dim:
        raise ValueError("norm dimension does not match the space")
    args = [(space, norm, config, r) for r in range(config.restarts)]
    if config.jobs > 1 and config.restarts > 1:
        with ProcessPoolExecutor(max_workers=config.jobs) as ex:
            results = list(ex.map(_restart_worker, args))
    else:
        solver = _CellSolver(space, norm, config.p, config.tol)
        results = [_run_restart(space, norm, config, r, solver)[:2] for r in range(config.restarts)]
    costs = [cost(space, norm, config.p, h) for h, _ in results]
    best = int(np.argmin(costs))
    h = results[best][0]
    return QuantizeReport(
        best=h,
        cost=costs[best],
        certificate=certify(space, norm, config, h),
        trace=[t for _, t in results],
        seed_used=config.seed,
        best_restart=best,
        restart_costs=costs,
    )


def minimizing_trace(space: MeasureSpace, norm: NormDescriptor, config: QuantizerConfig,
                     tail: int = 10) -> TraceResult:
    """Center iterates of the best restart, continued ``tail`` steps past convergence.

    ``flagged`` is set when the largest center displacement over the last
    ``tail`` steps exceeds ``100 * tol`` (relative to the data scale).
    """
    report = lloyd(space, norm, config)
    solver = _CellSolver(space, norm, config.p, config.tol)
    h, trace, history = _run_restart(space, norm, config, report.best_restart, solver, tail=tail)
    steps = [(c, t[1]) for c, t in zip(history, trace)]
    disp = []
    for a, b in zip(history[:-1], history[1:]):
        if a.shape != b.shape:
            disp.append(float("inf"))
        else:
            disp.append(float(np.max(norm.eval(b - a))))
    scale = max(1.0, float(np.max(norm.eval(space.values))))
    last = disp[-tail:] if disp else [0.0]
    flagged = max(last) > 100 * config.tol * scale
    if flagged:
        log.warning("center iterates still moving: displacement %g over the last %d steps", max(last), tail)
    return TraceResult(steps, disp, flagged)
