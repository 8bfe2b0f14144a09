"""p-th means of a cell: minimizers of ``M_p(x) = sum_{a in cell} w_a ||f_a - x||^p``.

``M_p`` is convex, coercive and continuous, so every stationary point is a
global minimizer.  Each solve returns a certified ``eps``: a computable
upper bound on ``M_p(x) - inf M_p``.

The certificate comes from one linearization step.  For a (sub)gradient
``g`` at ``x`` and any minimizer ``y``::

    inf M_p = M_p(y) >= M_p(x) - ||g||_* ||y - x||
    ||y - x|| mass^(1/p) <= M_p(x)^(1/p) + M_p(y)^(1/p) <= 2 M_p(x)^(1/p)

so ``eps = ||g||_* * 2 (M_p(x) / mass)^(1/p)``.  For ``p = 1`` atoms
sitting exactly at ``x`` contribute the dual ball ``W * B_*`` to the
subdifferential and the minimal-norm subgradient is used.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq, minimize, nnls

from .norms import NormDescriptor
from .space import MeasureSpace

log = logging.getLogger(__name__)

DEFAULT_TOL = 1e-9
DEFAULT_MAX_ITER = 10_000


@dataclass(frozen=True, eq=False)
class PMeanResult:
    point: np.ndarray
    value: float
    grad_norm: float
    eps_certificate: float
    iterations: int
    converged: bool = True

    def to_json_dict(self) -> dict:
        return {
            "point": [float(x) for x in self.point],
            "value": self.value,
            "grad_norm": self.grad_norm,
            "eps_certificate": self.eps_certificate,
            "iterations": self.iterations,
            "converged": self.converged,
        }


def _cell(space: MeasureSpace, cell):
    idx = np.asarray(cell, dtype=np.int64).reshape(-1)
    if idx.size == 0:
        raise ValueError("cell is empty")
    return space.weights[idx], space.values[idx]


def _objective(w, f, norm, p, x) -> float:
    r = norm.eval(f - x)
    if p == np.inf:
        return float(np.max(r))
    return float(w @ r**p)


def _gradient(w, f, norm, p, x):
    """Gradient of M_p at x.  Atoms located at x contribute 0."""
    z = f - x
    r = norm.eval(z)
    coef = w * p * r ** (p - 1.0)
    return -(coef @ norm.gradient(z))


def _certify(w, f, norm, p, x, value):
    """(eps, dual norm of the minimal subgradient) at x.

    Two lower bounds on inf M_p are combined.  The global one linearizes
    every term.  The local one keeps the term of the atom group nearest to
    x exact, ``W ||f_b - y||^p``, and linearizes only the rest; minimizing
    ``W s^p - G s`` over s >= 0 gives the closed form below.  It is sharp
    when the minimizer sits on (or within round-off of) an atom.
    """
    z = f - x
    r = norm.eval(z)
    coef = w * p * r ** (p - 1.0)
    terms = coef[:, None] * norm.gradient(z)
    g = -terms.sum(axis=0)
    gnorm = float(norm.dual_eval(g))
    if p == 1:
        gnorm = max(0.0, gnorm - float(w[r == 0].sum()))
    if value <= 0:
        return 0.0, gnorm
    radius = 2.0 * (value / float(w.sum())) ** (1.0 / p)
    eps = min(value, gnorm * radius)

    b = int(np.argmin(r))
    group = np.all(f == f[b], axis=1)
    W = float(w[group].sum())
    g_rest = -terms[~group].sum(axis=0)
    G = float(norm.dual_eval(g_rest))
    rest = float(w[~group] @ r[~group] ** p)
    if p == 1:
        drop = 0.0 if G <= W else np.inf
    else:
        with np.errstate(over="ignore"):
            drop = (1.0 - 1.0 / p) * G * (G / (p * W)) ** (1.0 / (p - 1.0))
    lower = rest + float(g_rest @ (f[b] - x)) - drop
    if np.isfinite(lower):
        eps = min(eps, max(0.0, value - lower))
    return eps, gnorm


def m_p_value(space: MeasureSpace, cell, norm: NormDescriptor, p: float, x) -> float:
    w, f = _cell(space, cell)
    if not (p >= 1):
        raise ValueError(f"p must be in [1, inf], got {p}")
    return _objective(w, f, norm, p, np.asarray(x, dtype=float))


def mean_certificate(space: MeasureSpace, cell, norm: NormDescriptor, p: float, x) -> float:
    """Certified eps such that ``x`` is an eps-p-th mean of the cell."""
    w, f = _cell(space, cell)
    x = np.asarray(x, dtype=float)
    if p == np.inf:
        return _chebyshev_certificate(f, norm, x)[0]
    return _certify(w, f, norm, p, x, _objective(w, f, norm, p, x))[0]


def gradient_condition(space: MeasureSpace, cell, norm: NormDescriptor, p: float, x, v) -> float:
    """Directional derivative of ``M_p`` at ``x`` along ``v`` (1 < p < inf)."""
    if not 1 < p < np.inf:
        raise ValueError(f"gradient condition needs 1 < p < inf, got {p}")
    w, f = _cell(space, cell)
    return float(_gradient(w, f, norm, p, np.asarray(x, dtype=float)) @ np.asarray(v, dtype=float))


# ---------------------------------------------------------------------------
# solvers
# ---------------------------------------------------------------------------


def _weighted_median(w, f1):
    order = np.argsort(f1, kind="stable")
    cw = np.cumsum(w[order])
    j = int(np.searchsorted(cw, 0.5 * cw[-1]))
    return f1[order][min(j, len(order) - 1)]


def _root_1d(w, f1, p):
    # every norm on R is c|.|; the minimizer is the root of the increasing derivative
    def slope(x):
        z = x - f1
        return float(w @ (np.sign(z) * np.abs(z) ** (p - 1.0)))

    lo, hi = float(f1.min()), float(f1.max())
    if slope(lo) >= 0:
        return lo
    if slope(hi) <= 0:
        return hi
    return brentq(slope, lo, hi, xtol=1e-300, rtol=4 * np.finfo(float).eps, maxiter=500)


def _nearest_atom_candidate(w, f, norm, p, tol):
    """For p = 1 the minimizer often sits on an atom; test them all."""
    best = None
    for v in np.unique(f, axis=0):
        val = _objective(w, f, norm, p, v)
        eps, _ = _certify(w, f, norm, p, v, val)
        if eps <= tol * (1.0 + val) and (best is None or val < best[1]):
            best = (v, val)
    return best


def _fd_hessian(w, f, norm, p, x, h):
    d = x.shape[0]
    H = np.empty((d, d))
    for j in range(d):
        e = np.zeros(d)
        e[j] = h
        H[:, j] = (_gradient(w, f, norm, p, x + e) - _gradient(w, f, norm, p, x - e)) / (2 * h)
    return 0.5 * (H + H.T)


def _newton_direction(w, f, norm, p, x, g, spread):
    near = float(np.min(np.linalg.norm(f - x, axis=1)))
    if near <= 0:
        return None
    H = _fd_hessian(w, f, norm, p, x, 1e-6 * min(near, spread))
    try:
        nd = -np.linalg.solve(H, g)
    except np.linalg.LinAlgError:
        return None
    if np.all(np.isfinite(nd)) and nd @ g < 0:
        return nd
    return None


def _polish(w, f, norm, p, x, fx, g, spread, steps=3):
    """Full Newton steps past certification.

    The certificate bounds the objective gap, which only pins the point to
    about the square root of the tolerance; a few more Newton steps bring
    the point itself to round-off.  A step is kept only if it lowers the
    certificate without raising the objective beyond round-off.
    """
    eps = _certify(w, f, norm, p, x, fx)[0]
    noise = 8 * np.finfo(float).eps
    for _ in range(steps):
        if eps == 0.0:
            break
        nd = _newton_direction(w, f, norm, p, x, g, spread)
        if nd is None:
            break
        xn = x + nd
        fn = _objective(w, f, norm, p, xn)
        en = _certify(w, f, norm, p, xn, fn)[0]
        if not (en < eps and fn <= fx * (1 + noise)):
            break
        x, fx, eps, g = xn, fn, en, _gradient(w, f, norm, p, xn)
    return x


def _descend(w, f, norm, p, x, tol, max_iter, first_order_iters=10):
    """Minimize M_p from x.

    Gradient descent with Armijo backtracking and Barzilai-Borwein trial
    steps; after ``first_order_iters`` uncertified iterations the direction
    switches to a damped Newton step built from finite differences of the
    analytic gradient.  Once objective differences drop to round-off, a step
    is accepted when it lowers the dual gradient norm instead.
    """
    fx = _objective(w, f, norm, p, x)
    g = _gradient(w, f, norm, p, x)
    mass = float(w.sum())
    spread = float(np.sqrt((w @ norm.eval(f - x) ** 2) / mass)) or 1.0
    t = spread ** (2.0 - p) / (p * mass)
    noise = 8 * np.finfo(float).eps
    for it in range(max_iter):
        eps, gdual = _certify(w, f, norm, p, x, fx)
        if eps <= tol * (1.0 + fx):
            return _polish(w, f, norm, p, x, fx, g, spread), it, True
        gg = float(g @ g)
        if gg == 0.0:
            return x, it, False
        direction, step = -g, t
        if it >= first_order_iters:
            nd = _newton_direction(w, f, norm, p, x, g, spread)
            if nd is not None:
                direction, step = nd, 1.0
        slope = float(direction @ g)
        while True:
            xn = x + step * direction
            fn = _objective(w, f, norm, p, xn)
            if fn <= fx + 1e-4 * step * slope:
                gn = _gradient(w, f, norm, p, xn)
                break
            if abs(fn - fx) <= noise * fx:
                gn = _gradient(w, f, norm, p, xn)
                if norm.dual_eval(gn) < gdual:
                    break
            step *= 0.5
            if step * np.sqrt(float(direction @ direction)) <= 1e-17 * (spread + float(np.max(np.abs(x)))):
                return x, it, False
        s, y = xn - x, gn - g
        sy = float(s @ y)
        t = float(s @ s) / sy if sy > 0 else 2.0 * t
        x, fx, g = xn, fn, gn
    eps, _ = _certify(w, f, norm, p, x, fx)
    return x, max_iter, eps <= tol * (1.0 + fx)


def solve_pmean(space: MeasureSpace, cell, norm: NormDescriptor, p: float, tol: float = DEFAULT_TOL,
                max_iter: int = DEFAULT_MAX_ITER, x0=None) -> PMeanResult:
    """Find an eps-p-th mean of ``cell`` with ``eps <= tol * (1 + value)``.

    Exact paths: weighted average for inner-product norms at p = 2, weighted
    median in one dimension at p = 1, a bracketed root of the derivative in
    one dimension otherwise.  The general path is first-order descent started
    at ``x0`` (default: the weighted average).  Failure to certify within
    ``max_iter`` is reported through ``converged=False``.
    """
    if p == np.inf:
        return chebyshev_center(space, cell, norm, tol=tol)
    if not p >= 1:
        raise ValueError(f"p must be in [1, inf), got {p}")
    w, f = _cell(space, cell)
    d = f.shape[1]
    mass = float(w.sum())
    iterations, converged = 0, True
    if np.all(f == f[0]):
        x = f[0].copy()
    elif p == 2 and norm.inner_product:
        x = (w @ f) / mass
    elif d == 1 and p == 1:
        x = np.array([_weighted_median(w, f[:, 0])])
    elif d == 1:
        x = np.array([_root_1d(w, f[:, 0], p)])
    else:
        atom = _nearest_atom_candidate(w, f, norm, p, tol) if p == 1 else None
        if atom is not None:
            x = atom[0].copy()
        else:
            start = (w @ f) / mass if x0 is None else np.asarray(x0, dtype=float).reshape(d)
            x, iterations, converged = _descend(w, f, norm, p, start, tol, max_iter)
            if not converged:
                log.warning("p-mean descent did not certify eps <= %g within %d iterations", tol, max_iter)
    value = _objective(w, f, norm, p, x)
    eps, gnorm = _certify(w, f, norm, p, x, value)
    return PMeanResult(np.array(x, dtype=float), value, gnorm, eps, iterations,
                       converged and eps <= tol * (1.0 + value))


# ---------------------------------------------------------------------------
# p = infinity
# ---------------------------------------------------------------------------


def _chebyshev_certificate(f, norm, x):
    """(eps, value) for the minimax objective via convex multipliers on near-active atoms.

    For multipliers lam in the simplex and u_a = grad||.||(f_a - x):
    max_a ||f_a - y|| >= sum lam_a ||f_a - x|| - ||sum lam_a u_a||_* ||x - y||,
    and every minimizer y lies within 2 * value of x.
    """
    r = norm.eval(f - x)
    value = float(r.max())
    if value == 0.0:
        return 0.0, value, 0.0
    u = norm.gradient(f - x)
    best, best_g = value, float("inf")
    for rel in (1e-12, 1e-9, 1e-6, 1e-3, 1e-1, 1.0):
        act = np.flatnonzero(r >= value * (1 - rel))
        scale = 1e3
        A = np.vstack([u[act].T, scale * np.ones(len(act))])
        b = np.concatenate([np.zeros(u.shape[1]), [scale]])
        lam, _ = nnls(A, b)
        if lam.sum() <= 0:
            continue
        lam = lam / lam.sum()
        gdual = float(norm.dual_eval(lam @ u[act]))
        eps = max(0.0, value - (float(lam @ r[act]) - 2.0 * value * gdual))
        if eps < best:
            best, best_g = eps, gdual
    return best, value, best_g


def _norm_hessian(norm, z, h):
    d = z.shape[0]
    H = np.empty((d, d))
    for j in range(d):
        e = np.zeros(d)
        e[j] = h
        H[:, j] = (norm.gradient(z + e) - norm.gradient(z - e)) / (2 * h)
    return 0.5 * (H + H.T)


def _kkt_polish(f, norm, x, act, lam, iters=30):
    """Newton on the minimax optimality system of an active set.

    Unknowns (x, t, lam); equations ||f_a - x|| = t on the active set,
    sum lam_a grad||f_a - x|| = 0 and sum lam_a = 1.
    """
    d, m = x.shape[0], len(act)
    fa = f[act]
    t = float(norm.eval(fa - x).max())
    for _ in range(iters):
        z = fa - x
        r = norm.eval(z)
        u = norm.gradient(z)
        F = np.concatenate([r - t, lam @ u, [lam.sum() - 1.0]])
        if np.max(np.abs(F)) <= 1e-15 * (1.0 + t):
            break
        J = np.zeros((m + d + 1, d + 1 + m))
        J[:m, :d] = -u
        J[:m, d] = -1.0
        hs = 1e-6 * max(t, 1e-300)
        J[m:m + d, :d] = -sum(l * _norm_hessian(norm, za, hs) for l, za in zip(lam, z))
        J[m:m + d, d + 1:] = u.T
        J[m + d, d + 1:] = 1.0
        step = np.linalg.lstsq(J, -F, rcond=None)[0]
        x = x + step[:d]
        t = t + step[d]
        lam = lam + step[d + 1:]
        if not np.all(np.isfinite(x)):
            return None
    return x


def chebyshev_center(space: MeasureSpace, cell, norm: NormDescriptor, tol: float = DEFAULT_TOL,
                     max_iter: int = 500) -> PMeanResult:
    """Minimize ``max_{a in cell} ||f_a - x||`` (the p = inf mean; weights play no role)."""
    w, f = _cell(space, cell)
    d = f.shape[1]
    iterations = 0
    if np.all(f == f[0]):
        x = f[0].copy()
    elif d == 1:
        x = np.array([0.5 * (f[:, 0].min() + f[:, 0].max())])
    else:
        x_start = 0.5 * (f.min(axis=0) + f.max(axis=0))
        t_start = float(norm.eval(f - x_start).max())

        def cons(v):
            return v[d] - norm.eval(f - v[:d])

        def cons_jac(v):
            return np.hstack([norm.gradient(f - v[:d]), np.ones((f.shape[0], 1))])

        res = minimize(
            lambda v: v[d],
            np.append(x_start, t_start),
            jac=lambda v: np.append(np.zeros(d), 1.0),
            constraints=[{"type": "ineq", "fun": cons, "jac": cons_jac}],
            method="SLSQP",
            options={"ftol": 1e-16, "maxiter": max_iter},
        )
        iterations = int(res.nit)
        x = res.x[:d]
        if norm.eval(f - x).max() > t_start:
            x = x_start
        eps = _chebyshev_certificate(f, norm, x)[0]
        r = norm.eval(f - x)
        value = float(r.max())
        for rel in (1e-9, 1e-6, 1e-4):
            if eps <= tol * (1.0 + value):
                break
            act = np.flatnonzero(r >= value * (1 - rel))
            u = norm.gradient(f[act] - x)
            A = np.vstack([u.T, 1e3 * np.ones(len(act))])
            lam, _ = nnls(A, np.concatenate([np.zeros(d), [1e3]]))
            cand = _kkt_polish(f, norm, x.copy(), act, lam / max(lam.sum(), 1e-300))
            if cand is not None:
                cand_eps = _chebyshev_certificate(f, norm, cand)[0]
                if cand_eps < eps:
                    x, eps = cand, cand_eps
    eps, value, gnorm = _chebyshev_certificate(f, norm, x)
    converged = eps <= tol * (1.0 + value)
    if not converged:
        log.warning("chebyshev center certified only to eps=%g (tol %g)", eps, tol)
    return PMeanResult(np.array(x, dtype=float), value, gnorm, eps, iterations, converged)
