"""Acceptance criteria, one test each, at the stated tolerances.

Each test prints a single ``criterion N: PASS|FAIL`` line with its measured
statistic, visible even when pytest captures output.
"""

import time

import numpy as np
import pytest

from lpquant.norms import grad_pth_power, parse_norm
from lpquant.oracle import brute_force
from lpquant.pmean import gradient_condition, m_p_value, solve_pmean
from lpquant.quantizer import QuantizerConfig, lloyd, minimizing_trace
from lpquant.simplefn import SimpleFunction, bounded_reduction, cost
from lpquant.space import MeasureSpace, lp_norm, tail_truncate
from lpquant.voronoi import project

from conftest import SMOOTH_NORMS, norm_for, random_space


@pytest.fixture
def verdict(capsys):
    def emit(number, ok, detail):
        with capsys.disabled():
            print(f"\ncriterion {number}: {'PASS' if ok else 'FAIL'}  {detail}")
        return ok
    return emit


def test_criterion_01_oracle_equivalence(verdict):
    start = time.perf_counter()
    gaps = []
    for seed in range(100):
        rng = np.random.default_rng(seed)
        n = int(rng.integers(2, 9))
        d = int(rng.integers(1, 3))
        k = int(rng.integers(1, 4))
        p = float(rng.choice([1.0, 2.0, 3.0]))
        norm = parse_norm("euclidean" if seed % 2 == 0 else "q:3", d)
        s = random_space(rng, n, d)
        q = lloyd(s, norm, QuantizerConfig(p=p, k=k, restarts=50, seed=seed)).cost
        o = brute_force(s, norm, p, k).cost
        gaps.append((q - o) / o if o > 0 else q)
    gaps = np.array(gaps)
    elapsed = time.perf_counter() - start
    within = int(np.sum(gaps <= 1e-6))
    ok = within >= 95 and gaps.min() >= -1e-9
    verdict(1, ok, f"{within}/100 within 1e-6, min gap {gaps.min():.3g}, max gap {gaps.max():.3g}, {elapsed:.1f}s")
    assert ok


def test_criterion_02_closed_form_mean(verdict):
    rng = np.random.default_rng(2)
    worst = 0.0
    for _ in range(1000):
        d = int(rng.integers(1, 5))
        s = random_space(rng, int(rng.integers(1, 15)), d, scale=float(rng.uniform(0.1, 10)))
        cell = rng.choice(s.n, size=int(rng.integers(1, s.n + 1)), replace=False)
        x = solve_pmean(s, cell, parse_norm("euclidean", d), 2).point
        avg = (s.weights[cell] @ s.values[cell]) / s.weights[cell].sum()
        worst = max(worst, float(np.max(np.abs(x - avg))))
    ok = worst <= 1e-12
    verdict(2, ok, f"max deviation from weighted average {worst:.3g}")
    assert ok


def test_criterion_03_gradient_condition(verdict):
    rng = np.random.default_rng(3)
    worst_stat = 0.0
    for i in range(200):
        d = int(rng.integers(1, 4))
        s = random_space(rng, int(rng.integers(1, 9)), d)
        norm = norm_for(SMOOTH_NORMS[i % 4], d)
        p = float(rng.uniform(1.05, 4))
        r = solve_pmean(s, range(s.n), norm, p)
        for v in rng.normal(size=(10, d)):
            v = v / np.linalg.norm(v)
            worst_stat = max(worst_stat, abs(gradient_condition(s, range(s.n), norm, p, r.point, v)) / (1 + r.value))
    worst_fd = 0.0
    for i in range(1000):
        d = int(rng.integers(1, 4))
        norm = norm_for(SMOOTH_NORMS[i % 4], d)
        z, v = rng.normal(size=d), rng.normal(size=d)
        p = float(rng.uniform(1.1, 4))
        g = grad_pth_power(norm, z, v, p)
        h = 1e-5
        fd = (norm.eval(z + h * v) ** p - norm.eval(z - h * v) ** p) / (2 * h)
        worst_fd = max(worst_fd, abs(g - fd) / (1 + abs(g)))
    ok = worst_stat <= 1e-6 and worst_fd <= 1e-4
    verdict(3, ok, f"max |R'(0)|/(1+value) {worst_stat:.3g}, max finite-difference error {worst_fd:.3g}")
    assert ok


def test_criterion_04_projection_monotone(verdict):
    rng = np.random.default_rng(4)
    worst = -np.inf
    for i in range(1000):
        d = int(rng.integers(1, 4))
        s = random_space(rng, int(rng.integers(1, 20)), d)
        norm = norm_for(SMOOTH_NORMS[i % 4], d)
        k = int(rng.integers(1, 5))
        h = SimpleFunction(rng.normal(size=(k, d)), rng.integers(0, k, size=s.n))
        p = [1.0, 2.0, np.inf][i % 3]
        worst = max(worst, cost(s, norm, p, project(s, norm, p, h)) - cost(s, norm, p, h))
    ok = worst <= 1e-12
    verdict(4, ok, f"max cost increase {worst:.3g}")
    assert ok


def test_criterion_05_structure_certificate(verdict):
    rng = np.random.default_rng(5)
    bad = []
    for i in range(50):
        d = int(rng.integers(1, 3))
        s = random_space(rng, int(rng.integers(8, 20)), d)
        norm = norm_for(SMOOTH_NORMS[i % 4], d)
        cfg = QuantizerConfig(p=[1.5, 2.0, 3.0][i % 3], k=int(rng.integers(2, 5)), restarts=10, seed=i, tie_tol=1e-9)
        r = lloyd(s, norm, cfg)
        c = r.certificate
        if r.cost > 0 and not (c.voronoi_residual == 0 and max(c.pmean_eps) <= 10 * cfg.tol
                               and c.degree == cfg.k and c.boundary_mass == 0):
            bad.append((i, c))
    ok = not bad
    verdict(5, ok, f"{50 - len(bad)}/50 certified" + (f"; failures {bad[:3]}" if bad else ""))
    assert ok


def test_criterion_06_exact_recovery(verdict):
    rng = np.random.default_rng(6)
    hits = 0
    for i in range(100):
        d = int(rng.integers(1, 4))
        k = int(rng.integers(1, 5))
        m = int(rng.integers(1, k + 1))
        n = int(rng.integers(m, 15))
        labels = np.concatenate([np.arange(m), rng.integers(0, m, size=n - m)])
        vals = rng.normal(size=(m, d))[labels]
        s = MeasureSpace(rng.uniform(0.1, 3, size=n), vals)
        p = [1.0, 1.5, 2.0, 3.0, np.inf][i % 5]
        norm = norm_for(SMOOTH_NORMS[i % 4], d)
        r = lloyd(s, norm, QuantizerConfig(p=p, k=k, restarts=3, seed=i))
        hits += r.cost == 0.0 and r.certificate.degree == m
    ok = hits == 100
    verdict(6, ok, f"{hits}/100 recovered with cost 0 and degree m")
    assert ok


def test_criterion_07_bounded_reduction(verdict):
    rng = np.random.default_rng(7)
    worst = -np.inf
    for i in range(1000):
        d = int(rng.integers(1, 4))
        n = int(rng.integers(1, 15))
        s = random_space(rng, n, d)
        norm = norm_for(SMOOTH_NORMS[i % 4], d)
        k = int(rng.integers(1, 5))
        h = SimpleFunction(rng.normal(scale=float(rng.uniform(0.5, 10)), size=(k, d)), rng.integers(0, k, size=n))
        p = float(rng.uniform(1, 4))
        g = bounded_reduction(s, norm, p, h, float(rng.uniform(0.1, 10)))
        zeroed = np.flatnonzero(np.any(g.centers != h.centers, axis=1))
        in_b = np.isin(h.assignment, zeroed)
        rhs = cost(s, norm, p, h) ** p + float(np.sum(s.weights[in_b] * norm.eval(s.values[in_b]) ** p))
        worst = max(worst, (cost(s, norm, p, g) ** p - rhs) / rhs)
    ok = worst <= 1e-10
    verdict(7, ok, f"max relative violation {worst:.3g}")
    assert ok


def test_criterion_08_tail_and_pinned_zero(verdict):
    rng = np.random.default_rng(8)
    worst = -np.inf
    for i in range(500):
        d = int(rng.integers(1, 4))
        s = random_space(rng, int(rng.integers(1, 30)), d, infinite_mass=bool(i % 2))
        norm = norm_for(SMOOTH_NORMS[i % 4], d)
        p = float(rng.uniform(1, 4))
        eps = float(rng.exponential(1.0))
        lhs = eps**p * tail_truncate(s, norm, eps).mass
        worst = max(worst, lhs - lp_norm(s, norm, p) ** p)
    pinned_ok = 0
    for i in range(30):
        d = int(rng.integers(1, 3))
        s = random_space(rng, int(rng.integers(1, 10)), d, infinite_mass=True)
        norm = norm_for(SMOOTH_NORMS[i % 4], d)
        r = lloyd(s, norm, QuantizerConfig(p=[1.0, 2.0, 3.0, np.inf][i % 4], k=int(rng.integers(1, 4)), restarts=3))
        b = r.best
        has_zero = b.background is not None and np.all(b.centers[b.background] == 0)
        nonzero = [j for j in range(b.k) if np.any(b.centers[j] != 0)]
        finite = all(j != b.background and np.isfinite(s.weights[b.assignment == j].sum()) for j in nonzero)
        pinned_ok += bool(has_zero and finite and np.isfinite(r.cost))
    ok = worst <= 0 and pinned_ok == 30
    verdict(8, ok, f"max Markov excess {worst:.3g}, pinned-zero runs {pinned_ok}/30")
    assert ok


def test_criterion_09_center_convergence(verdict):
    rng = np.random.default_rng(9)
    worst = 0.0
    for i in range(20):
        d = int(rng.integers(1, 3))
        k = int(rng.integers(2, 4))
        anchors = 20.0 * np.arange(k)[:, None] * np.ones(d)
        per = int(rng.integers(3, 7))
        vals = np.concatenate([a + rng.normal(scale=1.0, size=(per, d)) for a in anchors])
        s = MeasureSpace(rng.uniform(0.5, 2, size=len(vals)), vals)
        norm = norm_for(SMOOTH_NORMS[i % 4], d)
        tr = minimizing_trace(s, norm, QuantizerConfig(p=[1.5, 2.0, 3.0][i % 3], k=k, restarts=3, seed=i))
        worst = max(worst, max(tr.displacements[-10:]))
    ok = worst <= 1e-8
    verdict(9, ok, f"max displacement over final 10 iterations {worst:.3g}")
    assert ok


def test_criterion_10_eps_mean_sets(verdict):
    rng = np.random.default_rng(10)
    conv_fail = 0
    for i in range(1000):
        d = int(rng.integers(1, 4))
        s = random_space(rng, int(rng.integers(1, 8)), d)
        norm = norm_for(SMOOTH_NORMS[i % 4], d)
        p = float(rng.uniform(1.05, 4))
        cell = range(s.n)
        m_star = solve_pmean(s, cell, norm, p).value
        eps = float(rng.uniform(1e-3, 1.0)) * (1 + m_star)
        x0 = solve_pmean(s, cell, norm, p).point
        pts = []
        while len(pts) < 2:
            x = x0 + rng.normal(scale=rng.uniform(1e-3, 2), size=d)
            if m_p_value(s, cell, norm, p, x) <= m_star + eps:
                pts.append(x)
        conv_fail += m_p_value(s, cell, norm, p, 0.5 * (pts[0] + pts[1])) > m_star + eps
    spread_worst = 0.0
    for i in range(20):
        d = int(rng.integers(1, 4))
        s = random_space(rng, int(rng.integers(2, 9)), d)
        norm = norm_for(SMOOTH_NORMS[i % 4], d)
        p = float(rng.uniform(1.1, 4))
        pts = np.array([solve_pmean(s, range(s.n), norm, p, x0=rng.normal(scale=5, size=d)).point
                        for _ in range(50)])
        spread_worst = max(spread_worst, float(norm.eval(pts[:, None, :] - pts[None, :, :]).max()))
    ok = conv_fail == 0 and spread_worst <= 1e-6
    verdict(10, ok, f"midpoint failures {conv_fail}/1000, max spread of 50 solves {spread_worst:.3g} (20 cells)")
    assert ok
