"""Acceptance criteria, one test each.

Every test prints a ``criterion N: PASS|FAIL`` line (also collected in the
terminal summary) and then asserts.  Run alone with::

    python3 -m pytest tests/test_acceptance.py -v -s
"""

import math
import time

import numpy as np
import pytest

from anchors import PRINTED_BORDA_3, PRINTED_BORDA_4, PRINTED_TABLE, SQUARE_CLONE_WEIGHTS, SQUARE_WEIGHTS
from oracles import finite_difference_gradient, impossibility_mean_rb2
from prefagg.core import (
    AlternativeSet,
    WinRateMatrix,
    empirical_matrix,
    representative_matrix,
    sample_dataset,
)
from prefagg.experiments import (
    LN2_SQUARED,
    clone_robustness_sweep,
    cyclic_alternatives,
    cyclic_population,
    impossibility_instance,
    integral_check,
    linear_population,
    reproduce_appendix_d,
    square_alternatives,
)
from prefagg.solver import SolverConfig, gradient, objective, solve
from prefagg.voronoi import SpaceBox, WeightVector, estimate_weights, unit_weights
from prefagg.winrate import average_win_rate, m_estimator_residual, ranking_consistency, weighted_average_win_rate

pytestmark = pytest.mark.acceptance

UNIT_SQUARE = SpaceBox.unit_cube(2)
LEFT = (-1.0, 0.0)
GRAD_TOL = SolverConfig().grad_tol


def random_instances(seed=2024, count=20):
    """Instances shared by criteria 4 and 5: m in 2..8, Voronoi-normalized w, lambda in {0.01, 0.1, 1}."""
    rng = np.random.default_rng(seed)
    out = []
    for k in range(count):
        m = 2 + k % 7
        ids = tuple(f"x{i}" for i in range(m))
        p = WinRateMatrix.from_upper(ids, rng.random((m, m)))
        w = WeightVector(ids, rng.dirichlet(np.ones(m)), "voronoi")
        lam = (0.01, 0.1, 1.0)[k % 3]
        out.append((p, w, lam))
    return out


@pytest.fixture(scope="module")
def solved_instances():
    return [(p, w, lam, solve(p, w, SolverConfig(lam=lam))) for p, w, lam in random_instances()]


def test_criterion_01_borda_flip(verdict):
    t0 = time.perf_counter()
    result = reproduce_appendix_d(lam=0.01)
    elapsed = time.perf_counter() - t0
    table = np.array(result["original"]["win_rates"]["rows"])
    table_err = np.abs(table - PRINTED_TABLE).max()
    b3 = max(abs(result["original"]["borda"][k] - v) for k, v in PRINTED_BORDA_3.items())
    b4 = max(abs(result["with_clone"]["borda"][k] - v) for k, v in PRINTED_BORDA_4.items())
    winners = (result["original"]["borda_winner"], result["with_clone"]["borda_winner"],
               result["original"]["mle_winner"], result["with_clone"]["mle_winner"])
    ok = table_err <= 0.005 and b3 <= 0.01 and b4 <= 0.01 and winners == ("a", "b", "a", "b") and elapsed < 1
    assert verdict(1, ok, f"table err {table_err:.4f}, Borda err {b3:.4f}/{b4:.4f}, "
                          f"Borda/MLE winners {winners}, {elapsed:.2f}s")


def test_criterion_02_voronoi_anchors(verdict):
    n = 100_000
    square = square_alternatives()
    cloned = AlternativeSet(square.ids + ("p09",), np.vstack([square.contexts, [[0.9, 1.0]]]))
    worst, slowest = 0.0, 0.0
    for alts, expected in ((square, SQUARE_WEIGHTS), (cloned, SQUARE_CLONE_WEIGHTS)):
        t0 = time.perf_counter()
        w = estimate_weights(alts, UNIT_SQUARE, n, seed=0)
        slowest = max(slowest, time.perf_counter() - t0)
        worst = max(worst, float(np.max(np.abs(w.w - expected) / w.std_errors)))
    ok = worst <= 3 and slowest < 1
    assert verdict(2, ok, f"max |error|/se {worst:.2f} (limit 3), slowest {slowest:.3f}s")


def test_criterion_03_impossibility(verdict):
    t0 = time.perf_counter()
    inst = impossibility_instance(LN2_SQUARED)
    elapsed = time.perf_counter() - t0
    oracle = impossibility_mean_rb2(LN2_SQUARED)
    p_err = max(abs(inst.p_ab_1 - 1 / 3), abs(inst.p_ab_2 - 1 / 3))
    mean_err = abs(inst.mean_rb_2 - oracle)
    ok = inst.kappa == 4096.0 and p_err <= 1e-12 and mean_err <= 1e-6 and elapsed < 0.1
    assert verdict(3, ok, f"kappa {inst.kappa!r}, p err {p_err:.1e}, mean r(b) {inst.mean_rb_2:.6f} "
                          f"vs 50-digit {oracle:.6f}")


def test_criterion_04_m_estimator(verdict, solved_instances):
    t0 = time.perf_counter()
    worst = 0.0
    for p, w, lam, (r, rep) in solved_instances:
        resid = np.abs(m_estimator_residual(r, p, w, lam).values).max()
        worst = max(worst, resid / (10 * GRAD_TOL / w.w.min()))
    elapsed = time.perf_counter() - t0
    ok = worst <= 1
    assert verdict(4, ok, f"max residual / (10 grad_tol / min w) = {worst:.2e} over 20 instances, "
                          f"{elapsed:.2f}s")


def test_criterion_05_ranking_consistency(verdict, solved_instances):
    failures = []
    for k, (p, w, _, (r, _)) in enumerate(solved_instances):
        ok, pair = ranking_consistency(r, weighted_average_win_rate(p, w), tol=1e-9)
        if not ok:
            failures.append((k, pair))
    alts, pop = cyclic_alternatives(), cyclic_population()
    p = representative_matrix(pop, alts)
    r, _ = solve(p, unit_weights(alts), SolverConfig(lam=0.01))
    ok_d, pair_d = ranking_consistency(r, average_win_rate(p), tol=1e-9)
    if not ok_d:
        failures.append(("cyclic", pair_d))
    assert verdict(5, not failures, f"21 instances, violations {failures}")


def test_criterion_06_gradient(verdict):
    rng = np.random.default_rng(6)
    worst = 0.0
    t0 = time.perf_counter()
    for _ in range(20):
        m = int(rng.integers(2, 9))
        ids = tuple(f"x{i}" for i in range(m))
        p = WinRateMatrix.from_upper(ids, rng.random((m, m)))
        w = WeightVector(ids, rng.dirichlet(np.ones(m)), "voronoi")
        lam = float(rng.choice([0.01, 0.1, 1.0]))
        r = rng.normal(0, 2, m)
        g = gradient(r, p, w, lam)
        fd = finite_difference_gradient(lambda v: objective(v, p, w, lam), r, h=1e-5)
        worst = max(worst, np.linalg.norm(g - fd) / np.linalg.norm(g))
    elapsed = time.perf_counter() - t0
    assert verdict(6, worst <= 1e-6 and elapsed < 5, f"max relative error {worst:.2e}, {elapsed:.2f}s")


def test_criterion_07_exact_clone_invariance(verdict):
    t0 = time.perf_counter()
    rep = clone_robustness_sweep(
        square_alternatives(), linear_population(), "p11", LEFT, "wmle", (0.0,), UNIT_SQUARE, 100_000, 0
    )
    elapsed = time.perf_counter() - t0
    row = rep.rows[0]
    ok = row.delta_existing <= 1e-3 and row.delta_pair <= 1e-3 and elapsed < 2
    assert verdict(7, ok, f"delta_existing {row.delta_existing:.1e}, delta_pair {row.delta_pair:.1e} "
                          f"(limit 1e-3, error radii {row.error_radius:.1e}), {elapsed:.2f}s")


def test_criterion_08_robustness_contrast(verdict):
    t0 = time.perf_counter()
    eps = (0.1, 0.05, 0.01, 0.001)
    w_rep = clone_robustness_sweep(
        square_alternatives(), linear_population(), "p11", LEFT, "wmle", eps, UNIT_SQUARE, 100_000, 0
    )
    deltas = [row.delta_existing for row in w_rep.rows]
    # consecutive rows may rise by at most the reported numerical error
    monotone = all(b <= a + row.error_radius for a, b, row in zip(deltas, deltas[1:], w_rep.rows[1:]))
    C = w_rep.fitted_sqrt_constant()
    bounded = all(row.delta_existing <= C * math.sqrt(row.epsilon) + 1e-12 for row in w_rep.rows)

    alts, pop = cyclic_alternatives(), cyclic_population()
    mle = clone_robustness_sweep(alts, pop, "c", (1.0, 0.0), "mle", (0.0,)).rows[0]
    wmle = clone_robustness_sweep(alts, pop, "c", (1.0, 0.0), "wmle", (0.0,), UNIT_SQUARE, 100_000, 0).rows[0]
    mle_flips = mle.winner_before != mle.winner_after
    wmle_keeps = wmle.winner_before == wmle.winner_after
    elapsed = time.perf_counter() - t0
    ok = monotone and bounded and mle_flips and wmle_keeps and elapsed < 30
    assert verdict(8, ok, f"wmle deltas {[f'{d:.2e}' for d in deltas]}, C={C:.3f}; "
                          f"mle {mle.winner_before}->{mle.winner_after}, "
                          f"wmle {wmle.winner_before}->{wmle.winner_after}, {elapsed:.1f}s")


def test_criterion_09_integral_identity(verdict):
    t0 = time.perf_counter()
    rows = integral_check(n_instances=5, n_samples=100_000, seed=0)
    elapsed = time.perf_counter() - t0
    zs = [abs(r["z"]) for r in rows]
    ok = all(r["within_3se"] for r in rows) and len(rows) == 5 and elapsed < 10
    assert verdict(9, ok, f"|z| = {[round(z, 2) for z in zs]}, {elapsed:.2f}s")


def test_criterion_10_statistical_pipeline(verdict):
    t0 = time.perf_counter()
    alts, pop = cyclic_alternatives(), cyclic_population()
    emp = empirical_matrix(sample_dataset(pop, alts, 100_000, seed=10), alts)
    err = float(np.abs(emp.p - representative_matrix(pop, alts).p).max())
    elapsed = time.perf_counter() - t0
    assert verdict(10, err <= 0.01 and elapsed < 20, f"max entry error {err:.4f} (limit 0.01), {elapsed:.2f}s")
