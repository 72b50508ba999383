"""Tikhonov solvers: dense FISTA-with-polish and the soft-threshold path."""

import math

import numpy as np
import pytest

import oracles
from l1rates.core import DenseOperator, LqEmbedding, WienerRestriction
from l1rates.solver import (
    MaxIterationsError,
    TikhonovProblem,
    UnsupportedProblemError,
    _top_squared_singular_value,
    choose_alpha,
    soft_threshold,
    solve_tikhonov,
)


def dense_setup(seed=0, m=8, n=5, sparsity=2, delta=0.0):
    rng = np.random.default_rng(seed)
    a = rng.standard_normal((m, n))
    xdag = np.zeros(n)
    where = rng.choice(n, size=sparsity, replace=False)
    xdag[where] = rng.standard_normal(sparsity) + np.sign(rng.standard_normal(sparsity))
    y = a @ xdag
    if delta:
        noise = rng.standard_normal(m)
        y = y + delta * noise / np.linalg.norm(noise)
    return DenseOperator(a), xdag, y


# ---------------------------------------------------------------------------
# basics


def test_soft_threshold_values():
    out = soft_threshold(np.array([3.0, -2.0, 0.5, 0.0]), 1.0)
    assert np.array_equal(out, [2.0, -1.0, 0.0, 0.0])
    y = np.array([-1.2, 0.7])
    assert np.array_equal(soft_threshold(y, 0.0), y)


def test_problem_validation():
    op = DenseOperator(np.eye(3))
    y = np.ones(3)
    with pytest.raises(ValueError):
        TikhonovProblem(op, y, alpha=0.0)
    with pytest.raises(ValueError):
        TikhonovProblem(op, y, alpha=math.inf)
    with pytest.raises(ValueError):
        TikhonovProblem(op, y, alpha=0.1, p=3)
    with pytest.raises(ValueError):
        TikhonovProblem(op, np.ones(4), alpha=0.1)


def test_objective_formula():
    op, _, y = dense_setup(1)
    prob = TikhonovProblem(op, y, alpha=0.3)
    x = np.array([0.5, -1.0, 0.0, 2.0, 0.0])
    direct = np.linalg.norm(op.matrix @ x - y) ** 2 + 0.3 * np.abs(x).sum()
    assert prob.objective(x) == pytest.approx(direct, rel=1e-14)


def test_power_iteration_matches_svd():
    for seed in range(5):
        a = np.random.default_rng(seed).standard_normal((7, 4))
        top = _top_squared_singular_value(a)
        ref = float(np.linalg.svd(a, compute_uv=False)[0] ** 2)
        assert top == pytest.approx(ref, rel=1e-8)


# ---------------------------------------------------------------------------
# embedding path solver


def test_embedding_q2_is_soft_thresholding():
    rng = np.random.default_rng(2)
    op = LqEmbedding(6, 2.0)
    for alpha in (0.05, 0.3, 1.0, 5.0):
        y = rng.standard_normal(6)
        x, diag = solve_tikhonov(TikhonovProblem(op, y, alpha))
        assert np.allclose(x.coeffs, soft_threshold(y, alpha / 2.0), atol=1e-12)
        assert diag.converged
        assert diag.kkt_residual <= 1e-10


def test_embedding_sup_norm_hand_case():
    op = LqEmbedding(4, math.inf)
    y = np.array([1.0, -0.6, 0.3, 0.05])
    x, diag = solve_tikhonov(TikhonovProblem(op, y, alpha=0.4))
    assert np.allclose(x.coeffs, [0.6, -0.2, 0.0, 0.0], atol=1e-12)
    assert diag.final_objective == pytest.approx(0.48, abs=1e-12)
    assert diag.converged


@pytest.mark.parametrize("p,q", [(1, 2.0), (2, 4.0), (1, 1.5), (2, math.inf), (1, math.inf)])
def test_embedding_path_solver_against_scan(p, q):
    rng = np.random.default_rng(3)
    op = LqEmbedding(7, q)
    for trial in range(5):
        y = rng.standard_normal(7) * rng.choice([0.2, 1.0, 4.0])
        alpha = float(rng.choice([0.05, 0.4, 1.3]))
        prob = TikhonovProblem(op, y, alpha, p=p)
        x, diag = solve_tikhonov(prob)
        scan = oracles.path_objective_scan(y, alpha, p, q)
        assert diag.final_objective <= scan + 1e-9
        assert prob.objective(x.coeffs) == pytest.approx(diag.final_objective, rel=1e-12)
        assert diag.kkt_residual <= 1e-8


def test_embedding_zero_data():
    x, diag = solve_tikhonov(TikhonovProblem(LqEmbedding(3, 2.0), np.zeros(3), 0.5))
    assert np.array_equal(x.coeffs, np.zeros(3))
    assert diag.final_objective == 0.0


# ---------------------------------------------------------------------------
# dense solver


def test_dense_zero_fast_path():
    op, _, y = dense_setup(4)
    alpha = 2.0 * float(np.abs(op.matrix.T @ y).max()) * 1.001
    x, diag = solve_tikhonov(TikhonovProblem(op, y, alpha))
    assert np.array_equal(x.coeffs, np.zeros(op.dim))
    assert diag.support_size == 0
    assert diag.converged
    assert diag.iterations == 0


def test_dense_exact_data_error_decreases_with_alpha():
    op, xdag, y = dense_setup(5, sparsity=2)
    errors = []
    for alpha in (1.0, 0.1, 0.01, 0.001):
        x, diag = solve_tikhonov(TikhonovProblem(op, y, alpha))
        assert diag.converged
        errors.append(float(np.abs(x.coeffs - xdag).sum()))
    assert errors == sorted(errors, reverse=True)
    assert errors[-1] <= 1e-3


def test_dense_kkt_residual_at_termination():
    for seed in range(6):
        op, _, y = dense_setup(seed, delta=0.05)
        for alpha in (0.5, 0.05):
            _, diag = solve_tikhonov(TikhonovProblem(op, y, alpha), tol=1e-10)
            assert diag.converged
            assert diag.kkt_residual <= 1e-10


def test_dense_checkpoints_nonincreasing():
    op, _, y = dense_setup(6, m=20, n=12, sparsity=4, delta=0.1)
    _, diag = solve_tikhonov(TikhonovProblem(op, y, 0.01))
    chk = diag.checkpoint_objectives
    assert all(b <= a + 1e-12 for a, b in zip(chk, chk[1:]))
    assert diag.method in ("fista", "fista+polish")


def test_dense_support_shrinks_with_alpha():
    op, _, y = dense_setup(7, m=15, n=10, sparsity=3, delta=0.05)
    sizes = []
    for alpha in (2.0, 0.2, 1e-4):
        _, diag = solve_tikhonov(TikhonovProblem(op, y, alpha))
        sizes.append(diag.support_size)
    assert sizes[0] <= sizes[1] <= sizes[2]
    assert sizes[0] < 10


def test_dense_objective_stable_under_tiny_data_perturbation():
    op, _, y = dense_setup(8, delta=0.02)
    prob = TikhonovProblem(op, y, 0.1)
    _, diag = solve_tikhonov(prob)
    rng = np.random.default_rng(99)
    e = rng.standard_normal(y.size)
    e *= 1e-8 / np.linalg.norm(e)
    _, diag2 = solve_tikhonov(TikhonovProblem(op, y + e, 0.1))
    assert abs(diag.final_objective - diag2.final_objective) <= 1e-6


def test_dense_budget_exhaustion_carries_iterate():
    op, _, y = dense_setup(9, m=20, n=12, sparsity=5, delta=0.1)
    with pytest.raises(MaxIterationsError) as exc:
        solve_tikhonov(TikhonovProblem(op, y, 1e-6), tol=1e-14, max_iter=3)
    err = exc.value
    assert err.x.coeffs.shape == (12,)
    assert not err.diagnostics.converged
    assert err.diagnostics.iterations == 3
    assert np.isfinite(err.diagnostics.final_objective)


def test_dense_identity_matches_closed_form():
    op = DenseOperator(np.eye(5))
    y = np.array([2.0, -0.4, 0.05, 0.0, -3.0])
    x, _ = solve_tikhonov(TikhonovProblem(op, y, 0.3))
    assert np.allclose(x.coeffs, soft_threshold(y, 0.15), atol=1e-12)


def test_unsupported_combinations():
    op, _, y = dense_setup(10)
    with pytest.raises(UnsupportedProblemError):
        solve_tikhonov(TikhonovProblem(op, y, 0.1, p=1))
    wie = WienerRestriction([(0.0, 0.5)], max_freq=3, grid_size=64)
    with pytest.raises(UnsupportedProblemError):
        solve_tikhonov(TikhonovProblem(wie, np.zeros(wie.codim), 0.1))
    lq = DenseOperator(np.eye(3), y_norm="lq", q=4.0)
    with pytest.raises(UnsupportedProblemError):
        solve_tikhonov(TikhonovProblem(lq, np.ones(3), 0.1))


# ---------------------------------------------------------------------------
# parameter choice


def test_a_priori_rule():
    op = LqEmbedding(3, 2.0)
    y = np.ones(3)
    assert choose_alpha("a-priori", 0.01, op, y, kappa=2.5) == pytest.approx(0.025)
    assert choose_alpha("a-priori", 0.0, op, y) == 1e-12  # exact-data floor


def test_discrepancy_needs_noise():
    op = LqEmbedding(3, 2.0)
    with pytest.raises(ValueError):
        choose_alpha("discrepancy", 0.0, op, np.ones(3))
    with pytest.raises(ValueError):
        choose_alpha("nonsense", 0.1, op, np.ones(3))
    with pytest.raises(ValueError):
        choose_alpha("a-priori", -0.1, op, np.ones(3))


def test_discrepancy_returns_largest_feasible():
    delta = 0.05
    op, xdag, y = dense_setup(11, delta=delta)
    tau = 1.5
    alpha = choose_alpha("discrepancy", delta, op, y, tau=tau)

    def residual(a):
        x, _ = solve_tikhonov(TikhonovProblem(op, y, a))
        return op.norm_y(op.apply(x.coeffs) - y)

    assert residual(alpha) <= tau * delta
    alpha0 = 2.0 * float(np.abs(op.matrix.T @ y).max())
    if alpha < alpha0 * 0.999:  # not already the top of the grid
        assert residual(alpha / 0.8) > tau * delta


def test_discrepancy_on_embedding_identity():
    # identity inversion: residual is exactly controllable, rule must land
    # in one grid step of the target
    rng = np.random.default_rng(12)
    y = rng.standard_normal(20)
    delta = 0.1
    op = LqEmbedding(20, 2.0)
    alpha = choose_alpha("discrepancy", delta, op, y)
    x, _ = solve_tikhonov(TikhonovProblem(op, y, alpha))
    assert op.norm_y(x.coeffs - y) <= 1.5 * delta
