"""Solvers for the l1-penalized Tikhonov functional on a truncation.

Minimizes ``||A x - y||_Y^p + alpha ||x||_1`` with ``p in {1, 2}``.  The
workhorse is ``p = 2`` with a Euclidean data norm: accelerated proximal
gradient descent with function-value restart, finished by an exact solve of
the reduced normal equations once the support has settled, so first-order
optimality holds to solver tolerance at termination.  For lq embeddings the
minimizer lies on the soft-threshold path ``x = S(y, s)``; the problem then
reduces to a one-dimensional search over the threshold, convex on each
segment between consecutive data magnitudes, and is solved per segment in
closed form or by root-finding on the derivative.  Other combinations are
rejected.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

from .core import (
    DenseOperator,
    ForwardOperator,
    LqEmbedding,
    TruncatedSequence,
    lq_norm,
)

__all__ = [
    "TikhonovProblem",
    "SolveDiagnostics",
    "UnsupportedProblemError",
    "MaxIterationsError",
    "soft_threshold",
    "solve_tikhonov",
    "choose_alpha",
]

_POLL = 25  # iterations between convergence checks / polish attempts


class UnsupportedProblemError(TypeError):
    """No solver is implemented for this (operator kind, p) combination."""


class MaxIterationsError(RuntimeError):
    """Iteration budget exhausted before reaching tolerance.

    Carries the best iterate and its diagnostics in ``x`` and ``diagnostics``.
    """

    def __init__(self, message, x, diagnostics):
        super().__init__(message)
        self.x = x
        self.diagnostics = diagnostics


@dataclass(frozen=True)
class TikhonovProblem:
    """Data of one regularized inversion: operator, noisy data, alpha, power p."""

    op: ForwardOperator
    y_delta: np.ndarray
    alpha: float
    p: int = 2

    def __post_init__(self):
        y = np.asarray(self.y_delta, dtype=float)
        object.__setattr__(self, "y_delta", y)
        if self.alpha <= 0 or not math.isfinite(self.alpha):
            raise ValueError(f"alpha must be positive and finite, got {self.alpha}")
        if self.p not in (1, 2):
            raise ValueError(f"p must be 1 or 2, got {self.p}")
        codim = getattr(self.op, "codim", None)
        if codim is not None and y.shape != (codim,):
            raise ValueError(
                f"data vector must have length {codim}, got shape {y.shape}"
            )

    def objective(self, x) -> float:
        x = np.asarray(x, dtype=float)
        fid = self.op.norm_y(self.op.apply(x) - self.y_delta)
        return float(fid**self.p + self.alpha * np.sum(np.abs(x)))


@dataclass(frozen=True)
class SolveDiagnostics:
    iterations: int
    final_objective: float
    kkt_residual: float
    support_size: int
    converged: bool
    method: str
    restarts: int = 0
    checkpoint_objectives: tuple[float, ...] = ()


def soft_threshold(v, tau):
    """Componentwise shrinkage ``sign(v) * max(|v| - tau, 0)``."""
    v = np.asarray(v, dtype=float)
    return np.sign(v) * np.maximum(np.abs(v) - tau, 0.0)


def _top_squared_singular_value(matrix, tol: float = 1e-10, max_iter: int = 10**4) -> float:
    """Largest eigenvalue of ``A^T A`` by power iteration with deterministic start."""
    n = matrix.shape[1]
    v = np.ones(n) + np.arange(n) / max(n, 1) * 1e-3
    v /= np.linalg.norm(v)
    lam = 0.0
    for _ in range(max_iter):
        w = matrix.T @ (matrix @ v)
        norm = np.linalg.norm(w)
        if norm == 0.0:
            return 0.0
        v = w / norm
        lam_new = float(v @ (matrix.T @ (matrix @ v)))
        if abs(lam_new - lam) <= tol * max(1.0, abs(lam_new)):
            return lam_new
        lam = lam_new
    return lam


def _kkt_residual(matrix, x, y, alpha) -> float:
    """First-order optimality violation for ``||Ax - y||_2^2 + alpha ||x||_1``."""
    g = matrix.T @ (matrix @ x - y)
    on = x != 0.0
    res = 0.0
    if np.any(~on):
        res = max(res, float(np.max(np.maximum(np.abs(g[~on]) - alpha / 2.0, 0.0))))
    if np.any(on):
        res = max(res, float(np.max(np.abs(2.0 * g[on] / alpha + np.sign(x[on])))))
    return res


def _try_polish(matrix, y, alpha, support_mask, tol):
    """Solve the reduced normal equations on a trial support.

    Returns the exact minimizer if the solution's signs are self-consistent
    and the off-support optimality condition holds; None otherwise.
    """
    if not np.any(support_mask):
        return None
    cols = matrix[:, support_mask]
    gram = cols.T @ cols
    rhs = cols.T @ y
    # Try every sign assignment consistent with an unpenalized warm solve.
    try:
        base = np.linalg.solve(gram, rhs)
    except np.linalg.LinAlgError:
        return None
    signs = np.sign(base)
    signs[signs == 0.0] = 1.0
    try:
        x_s = np.linalg.solve(gram, rhs - alpha * signs / 2.0)
    except np.linalg.LinAlgError:
        return None
    if np.any(x_s * signs < 0.0):
        # Sign flip between warm solve and penalized solve: retry with the
        # penalized solution's own signs once.
        signs = np.sign(x_s)
        signs[signs == 0.0] = 1.0
        try:
            x_s = np.linalg.solve(gram, rhs - alpha * signs / 2.0)
        except np.linalg.LinAlgError:
            return None
        if np.any(x_s * signs < 0.0):
            return None
    x = np.zeros(matrix.shape[1])
    x[support_mask] = x_s
    if _kkt_residual(matrix, x, y, alpha) <= tol:
        return x
    return None


def _solve_dense_p2(op: DenseOperator, y, alpha, tol, max_iter):
    matrix = op.matrix
    aty = matrix.T @ y
    checkpoints = []
    if np.max(np.abs(aty), initial=0.0) <= alpha / 2.0:
        x = np.zeros(op.dim)
        obj = float(np.dot(y, y))
        return x, SolveDiagnostics(0, obj, 0.0, 0, True, "fista", 0, (obj,))

    lam = _top_squared_singular_value(matrix)
    step = 1.0 / (2.0 * lam)  # gradient of the fidelity term is 2 A^T(Ax - y)

    def objective(x):
        r = matrix @ x - y
        return float(r @ r + alpha * np.sum(np.abs(x)))

    x = np.zeros(op.dim)
    z = x
    t = 1.0
    f_x = objective(x)
    checkpoints.append(f_x)
    restarts = 0
    for it in range(1, max_iter + 1):
        grad = 2.0 * (matrix.T @ (matrix @ z - y))
        x_new = soft_threshold(z - step * grad, step * alpha)
        f_new = objective(x_new)
        if f_new > f_x:
            # Function-value restart: momentum overshot, redo as a plain
            # proximal gradient step from the last accepted iterate.
            restarts += 1
            t = 1.0
            grad = 2.0 * (matrix.T @ (matrix @ x - y))
            x_new = soft_threshold(x - step * grad, step * alpha)
            f_new = objective(x_new)
            z = x_new
        else:
            t_new = 0.5 * (1.0 + math.sqrt(1.0 + 4.0 * t * t))
            z = x_new + ((t - 1.0) / t_new) * (x_new - x)
            t = t_new
        x, f_x = x_new, f_new
        if it % _POLL == 0 or it == max_iter:
            checkpoints.append(f_x)
            polished = _try_polish(matrix, y, alpha, x != 0.0, tol)
            if polished is not None:
                obj = objective(polished)
                kkt = _kkt_residual(matrix, polished, y, alpha)
                checkpoints.append(obj)
                return polished, SolveDiagnostics(
                    it, obj, kkt, int(np.count_nonzero(polished)), True,
                    "fista+polish", restarts, tuple(checkpoints),
                )
            kkt = _kkt_residual(matrix, x, y, alpha)
            if kkt <= tol:
                return x, SolveDiagnostics(
                    it, f_x, kkt, int(np.count_nonzero(x)), True,
                    "fista", restarts, tuple(checkpoints),
                )
    kkt = _kkt_residual(matrix, x, y, alpha)
    diag = SolveDiagnostics(
        max_iter, f_x, kkt, int(np.count_nonzero(x)), False,
        "fista", restarts, tuple(checkpoints),
    )
    raise MaxIterationsError(
        f"no convergence within {max_iter} iterations (kkt residual {kkt:.3e})",
        op.wrap(x), diag,
    )


# ---------------------------------------------------------------------------
# embedding path solver


def _path_objective(u_sorted, suffix, q, p, alpha, s):
    """Objective at threshold ``s``: ``||min(u, s)||_q^p + alpha * sum(u - s)_+``."""
    clipped = np.minimum(u_sorted, s)
    fid = lq_norm(clipped, q)
    j = np.searchsorted(u_sorted, s, side="right")
    l1 = suffix[j] - s * (u_sorted.size - j)
    return float(fid**p + alpha * l1)


def _path_derivative_sides(u_sorted, q, p, alpha, s):
    """One-sided derivatives of the path objective at ``s`` (subgradient bounds)."""
    n = u_sorted.size
    sides = []
    for side in ("left", "right"):
        j = int(np.searchsorted(u_sorted, s, side=side))
        active = n - j  # u_k >= s (left side) resp. u_k > s (right side)
        if math.isinf(q):
            # fidelity is min(s, u_max)**p, increasing while something is active
            fid_term = p * s ** (p - 1) if active else 0.0
        else:
            cq = float(np.sum(u_sorted[:j] ** q)) + active * s**q
            if cq > 0 and active:
                t = cq ** (1.0 / q)
                dt = active * s ** (q - 1) * cq ** (1.0 / q - 1.0)
                fid_term = p * t ** (p - 1) * dt
            elif active:
                # s == 0 with nothing clipped yet: the fidelity grows like
                # active**(1/q) * s, so only p == 1 sees a nonzero slope.
                fid_term = float(active) ** (1.0 / q) if p == 1 else 0.0
            else:
                fid_term = 0.0
        sides.append(fid_term - alpha * active)
    return sides[0], sides[1]


def _solve_embedding(op: LqEmbedding, y, alpha, p, tol):
    u = np.abs(y)
    order = np.sort(u)
    n = order.size
    suffix = np.concatenate((np.cumsum(order[::-1])[::-1], [0.0]))
    hi = float(order[-1]) if n else 0.0

    candidates = {0.0, hi}
    candidates.update(float(v) for v in order)
    q = op.q
    edges = np.concatenate(([0.0], np.unique(order)))
    if p == 2 and q == 2.0:
        candidates.add(min(alpha / 2.0, hi))  # the global vertex of every segment
    elif p == 2 and math.isinf(q):
        for lo_edge, hi_edge in zip(edges, edges[1:]):
            active = int(np.sum(order > lo_edge))
            vertex = alpha * active / 2.0
            candidates.add(min(max(vertex, float(lo_edge)), float(hi_edge)))
    elif not math.isinf(q):
        # On (lo, hi) the fidelity is (head + active * s**q)**(p/q) with both
        # constants frozen, which is convex there; an interior minimum is the
        # unique root of the derivative.
        for lo_edge, hi_edge in zip(edges, edges[1:]):
            lo_s, hi_s = float(lo_edge), float(hi_edge)
            if hi_s - lo_s <= 1e-15:
                continue
            active = int(np.sum(order > lo_s))
            head = float(np.sum(order[order <= lo_s] ** q))
            if head == 0.0:
                # first segment: fidelity is exactly active**(p/q) * s**p
                if p == 2:
                    vertex = 0.5 * alpha * active ** (1.0 - 2.0 / q)
                    candidates.add(min(max(vertex, lo_s), hi_s))
                continue  # p == 1: linear in s, the edges suffice

            def deriv(s, a=active, c=head):
                cq = c + a * s**q
                return p * a * s ** (q - 1.0) * cq ** (p / q - 1.0) - alpha * a

            if deriv(lo_s) >= 0.0 or deriv(hi_s) <= 0.0:
                continue  # minimum sits on an edge, already a candidate
            root = brentq(deriv, lo_s, hi_s, xtol=1e-300,
                          rtol=4.0 * np.finfo(float).eps)
            candidates.add(float(root))
    # p == 1 with q == inf is piecewise linear: breakpoints already included.

    best_s, best_val = 0.0, math.inf
    for s in sorted(candidates):
        if s < 0 or s > hi:
            continue
        val = _path_objective(order, suffix, q, p, alpha, s)
        if val < best_val:
            best_val, best_s = val, s
    x = soft_threshold(y, best_s)

    if p == 2 and q == 2.0:
        # The embedding acts as the identity, so the optimality conditions
        # use the plain residual in place of A^T r.
        g = x - y
        on = x != 0.0
        kkt = 0.0
        if np.any(~on):
            kkt = max(kkt, float(np.max(np.maximum(np.abs(g[~on]) - alpha / 2.0, 0.0))))
        if np.any(on):
            kkt = max(kkt, float(np.max(np.abs(2.0 * g[on] / alpha + np.sign(x[on])))))
    else:
        dl, dr = _path_derivative_sides(order, q, p, alpha, best_s)
        if best_s <= 0.0:
            kkt = max(0.0, -dr)
        elif best_s >= hi:
            kkt = max(0.0, dl)
        else:
            kkt = dl if dl > 0 else (-dr if dr < 0 else 0.0)
        kkt = abs(kkt)
    diag = SolveDiagnostics(
        iterations=len(candidates),
        final_objective=best_val,
        kkt_residual=float(kkt),
        support_size=int(np.count_nonzero(x)),
        converged=True,
        method="threshold-path",
    )
    return x, diag


def solve_tikhonov(problem: TikhonovProblem, tol: float = 1e-10,
                   max_iter: int = 100_000):
    """Minimize the Tikhonov functional; returns ``(x, diagnostics)``.

    Supported: lq embeddings for both powers, and dense matrices with the
    Euclidean data norm for ``p = 2``.  Raises
    :class:`UnsupportedProblemError` otherwise and
    :class:`MaxIterationsError` (carrying the best iterate) on budget
    exhaustion.
    """
    op = problem.op
    if isinstance(op, LqEmbedding):
        x, diag = _solve_embedding(op, problem.y_delta, problem.alpha, problem.p, tol)
        return op.wrap(x), diag
    if isinstance(op, DenseOperator) and op.is_euclidean and problem.p == 2:
        x, diag = _solve_dense_p2(op, problem.y_delta, problem.alpha, tol, max_iter)
        return op.wrap(x), diag
    raise UnsupportedProblemError(
        f"no solver for kind {op.kind!r} with p = {problem.p} and this data norm"
    )


def choose_alpha(rule: str, delta: float, op: ForwardOperator, y_delta,
                 p: int = 2, kappa: float = 1.0, tau: float = 1.5,
                 grid_ratio: float = 0.8, max_steps: int = 200,
                 alpha_floor: float = 1e-12, tol: float = 1e-10,
                 max_iter: int = 100_000) -> float:
    """Parameter choice rules.

    ``"a-priori"`` returns ``kappa * delta`` floored at ``alpha_floor`` (the
    floor covers exact data, ``delta = 0``).  ``"discrepancy"`` walks the
    geometric grid ``alpha_0 * grid_ratio**j`` downward from
    ``alpha_0 = 2 ||A* y||_inf`` (above which the minimizer is 0) and returns
    the first -- hence largest -- alpha whose residual is at most
    ``tau * delta``; it needs ``delta > 0`` and raises when the grid is
    exhausted.
    """
    if delta < 0:
        raise ValueError("delta must be nonnegative")
    if rule == "a-priori":
        return max(kappa * delta, alpha_floor)
    if rule != "discrepancy":
        raise ValueError(f"unknown parameter choice rule {rule!r}")
    if delta == 0:
        raise ValueError("the discrepancy principle needs a positive noise level")
    y = np.asarray(y_delta, dtype=float)
    alpha0 = max(2.0 * float(np.max(np.abs(op.adjoint(y)), initial=0.0)), alpha_floor)
    target = tau * delta
    last_residual = math.inf
    for j in range(max_steps):
        alpha = alpha0 * grid_ratio**j
        x, _ = solve_tikhonov(TikhonovProblem(op, y, alpha, p), tol=tol, max_iter=max_iter)
        residual = op.norm_y(op.apply(x.coeffs) - y)
        last_residual = residual
        if residual <= target:
            return alpha
        if alpha < alpha_floor:
            break
    raise RuntimeError(
        f"discrepancy target {target:.6g} unreachable on the grid "
        f"[{alpha0 * grid_ratio ** (max_steps - 1):.3e}, {alpha0:.3e}]; "
        f"smallest residual seen {last_residual:.6g}"
    )
