"""Concave rate functions and the variational inequality they control.

A gamma table together with the tail sums of a reference vector ``x``
defines the piecewise-linear concave function

    phi(t) = 2 * min_n ( tail_n + gamma_n * t / (1 + c) ),

the best error bound available at residual level ``t``.  The minimum runs
over the table's levels ``n >= 1``; because the reference vector is finitely
supported, the level ``n = len(x)`` has zero tail and forces ``phi(0) = 0``
whenever the table reaches that far.  The companion check probes the
inequality

    beta * ||x - xdag||_1  <=  ||x||_1 - ||xdag||_1 + phi(||A x - A xdag||)

with ``beta = (1 - c) / (1 + c)`` on a battery of perturbations of ``xdag``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import ForwardOperator, IndexSetFamily, TruncatedSequence
from .certificates import GammaTable

__all__ = [
    "RateFunction",
    "ViReport",
    "compute_beta",
    "build_phi",
    "check_vi",
]


def compute_beta(c: float) -> float:
    """Map an interpolation constant ``c`` to the error-bound factor ``(1-c)/(1+c)``."""
    c = float(c)
    if not 0.0 <= c < 1.0:
        raise ValueError(f"c must lie in [0, 1), got {c}")
    return (1.0 - c) / (1.0 + c)


def _lower_envelope(slopes, intercepts, tags):
    """Lower envelope of ``a + s t`` on ``t >= 0``.

    Returns (breakpoints, seg_slopes, seg_intercepts, seg_tags); segment ``i``
    is active on ``[breakpoints[i], breakpoints[i+1])`` with the last one
    unbounded.  Breakpoints start at 0.
    """
    order = np.lexsort((intercepts, slopes))
    lines = []
    for i in order:
        s, a, tag = float(slopes[i]), float(intercepts[i]), tags[i]
        if lines and lines[-1][0] == s:
            continue  # same slope, larger-or-equal intercept: dominated
        lines.append((s, a, tag))
    # Keep only lines whose intercept strictly improves on every smaller slope.
    useful = []
    best_a = math.inf
    for s, a, tag in lines:
        if a < best_a:
            useful.append((s, a, tag))
            best_a = a
    # Largest slope now has the smallest intercept: active at t = 0.
    useful.reverse()
    kept: list[tuple[float, float, object]] = []
    bps: list[float] = []
    for s, a, tag in useful:
        while kept:
            s0, a0, _ = kept[-1]
            t_cross = (a - a0) / (s0 - s)
            if t_cross <= bps[-1]:
                kept.pop()
                bps.pop()
            else:
                break
        if not kept:
            kept.append((s, a, tag))
            bps.append(0.0)
        else:
            s0, a0, _ = kept[-1]
            kept.append((s, a, tag))
            bps.append((a - a0) / (s0 - s))
    return (
        np.asarray(bps),
        np.asarray([k[0] for k in kept]),
        np.asarray([k[1] for k in kept]),
        [k[2] for k in kept],
    )


@dataclass(frozen=True)
class RateFunction:
    """Piecewise-linear concave envelope ``t -> 2 min_n (tail_n + gamma_n t / (1+c))``.

    ``ns``, ``tails`` and ``gammas`` record the competing levels (``n >= 1``);
    ``tail0`` is the full l1 norm of the reference vector, kept for reporting
    but excluded from the minimum.  Evaluation is a binary search over the
    precomputed envelope segments.
    """

    family: IndexSetFamily
    c: float
    ns: tuple[int, ...]
    tails: tuple[float, ...]
    gammas: tuple[float, ...]
    tail0: float
    breakpoints: np.ndarray
    seg_slopes: np.ndarray
    seg_intercepts: np.ndarray
    seg_ns: tuple[int, ...]

    def __call__(self, t):
        t_arr = np.asarray(t, dtype=float)
        if np.any(t_arr < 0):
            raise ValueError("the rate function is defined for t >= 0 only")
        idx = np.searchsorted(self.breakpoints, t_arr, side="right") - 1
        val = self.seg_intercepts[idx] + self.seg_slopes[idx] * t_arr
        return float(val) if np.isscalar(t) or t_arr.ndim == 0 else val

    @property
    def phi0(self) -> float:
        """Value at zero residual: twice the smallest competing tail."""
        return float(self.seg_intercepts[0])

    def active_n(self, t: float) -> int:
        """Index achieving the minimum at ``t`` (the active envelope segment)."""
        if t < 0:
            raise ValueError("t must be nonnegative")
        idx = int(np.searchsorted(self.breakpoints, t, side="right")) - 1
        return self.seg_ns[idx]

    def segment_rows(self):
        """(t_break, phi(t_break), active_n) per envelope segment, for serialization."""
        return [
            (float(t), float(a + s * t), n)
            for t, s, a, n in zip(
                self.breakpoints, self.seg_slopes, self.seg_intercepts, self.seg_ns
            )
        ]


def build_phi(xdag: TruncatedSequence, table: GammaTable) -> RateFunction:
    """Assemble the rate function for a reference vector from a gamma table.

    The table must carry a certified interpolation constant; injectivity-only
    tables (``c is None``) are rejected.  A table reaching ``n = len(xdag)``
    guarantees ``phi(0) = 0`` exactly.
    """
    if table.c is None:
        raise ValueError(
            "gamma table has no certified interpolation constant; "
            "build the table through a certifying method first"
        )
    tails = np.array([table.family.tail(xdag, n) for n in table.ns])
    gammas = np.asarray(table.gammas)
    intercepts = 2.0 * tails
    slopes = 2.0 * gammas / (1.0 + table.c)
    bps, seg_s, seg_a, seg_ns = _lower_envelope(slopes, intercepts, list(table.ns))
    return RateFunction(
        family=table.family,
        c=table.c,
        ns=table.ns,
        tails=tuple(float(t) for t in tails),
        gammas=tuple(float(g) for g in gammas),
        tail0=xdag.l1_norm(),
        breakpoints=bps,
        seg_slopes=seg_s,
        seg_intercepts=seg_a,
        seg_ns=tuple(seg_ns),
    )


# ---------------------------------------------------------------------------
# variational inequality probing


@dataclass(frozen=True)
class ViReport:
    """Worst observed slack of the variational inequality over all samples.

    ``slack(x) = ||x||_1 - ||xdag||_1 + phi(||A(x - xdag)||) - beta ||x - xdag||_1``
    must be nonnegative when the gamma table behind ``phi`` is certified;
    ``violating_x`` is populated when some sample dips below ``-tol``.
    """

    beta: float
    samples_tested: int
    worst_slack: float
    worst_x: np.ndarray
    violating_x: np.ndarray | None
    seed: int
    tol: float

    @property
    def passed(self) -> bool:
        return self.violating_x is None


def check_vi(op: ForwardOperator, xdag: TruncatedSequence, beta: float,
             phi: RateFunction, n_samples: int = 10_000, seed: int = 0,
             tol: float = 1e-9) -> ViReport:
    """Probe the variational inequality on perturbations of ``xdag``.

    Four deterministic-then-random sample families: plain scalings, support
    truncations (every prefix plus random index sets), sign flips on the
    support, and dense Gaussian perturbations with magnitudes log-spaced in
    ``[1e-6, 1e1] * ||xdag||_1``.
    """
    if n_samples < 1:
        raise ValueError("n_samples must be positive")
    rng = np.random.default_rng(seed)
    x0 = xdag.coeffs
    dim = x0.size
    l1_ref = float(np.sum(np.abs(x0)))
    y_ref = op.apply(x0)

    candidates = []
    for s in (-2.0, -1.0, -0.5, 0.0, 0.25, 0.5, 0.75, 0.9, 0.99, 1.01, 1.1, 1.5, 2.0, 4.0):
        candidates.append(s * x0)
    for n in range(dim + 1):
        z = x0.copy()
        z[n:] = 0.0
        candidates.append(z)
    supp = np.nonzero(x0)[0]
    budget = max(0, n_samples - len(candidates))
    n_flip = budget // 3 if supp.size else 0
    n_trunc = budget // 3
    for _ in range(n_flip):
        size = int(rng.integers(1, supp.size + 1))
        flip = rng.choice(supp, size=size, replace=False)
        z = x0.copy()
        z[flip] *= -1.0
        candidates.append(z)
    for _ in range(n_trunc):
        size = int(rng.integers(0, dim + 1))
        keep = rng.choice(dim, size=size, replace=False)
        z = np.zeros(dim)
        z[keep] = x0[keep]
        candidates.append(z)
    scales = np.geomspace(1e-6, 1e1, num=13) * max(l1_ref, 1e-12)
    while len(candidates) < n_samples:
        g = rng.standard_normal(dim)
        norm = np.sum(np.abs(g))
        if norm == 0.0:
            continue
        scale = scales[len(candidates) % len(scales)]
        candidates.append(x0 + (scale / norm) * g)
    candidates = candidates[:n_samples]

    worst = math.inf
    worst_x = x0.copy()
    for z in candidates:
        diff = z - x0
        resid = op.norm_y(op.apply(z) - y_ref)
        slack = (
            float(np.sum(np.abs(z))) - l1_ref + phi(resid)
            - beta * float(np.sum(np.abs(diff)))
        )
        if slack < worst:
            worst = slack
            worst_x = z.copy()
    violating = worst_x.copy() if worst < -tol else None
    return ViReport(
        beta=float(beta),
        samples_tested=len(candidates),
        worst_slack=float(worst),
        worst_x=worst_x,
        violating_x=violating,
        seed=seed,
        tol=tol,
    )
