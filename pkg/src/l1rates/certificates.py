"""Dual certificates and the sparsity constants behind the error bounds.

For a sign pattern ``xi`` on a support ``S`` the canonical certificate is the
minimum-Euclidean-norm dual vector ``eta`` with ``[A* eta]_k = xi_k`` on ``S``.
Its norm, maximized over patterns, yields the constant ``gamma_n``; the
off-support values of ``A* eta`` decide whether the interpolation condition
holds with a constant ``c < 1``.  Certificate solves are available only for
Euclidean data norms, where the minimum-norm solution comes from the normal
equations; lq embeddings have closed-form duals, and sup-norm operators get
their constants from analytic bounds instead (see :mod:`l1rates.harness`).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from itertools import combinations, product

import numpy as np

from .core import (
    DenseOperator,
    ForwardOperator,
    IndexSetFamily,
    LqEmbedding,
    SignPattern,
    TruncatedSequence,
    conjugate_exponent,
)

__all__ = [
    "SingularSupportError",
    "BudgetExceededError",
    "CertificationError",
    "UnsupportedOperatorError",
    "CertificateReport",
    "GammaTable",
    "BruteForceGamma",
    "InjectivityReport",
    "SmoothBasisReport",
    "NonsmoothBasisReport",
    "AssumptionCertificate",
    "find_certificate",
    "min_norm_dual",
    "brute_force_gamma",
    "brute_force_gamma_detail",
    "check_restricted_injectivity",
    "smooth_basis_check",
    "nonsmooth_basis_check",
    "certify_assumption",
    "analytic_gamma_table",
    "assemble_assumption",
    "GAMMA_INFINITE",
]

#: Sentinel reported when restricted injectivity fails on some support.
#: Callers must check ``math.isinf`` before doing arithmetic with a gamma.
GAMMA_INFINITE = math.inf

TOL_EQ = 1e-8


class SingularSupportError(RuntimeError):
    """The reduced system on a support is singular (injectivity fails there)."""


class BudgetExceededError(RuntimeError):
    """Requested enumeration exceeds the configured work budget."""


class CertificationError(RuntimeError):
    """No available method certifies the interpolation conditions."""


class UnsupportedOperatorError(TypeError):
    """The operation is not defined for this operator kind / data norm."""


# ---------------------------------------------------------------------------
# helpers


def _euclidean_matrix(op: ForwardOperator) -> np.ndarray:
    """Dense matrix of an operator whose data norm is Euclidean."""
    if isinstance(op, DenseOperator) and op.is_euclidean:
        return op.matrix
    if isinstance(op, LqEmbedding) and op.q == 2.0:
        return np.eye(op.dim)
    raise UnsupportedOperatorError(
        f"certificate solves need a Euclidean data norm; {op.kind} operator "
        "with this norm is not supported"
    )


def min_norm_dual(op: ForwardOperator, pattern: SignPattern,
                  tol_eq: float = TOL_EQ) -> np.ndarray:
    """Minimum-norm ``eta`` with ``[A* eta]_k = xi_k`` on the pattern's support.

    Raises :class:`SingularSupportError` when the interpolation system has no
    solution, i.e. the columns on the support are linearly dependent.
    """
    matrix = _euclidean_matrix(op)
    if pattern.support[-1] >= op.dim:
        raise ValueError(
            f"pattern support {pattern.support} exceeds truncation length {op.dim}"
        )
    cols = matrix[:, list(pattern.support)]
    xi = np.asarray(pattern.signs, dtype=float)
    eta, _, rank, _ = np.linalg.lstsq(cols.T, xi, rcond=None)
    if rank < len(pattern) or np.max(np.abs(cols.T @ eta - xi)) > tol_eq:
        raise SingularSupportError(
            f"columns on support {pattern.support} are linearly dependent; "
            "no dual vector interpolates the signs"
        )
    return eta


@dataclass(frozen=True)
class CertificateReport:
    """Outcome of a certificate solve for one sign pattern."""

    pattern: SignPattern
    eta: np.ndarray
    eta_norm: float
    on_support_residual: float
    off_support_sup: float
    c_target: float
    passed: bool


def find_certificate(op: ForwardOperator, pattern: SignPattern, c_target: float,
                     tol_eq: float = TOL_EQ) -> CertificateReport:
    """Construct the canonical dual certificate for one sign pattern.

    For ``c_target > 0`` this is the minimum-norm solution of the on-support
    interpolation system; the off-support values of ``A* eta`` are then
    measured against ``c_target``.  For ``c_target = 0`` the off-support
    values must vanish, so the full system ``A* eta = xi`` (zeros off the
    support) is solved instead; ``passed`` then reports whether that exact
    interpolation is achievable at all.
    """
    if c_target < 0:
        raise ValueError("c_target must be nonnegative")
    matrix = _euclidean_matrix(op)
    supp = list(pattern.support)
    if supp[-1] >= op.dim:
        raise ValueError(
            f"pattern support {pattern.support} exceeds truncation length {op.dim}"
        )
    if c_target == 0:
        xi_full = pattern.as_vector(op.dim)
        eta, _, _, _ = np.linalg.lstsq(matrix.T, xi_full, rcond=None)
    else:
        eta = min_norm_dual(op, pattern, tol_eq=tol_eq)
    interp = matrix.T @ eta
    off = np.delete(interp, supp)
    on_res = float(np.max(np.abs(interp[supp] - np.asarray(pattern.signs, dtype=float))))
    off_sup = float(np.max(np.abs(off))) if off.size else 0.0
    passed = on_res <= tol_eq and off_sup <= c_target + tol_eq
    return CertificateReport(
        pattern=pattern,
        eta=eta,
        eta_norm=float(np.linalg.norm(eta)),
        on_support_residual=on_res,
        off_support_sup=off_sup,
        c_target=float(c_target),
        passed=passed,
    )


# ---------------------------------------------------------------------------
# gamma tables


@dataclass(frozen=True)
class GammaTable:
    """Constants ``gamma_n`` for a family of index sets, with provenance.

    ``c`` is the interpolation constant the table was certified with, or
    ``None`` when only the injectivity half of the conditions is covered
    (analytic sup-norm bounds).  Entries from brute-force enumeration must be
    nondecreasing in ``n``; that is asserted at construction.
    """

    family: IndexSetFamily
    ns: tuple[int, ...]
    gammas: tuple[float, ...]
    c: float | None
    methods: tuple[str, ...]

    def __post_init__(self):
        ns = tuple(int(n) for n in self.ns)
        gammas = tuple(float(g) for g in self.gammas)
        methods = tuple(str(m) for m in self.methods)
        if not (len(ns) == len(gammas) == len(methods)) or not ns:
            raise ValueError("ns, gammas and methods must be nonempty and aligned")
        if any(n1 >= n2 for n1, n2 in zip(ns, ns[1:])):
            raise ValueError("ns must be strictly increasing")
        if ns[0] < 1:
            raise ValueError("gamma entries start at n = 1")
        if any(not math.isfinite(g) or g <= 0 for g in gammas):
            raise ValueError("gammas must be finite and positive")
        if self.c is not None and not (0 <= self.c < 1):
            raise ValueError(f"certified c must lie in [0, 1), got {self.c}")
        for (g1, m1), (g2, m2) in zip(zip(gammas, methods), zip(gammas[1:], methods[1:])):
            if m1 == m2 == "brute-force" and g2 < g1 * (1 - 1e-12):
                raise ValueError(
                    f"brute-force gammas must be nondecreasing, got {g1} then {g2}"
                )
        object.__setattr__(self, "ns", ns)
        object.__setattr__(self, "gammas", gammas)
        object.__setattr__(self, "methods", methods)
        object.__setattr__(self, "c", None if self.c is None else float(self.c))

    def gamma(self, n: int) -> float:
        try:
            return self.gammas[self.ns.index(n)]
        except ValueError:
            raise KeyError(f"no gamma entry for n = {n}") from None

    @property
    def n_max(self) -> int:
        return self.ns[-1]

    @property
    def method(self) -> str:
        uniq = set(self.methods)
        return self.methods[0] if len(uniq) == 1 else "mixed"

    def rows(self):
        """(n, gamma, c, method) rows for serialization."""
        c = "" if self.c is None else self.c
        return [(n, g, c, m) for n, g, m in zip(self.ns, self.gammas, self.methods)]

    @classmethod
    def uniform(cls, family, ns, gammas, c, method) -> "GammaTable":
        ns = tuple(ns)
        return cls(family, ns, tuple(gammas), c, (method,) * len(ns))


@dataclass(frozen=True)
class BruteForceGamma:
    """Value and witness of a brute-force gamma enumeration.

    ``gamma`` is ``GAMMA_INFINITE`` (and ``finite`` is False) when some
    support in the family has linearly dependent columns; the witness then
    names the first such support.
    """

    n: int
    family: IndexSetFamily
    gamma: float
    support: tuple[int, ...]
    signs: tuple[int, ...] | None
    patterns_checked: int

    @property
    def finite(self) -> bool:
        return math.isfinite(self.gamma)


def _dual_norm_embedding(op: LqEmbedding, signs) -> float:
    qc = conjugate_exponent(op.q)
    s = len(signs)
    # All signs are +-1, so the dual lq' norm of the pattern is s**(1/q').
    return float(s ** (1.0 / qc))


def _enumeration_budget(pool: int, n: int, budget: int, sizes=None):
    total = 0
    for s in sizes or (n,):
        total += math.comb(pool, s) * 2**s
    if total > budget:
        raise BudgetExceededError(
            f"enumeration needs {total} certificate solves, exceeding the budget {budget}"
        )
    return total


def brute_force_gamma_detail(op: ForwardOperator, n: int,
                             family: IndexSetFamily = IndexSetFamily.ALL_SUBSETS,
                             budget: int = 10**6,
                             tol_eq: float = TOL_EQ) -> BruteForceGamma:
    """Maximize the canonical certificate norm over all size-``n`` patterns.

    Enumerates every support of the family and every sign choice on it; the
    reported witness is the lexicographically smallest maximizer.  By duality
    this value is the best restricted-injectivity constant: the smallest
    ``gamma`` with ``||x||_1 <= gamma ||A x||`` for all ``n``-sparse ``x``.
    """
    if isinstance(op, LqEmbedding):
        dual = lambda supp, signs: _dual_norm_embedding(op, signs)  # noqa: E731
    else:
        _euclidean_matrix(op)  # raises UnsupportedOperatorError early

        def dual(supp, signs):
            eta = min_norm_dual(op, SignPattern(supp, signs), tol_eq=tol_eq)
            return float(np.linalg.norm(eta))

    pool = n if family is IndexSetFamily.PREFIX else op.dim
    checked = _enumeration_budget(pool, n, budget)
    best = -math.inf
    best_supp: tuple[int, ...] = ()
    best_signs: tuple[int, ...] | None = None
    for supp in family.supports(op.dim, n):
        for signs in product((-1, 1), repeat=n):
            try:
                val = dual(supp, signs)
            except SingularSupportError:
                return BruteForceGamma(n, family, GAMMA_INFINITE, supp, None, checked)
            if val > best:
                best, best_supp, best_signs = val, supp, signs
    return BruteForceGamma(n, family, best, best_supp, best_signs, checked)


def brute_force_gamma(op: ForwardOperator, n: int,
                      family: IndexSetFamily = IndexSetFamily.ALL_SUBSETS,
                      budget: int = 10**6) -> float:
    """Best restricted-injectivity constant for sparsity ``n`` (see detail variant)."""
    return brute_force_gamma_detail(op, n, family, budget).gamma


# ---------------------------------------------------------------------------
# sampling check


@dataclass(frozen=True)
class InjectivityReport:
    n: int
    gamma: float
    samples: int
    violations: int
    worst_ratio: float
    worst_x: np.ndarray
    seed: int

    @property
    def passed(self) -> bool:
        return self.violations == 0


def check_restricted_injectivity(op: ForwardOperator, n: int, gamma: float,
                                 samples: int = 1000, seed: int = 0,
                                 rel_tol: float = 1e-9) -> InjectivityReport:
    """Probe ``||x||_1 <= gamma ||A x||`` on random vectors with at most ``n``
    nonzero coefficients.

    ``worst_ratio`` is the largest observed ``||x||_1 / (gamma ||A x||)``; a
    sample counts as a violation when that ratio exceeds ``1 + rel_tol``.
    """
    if not math.isfinite(gamma) or gamma <= 0:
        raise ValueError(f"gamma must be finite and positive, got {gamma}")
    if not 1 <= n <= op.dim:
        raise ValueError(f"sparsity must be in [1, {op.dim}], got {n}")
    rng = np.random.default_rng(seed)
    worst = -math.inf
    worst_x = np.zeros(op.dim)
    violations = 0
    for _ in range(samples):
        size = int(rng.integers(1, n + 1))
        supp = rng.choice(op.dim, size=size, replace=False)
        x = np.zeros(op.dim)
        x[supp] = rng.standard_normal(size)
        if not np.any(x):
            continue
        lhs = float(np.sum(np.abs(x)))
        rhs = gamma * op.norm_y(op.apply(x))
        ratio = lhs / rhs if rhs > 0 else math.inf
        if ratio > worst:
            worst, worst_x = ratio, x.copy()
        if ratio > 1.0 + rel_tol:
            violations += 1
    return InjectivityReport(n, float(gamma), samples, violations, worst, worst_x, seed)


# ---------------------------------------------------------------------------
# basis constructions


@dataclass(frozen=True)
class SmoothBasisReport:
    """Per-coordinate source elements ``f_k`` with ``A* f_k = e_k``, if solvable.

    ``failed_at`` is the first storage position whose unit vector is not in
    the range of ``A*``; ``table`` is present only on full success.
    """

    k_max: int
    source_norms: tuple[float, ...]
    residuals: tuple[float, ...]
    failed_at: int | None
    table: GammaTable | None

    @property
    def ok(self) -> bool:
        return self.failed_at is None


def smooth_basis_check(op: ForwardOperator, k_max: int,
                       tol_eq: float = TOL_EQ) -> SmoothBasisReport:
    """Try to represent the first ``k_max`` unit vectors as ``A* f``.

    Success yields the prefix-family table ``gamma_n = sum_{k<n} ||f_k||``
    with interpolation constant 0; failure is reported, not raised.
    """
    matrix = _euclidean_matrix(op)
    if not 1 <= k_max <= op.dim:
        raise ValueError(f"k_max must be in [1, {op.dim}], got {k_max}")
    norms, residuals = [], []
    for k in range(k_max):
        e_k = np.zeros(op.dim)
        e_k[k] = 1.0
        f, _, _, _ = np.linalg.lstsq(matrix.T, e_k, rcond=None)
        res = float(np.max(np.abs(matrix.T @ f - e_k)))
        residuals.append(res)
        if res > tol_eq:
            return SmoothBasisReport(k_max, tuple(norms), tuple(residuals), k, None)
        norms.append(float(np.linalg.norm(f)))
    gammas = np.cumsum(norms)
    table = GammaTable.uniform(
        IndexSetFamily.PREFIX, range(1, k_max + 1), gammas, 0.0, "smooth-basis"
    )
    return SmoothBasisReport(k_max, tuple(norms), tuple(residuals), None, table)


@dataclass(frozen=True)
class NonsmoothBasisReport:
    """Level-``n`` interpolation sources and the off-block constant they induce.

    ``c_est`` is the largest column-sum of ``|[A* f_k]_l|`` over positions
    ``l >= n``; the construction certifies the interpolation conditions at
    level ``n`` exactly when all systems are solvable and ``c_est < 1``.
    """

    n: int
    source_norms: tuple[float, ...]
    residuals: tuple[float, ...]
    c_est: float
    gamma_n: float
    failed_at: int | None
    sources: np.ndarray

    @property
    def ok(self) -> bool:
        return self.failed_at is None and self.c_est < 1.0


def nonsmooth_basis_check(op: ForwardOperator, n: int,
                          tol_eq: float = TOL_EQ) -> NonsmoothBasisReport:
    """Solve ``[A* f_k]_l = delta_kl`` for ``l < n`` and measure the rest.

    Works coordinate-by-coordinate on the leading block of size ``n``; the
    minimum-norm sources determine ``gamma_n = sum_k ||f_k||`` and the
    off-block estimate ``c_est``.
    """
    matrix = _euclidean_matrix(op)
    if not 1 <= n <= op.dim:
        raise ValueError(f"n must be in [1, {op.dim}], got {n}")
    block = matrix[:, :n].T  # n constraints, one row per leading position
    norms, residuals, sources = [], [], []
    for k in range(n):
        e_k = np.zeros(n)
        e_k[k] = 1.0
        f, _, _, _ = np.linalg.lstsq(block, e_k, rcond=None)
        res = float(np.max(np.abs(block @ f - e_k)))
        residuals.append(res)
        if res > tol_eq:
            return NonsmoothBasisReport(
                n, tuple(norms), tuple(residuals), math.nan, math.nan, k,
                np.array(sources).T if sources else np.zeros((matrix.shape[0], 0)),
            )
        norms.append(float(np.linalg.norm(f)))
        sources.append(f)
    F = np.column_stack(sources)          # one source per leading position
    interp = matrix.T @ F                 # [A* f_k]_l
    off_rows = np.abs(interp[n:, :])
    c_est = float(off_rows.sum(axis=1).max()) if off_rows.size else 0.0
    return NonsmoothBasisReport(
        n, tuple(norms), tuple(residuals), c_est, float(np.sum(norms)), None, F
    )


# ---------------------------------------------------------------------------
# assumption assembly


@dataclass(frozen=True)
class AssumptionCertificate:
    """A gamma table together with the interpolation constant it was checked at.

    ``certified`` means: every enumerated sign pattern admits a dual vector
    that interpolates its signs within ``tol_eq`` and stays below ``c`` off
    the support.  ``c_target_met`` additionally compares against the caller's
    requested constant.
    """

    table: GammaTable
    c_est: float
    c_target: float
    certified: bool
    on_support_max: float
    patterns_checked: int

    @property
    def c_target_met(self) -> bool:
        return self.certified and self.c_est <= self.c_target + TOL_EQ


def certify_assumption(op: ForwardOperator, family: IndexSetFamily, n_max: int,
                       c_target: float, tol_eq: float = TOL_EQ,
                       budget: int = 10**6,
                       exact_zero: bool | None = None) -> AssumptionCertificate:
    """Enumerate every sign pattern up to sparsity ``n_max`` and certify.

    The canonical (minimum-norm) dual vector is built per pattern; its norm
    feeds the gamma table, its off-support sup the constant estimate.  With
    ``exact_zero`` (default exactly when ``c_target == 0``) the full-equality
    system is solved instead, forcing off-support values to vanish.

    Patterns with support strictly inside a family set are enumerated too:
    the constant must hold for all of them, not only the full-support ones.
    """
    if not 1 <= n_max <= op.dim:
        raise ValueError(f"n_max must be in [1, {op.dim}], got {n_max}")
    if c_target < 0:
        raise ValueError("c_target must be nonnegative")
    if exact_zero is None:
        exact_zero = c_target == 0

    if isinstance(op, LqEmbedding):
        qc = conjugate_exponent(op.q)
        gammas = [n ** (1.0 / qc) for n in range(1, n_max + 1)]
        table = GammaTable.uniform(family, range(1, n_max + 1), gammas, 0.0, "analytic")
        return AssumptionCertificate(table, 0.0, float(c_target), True, 0.0, 0)

    matrix = _euclidean_matrix(op)
    pool = n_max if family is IndexSetFamily.PREFIX else op.dim
    sizes = range(1, n_max + 1)
    checked = _enumeration_budget(pool, n_max, budget, sizes=sizes)

    # gamma by "level": the smallest n whose family set contains the support.
    level_max = np.zeros(n_max + 1)
    c_est = 0.0
    on_max = 0.0
    certified = True
    count = 0
    for s in sizes:
        for supp in combinations(range(pool), s):
            level = (supp[-1] + 1) if family is IndexSetFamily.PREFIX else s
            for signs in product((-1, 1), repeat=s):
                count += 1
                pattern = SignPattern(supp, signs)
                if exact_zero:
                    xi_full = pattern.as_vector(op.dim)
                    eta, _, _, _ = np.linalg.lstsq(matrix.T, xi_full, rcond=None)
                else:
                    try:
                        eta = min_norm_dual(op, pattern, tol_eq=tol_eq)
                    except SingularSupportError:
                        raise CertificationError(
                            f"restricted injectivity fails on support {supp}; "
                            "no finite gamma exists for this family"
                        ) from None
                interp = matrix.T @ eta
                on_res = float(np.max(np.abs(interp[list(supp)] - np.asarray(signs, float))))
                off = np.delete(interp, list(supp))
                off_sup = float(np.max(np.abs(off))) if off.size else 0.0
                on_max = max(on_max, on_res)
                c_est = max(c_est, off_sup)
                if on_res > tol_eq:
                    certified = False
                level_max[level] = max(level_max[level], float(np.linalg.norm(eta)))
    gammas = np.maximum.accumulate(level_max)[1:]
    if np.any(gammas <= 0):
        raise CertificationError("enumeration produced a nonpositive gamma; check the operator")
    if c_est >= 1.0 - 1e-12:
        certified = False
    table = GammaTable.uniform(
        family, range(1, n_max + 1), gammas,
        c_est if certified else None, "brute-force",
    )
    return AssumptionCertificate(
        table, c_est, float(c_target), certified, on_max, count
    )


def analytic_gamma_table(op: ForwardOperator, family: IndexSetFamily,
                         n_max: int) -> GammaTable:
    """Closed-form gamma tables.

    lq embeddings get the exact ``gamma_n = n**(1 - 1/q)`` with constant 0.
    Sup-norm trigonometric operators get the Turan-Nazarov injectivity bound
    ``gamma_n = (14 / |E|)**(n-1)``; that table carries ``c = None`` because
    the analytic argument says nothing about off-support interpolation.
    """
    if n_max < 1:
        raise ValueError("n_max must be positive")
    ns = range(1, n_max + 1)
    if isinstance(op, LqEmbedding):
        qc = conjugate_exponent(op.q)
        gammas = [n ** (1.0 / qc) for n in ns]
        return GammaTable.uniform(family, ns, gammas, 0.0, "analytic")
    if hasattr(op, "measure"):  # wiener kinds
        ratio = 14.0 / op.measure
        gammas = [ratio ** (n - 1) for n in ns]
        return GammaTable.uniform(family, ns, gammas, None, "analytic")
    raise UnsupportedOperatorError(
        f"no analytic gamma formula for operator kind {op.kind!r}"
    )


def assemble_assumption(op: ForwardOperator, family: IndexSetFamily, n_max: int,
                        c_target: float = 0.99, method: str = "auto",
                        tol_eq: float = TOL_EQ,
                        budget: int = 10**6) -> AssumptionCertificate:
    """Certify the interpolation conditions up to ``n_max`` by the cheapest route.

    Dispatch for ``method="auto"``:

    * lq embeddings: exact analytic table, constant 0;
    * Euclidean dense, prefix family: coordinate source elements if they
      exist (constant 0), then the level-``n`` interpolation construction,
      then brute-force enumeration;
    * Euclidean dense, all subsets: brute-force enumeration;
    * anything else: :class:`CertificationError` -- sup-norm operators only
      carry analytic injectivity constants (see :func:`analytic_gamma_table`).

    Raises :class:`CertificationError` when no route certifies at ``c < 1``
    or the requested ``c_target`` is missed.
    """
    if method not in ("auto", "analytic", "smooth-basis", "nonsmooth-basis", "brute-force"):
        raise ValueError(f"unknown method {method!r}")

    def check(cert: AssumptionCertificate) -> AssumptionCertificate:
        if not cert.certified:
            raise CertificationError(
                f"certification failed: c_est = {cert.c_est:.6g} (need < 1), "
                f"on-support residual {cert.on_support_max:.3g}"
            )
        if cert.c_est > cert.c_target + tol_eq:
            raise CertificationError(
                f"certified constant c = {cert.c_est:.6g} exceeds target {cert.c_target}"
            )
        return cert

    if method == "analytic" or (method == "auto" and isinstance(op, LqEmbedding)):
        table = analytic_gamma_table(op, family, n_max)
        if table.c is None:
            raise CertificationError(
                "analytic table certifies injectivity only; off-support "
                "interpolation is open for sup-norm operators"
            )
        return check(AssumptionCertificate(table, table.c, float(c_target), True, 0.0, 0))

    if method == "smooth-basis":
        report = smooth_basis_check(op, n_max, tol_eq=tol_eq)
        if not report.ok:
            raise CertificationError(
                f"coordinate source element missing at position {report.failed_at}"
            )
        return check(AssumptionCertificate(report.table, 0.0, float(c_target), True,
                                           max(report.residuals), n_max))

    if method == "nonsmooth-basis":
        return check(_nonsmooth_table(op, family, n_max, c_target, tol_eq))

    if method == "brute-force":
        return check(certify_assumption(op, family, n_max, c_target,
                                        tol_eq=tol_eq, budget=budget))

    # method == "auto", non-embedding
    if not (isinstance(op, DenseOperator) and op.is_euclidean):
        raise CertificationError(
            f"no automatic certification for {op.kind} with this data norm; "
            "sup-norm operators: use analytic_gamma_table for injectivity constants"
        )
    if family is IndexSetFamily.PREFIX:
        report = smooth_basis_check(op, n_max, tol_eq=tol_eq)
        if report.ok:
            return check(AssumptionCertificate(report.table, 0.0, float(c_target), True,
                                               max(report.residuals), n_max))
        try:
            return check(_nonsmooth_table(op, family, n_max, c_target, tol_eq))
        except CertificationError:
            pass
    return check(certify_assumption(op, family, n_max, c_target,
                                    tol_eq=tol_eq, budget=budget))


def _nonsmooth_table(op, family, n_max, c_target, tol_eq) -> AssumptionCertificate:
    if family is not IndexSetFamily.PREFIX:
        raise CertificationError(
            "the level-n interpolation construction covers the prefix family only"
        )
    gammas, c_est, on_max = [], 0.0, 0.0
    for n in range(1, n_max + 1):
        report = nonsmooth_basis_check(op, n, tol_eq=tol_eq)
        if report.failed_at is not None:
            raise CertificationError(
                f"interpolation system unsolvable at level {n}, position {report.failed_at}"
            )
        gammas.append(report.gamma_n)
        c_est = max(c_est, report.c_est)
        on_max = max(on_max, max(report.residuals))
    certified = c_est < 1.0 - 1e-12
    table = GammaTable.uniform(
        family, range(1, n_max + 1), gammas,
        c_est if certified else None, "nonsmooth-basis",
    )
    return AssumptionCertificate(table, c_est, float(c_target), certified, on_max, n_max)
