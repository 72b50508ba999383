"""Finite coefficient truncations, sign patterns, and forward operators.

Everything downstream works on a truncation of length ``N``: a coefficient
vector ``x`` with storage positions ``0..N-1`` standing for logical indices
``index_origin .. index_origin+N-1``.  Frequency-indexed problems use a
negative origin (positions map to frequencies ``-K..K``); everything else
leaves the origin at zero.

Four operator kinds are supported:

* ``dense-matrix``     -- an explicit matrix into R^m (Euclidean or lq data norm),
* ``lq-embedding``     -- the identity viewed as a map into lq, ``q in (1, inf]``,
* ``wiener-restriction``    -- trigonometric polynomial evaluation restricted
  to a union of intervals ``E`` in ``[0, 1)``, sup norm over a sample grid,
* ``wiener-multiplication`` -- evaluation followed by multiplication with a
  weight ``g`` with ``0 < g <= 1`` and ``g >= 1`` on ``E``.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from enum import Enum
from itertools import combinations

import numpy as np

__all__ = [
    "ConfigError",
    "DimensionMismatchError",
    "TruncatedSequence",
    "SignPattern",
    "IndexSetFamily",
    "ForwardOperator",
    "DenseOperator",
    "LqEmbedding",
    "WienerRestriction",
    "WienerMultiplication",
    "trig_poly_samples",
    "lq_norm",
    "conjugate_exponent",
    "operator_from_config",
    "load_operator",
]


class ConfigError(ValueError):
    """Malformed operator or experiment configuration."""


class DimensionMismatchError(ValueError):
    """Operand length does not match the operator's truncation."""


def lq_norm(y: np.ndarray, q: float) -> float:
    """lq norm of a vector; ``q = math.inf`` gives the max norm."""
    y = np.abs(np.asarray(y))
    if y.size == 0:
        return 0.0
    if math.isinf(q):
        return float(y.max())
    return float(np.sum(y**q) ** (1.0 / q))


def conjugate_exponent(q: float) -> float:
    """Solve 1/q + 1/q' = 1 for q'; ``q = inf`` maps to 1."""
    if math.isinf(q):
        return 1.0
    if q <= 1.0:
        raise ValueError(f"conjugate exponent requires q > 1, got {q}")
    return q / (q - 1.0)


# ---------------------------------------------------------------------------
# coefficient vectors


@dataclass(frozen=True)
class TruncatedSequence:
    """Finitely supported coefficient vector with an index offset."""

    coeffs: np.ndarray
    index_origin: int = 0

    def __post_init__(self):
        arr = np.atleast_1d(np.asarray(self.coeffs, dtype=float))
        if arr.ndim != 1 or arr.size == 0:
            raise ValueError("coeffs must be a nonempty one-dimensional array")
        if not np.all(np.isfinite(arr)):
            raise ValueError("coeffs must be finite")
        object.__setattr__(self, "coeffs", arr)
        object.__setattr__(self, "index_origin", int(self.index_origin))

    def __len__(self) -> int:
        return self.coeffs.size

    def l1_norm(self) -> float:
        return float(np.sum(np.abs(self.coeffs)))

    def support(self) -> tuple[int, ...]:
        """Storage positions with nonzero coefficient."""
        return tuple(int(k) for k in np.nonzero(self.coeffs)[0])

    def logical_indices(self) -> np.ndarray:
        return np.arange(len(self)) + self.index_origin

    def project(self, indices) -> "TruncatedSequence":
        """Keep coefficients at the given storage positions, zero all others.

        Idempotent: projecting twice onto the same set is a no-op.
        """
        keep = np.zeros(len(self), dtype=bool)
        idx = np.asarray(sorted(set(int(i) for i in indices)), dtype=int)
        if idx.size and (idx[0] < 0 or idx[-1] >= len(self)):
            bad = idx[(idx < 0) | (idx >= len(self))]
            raise IndexError(
                f"projection indices must lie in [0, {len(self)}), got {bad.tolist()}"
            )
        keep[idx] = True
        return TruncatedSequence(np.where(keep, self.coeffs, 0.0), self.index_origin)

    def sorted_tail(self, n: int) -> float:
        """l1 mass outside the best index set of size ``n``.

        Equals the sum of all but the ``n`` largest coefficient magnitudes,
        which is the minimum of ``||x - P_M x||_1`` over all ``|M| = n``.
        """
        if n < 0:
            raise ValueError("n must be nonnegative")
        mags = np.sort(np.abs(self.coeffs))
        if n >= mags.size:
            return 0.0
        return float(np.sum(mags[: mags.size - n]))

    def prefix_tail(self, n: int) -> float:
        """l1 mass at storage positions ``>= n``."""
        if n < 0:
            raise ValueError("n must be nonnegative")
        return float(np.sum(np.abs(self.coeffs[n:])))


@dataclass(frozen=True)
class SignPattern:
    """A choice of signs (+1/-1) on a finite, sorted support set."""

    support: tuple[int, ...]
    signs: tuple[int, ...]

    def __post_init__(self):
        supp = tuple(int(k) for k in self.support)
        sgns = tuple(int(s) for s in self.signs)
        if len(supp) == 0:
            raise ValueError("sign pattern must have nonempty support")
        if len(supp) != len(set(supp)):
            raise ValueError("support positions must be distinct")
        if supp != tuple(sorted(supp)):
            raise ValueError("support must be sorted")
        if any(k < 0 for k in supp):
            raise ValueError("support positions must be nonnegative")
        if len(sgns) != len(supp):
            raise ValueError("one sign per support position required")
        if any(s not in (-1, 1) for s in sgns):
            raise ValueError("signs must be +1 or -1")
        object.__setattr__(self, "support", supp)
        object.__setattr__(self, "signs", sgns)

    def __len__(self) -> int:
        return len(self.support)

    @classmethod
    def from_vector(cls, xi) -> "SignPattern":
        xi = np.asarray(xi, dtype=float)
        supp = np.nonzero(xi)[0]
        if supp.size == 0:
            raise ValueError("cannot extract a sign pattern from the zero vector")
        return cls(tuple(int(k) for k in supp), tuple(int(np.sign(xi[k])) for k in supp))

    def as_vector(self, length: int) -> np.ndarray:
        if self.support[-1] >= length:
            raise ValueError(f"support position {self.support[-1]} exceeds length {length}")
        xi = np.zeros(length)
        xi[list(self.support)] = self.signs
        return xi


class IndexSetFamily(Enum):
    """Which index sets compete in tail bounds and certificate enumeration.

    ``PREFIX`` uses only the leading block ``{0..n-1}`` at sparsity level n;
    ``ALL_SUBSETS`` uses every subset of size n.
    """

    PREFIX = "prefix"
    ALL_SUBSETS = "all-subsets"

    def tail(self, x: TruncatedSequence, n: int) -> float:
        if self is IndexSetFamily.PREFIX:
            return x.prefix_tail(n)
        return x.sorted_tail(n)

    def supports(self, length: int, n: int):
        """Iterate the size-``n`` index sets of this family, lexicographically."""
        if not 1 <= n <= length:
            raise ValueError(f"support size must be in [1, {length}], got {n}")
        if self is IndexSetFamily.PREFIX:
            yield tuple(range(n))
        else:
            yield from combinations(range(length), n)

    @classmethod
    def from_label(cls, label: str) -> "IndexSetFamily":
        for fam in cls:
            if fam.value == label:
                return fam
        raise ConfigError(f"unknown index-set family {label!r}")


# ---------------------------------------------------------------------------
# forward operators


class ForwardOperator:
    """Bounded linear map from the truncation into a data space.

    Subclasses set ``kind``, ``dim`` (truncation length), ``index_origin``
    and implement ``apply``, ``norm_y``, ``adjoint`` and ``column_norms``.
    ``apply`` accepts either a :class:`TruncatedSequence` or a plain array.
    """

    kind: str = "abstract"
    dim: int = 0
    index_origin: int = 0

    def _coeffs(self, x) -> np.ndarray:
        arr = x.coeffs if isinstance(x, TruncatedSequence) else np.asarray(x, dtype=float)
        if arr.shape != (self.dim,):
            raise DimensionMismatchError(
                f"{self.kind} operator expects length {self.dim}, got shape {arr.shape}"
            )
        return arr

    def apply(self, x) -> np.ndarray:
        raise NotImplementedError

    def norm_y(self, y) -> float:
        raise NotImplementedError

    def adjoint(self, eta) -> np.ndarray:
        raise NotImplementedError

    def column_norms(self) -> np.ndarray:
        """Data-space norms of the coordinate images ``A e_k``."""
        raise NotImplementedError

    @property
    def is_euclidean(self) -> bool:
        """True when the data norm is the Euclidean norm on R^m."""
        return False

    def wrap(self, coeffs) -> TruncatedSequence:
        return TruncatedSequence(coeffs, self.index_origin)


class DenseOperator(ForwardOperator):
    """Explicit m-by-N matrix; data norm Euclidean (default) or lq.

    ``check_injectivity=False`` admits rank-deficient matrices, for probing
    what the certificate machinery reports on them.
    """

    kind = "dense-matrix"

    def __init__(self, matrix, y_norm: str = "euclidean", q: float | None = None,
                 check_injectivity: bool = True):
        matrix = np.asarray(matrix, dtype=float)
        if matrix.ndim != 2 or matrix.size == 0:
            raise ValueError("matrix must be two-dimensional and nonempty")
        if not np.all(np.isfinite(matrix)):
            raise ValueError("matrix entries must be finite")
        if y_norm not in ("euclidean", "lq"):
            raise ConfigError(f"unknown y_norm {y_norm!r}")
        if y_norm == "lq":
            if q is None or not (q > 1):
                raise ConfigError("lq data norm requires q > 1")
        self.matrix = matrix
        self.y_norm_kind = y_norm
        self.q = float(q) if q is not None else None
        self.dim = matrix.shape[1]
        self.codim = matrix.shape[0]
        self.index_origin = 0
        if check_injectivity:
            rank = np.linalg.matrix_rank(matrix)
            if rank < self.dim:
                raise ValueError(
                    f"matrix has rank {rank} < {self.dim}; not injective on the truncation "
                    "(pass check_injectivity=False to construct anyway)"
                )

    def apply(self, x) -> np.ndarray:
        return self.matrix @ self._coeffs(x)

    def norm_y(self, y) -> float:
        y = np.asarray(y, dtype=float)
        if y.shape != (self.codim,):
            raise DimensionMismatchError(
                f"expected a data vector of length {self.codim}, got {y.shape}"
            )
        if self.y_norm_kind == "euclidean":
            return float(np.linalg.norm(y))
        return lq_norm(y, self.q)

    def adjoint(self, eta) -> np.ndarray:
        # Coordinate pairing <y, eta> = sum_j y_j eta_j; for the Euclidean
        # data norm this is the Hilbert-space adjoint.
        eta = np.asarray(eta, dtype=float)
        if eta.shape != (self.codim,):
            raise DimensionMismatchError(
                f"adjoint expects a dual vector of length {self.codim}, got {eta.shape}"
            )
        return self.matrix.T @ eta

    def column_norms(self) -> np.ndarray:
        if self.y_norm_kind == "euclidean":
            return np.linalg.norm(self.matrix, axis=0)
        return np.array([lq_norm(col, self.q) for col in self.matrix.T])

    @property
    def is_euclidean(self) -> bool:
        return self.y_norm_kind == "euclidean"


class LqEmbedding(ForwardOperator):
    """The identity on coefficients, measured in the lq norm, ``q in (1, inf]``."""

    kind = "lq-embedding"

    def __init__(self, dim: int, q: float):
        dim = int(dim)
        if dim < 1:
            raise ValueError("dim must be positive")
        q = float(q)
        if not q > 1:
            raise ConfigError(f"embedding requires q > 1, got {q}")
        self.dim = dim
        self.codim = dim
        self.q = q
        self.index_origin = 0

    def apply(self, x) -> np.ndarray:
        return self._coeffs(x).copy()

    def norm_y(self, y) -> float:
        return lq_norm(y, self.q)

    def adjoint(self, eta) -> np.ndarray:
        # Dual vectors live in lq' under the pairing sum_k x_k eta_k, and the
        # embedding's adjoint is again the identity on entries.
        eta = np.asarray(eta, dtype=float)
        if eta.shape != (self.dim,):
            raise DimensionMismatchError(
                f"adjoint expects a dual vector of length {self.dim}, got {eta.shape}"
            )
        return eta.copy()

    def column_norms(self) -> np.ndarray:
        return np.ones(self.dim)

    @property
    def is_euclidean(self) -> bool:
        return self.q == 2.0


def _validate_intervals(intervals) -> list[tuple[float, float]]:
    out = []
    for pair in intervals:
        if len(pair) != 2:
            raise ConfigError(f"interval must be a pair, got {pair!r}")
        a, b = float(pair[0]), float(pair[1])
        if not (0.0 <= a < b <= 1.0):
            raise ConfigError(f"interval [{a}, {b}) must satisfy 0 <= a < b <= 1")
        out.append((a, b))
    out.sort()
    for (a0, b0), (a1, b1) in zip(out, out[1:]):
        if a1 < b0:
            raise ConfigError(f"intervals [{a0}, {b0}) and [{a1}, {b1}) overlap")
    if not out:
        raise ConfigError("at least one interval required")
    return out


def trig_poly_samples(freqs, coeffs, grid_size: int) -> np.ndarray:
    """Complex samples of ``sum_k c_k exp(2 pi i f_k t)`` on the uniform grid.

    ``coeffs`` may be real or complex; the grid is ``t_j = j / grid_size``.
    """
    freqs = np.asarray(freqs, dtype=float)
    coeffs = np.asarray(coeffs)
    if freqs.shape != coeffs.shape:
        raise DimensionMismatchError("freqs and coeffs must have matching shapes")
    t = np.arange(int(grid_size)) / float(grid_size)
    return np.exp(2j * np.pi * np.outer(t, freqs)) @ coeffs.astype(complex)


class _WienerBase(ForwardOperator):
    def __init__(self, intervals, max_freq: int, grid_size: int = 4096):
        max_freq = int(max_freq)
        grid_size = int(grid_size)
        if max_freq < 0:
            raise ValueError("max_freq must be nonnegative")
        if grid_size < 1:
            raise ValueError("grid_size must be positive")
        self.intervals = _validate_intervals(intervals)
        self.measure = float(sum(b - a for a, b in self.intervals))
        self.max_freq = max_freq
        self.grid_size = grid_size
        self.dim = 2 * max_freq + 1
        self.codim = grid_size
        self.index_origin = -max_freq
        self.freqs = np.arange(-max_freq, max_freq + 1, dtype=float)
        self.grid = np.arange(grid_size) / float(grid_size)
        mask = np.zeros(grid_size, dtype=bool)
        for a, b in self.intervals:
            mask |= (self.grid >= a) & (self.grid < b)
        if not mask.any():
            raise ConfigError("no grid point falls inside the intervals; refine the grid")
        self.grid_mask = mask
        # Evaluation matrix: row j holds exp(2 pi i f_k t_j).
        self._eval = np.exp(2j * np.pi * np.outer(self.grid, self.freqs))

    def _samples(self, x) -> np.ndarray:
        return self._eval @ self._coeffs(x).astype(complex)

    def _adjoint_weighted(self, eta, weights) -> np.ndarray:
        # Pairing Re sum_j y_j conj(eta_j) on grid samples; the adjoint sends a
        # grid dual vector to Re sum_j w_j exp(2 pi i f_k t_j) conj(eta_j).
        eta = np.asarray(eta)
        if eta.shape != (self.grid_size,):
            raise DimensionMismatchError(
                f"adjoint expects a grid vector of length {self.grid_size}, got {eta.shape}"
            )
        return np.real(self._eval.T @ (weights * np.conj(eta)))


class WienerRestriction(_WienerBase):
    """Trigonometric polynomial evaluation restricted to ``E``; sup norm on the grid.

    The data vector holds the polynomial's grid samples multiplied by the
    indicator of ``E``; its norm is the max modulus over grid points in ``E``.
    """

    kind = "wiener-restriction"

    def apply(self, x) -> np.ndarray:
        return np.where(self.grid_mask, self._samples(x), 0.0 + 0.0j)

    def norm_y(self, y) -> float:
        y = np.asarray(y)
        if y.shape != (self.grid_size,):
            raise DimensionMismatchError(
                f"expected a grid vector of length {self.grid_size}, got {y.shape}"
            )
        return float(np.abs(y[self.grid_mask]).max())

    def adjoint(self, eta) -> np.ndarray:
        return self._adjoint_weighted(eta, self.grid_mask.astype(float))

    def column_norms(self) -> np.ndarray:
        # |exp(2 pi i f t)| = 1 at every masked grid point.
        return np.ones(self.dim)


class WienerMultiplication(_WienerBase):
    """Evaluation followed by multiplication with a weight ``g``.

    ``g`` is given by its grid samples (or the tag ``"one"``) and must satisfy
    ``0 < g <= 1`` everywhere and ``g >= 1`` on ``E``, so the weighted operator
    dominates the plain restriction sample-by-sample.
    """

    kind = "wiener-multiplication"

    def __init__(self, intervals, max_freq: int, weight_g="one", grid_size: int = 4096):
        super().__init__(intervals, max_freq, grid_size)
        if isinstance(weight_g, str):
            if weight_g != "one":
                raise ConfigError(f"unknown weight tag {weight_g!r}")
            g = np.ones(self.grid_size)
        else:
            g = np.asarray(weight_g, dtype=float)
            if g.shape != (self.grid_size,):
                raise ConfigError(
                    f"weight_g must have one sample per grid point ({self.grid_size}), got {g.shape}"
                )
        if not np.all((g > 0.0) & (g <= 1.0)):
            raise ConfigError("weight must satisfy 0 < g <= 1 on the grid")
        if not np.all(g[self.grid_mask] >= 1.0 - 1e-12):
            raise ConfigError("weight must dominate the indicator of E (g >= 1 on E)")
        self.weight = g

    def apply(self, x) -> np.ndarray:
        return self.weight * self._samples(x)

    def norm_y(self, y) -> float:
        y = np.asarray(y)
        if y.shape != (self.grid_size,):
            raise DimensionMismatchError(
                f"expected a grid vector of length {self.grid_size}, got {y.shape}"
            )
        return float(np.abs(y).max())

    def adjoint(self, eta) -> np.ndarray:
        return self._adjoint_weighted(eta, self.weight)

    def column_norms(self) -> np.ndarray:
        gmax = float(self.weight.max())
        return np.full(self.dim, gmax)


# ---------------------------------------------------------------------------
# configuration


def _parse_q(raw) -> float:
    if isinstance(raw, str):
        if raw.lower() in ("inf", "infinity"):
            return math.inf
        raise ConfigError(f"cannot parse q = {raw!r}")
    q = float(raw)
    if not q > 1:
        raise ConfigError(f"q must be > 1 (or 'inf'), got {q}")
    return q


def operator_from_config(cfg: dict) -> ForwardOperator:
    """Build an operator from its JSON-style description.

    Required fields by kind::

        dense-matrix:           matrix (row-major nested lists)
                                [y_norm: "euclidean"|"lq", q, check_injectivity]
        lq-embedding:           dim, q (number or "inf")
        wiener-restriction:     intervals [[a, b), ...], max_freq  [grid_size]
        wiener-multiplication:  as restriction, plus weight_g (samples or "one")
    """
    if not isinstance(cfg, dict):
        raise ConfigError("operator config must be a mapping")
    kind = cfg.get("kind")
    try:
        if kind == "dense-matrix":
            if "matrix" not in cfg:
                raise ConfigError("dense-matrix config requires 'matrix'")
            return DenseOperator(
                cfg["matrix"],
                y_norm=cfg.get("y_norm", "euclidean"),
                q=_parse_q(cfg["q"]) if "q" in cfg else None,
                check_injectivity=bool(cfg.get("check_injectivity", True)),
            )
        if kind == "lq-embedding":
            for key in ("dim", "q"):
                if key not in cfg:
                    raise ConfigError(f"lq-embedding config requires {key!r}")
            return LqEmbedding(cfg["dim"], _parse_q(cfg["q"]))
        if kind == "wiener-restriction":
            for key in ("intervals", "max_freq"):
                if key not in cfg:
                    raise ConfigError(f"wiener-restriction config requires {key!r}")
            return WienerRestriction(
                cfg["intervals"], cfg["max_freq"], grid_size=cfg.get("grid_size", 4096)
            )
        if kind == "wiener-multiplication":
            for key in ("intervals", "max_freq"):
                if key not in cfg:
                    raise ConfigError(f"wiener-multiplication config requires {key!r}")
            return WienerMultiplication(
                cfg["intervals"],
                cfg["max_freq"],
                weight_g=cfg.get("weight_g", "one"),
                grid_size=cfg.get("grid_size", 4096),
            )
    except (ValueError, TypeError) as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(f"invalid {kind} config: {exc}") from exc
    raise ConfigError(f"unknown operator kind {kind!r}")


def load_operator(path) -> ForwardOperator:
    with open(path) as fh:
        return operator_from_config(json.load(fh))
