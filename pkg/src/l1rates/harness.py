"""Empirical confirmation harness.

Synthesizes noise at exact level ``delta``, runs regularized inversions over
a noise grid, and compares the observed l1 errors against the certified rate
function.  Also hosts the sampling check for the Turan-Nazarov sup-norm
bound and two canned example studies.  All randomness flows through seeded
generators; per-cell seeds are derived from the experiment seed and the cell
coordinates, so runs are reproducible bit for bit.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .core import (
    ConfigError,
    ForwardOperator,
    IndexSetFamily,
    LqEmbedding,
    TruncatedSequence,
    _validate_intervals,
    lq_norm,
    operator_from_config,
    trig_poly_samples,
)
from .certificates import (
    AssumptionCertificate,
    GammaTable,
    assemble_assumption,
    brute_force_gamma,
)
from .rate import RateFunction, build_phi, check_vi, compute_beta
from .solver import TikhonovProblem, choose_alpha, solve_tikhonov

__all__ = [
    "SCHEMA_VERSION",
    "ExperimentConfig",
    "ExperimentRecord",
    "ExperimentResult",
    "NazarovReport",
    "synthesize_noise",
    "run_rate_experiment",
    "nazarov_check",
    "reproduce_example",
    "experiment_config_from_dict",
    "xdag_from_config",
    "write_csv",
    "write_summary_json",
]

SCHEMA_VERSION = 1


def synthesize_noise(op: ForwardOperator, y_exact, delta: float, seed) -> np.ndarray:
    """Return ``y_exact`` plus a random perturbation of exact data norm ``delta``.

    The direction is standard Gaussian (complex Gaussian for complex data),
    rescaled so that ``op.norm_y(noise) == delta`` to machine precision.
    ``delta = 0`` returns an untouched copy.
    """
    y = np.asarray(y_exact)
    if delta < 0:
        raise ValueError("delta must be nonnegative")
    if delta == 0:
        return y.copy()
    rng = np.random.default_rng(seed)
    for _ in range(100):
        if np.iscomplexobj(y):
            e = rng.standard_normal(y.shape) + 1j * rng.standard_normal(y.shape)
        else:
            e = rng.standard_normal(y.shape)
        norm = op.norm_y(e)
        if norm > 0:
            return y + (delta / norm) * e
    raise RuntimeError("could not draw a noise direction with positive norm")


# ---------------------------------------------------------------------------
# experiment configuration


def xdag_from_config(cfg: dict, index_origin: int = 0) -> TruncatedSequence:
    """Reference vectors: explicit coefficients, sparse spikes, or power decay."""
    kind = cfg.get("kind", "explicit")
    if kind == "explicit":
        return TruncatedSequence(np.asarray(cfg["coeffs"], dtype=float), index_origin)
    if kind == "sparse":
        dim = int(cfg["dim"])
        coeffs = np.zeros(dim)
        for pos, val in zip(cfg["support"], cfg["values"]):
            if not 0 <= int(pos) < dim:
                raise ConfigError(f"sparse support position {pos} outside [0, {dim})")
            coeffs[int(pos)] = float(val)
        return TruncatedSequence(coeffs, index_origin)
    if kind == "power-decay":
        dim = int(cfg["dim"])
        mu = float(cfg["mu"])
        k = np.arange(1, dim + 1, dtype=float)
        return TruncatedSequence(k**-mu, index_origin)
    raise ConfigError(f"unknown reference vector kind {kind!r}")


@dataclass(frozen=True)
class ExperimentConfig:
    """Everything needed for one rate-confirmation run."""

    op: ForwardOperator
    xdag: TruncatedSequence
    family: IndexSetFamily
    deltas: tuple[float, ...]
    trials: int
    alpha_rule: str = "a-priori"
    kappa: float = 1.0
    tau: float = 1.5
    c_target: float = 0.99
    gamma_method: str = "auto"
    n_max: int | None = None
    p: int = 2
    seed: int = 0
    solver_tol: float = 1e-10
    solver_max_iter: int = 100_000

    def __post_init__(self):
        deltas = tuple(float(d) for d in self.deltas)
        if not deltas or any(d <= 0 for d in deltas):
            raise ValueError("the delta grid must be nonempty and strictly positive")
        if any(d1 <= d2 for d1, d2 in zip(deltas, deltas[1:])):
            raise ValueError("the delta grid must be strictly decreasing")
        object.__setattr__(self, "deltas", deltas)
        if self.trials < 1:
            raise ValueError("trials must be positive")
        if self.alpha_rule not in ("a-priori", "discrepancy"):
            raise ValueError(f"unknown alpha rule {self.alpha_rule!r}")
        if len(self.xdag) != self.op.dim:
            raise ValueError(
                f"reference vector length {len(self.xdag)} does not match operator dim {self.op.dim}"
            )


def experiment_config_from_dict(cfg: dict) -> ExperimentConfig:
    op = operator_from_config(cfg["operator"])
    xdag = xdag_from_config(cfg["xdag"], index_origin=op.index_origin)
    grid = cfg.get("delta_grid", {})
    if "values" in grid:
        deltas = sorted((float(d) for d in grid["values"]), reverse=True)
    else:
        deltas = np.geomspace(
            float(grid.get("max", 1e-1)),
            float(grid.get("min", 1e-4)),
            int(grid.get("count", 8)),
        ).tolist()
    alpha_cfg = cfg.get("alpha", {})
    return ExperimentConfig(
        op=op,
        xdag=xdag,
        family=IndexSetFamily.from_label(cfg.get("family", "prefix")),
        deltas=tuple(deltas),
        trials=int(cfg.get("trials", 5)),
        alpha_rule=alpha_cfg.get("rule", "a-priori"),
        kappa=float(alpha_cfg.get("kappa", 1.0)),
        tau=float(alpha_cfg.get("tau", 1.5)),
        c_target=float(cfg.get("c_target", 0.99)),
        gamma_method=cfg.get("gamma", {}).get("method", "auto"),
        n_max=cfg.get("gamma", {}).get("n_max"),
        p=int(cfg.get("p", 2)),
        seed=int(cfg.get("seed", 0)),
    )


@dataclass(frozen=True)
class ExperimentRecord:
    delta_index: int
    delta: float
    trial: int
    cell_seed: int
    alpha: float
    error_l1: float
    residual_y: float
    phi_delta: float
    iterations: int
    kkt_residual: float
    support_size: int
    objective: float
    status: str = "ok"

    HEADER = (
        "delta_index", "delta", "trial", "cell_seed", "alpha", "error_l1",
        "residual_y", "phi_delta", "iterations", "kkt_residual",
        "support_size", "objective", "status",
    )

    def row(self):
        return (
            self.delta_index, self.delta, self.trial, self.cell_seed,
            self.alpha, self.error_l1, self.residual_y, self.phi_delta,
            self.iterations, self.kkt_residual, self.support_size,
            self.objective, self.status,
        )


@dataclass(frozen=True)
class ExperimentResult:
    config: ExperimentConfig
    certificate: AssumptionCertificate
    phi: RateFunction
    beta: float
    records: tuple[ExperimentRecord, ...]
    summary: dict


def _cell_seed(seed: int, delta_index: int, trial: int) -> int:
    ss = np.random.SeedSequence(entropy=seed, spawn_key=(delta_index, trial))
    return int(ss.generate_state(1, dtype=np.uint64)[0])


def run_rate_experiment(cfg: ExperimentConfig) -> ExperimentResult:
    """Certify, then sweep the noise grid and fit the observed convergence rate.

    Each (delta, trial) cell draws its own seed from the experiment seed and
    the cell coordinates.  Solver or parameter-choice failures mark the cell
    in its record instead of aborting the sweep.  The summary reports
    per-delta median errors, the least-squares slope of
    ``log(median error)`` against ``log(delta)``, and the ratios of median
    error to the predicted bound ``phi(delta)``.
    """
    n_max = cfg.n_max or len(cfg.xdag)
    cert = assemble_assumption(
        cfg.op, cfg.family, n_max, c_target=cfg.c_target, method=cfg.gamma_method
    )
    phi = build_phi(cfg.xdag, cert.table)
    beta = compute_beta(cert.table.c)
    y_exact = cfg.op.apply(cfg.xdag)

    records = []
    for i, delta in enumerate(cfg.deltas):
        for trial in range(cfg.trials):
            cell_seed = _cell_seed(cfg.seed, i, trial)
            y_d = synthesize_noise(cfg.op, y_exact, delta, cell_seed)
            try:
                alpha = choose_alpha(
                    cfg.alpha_rule, delta, cfg.op, y_d, p=cfg.p,
                    kappa=cfg.kappa, tau=cfg.tau,
                    tol=cfg.solver_tol, max_iter=cfg.solver_max_iter,
                )
                x, diag = solve_tikhonov(
                    TikhonovProblem(cfg.op, y_d, alpha, cfg.p),
                    tol=cfg.solver_tol, max_iter=cfg.solver_max_iter,
                )
                err = float(np.sum(np.abs(x.coeffs - cfg.xdag.coeffs)))
                resid = cfg.op.norm_y(cfg.op.apply(x.coeffs) - y_d)
                records.append(ExperimentRecord(
                    i, delta, trial, cell_seed, alpha, err, resid,
                    float(phi(delta)), diag.iterations, diag.kkt_residual,
                    diag.support_size, diag.final_objective,
                ))
            except Exception as exc:  # noqa: BLE001 - cell failures are data
                records.append(ExperimentRecord(
                    i, delta, trial, cell_seed, math.nan, math.nan, math.nan,
                    float(phi(delta)), 0, math.nan, 0, math.nan,
                    status=f"failed: {type(exc).__name__}: {exc}",
                ))

    medians, used_deltas, ratios = [], [], []
    for i, delta in enumerate(cfg.deltas):
        errs = [r.error_l1 for r in records
                if r.delta_index == i and r.status == "ok"]
        if errs:
            med = float(np.median(errs))
            medians.append(med)
            used_deltas.append(delta)
            ratios.append(med / phi(delta))
    slope = intercept = math.nan
    if len(used_deltas) >= 2:
        slope, intercept = np.polyfit(np.log(used_deltas), np.log(medians), 1)
    n_failed = sum(1 for r in records if r.status != "ok")
    summary = {
        "schema_version": SCHEMA_VERSION,
        "seed": cfg.seed,
        "alpha_rule": cfg.alpha_rule,
        "family": cfg.family.value,
        "beta": beta,
        "c": cert.table.c,
        "gamma_method": cert.table.method,
        "n_max": n_max,
        "deltas": list(cfg.deltas),
        "trials": cfg.trials,
        "median_errors": medians,
        "ratio_to_phi": ratios,
        "max_ratio_to_phi": max(ratios) if ratios else math.nan,
        "fitted_slope": float(slope),
        "fitted_intercept": float(intercept),
        "cells_total": len(records),
        "cells_failed": n_failed,
    }
    return ExperimentResult(cfg, cert, phi, beta, tuple(records), summary)


# ---------------------------------------------------------------------------
# sup-norm sampling check


@dataclass(frozen=True)
class NazarovReport:
    """Sampled sharpness of ``||x||_1 <= (14/|E|)**(n-1) * sup_E |p_x|``."""

    measure: float
    n: int
    bound: float
    trials: int
    violations: int
    max_ratio: float
    min_ratio: float
    grid_size: int
    freq_range: tuple[int, int]
    seed: int

    @property
    def passed(self) -> bool:
        return self.violations == 0


def nazarov_check(intervals, n: int, trials: int = 100,
                  freq_range: tuple[int, int] = (-30, 30),
                  grid_size: int = 4096, seed: int = 0,
                  rel_tol: float = 1e-9) -> NazarovReport:
    """Probe the sup-norm lower bound with random sparse trigonometric sums.

    Draws ``n`` distinct integer frequencies from ``freq_range`` and complex
    Gaussian coefficients, evaluates the polynomial on the uniform grid, and
    compares ``||x||_1 / sup_E |p|`` against ``(14/|E|)**(n-1)``.  Refuses
    grids without at least eight samples per period of the fastest mode.
    """
    intervals = _validate_intervals(intervals)
    lo, hi = int(freq_range[0]), int(freq_range[1])
    if lo > hi:
        raise ValueError("freq_range must be (lo, hi) with lo <= hi")
    pool = np.arange(lo, hi + 1)
    if n < 1 or n > pool.size:
        raise ValueError(f"n must be in [1, {pool.size}] for this frequency range")
    fmax = max(abs(lo), abs(hi))
    if grid_size < 8 * fmax:
        raise ValueError(
            f"grid_size {grid_size} too coarse for frequencies up to {fmax}; "
            f"need at least {8 * fmax} samples"
        )
    measure = float(sum(b - a for a, b in intervals))
    grid = np.arange(grid_size) / grid_size
    mask = np.zeros(grid_size, dtype=bool)
    for a, b in intervals:
        mask |= (grid >= a) & (grid < b)
    if not mask.any():
        raise ValueError("no grid point falls inside the intervals")
    bound = (14.0 / measure) ** (n - 1)

    rng = np.random.default_rng(seed)
    ratios = np.empty(trials)
    violations = 0
    for trial in range(trials):
        freqs = rng.choice(pool, size=n, replace=False)
        coeffs = rng.standard_normal(n) + 1j * rng.standard_normal(n)
        samples = trig_poly_samples(freqs, coeffs, grid_size)
        sup_e = float(np.abs(samples[mask]).max())
        ratio = float(np.sum(np.abs(coeffs))) / sup_e
        ratios[trial] = ratio
        if ratio > bound * (1.0 + rel_tol):
            violations += 1
    return NazarovReport(
        measure, n, bound, trials, violations,
        float(ratios.max()), float(ratios.min()), grid_size, (lo, hi), seed,
    )


# ---------------------------------------------------------------------------
# serialization


def _fmt(value) -> str:
    if isinstance(value, (bool, np.bool_)):
        return str(bool(value))
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    return str(value)


def write_csv(path, header, rows) -> None:
    """CSV with a schema-version comment line, deterministic float formatting."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        fh.write(f"# schema_version={SCHEMA_VERSION}\n")
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([_fmt(v) for v in row])


def write_summary_json(path, payload: dict) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)

    def default(obj):
        if isinstance(obj, (np.integer,)):
            return int(obj)
        if isinstance(obj, (np.floating,)):
            return float(obj)
        if isinstance(obj, np.ndarray):
            return obj.tolist()
        raise TypeError(f"cannot serialize {type(obj)}")

    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True, default=default)
        fh.write("\n")


def write_gamma_csv(path, table: GammaTable) -> None:
    write_csv(path, ("n", "gamma", "c", "method"), table.rows())


def write_phi_csv(path, phi: RateFunction) -> None:
    write_csv(path, ("t_break", "phi_value", "active_n"), phi.segment_rows())


def write_records_csv(path, records) -> None:
    write_csv(path, ExperimentRecord.HEADER, [r.row() for r in records])


# ---------------------------------------------------------------------------
# canned examples


def _example_denoising(out_dir, seed: int) -> dict:
    """Embedding study: enumerated constants vs. the closed form, plus norm order."""
    qs = (1.5, 2.0, 4.0, math.inf)
    dim, n_top = 12, 5
    rows = []
    worst_rel = 0.0
    for q in qs:
        op = LqEmbedding(dim, q)
        qc = 1.0 if math.isinf(q) else q / (q - 1.0)
        for n in range(1, n_top + 1):
            enumerated = brute_force_gamma(op, n, IndexSetFamily.ALL_SUBSETS)
            analytic = float(n ** (1.0 / qc))
            rel = abs(enumerated - analytic) / analytic
            worst_rel = max(worst_rel, rel)
            rows.append(("inf" if math.isinf(q) else q, n, enumerated, analytic, rel))
    rng = np.random.default_rng(seed)
    worst_norm_ratio = 0.0
    for _ in range(10_000):
        x = rng.standard_normal(dim)
        l1 = float(np.sum(np.abs(x)))
        for q in qs:
            worst_norm_ratio = max(worst_norm_ratio, lq_norm(x, q) / l1)
    summary = {
        "schema_version": SCHEMA_VERSION,
        "example": "denoising",
        "seed": seed,
        "dim": dim,
        "qs": ["inf" if math.isinf(q) else q for q in qs],
        "n_max": n_top,
        "worst_gamma_rel_error": worst_rel,
        "gamma_match": bool(worst_rel <= 1e-9),
        "norm_order_samples": 10_000,
        "worst_lq_over_l1": worst_norm_ratio,
        "norm_order_holds": bool(worst_norm_ratio <= 1.0 + 1e-12),
    }
    if out_dir is not None:
        out = Path(out_dir)
        write_csv(out / "gammas.csv",
                  ("q", "n", "gamma_enumerated", "gamma_analytic", "rel_error"), rows)
        write_summary_json(out / "summary.json", summary)
    return summary


def _example_wiener(out_dir, seed: int) -> dict:
    """Sup-norm study on E = [0, 1/2): injectivity chain and weighted domination."""
    from .core import WienerMultiplication, WienerRestriction

    intervals = [(0.0, 0.5)]
    max_freq, grid_size, sparsity = 20, 4096, 3
    restriction = WienerRestriction(intervals, max_freq, grid_size)
    weight = np.where(restriction.grid_mask, 1.0, 0.3)
    weighted = WienerMultiplication(intervals, max_freq, weight, grid_size)
    gamma = (14.0 / restriction.measure) ** (sparsity - 1)

    rng = np.random.default_rng(seed)
    rows = []
    worst_gamma_ratio = 0.0
    chain_ok = True
    domination_ok = True
    for i in range(1000):
        size = int(rng.integers(1, sparsity + 1))
        supp = rng.choice(restriction.dim, size=size, replace=False)
        x = np.zeros(restriction.dim)
        x[supp] = rng.standard_normal(size)
        l1 = float(np.sum(np.abs(x)))
        sup_e = restriction.norm_y(restriction.apply(x))
        sup_g = weighted.norm_y(weighted.apply(x))
        sup_all = float(np.abs(restriction._samples(x)).max())
        ratio = l1 / (gamma * sup_e)
        worst_gamma_ratio = max(worst_gamma_ratio, ratio)
        if ratio > 1.0 + 1e-9:
            chain_ok = False
        if not (sup_e <= sup_all * (1 + 1e-12) and sup_all <= l1 * (1 + 1e-12)):
            chain_ok = False
        if sup_g < sup_e * (1 - 1e-12):
            domination_ok = False
        rows.append((i, l1, sup_e, sup_all, sup_g, ratio))
    nazarov = nazarov_check(intervals, sparsity, trials=200,
                            freq_range=(-max_freq, max_freq),
                            grid_size=grid_size, seed=seed)
    summary = {
        "schema_version": SCHEMA_VERSION,
        "example": "wiener",
        "seed": seed,
        "intervals": [list(p) for p in intervals],
        "measure": restriction.measure,
        "max_freq": max_freq,
        "grid_size": grid_size,
        "sparsity": sparsity,
        "gamma": gamma,
        "samples": 1000,
        "worst_gamma_ratio": worst_gamma_ratio,
        "chain_holds": bool(chain_ok),
        "weighted_dominates": bool(domination_ok),
        "nazarov_bound": nazarov.bound,
        "nazarov_max_ratio": nazarov.max_ratio,
        "nazarov_violations": nazarov.violations,
    }
    if out_dir is not None:
        out = Path(out_dir)
        write_csv(out / "chain.csv",
                  ("sample", "l1", "sup_E", "sup_all", "sup_weighted", "gamma_ratio"),
                  rows)
        write_summary_json(out / "summary.json", summary)
    return summary


def reproduce_example(name: str, out_dir=None, seed: int = 0) -> dict:
    """Run a canned study; returns its summary and optionally writes a bundle.

    ``"denoising"`` checks the enumerated embedding constants against the
    closed form and the norm ordering on random vectors.  ``"wiener"`` checks
    the sup-norm injectivity chain, the weighted-operator domination, and the
    Turan-Nazarov bound on random sparse trigonometric sums.
    """
    if name == "denoising":
        return _example_denoising(out_dir, seed)
    if name == "wiener":
        return _example_wiener(out_dir, seed)
    raise ValueError(f"unknown example {name!r} (choose 'denoising' or 'wiener')")
