"""Declarative Monte Carlo experiments against the closed-form limit law.

Three experiment kinds share one report shape:

* ``copula``: sample the copula directly, extract the (n - k_i)-th order
  statistic per component, standardize with the copula-scale constants,
  and compare the empirical moments with the theoretical covariance.
* ``general``: push the copula sample through marginal quantile
  transforms, extract the (n - k_i + 1)-th order statistics, and
  standardize with the per-margin norming constants; the target
  covariance is the same.
* ``representation``: compare raw order-statistic vectors against the
  correlated normal-square-ratio construction at sample sizes n and 2n.

Every experiment is a pure function of (config, master seed).  Replication
r draws from the stream keyed by r, so results do not depend on the worker
count; aggregation reads the replication matrix in index order.
"""
from __future__ import annotations

import csv
import io
import json
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .chi2rep import NotPositiveSemidefiniteError, correlated_ratio_sample, representation_distance
from .copula import CopulaModel, model_from_json, model_to_json, sample_rows
from .diagnostics import ks_against_standard_normal, ks_critical_value, ks_pvalue, moment_summary
from .dnorm import is_positive_semidefinite, lambda_matrix
from .margins import MarginalModel, margin_from_json, margin_to_json, norming_constants, quantile_transform
from .orderstats import (
    IntermediateSpec,
    OSBatch,
    PowerKRule,
    standardize_copula_case,
    standardize_general_case,
    theoretical_sigma,
    theoretical_sigma_equal_k,
)
from .streams import derive_seed, stream_rng

__all__ = [
    "TolerancePolicy",
    "ExperimentConfig",
    "CriterionResult",
    "ExperimentReport",
    "InvalidConfigError",
    "config_from_json",
    "config_to_json",
    "run_copula_experiment",
    "run_general_experiment",
    "run_representation_experiment",
    "run_experiment",
    "emit_report",
    "read_report_csv",
]

DEFAULT_KS_LEVEL = 1e-3


class InvalidConfigError(ValueError):
    """Raised for configurations that fail validation before any sampling."""


@dataclass(frozen=True)
class TolerancePolicy:
    """Pass iff |observed - target| <= max(abs_tol, z * stderr)."""

    abs_tol: float = 0.05
    z: float = 4.0

    def bound(self, stderr: float) -> float:
        return max(self.abs_tol, self.z * stderr)


@dataclass(frozen=True)
class ExperimentConfig:
    copula: CopulaModel
    n: int
    replications: int
    seed: int
    kind: str = "copula"
    margins: Optional[tuple[MarginalModel, ...]] = None
    intermediate: Optional[IntermediateSpec] = None
    tolerance: TolerancePolicy = TolerancePolicy()
    ks_level: float = DEFAULT_KS_LEVEL
    gate_ks: bool = True
    lambda_override: Optional[np.ndarray] = None
    seed_overridden: bool = False

    def __post_init__(self):
        if self.kind not in ("copula", "general", "representation"):
            raise InvalidConfigError(f"unknown experiment kind {self.kind!r}")
        if self.n < 2:
            raise InvalidConfigError("n must be >= 2")
        if self.replications < 1:
            raise InvalidConfigError("replications must be >= 1")
        if self.kind == "general":
            if self.margins is None:
                raise InvalidConfigError("general experiments require margins")
            if len(self.margins) != self.copula.d:
                raise InvalidConfigError(
                    f"{len(self.margins)} margins for a dimension-{self.copula.d} copula"
                )
        elif self.margins is not None:
            raise InvalidConfigError(f"{self.kind} experiments take no margins")
        inter = self.intermediate
        if inter is None:
            convention = "n-k+1" if self.kind == "general" else "n-k"
            inter = IntermediateSpec.equal(self.copula.d, convention=convention)
            object.__setattr__(self, "intermediate", inter)
        if inter.d != self.copula.d:
            raise InvalidConfigError("intermediate spec dimension mismatch")
        # surface out-of-band k values now rather than mid-run
        try:
            inter.k_vector(self.n)
            if self.kind == "representation":
                inter.k_vector(2 * self.n)
        except ValueError as exc:
            raise InvalidConfigError(str(exc)) from exc
        if self.kind == "representation" and len(set(inter.rules)) != 1:
            raise InvalidConfigError("the representation comparison needs one common k rule")


@dataclass(frozen=True)
class CriterionResult:
    name: str
    observed: float
    target: float
    tolerance: float
    passed: bool
    gated: bool = True


@dataclass
class ExperimentReport:
    kind: str
    config: dict
    theoretical_sigma: np.ndarray
    criteria: list[CriterionResult]
    passed: bool
    runtime_seconds: float
    empirical_cov: Optional[np.ndarray] = None
    cov_stderr: Optional[np.ndarray] = None
    mean: Optional[np.ndarray] = None
    mean_stderr: Optional[np.ndarray] = None
    ks_stats: Optional[np.ndarray] = None
    ks_pvalues: Optional[np.ndarray] = None
    ks_critical: Optional[float] = None
    lambda_used: Optional[np.ndarray] = None
    lambda_min_eigenvalue: Optional[float] = None
    distances: Optional[dict] = None

    def as_dict(self) -> dict:
        """Emission view of the report.

        Wall-clock runtime is intentionally absent: emitted reports are
        byte-identical across reruns of the same configuration.
        """
        out = {
            "kind": self.kind,
            "config": self.config,
            "theoretical_sigma": _plain(self.theoretical_sigma),
            "criteria": [
                {
                    "name": c.name,
                    "observed": _plain(c.observed),
                    "target": _plain(c.target),
                    "tolerance": _plain(c.tolerance),
                    "passed": c.passed,
                    "gated": c.gated,
                }
                for c in self.criteria
            ],
            "passed": self.passed,
        }
        for key in (
            "empirical_cov",
            "cov_stderr",
            "mean",
            "mean_stderr",
            "ks_stats",
            "ks_pvalues",
            "ks_critical",
            "lambda_used",
            "lambda_min_eigenvalue",
            "distances",
        ):
            val = getattr(self, key)
            if val is not None:
                out[key] = _plain(val)
        return out


def _plain(obj):
    if isinstance(obj, np.ndarray):
        return [_plain(v) for v in obj.tolist()] if obj.ndim else float(obj)
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.floating, float)):
        return float(obj)
    if isinstance(obj, (np.integer, int)):
        return int(obj)
    if isinstance(obj, dict):
        return {k: _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    return obj


# ---------------------------------------------------------------------------
# config wire format

def config_to_json(config: ExperimentConfig) -> dict:
    obj = {
        "kind": config.kind,
        "copula": model_to_json(config.copula),
        "margins": [margin_to_json(m) for m in config.margins] if config.margins else None,
        "intermediate": {
            "rules": [{"c": r.c, "gamma": r.gamma} for r in config.intermediate.rules],
            "convention": config.intermediate.convention,
        },
        "n": config.n,
        "replications": config.replications,
        "seed": config.seed,
        "tolerance": {"abs_tol": config.tolerance.abs_tol, "z": config.tolerance.z},
        "ks_level": config.ks_level,
        "gate_ks": config.gate_ks,
        "seed_overridden": config.seed_overridden,
    }
    if config.lambda_override is not None:
        obj["lambda_override"] = _plain(config.lambda_override)
    return obj


def config_from_json(obj: dict, seed_override: Optional[int] = None) -> ExperimentConfig:
    try:
        copula = model_from_json(obj["copula"])
        margins_obj = obj.get("margins")
        margins = tuple(margin_from_json(m) for m in margins_obj) if margins_obj else None
        kind = obj.get("kind") or ("general" if margins else "copula")
        inter = None
        if "intermediate" in obj and obj["intermediate"] is not None:
            io_ = obj["intermediate"]
            rules = tuple(
                PowerKRule(float(r.get("c", 1.0)), float(r.get("gamma", 0.5)))
                for r in io_["rules"]
            )
            convention = io_.get("convention") or ("n-k+1" if kind == "general" else "n-k")
            inter = IntermediateSpec(rules, convention)
        tol_obj = obj.get("tolerance") or {}
        tol = TolerancePolicy(float(tol_obj.get("abs_tol", 0.05)), float(tol_obj.get("z", 4.0)))
        lam = obj.get("lambda_override")
        seed = int(obj["seed"]) if seed_override is None else int(seed_override)
        return ExperimentConfig(
            copula=copula,
            n=int(obj["n"]),
            replications=int(obj["replications"]),
            seed=seed,
            kind=kind,
            margins=margins,
            intermediate=inter,
            tolerance=tol,
            ks_level=float(obj.get("ks_level", DEFAULT_KS_LEVEL)),
            gate_ks=bool(obj.get("gate_ks", True)),
            lambda_override=np.asarray(lam, dtype=float) if lam is not None else None,
            seed_overridden=seed_override is not None,
        )
    except InvalidConfigError:
        raise
    except (KeyError, TypeError, ValueError) as exc:
        raise InvalidConfigError(f"bad experiment config: {exc}") from exc


# ---------------------------------------------------------------------------
# sampling cores

def _collect_os(
    config: ExperimentConfig,
    n: int,
    collect_seed: int,
    threads: int,
    transform: bool,
) -> tuple[np.ndarray, np.ndarray]:
    """Replication matrix of componentwise order statistics at size n.

    Returns (values, k_vector); values are raw order statistics (on the
    copula scale, or the margin scale when ``transform``).
    """
    inter = config.intermediate
    ks = inter.k_vector(n)
    idx = inter.ranks(n) - 1
    d = config.copula.d
    reps = config.replications
    out = np.empty((reps, d))
    margins = config.margins

    def run_range(lo: int, hi: int) -> None:
        for rep in range(lo, hi):
            rng = stream_rng(collect_seed, rep)
            rows = sample_rows(config.copula, n, rng)
            if transform:
                rows = quantile_transform(margins, rows)
            for i in range(d):
                out[rep, i] = np.partition(rows[:, i], idx[i])[idx[i]]

    if threads <= 1:
        run_range(0, reps)
    else:
        step = math.ceil(reps / threads)
        bounds = [(lo, min(lo + step, reps)) for lo in range(0, reps, step)]
        with ThreadPoolExecutor(max_workers=threads) as pool:
            list(pool.map(lambda b: run_range(*b), bounds))
    return out, ks


def _moment_criteria(
    summary, sigma: np.ndarray, tol: TolerancePolicy
) -> list[CriterionResult]:
    d = sigma.shape[0]
    out = []
    for i in range(d):
        for j in range(i, d):
            bound = tol.bound(float(summary.cov_se[i, j]))
            obs = float(summary.cov[i, j])
            tgt = float(sigma[i, j])
            out.append(
                CriterionResult(
                    name=f"sigma[{i},{j}]",
                    observed=obs,
                    target=tgt,
                    tolerance=bound,
                    passed=bool(abs(obs - tgt) <= bound),
                )
            )
    return out


def _ks_criteria(values: np.ndarray, level: float, gated: bool) -> tuple[list[CriterionResult], np.ndarray, np.ndarray, float]:
    reps, d = values.shape
    crit = ks_critical_value(level, reps)
    stats = np.empty(d)
    pvals = np.empty(d)
    results = []
    for i in range(d):
        stats[i] = ks_against_standard_normal(values[:, i])
        pvals[i] = ks_pvalue(stats[i], reps)
        results.append(
            CriterionResult(
                name=f"ks[{i}]",
                observed=float(stats[i]),
                target=0.0,
                tolerance=crit,
                passed=bool(stats[i] <= crit),
                gated=gated,
            )
        )
    return results, stats, pvals, crit


def _overall(criteria: Sequence[CriterionResult]) -> bool:
    return all(c.passed for c in criteria if c.gated)


def _finish_moment_report(config, kind, sigma, standardized, runtime_start) -> ExperimentReport:
    summary = moment_summary(standardized)
    criteria = _moment_criteria(summary, sigma, config.tolerance)
    ks_results, stats, pvals, crit = _ks_criteria(standardized, config.ks_level, config.gate_ks)
    criteria.extend(ks_results)
    return ExperimentReport(
        kind=kind,
        config=config_to_json(config),
        theoretical_sigma=sigma,
        criteria=criteria,
        passed=_overall(criteria),
        runtime_seconds=time.perf_counter() - runtime_start,
        empirical_cov=summary.cov,
        cov_stderr=summary.cov_se,
        mean=summary.mean,
        mean_stderr=summary.mean_se,
        ks_stats=stats,
        ks_pvalues=pvals,
        ks_critical=crit,
    )


# ---------------------------------------------------------------------------
# runners

def run_copula_experiment(config: ExperimentConfig, threads: int = 1) -> ExperimentReport:
    """Verify the copula-scale limit: standardized order statistics vs N(0, Sigma)."""
    if config.kind != "copula":
        raise InvalidConfigError(f"config kind is {config.kind!r}, expected 'copula'")
    start = time.perf_counter()
    sigma = theoretical_sigma(config.copula.tail_dnorm, config.intermediate.ratio_matrix())
    ok, min_eig = is_positive_semidefinite(sigma)
    if not ok:
        # sigma is a covariance by construction; a violation means a broken norm
        raise RuntimeError(f"theoretical covariance not PSD (eigenvalue {min_eig:.3e})")
    raw, ks = _collect_os(config, config.n, config.seed, threads, transform=False)
    standardized = standardize_copula_case(raw, config.n, ks)
    return _finish_moment_report(config, "copula", sigma, standardized, start)


def run_general_experiment(config: ExperimentConfig, threads: int = 1) -> ExperimentReport:
    """Verify the margin-scale limit with the canonical norming constants."""
    if config.kind != "general":
        raise InvalidConfigError(f"config kind is {config.kind!r}, expected 'general'")
    start = time.perf_counter()
    sigma = theoretical_sigma(config.copula.tail_dnorm, config.intermediate.ratio_matrix())
    raw, ks = _collect_os(config, config.n, config.seed, threads, transform=True)
    constants = [
        norming_constants(margin, config.n, int(k))
        for margin, k in zip(config.margins, ks)
    ]
    standardized = standardize_general_case(raw, constants)
    return _finish_moment_report(config, "general", sigma, standardized, start)


def run_representation_experiment(config: ExperimentConfig, threads: int = 1) -> ExperimentReport:
    """Compare raw order statistics with the correlated chi-square ratios.

    Runs the comparison at n and 2n and flags whether the grid distance
    decreased.  Refuses (before any sampling) when the entrywise square
    root of the limit covariance is not positive semidefinite, reporting
    the offending eigenvalue.
    """
    if config.kind != "representation":
        raise InvalidConfigError(f"config kind is {config.kind!r}, expected 'representation'")
    start = time.perf_counter()
    d = config.copula.d
    sigma = theoretical_sigma_equal_k(config.copula.tail_dnorm, d)
    lam = config.lambda_override if config.lambda_override is not None else lambda_matrix(sigma)
    ok, min_eig = is_positive_semidefinite(lam)
    if not ok:
        raise NotPositiveSemidefiniteError(min_eig)

    distances = {}
    for tag, nn in (("n", config.n), ("2n", 2 * config.n)):
        k = int(config.intermediate.k_vector(nn)[0])
        raw, ks = _collect_os(config, nn, derive_seed(config.seed, 1, nn), threads, transform=False)
        batch = OSBatch(
            values=raw,
            n=nn,
            k=tuple(int(v) for v in ks),
            convention=config.intermediate.convention,
            seed=config.seed,
            scale="raw",
        )
        ratios = correlated_ratio_sample(lam, nn, k, config.replications, derive_seed(config.seed, 2, nn))
        distances[tag] = {"n": nn, "k": k, "distance": representation_distance(batch, ratios)}

    d_n = distances["n"]["distance"]
    d_2n = distances["2n"]["distance"]
    criteria = [
        CriterionResult(
            name="representation_distance_decreases",
            observed=d_2n,
            target=d_n,
            tolerance=0.0,
            passed=d_2n < d_n,
        )
    ]
    return ExperimentReport(
        kind="representation",
        config=config_to_json(config),
        theoretical_sigma=sigma,
        criteria=criteria,
        passed=_overall(criteria),
        runtime_seconds=time.perf_counter() - start,
        lambda_used=lam,
        lambda_min_eigenvalue=min_eig,
        distances=distances,
    )


_RUNNERS = {
    "copula": run_copula_experiment,
    "general": run_general_experiment,
    "representation": run_representation_experiment,
}


def run_experiment(config: ExperimentConfig, threads: int = 1) -> ExperimentReport:
    return _RUNNERS[config.kind](config, threads=threads)


# ---------------------------------------------------------------------------
# emission

def report_json_bytes(report: ExperimentReport) -> bytes:
    text = json.dumps(report.as_dict(), indent=2, sort_keys=True)
    return (text + "\n").encode()


def _csv_rows(report: ExperimentReport):
    def matrix_rows(name, m):
        m = np.asarray(m)
        for i in range(m.shape[0]):
            for j in range(m.shape[1]):
                yield (name, i, j, repr(float(m[i, j])))

    def vector_rows(name, v):
        for i, val in enumerate(np.asarray(v)):
            yield (name, i, "", repr(float(val)))

    yield ("table", "i", "j", "value")
    yield from matrix_rows("theoretical_sigma", report.theoretical_sigma)
    for name in ("empirical_cov", "cov_stderr", "lambda_used"):
        m = getattr(report, name)
        if m is not None:
            yield from matrix_rows(name, m)
    for name in ("mean", "mean_stderr", "ks_stats", "ks_pvalues"):
        v = getattr(report, name)
        if v is not None:
            yield from vector_rows(name, v)


def report_csv_bytes(report: ExperimentReport) -> bytes:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    for row in _csv_rows(report):
        writer.writerow(row)
    return buf.getvalue().encode()


def report_text(report: ExperimentReport) -> str:
    lines = [f"experiment kind: {report.kind}", "theoretical sigma:"]
    lines.extend("  " + "  ".join(f"{v:12.6f}" for v in row) for row in report.theoretical_sigma)
    if report.empirical_cov is not None:
        lines.append("empirical covariance:")
        lines.extend("  " + "  ".join(f"{v:12.6f}" for v in row) for row in report.empirical_cov)
    if report.distances is not None:
        for tag, entry in report.distances.items():
            lines.append(f"distance[{tag}]: n={entry['n']} k={entry['k']} value={entry['distance']:.6f}")
    lines.append("criteria:")
    for c in report.criteria:
        status = "pass" if c.passed else "FAIL"
        gate = "" if c.gated else " (ungated)"
        lines.append(
            f"  {c.name:<36} {status}{gate}  observed={c.observed:+.6f}"
            f"  target={c.target:+.6f}  tol={c.tolerance:.6f}"
        )
    lines.append(f"overall: {'pass' if report.passed else 'FAIL'}")
    return "\n".join(lines) + "\n"


def emit_report(report: ExperimentReport, fmt: str, path: str) -> str:
    """Write the report as json, csv, or text; identical bytes for identical configs."""
    if fmt == "json":
        data = report_json_bytes(report)
    elif fmt == "csv":
        data = report_csv_bytes(report)
    elif fmt == "text":
        data = report_text(report).encode()
    else:
        raise ValueError(f"unknown report format {fmt!r}")
    with open(path, "wb") as fh:
        fh.write(data)
    return path


def read_report_csv(path: str) -> dict[str, np.ndarray]:
    """Reassemble the flat CSV dump into named matrices and vectors."""
    cells: dict[str, dict[tuple[int, int], float]] = {}
    vectors: dict[str, dict[int, float]] = {}
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        for name, i, j, value in reader:
            if j == "":
                vectors.setdefault(name, {})[int(i)] = float(value)
            else:
                cells.setdefault(name, {})[(int(i), int(j))] = float(value)
    out: dict[str, np.ndarray] = {}
    for name, entries in cells.items():
        rows = 1 + max(i for i, _ in entries)
        cols = 1 + max(j for _, j in entries)
        m = np.empty((rows, cols))
        for (i, j), v in entries.items():
            m[i, j] = v
        out[name] = m
    for name, entries in vectors.items():
        v = np.empty(1 + max(entries))
        for i, val in entries.items():
            v[i] = val
        out[name] = v
    return out
