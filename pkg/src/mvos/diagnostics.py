"""Shared statistical diagnostics for the simulation harness."""
from __future__ import annotations

import math
from typing import Callable, NamedTuple

import numpy as np
from scipy.special import kolmogi, kolmogorov, ndtr

__all__ = [
    "ks_statistic",
    "ks_pvalue",
    "ks_critical_value",
    "ks_against_standard_normal",
    "MomentSummary",
    "moment_summary",
]


def ks_statistic(sample, cdf: Callable[[np.ndarray], np.ndarray]) -> float:
    """One-sample Kolmogorov-Smirnov statistic against a continuous cdf."""
    x = np.sort(np.asarray(sample, dtype=float))
    n = x.size
    if n == 0:
        raise ValueError("empty sample")
    f = np.asarray(cdf(x), dtype=float)
    steps = np.arange(1, n + 1) / n
    return float(np.maximum(steps - f, f - (steps - 1.0 / n)).max())


def ks_pvalue(stat: float, nobs: int) -> float:
    """Asymptotic (Kolmogorov-distribution) p-value of the statistic."""
    return float(kolmogorov(math.sqrt(nobs) * stat))


def ks_critical_value(level: float, nobs: int) -> float:
    """Statistic threshold at the given significance level, asymptotic."""
    if not 0 < level < 1:
        raise ValueError("level must lie in (0, 1)")
    return float(kolmogi(level)) / math.sqrt(nobs)


def ks_against_standard_normal(sample) -> float:
    return ks_statistic(sample, lambda x: ndtr(x))


class MomentSummary(NamedTuple):
    """First and second moments of an R x d matrix with standard errors."""

    mean: np.ndarray
    mean_se: np.ndarray
    cov: np.ndarray
    cov_se: np.ndarray


def moment_summary(values) -> MomentSummary:
    """Sample mean and covariance with asymptotic entrywise standard errors.

    The covariance stderr uses the delta-method variance
    (E[(X_i - m_i)^2 (X_j - m_j)^2] - cov_ij^2) / R, which needs no
    normality assumption.
    """
    v = np.asarray(values, dtype=float)
    if v.ndim != 2 or v.shape[0] < 2:
        raise ValueError("need an R x d matrix with R >= 2")
    r = v.shape[0]
    mean = v.mean(axis=0)
    centered = v - mean
    cov = centered.T @ centered / r
    mean_se = np.sqrt(np.diag(cov) / r)
    sq = centered[:, :, None] * centered[:, None, :]
    second = np.mean(sq * sq, axis=0)
    cov_se = np.sqrt(np.maximum(second - cov * cov, 0.0) / r)
    return MomentSummary(mean=mean, mean_se=mean_se, cov=cov, cov_se=cov_se)
