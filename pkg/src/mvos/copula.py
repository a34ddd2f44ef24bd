"""Copula models attracted to an extreme-value limit, with exact samplers.

Each model carries the norm governing its upper-tail expansion
``C(u) = 1 - ||1 - u||_D + o(||1 - u||)``: the 1-norm for independence,
the sup-norm for comonotonicity, and the logistic p-norm for the
Gumbel-Hougaard family.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Union

import numpy as np

from .dnorm import DNormSpec, LogisticP, SupNorm, dnorm_eval
from .streams import stream_rng

__all__ = [
    "Independence",
    "Comonotone",
    "GumbelLogistic",
    "CopulaModel",
    "UniformSampleBatch",
    "copula_cdf",
    "copula_sample",
    "sample_rows",
    "positive_stable",
    "log_positive_stable",
    "tail_expansion_check",
    "model_from_json",
    "model_to_json",
]

# rows per derived stream inside copula_sample; the chunk layout is part of
# the reproducibility contract, so treat it as frozen
SAMPLE_CHUNK = 65536


@dataclass(frozen=True)
class Independence:
    d: int

    def __post_init__(self):
        if self.d < 1:
            raise ValueError("dimension must be >= 1")

    @property
    def tail_dnorm(self) -> DNormSpec:
        return LogisticP(1.0)

    def label(self) -> str:
        return f"independence(d={self.d})"


@dataclass(frozen=True)
class Comonotone:
    d: int

    def __post_init__(self):
        if self.d < 1:
            raise ValueError("dimension must be >= 1")

    @property
    def tail_dnorm(self) -> DNormSpec:
        return SupNorm()

    def label(self) -> str:
        return f"comonotone(d={self.d})"


@dataclass(frozen=True)
class GumbelLogistic:
    """Gumbel-Hougaard copula exp(-((-log u_1)^p + ... )^(1/p)), p >= 1."""

    d: int
    p: float

    def __post_init__(self):
        if self.d < 1:
            raise ValueError("dimension must be >= 1")
        if not self.p >= 1:
            raise ValueError("Gumbel copula requires p >= 1")

    @property
    def tail_dnorm(self) -> DNormSpec:
        return LogisticP(self.p)

    def label(self) -> str:
        return f"gumbel(d={self.d}, p={self.p})"


CopulaModel = Union[Independence, Comonotone, GumbelLogistic]


@dataclass(frozen=True)
class UniformSampleBatch:
    """An n x d block of copula observations plus its seed provenance."""

    rows: np.ndarray
    seed: int
    model: str
    chunk_size: int

    @property
    def n(self) -> int:
        return self.rows.shape[0]

    @property
    def d(self) -> int:
        return self.rows.shape[1]


# ---------------------------------------------------------------------------
# distribution functions

def copula_cdf(model: CopulaModel, u) -> float:
    """C(u) for u in the unit cube; accepts a vector or a (..., d) array."""
    u = np.asarray(u, dtype=float)
    if u.shape[-1] != model.d:
        raise ValueError(f"u has width {u.shape[-1]}, model dimension is {model.d}")
    if np.any(u < 0) or np.any(u > 1):
        raise ValueError("u must lie in [0, 1]^d")
    if isinstance(model, Independence):
        out = np.prod(u, axis=-1)
    elif isinstance(model, Comonotone):
        out = np.min(u, axis=-1)
    else:
        with np.errstate(divide="ignore"):
            t = -np.log(u)
        # scaled p-norm over the last axis; rows touching u=0 give C=0
        m = t.max(axis=-1)
        zero = ~np.isfinite(m)
        safe_m = np.where((m == 0) | zero, 1.0, m)
        s = safe_m * np.sum((t / safe_m[..., None]) ** model.p, axis=-1) ** (1.0 / model.p)
        s = np.where(m == 0, 0.0, s)
        out = np.where(zero, 0.0, np.exp(-s))
    return float(out) if out.ndim == 0 else out


# ---------------------------------------------------------------------------
# sampling

def log_positive_stable(alpha: float, size: int, rng: np.random.Generator) -> np.ndarray:
    """log of one-sided stable variates with Laplace transform exp(-s^alpha).

    Chambers-Mallows-Stuck construction specialized to total positive skew
    (Kanter's representation), valid for 0 < alpha < 1.  Kept on the log
    scale: for small alpha the variates themselves leave the double range.
    """
    if not 0 < alpha < 1:
        raise ValueError("alpha must lie in (0, 1)")
    v = rng.uniform(0.0, math.pi, size=size)
    w = rng.exponential(size=size)
    return (
        np.log(np.sin(alpha * v))
        - np.log(np.sin(v)) / alpha
        + ((1.0 - alpha) / alpha) * (np.log(np.sin((1.0 - alpha) * v)) - np.log(w))
    )


def positive_stable(alpha: float, size: int, rng: np.random.Generator) -> np.ndarray:
    """One-sided stable variates; alpha = 1 is the point mass at 1."""
    if alpha == 1.0:
        return np.ones(size)
    return np.exp(log_positive_stable(alpha, size, rng))


def sample_rows(model: CopulaModel, n: int, rng: np.random.Generator) -> np.ndarray:
    """Draw n iid rows from the model using the supplied generator."""
    if isinstance(model, Independence):
        return rng.random((n, model.d))
    if isinstance(model, Comonotone):
        v = rng.random(n)
        return np.repeat(v[:, None], model.d, axis=1)
    # Archimedean mixture: S positive stable with index 1/p, E iid unit
    # exponentials, U_i = psi(E_i / S) with psi(t) = exp(-t^(1/p)); the
    # (E_i / S)^(1/p) power is taken in log space so large p stays stable
    if model.p == 1.0:
        return np.exp(-rng.exponential(size=(n, model.d)))
    log_s = log_positive_stable(1.0 / model.p, n, rng)
    e = rng.exponential(size=(n, model.d))
    with np.errstate(divide="ignore"):
        log_e = np.log(e)
    return np.exp(-np.exp((log_e - log_s[:, None]) / model.p))


def copula_sample(model: CopulaModel, n: int, seed: int) -> UniformSampleBatch:
    """Draw a reproducible batch of n rows.

    Rows are produced in fixed chunks, each from the stream keyed by
    (seed, chunk index), so any worker partition of the chunks reassembles
    to the identical batch.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    parts = []
    for c in range(0, n, SAMPLE_CHUNK):
        take = min(SAMPLE_CHUNK, n - c)
        parts.append(sample_rows(model, take, stream_rng(seed, c // SAMPLE_CHUNK)))
    rows = parts[0] if len(parts) == 1 else np.concatenate(parts, axis=0)
    return UniformSampleBatch(rows=rows, seed=seed, model=model.label(), chunk_size=SAMPLE_CHUNK)


# ---------------------------------------------------------------------------
# tail expansion

def tail_expansion_check(model: CopulaModel, x, t_grid) -> np.ndarray:
    """Finite-t quotients (1 - C(1 - t x)) / t along a decreasing t grid.

    As t drops to 0 the quotients approach the model's tail norm at x;
    returns an array with columns (t, quotient).
    """
    x = np.asarray(x, dtype=float)
    if x.ndim != 1 or x.size != model.d:
        raise ValueError("x must be a vector of the model dimension")
    if np.any(x < 0):
        raise ValueError("x must be nonnegative")
    t_grid = np.asarray(t_grid, dtype=float)
    if np.any(t_grid <= 0):
        raise ValueError("t grid must be positive")
    if x.max() > 0 and np.any(t_grid * x.max() > 1):
        raise ValueError("t * max(x) must stay inside the unit cube")
    rows = np.empty((t_grid.size, 2))
    for idx, t in enumerate(t_grid):
        rows[idx, 0] = t
        rows[idx, 1] = (1.0 - copula_cdf(model, 1.0 - t * x)) / t
    return rows


def tail_norm_value(model: CopulaModel, x) -> float:
    """Limit of the tail-expansion quotients at x."""
    return dnorm_eval(model.tail_dnorm, x)


# ---------------------------------------------------------------------------
# JSON wire format (CLI)

def model_from_json(obj: dict) -> CopulaModel:
    kind = obj.get("kind")
    d = int(obj.get("d", 2))
    if kind == "independence":
        return Independence(d)
    if kind == "comonotone":
        return Comonotone(d)
    if kind == "gumbel":
        return GumbelLogistic(d, float(obj["p"]))
    raise ValueError(f"unknown copula kind: {kind!r}")


def model_to_json(model: CopulaModel) -> dict:
    if isinstance(model, Independence):
        return {"kind": "independence", "d": model.d}
    if isinstance(model, Comonotone):
        return {"kind": "comonotone", "d": model.d}
    if isinstance(model, GumbelLogistic):
        return {"kind": "gumbel", "d": model.d, "p": model.p}
    raise TypeError(f"not a copula model: {model!r}")
