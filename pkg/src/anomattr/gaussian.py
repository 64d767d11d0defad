"""Gaussian fits over sample rows and the closed-form divergence between two fits.

The divergence of a fitted pair (p, q) is the standard non-negative
Kullback-Leibler closed form for multivariate normals,

    KL(p || q) = 1/2 [ (mu_q-mu_p)' Sq^-1 (mu_q-mu_p) + tr(Sq^-1 Sp)
                       + ln(|Sq|/|Sp|) - m ],

evaluated through a Cholesky factorization of Sq (no explicit inverse).
Interval ranking uses the length-weighted form ``2 * |I| * KL``.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from .errors import EstimationError, NumericalError
from .series import Interval

log = logging.getLogger(__name__)

#: Floor for the diagonal jitter added before factorizing a covariance.
JITTER_FLOOR = 1e-9


def jitter_epsilon(cov: np.ndarray) -> float:
    """Scale-aware jitter: max(floor, floor * mean diagonal magnitude)."""
    m = cov.shape[0]
    return max(JITTER_FLOOR, JITTER_FLOOR * float(np.trace(cov)) / m)


def regularize_covariance(cov: np.ndarray) -> tuple[np.ndarray, float, bool]:
    """Symmetrize ``cov`` and make it positive definite.

    Adds scale-aware diagonal jitter; if a Cholesky factorization still
    fails (possible for pairwise-complete estimates, which need not be
    PSD), clips eigenvalues at the jitter level instead.

    Returns (regularized covariance, jitter epsilon, clipped flag).
    """
    sym = 0.5 * (cov + cov.T)
    eps = jitter_epsilon(sym)
    candidate = sym + eps * np.eye(sym.shape[0])
    try:
        np.linalg.cholesky(candidate)
        return candidate, eps, False
    except np.linalg.LinAlgError:
        pass
    w, v = np.linalg.eigh(sym)
    log.warning(
        "covariance not PD after jitter: clipping eigenvalues at %.3g (min was %.3g)",
        eps,
        w.min(),
    )
    clipped = (v * np.maximum(w, eps)) @ v.T
    clipped = 0.5 * (clipped + clipped.T)
    return clipped, eps, True


@dataclass(frozen=True)
class GaussianModel:
    """Mean vector and covariance matrix fitted to a sample population."""

    mean: np.ndarray
    cov: np.ndarray
    count: int = 0

    def __post_init__(self):
        mean = np.array(self.mean, dtype=float).reshape(-1)
        cov = np.array(self.cov, dtype=float)
        if cov.shape != (mean.size, mean.size):
            raise ValueError(f"covariance shape {cov.shape} does not match mean size {mean.size}")
        asym = np.abs(cov - cov.T).max() if cov.size else 0.0
        if asym > 1e-12 * max(1.0, np.abs(cov).max()):
            raise ValueError(f"covariance is not symmetric (max asymmetry {asym:.3g})")
        mean.setflags(write=False)
        cov.setflags(write=False)
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "cov", cov)

    @property
    def dim(self) -> int:
        return self.mean.size


def estimate(rows: np.ndarray, missing: np.ndarray | None = None) -> GaussianModel:
    """Fit a Gaussian to sample rows (maximum-likelihood covariance).

    ``missing`` may be a per-row flag vector or a per-cell mask; statistics
    are pairwise-complete over cells, so partially observed rows still
    contribute. The covariance is symmetrized and regularized to be
    positive definite.
    """
    rows = np.asarray(rows, dtype=float)
    if rows.ndim != 2:
        raise ValueError("rows must be 2-d (samples x coordinates)")
    nrows, m = rows.shape
    if missing is None:
        present = np.ones((nrows, m), dtype=bool)
    else:
        missing = np.asarray(missing, dtype=bool)
        if missing.shape == (nrows,):
            present = ~missing[:, None] & np.ones((1, m), dtype=bool)
        elif missing.shape == rows.shape:
            present = ~missing
        else:
            raise ValueError("missing must be per-row or per-cell")

    usable = int(present.any(axis=1).sum())
    if usable < 2:
        raise EstimationError(f"need at least 2 usable rows, got {usable}")
    col_counts = present.sum(axis=0)
    if col_counts.min() < 2:
        j = int(col_counts.argmin())
        raise EstimationError(f"coordinate {j} has {col_counts[j]} observations, need >= 2")

    filled = np.where(present, rows, 0.0)
    mean = filled.sum(axis=0) / col_counts
    centered = np.where(present, rows - mean, 0.0)
    pair_counts = present.astype(float).T @ present.astype(float)
    raw = centered.T @ centered
    with np.errstate(invalid="ignore"):
        cov = np.where(pair_counts > 0, raw / np.maximum(pair_counts, 1.0), 0.0)
    cov, _, _ = regularize_covariance(cov)
    return GaussianModel(mean=mean, cov=cov, count=usable)


def _chol(cov: np.ndarray, what: str) -> np.ndarray:
    try:
        return np.linalg.cholesky(cov)
    except np.linalg.LinAlgError:
        raise NumericalError(f"{what} covariance is not positive definite") from None


def kl_divergence(p: GaussianModel, q: GaussianModel) -> float:
    """Closed-form KL(p || q); non-negative, with tiny round-off clamped to 0."""
    if p.dim != q.dim:
        raise ValueError(f"dimension mismatch: {p.dim} vs {q.dim}")
    m = p.dim
    l_q = _chol(q.cov, "q")
    l_p = _chol(p.cov, "p")
    a = np.linalg.solve(l_q, l_p)
    trace_term = float((a * a).sum())
    v = np.linalg.solve(l_q, q.mean - p.mean)
    maha = float(v @ v)
    logdet = 2.0 * float(np.log(np.diag(l_q)).sum() - np.log(np.diag(l_p)).sum())
    value = 0.5 * (maha + trace_term + logdet - m)
    if value < -1e-6:
        raise NumericalError(f"divergence evaluated to {value:.3g}; factorization unreliable")
    return max(0.0, value)


def unbiased_kl(score: float, interval: Interval) -> float:
    """Length-weighted interval score ``2 * |I| * KL`` used for ranking."""
    if score < 0:
        raise ValueError(f"score must be non-negative, got {score}")
    return 2.0 * interval.length * score


def sample(model: GaussianModel, rng: np.random.Generator, size: int | None = None) -> np.ndarray:
    """Draw from a fitted Gaussian (regularizing the covariance if needed)."""
    cov, _, _ = regularize_covariance(model.cov)
    l = np.linalg.cholesky(cov)
    if size is None:
        return model.mean + l @ rng.standard_normal(model.dim)
    return model.mean + rng.standard_normal((size, model.dim)) @ l.T
