"""In-distribution replacement of variable subsets inside an anomalous interval.

The replacement treats each time step of the interval plus its surrounding
context as one joint Gaussian over ``d * length`` coordinates. Stationarity
makes that joint covariance block-Toeplitz, so only the first row of
lag blocks C_k = cov(x_t, x_{t-k}) has to be estimated (with the anomalous
interval masked out, so the anomaly cannot contaminate the nominal model).
New values for the replaced variables are then drawn from the Gaussian
conditional on everything that is kept: the untouched variables inside the
interval and the full context columns on both sides.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, EstimationError, NumericalError
from .gaussian import GaussianModel, jitter_epsilon, regularize_covariance
from .series import Interval, MultivariateSeries

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class StationaryCovariance:
    """Lag-indexed cross-covariance blocks C_0 ... C_{max_lag} of a stationary process.

    C_k estimates cov(x_t, x_{t-k}); together the blocks generate the
    symmetric block-Toeplitz joint covariance of any run of consecutive
    steps (block (i, j) = C_{i-j} for i >= j, C_{j-i}^T otherwise).
    """

    blocks: np.ndarray

    def __post_init__(self):
        blocks = np.array(self.blocks, dtype=float)
        if blocks.ndim != 3 or blocks.shape[0] < 1 or blocks.shape[1] != blocks.shape[2]:
            raise ValueError("blocks must be a (lags, d, d) stack")
        c0 = blocks[0]
        if np.abs(c0 - c0.T).max() > 1e-10 * max(1.0, np.abs(c0).max()):
            raise ValueError("lag-0 block must be symmetric")
        blocks.setflags(write=False)
        object.__setattr__(self, "blocks", blocks)

    @property
    def d(self) -> int:
        return self.blocks.shape[1]

    @property
    def max_lag(self) -> int:
        return self.blocks.shape[0] - 1


def estimate_stationary(
    series: MultivariateSeries,
    mask_interval: Interval,
    max_lag: int,
    truncate: bool = False,
) -> tuple[StationaryCovariance, np.ndarray]:
    """Estimate lag blocks and the nominal mean with the interval masked out.

    All cells inside ``mask_interval`` are treated as missing. Each C_k
    averages (x_t - mu)(x_{t-k} - mu)^T over pairs whose two rows both lie
    outside the mask (and whose cells are observed), which keeps the cost
    linear in the number of lags. With ``truncate=True`` lags that run out
    of pairs are dropped (and logged) instead of raising.
    """
    n, d = series.n, series.d
    mask_interval.validate_within(n)
    if max_lag < 0:
        raise ConfigError(f"max_lag must be >= 0, got {max_lag}")
    if max_lag >= n - mask_interval.length:
        raise ConfigError(
            f"max_lag {max_lag} too large for {n - mask_interval.length} unmasked rows"
        )

    present = ~series.missing.copy()
    present[mask_interval.a : mask_interval.b, :] = False
    counts = present.sum(axis=0)
    if counts.min() < 2:
        j = int(counts.argmin())
        raise EstimationError(
            f"variable {series.names[j]!r} has {counts[j]} observations outside the mask"
        )
    filled = np.where(present, series.values, 0.0)
    mean = filled.sum(axis=0) / counts
    centered = np.where(present, series.values - mean, 0.0)
    indicator = present.astype(float)

    blocks = []
    for k in range(max_lag + 1):
        pair_counts = indicator[k:].T @ indicator[: n - k]
        if pair_counts.min() < 2:
            if truncate:
                log.warning(
                    "lag blocks truncated at lag %d (requested %d): too few pairs",
                    k,
                    max_lag,
                )
                break
            raise EstimationError(f"too few pairwise-complete pairs at lag {k}")
        block = (centered[k:].T @ centered[: n - k]) / pair_counts
        if k == 0:
            block = 0.5 * (block + block.T)
        blocks.append(block)
    return StationaryCovariance(np.array(blocks)), mean


def assemble_joint(stat: StationaryCovariance, mean: np.ndarray, length: int) -> GaussianModel:
    """Expand lag blocks into the joint Gaussian over ``length`` consecutive steps.

    The mean is the nominal per-variable mean tiled once per step. Blocks
    beyond the last estimated lag are taken as zero (logged). A finite-sample
    block-Toeplitz assembly need not be PSD; if its smallest eigenvalue falls
    below the jitter level, eigenvalues are clipped there and the repair
    magnitude is logged.
    """
    mean = np.asarray(mean, dtype=float).reshape(-1)
    d = stat.d
    if mean.size != d:
        raise ValueError(f"mean has size {mean.size}, blocks are {d}x{d}")
    if length < 1:
        raise ValueError("length must be >= 1")
    if length - 1 > stat.max_lag:
        log.warning(
            "joint over %d steps but blocks stop at lag %d: missing lags set to zero",
            length,
            stat.max_lag,
        )
    zero = np.zeros((d, d))
    cov = np.zeros((d * length, d * length))
    for i in range(length):
        for j in range(i + 1):
            k = i - j
            block = stat.blocks[k] if k <= stat.max_lag else zero
            cov[i * d : (i + 1) * d, j * d : (j + 1) * d] = block
            if i != j:
                cov[j * d : (j + 1) * d, i * d : (i + 1) * d] = block.T

    eps = jitter_epsilon(cov)
    w = np.linalg.eigvalsh(cov)
    if w.min() < eps:
        wfull, v = np.linalg.eigh(cov)
        repaired = (v * np.maximum(wfull, eps)) @ v.T
        cov = 0.5 * (repaired + repaired.T)
        log.warning(
            "block-Toeplitz joint repaired: eigenvalues clipped at %.3g (min was %.3g)",
            eps,
            w.min(),
        )
    return GaussianModel(mean=np.tile(mean, length), cov=cov)


def _ceil_half(d: int) -> int:
    return math.ceil(d / 2)


@dataclass(frozen=True)
class ReplacementWindow:
    """Geometry of one replacement: the interval, its context, and the subset.

    The window spans the interval plus ``kappa - 1`` context steps on each
    side, so its length is ``(b - a) + 2*(kappa - 1)``. Context steps falling
    outside the series are simply absent (boundary truncation). The replaced
    subset must leave at least half of the variables untouched.
    """

    interval: Interval
    kappa: int
    subset: tuple[int, ...]
    n_times: int
    n_vars: int

    def __post_init__(self):
        if self.kappa < 1:
            raise ConfigError(f"kappa must be >= 1, got {self.kappa}")
        subset = tuple(sorted(int(j) for j in self.subset))
        if not subset:
            raise ConfigError("replacement subset must be non-empty")
        if len(set(subset)) != len(subset):
            raise ConfigError(f"replacement subset has duplicates: {subset}")
        if subset[0] < 0 or subset[-1] >= self.n_vars:
            raise ConfigError(f"subset {subset} out of range for {self.n_vars} variables")
        cap = _ceil_half(self.n_vars)
        if len(subset) > cap:
            raise ConfigError(
                f"subset size {len(subset)} exceeds the cap of {cap} for {self.n_vars} variables"
            )
        self.interval.validate_within(self.n_times)
        object.__setattr__(self, "subset", subset)

    @property
    def length(self) -> int:
        return self.interval.length + 2 * (self.kappa - 1)

    @property
    def start(self) -> int:
        """First (possibly negative) window time: interval start minus context."""
        return self.interval.a - (self.kappa - 1)

    def times(self) -> np.ndarray:
        return np.arange(self.start, self.start + self.length)

    def query_mask(self) -> np.ndarray:
        """Flat (length*d) mask of the coordinates being replaced (time-major)."""
        mask = np.zeros((self.length, self.n_vars), dtype=bool)
        t = self.times()
        inside = (t >= self.interval.a) & (t < self.interval.b)
        mask[np.ix_(inside, np.array(self.subset))] = True
        return mask.ravel()


def window_observation(
    series: MultivariateSeries, window: ReplacementWindow
) -> tuple[np.ndarray, np.ndarray]:
    """Window-shaped view of the series: (length, d) values and a present mask.

    Rows for context times outside the series are absent; observed cells are
    marked present regardless of whether they will be replaced.
    """
    values = np.zeros((window.length, series.d))
    present = np.zeros((window.length, series.d), dtype=bool)
    t = window.times()
    in_range = (t >= 0) & (t < series.n)
    values[in_range] = series.values[t[in_range]]
    present[in_range] = ~series.missing[t[in_range]]
    values[~present] = 0.0
    return values, present


def conditional_replacement(
    joint: GaussianModel,
    window: ReplacementWindow,
    observed_values: np.ndarray,
    observed_present: np.ndarray,
) -> GaussianModel:
    """Gaussian law of the replaced coordinates given everything that is kept.

    Evidence is every present, non-replaced coordinate of the window; the
    conditional moments come from the Schur complement

        mu_{Q|E} = mu_Q + S_QE S_EE^-1 (e - mu_E)
        S_{Q|E}  = S_QQ - S_QE S_EE^-1 S_EQ

    solved through a Cholesky factorization of S_EE.
    """
    dim = window.length * window.n_vars
    if joint.dim != dim:
        raise ValueError(f"joint has dimension {joint.dim}, window needs {dim}")
    q_mask = window.query_mask()
    e_mask = observed_present.ravel() & ~q_mask
    q_idx = np.flatnonzero(q_mask)
    e_idx = np.flatnonzero(e_mask)
    if q_idx.size == 0:
        raise ConfigError("window replaces no coordinates")

    mu_q = joint.mean[q_idx]
    s_qq = joint.cov[np.ix_(q_idx, q_idx)]
    if e_idx.size == 0:
        cov = 0.5 * (s_qq + s_qq.T)
        return GaussianModel(mean=mu_q, cov=cov)

    mu_e = joint.mean[e_idx]
    s_ee = joint.cov[np.ix_(e_idx, e_idx)]
    s_eq = joint.cov[np.ix_(e_idx, q_idx)]
    try:
        l_e = np.linalg.cholesky(s_ee)
    except np.linalg.LinAlgError:
        try:
            l_e = np.linalg.cholesky(s_ee + jitter_epsilon(s_ee) * np.eye(e_idx.size))
        except np.linalg.LinAlgError:
            raise NumericalError("evidence covariance not factorizable after jitter") from None

    half = np.linalg.solve(l_e, s_eq)
    resid = np.linalg.solve(l_e, observed_values.ravel()[e_idx] - mu_e)
    mean = mu_q + half.T @ resid
    cov = s_qq - half.T @ half
    cov = 0.5 * (cov + cov.T)
    return GaussianModel(mean=mean, cov=cov)


def sample_replacement(
    joint: GaussianModel,
    window: ReplacementWindow,
    observed_values: np.ndarray,
    observed_present: np.ndarray,
    seed,
) -> np.ndarray:
    """One conditional draw of the replaced block, shaped (|interval|, |subset|).

    ``seed`` is anything accepted by ``numpy.random.default_rng``; identical
    seeds reproduce the draw exactly.
    """
    cond = conditional_replacement(joint, window, observed_values, observed_present)
    rng = np.random.default_rng(seed)
    cov, _, _ = regularize_covariance(cond.cov)
    draw = cond.mean + np.linalg.cholesky(cov) @ rng.standard_normal(cond.dim)
    return draw.reshape(window.interval.length, len(window.subset))


def apply_replacement(
    series: MultivariateSeries, window: ReplacementWindow, sample: np.ndarray
) -> MultivariateSeries:
    """Overwrite the replaced subset inside the interval; everything else is untouched."""
    sample = np.asarray(sample, dtype=float)
    expected = (window.interval.length, len(window.subset))
    if sample.shape != expected:
        raise ValueError(f"sample shape {sample.shape} does not match {expected}")
    values = series.values.copy()
    missing = series.missing.copy()
    cols = np.array(window.subset)
    values[window.interval.a : window.interval.b, cols] = sample
    missing[window.interval.a : window.interval.b, cols] = False
    return series.with_values(values, missing)
