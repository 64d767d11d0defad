"""Exhaustive interval scan for the most divergent intervals of a series.

Every candidate (start, length) on the scan grid is scored by the
length-weighted divergence between the Gaussian fitted to embedded rows
anchored inside the interval and the one fitted to the rest. The scan
reuses prefix sums of the embedded rows and their outer products, so each
candidate costs O(width^3) regardless of its length; the result is required
(and tested) to match naive per-interval re-estimation.
"""

from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import gaussian
from .errors import ConfigError, ScoringError
from .gaussian import GaussianModel, estimate, kl_divergence, unbiased_kl
from .series import Embedding, EmbeddingConfig, Interval, MultivariateSeries, embed

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class Detection:
    """A scored anomalous interval, in original time coordinates."""

    interval: Interval
    score: float
    rank: int


@dataclass(frozen=True)
class ScanConfig:
    """Scan grid and suppression parameters for :func:`detect`."""

    len_min: int
    len_max: int
    top_k: int = 1
    stride: int = 1
    embedding: EmbeddingConfig = field(default_factory=EmbeddingConfig)

    def __post_init__(self):
        if self.len_min < 1 or self.len_min > self.len_max:
            raise ConfigError(
                f"need 1 <= len_min <= len_max, got [{self.len_min}, {self.len_max}]"
            )
        if self.top_k < 1:
            raise ConfigError(f"top_k must be >= 1, got {self.top_k}")
        if self.stride < 1:
            raise ConfigError(f"stride must be >= 1, got {self.stride}")


def interval_row_masks(emb: Embedding, interval: Interval) -> tuple[np.ndarray, np.ndarray]:
    """Split usable embedded rows into inside/outside masks for an interval.

    A row belongs to the interval iff its anchor time does; rows flagged
    missing are excluded from both sides.
    """
    anchored = (emb.times >= interval.a) & (emb.times < interval.b)
    inside = anchored & ~emb.missing
    outside = ~anchored & ~emb.missing
    n_in, n_out = int(inside.sum()), int(outside.sum())
    if n_out == 0:
        raise ScoringError(f"empty complement for interval [{interval.a}, {interval.b})")
    if n_in < 2:
        raise ScoringError(
            f"interval [{interval.a}, {interval.b}) has {n_in} usable embedded rows, need >= 2"
        )
    if n_out < 2:
        raise ScoringError(
            f"complement of [{interval.a}, {interval.b}) has {n_out} usable embedded rows, need >= 2"
        )
    return inside, outside


def interval_models(
    series: MultivariateSeries, interval: Interval, cfg: EmbeddingConfig
) -> tuple[GaussianModel, GaussianModel]:
    """Fit the inside/outside Gaussians for one interval (naive path)."""
    interval.validate_within(series.n)
    emb = embed(series, cfg)
    inside, outside = interval_row_masks(emb, interval)
    return estimate(emb.values[inside]), estimate(emb.values[outside])


def score_interval(series: MultivariateSeries, interval: Interval, cfg: EmbeddingConfig) -> float:
    """Length-weighted divergence of one interval against the rest of the series."""
    p_in, p_out = interval_models(series, interval, cfg)
    return unbiased_kl(kl_divergence(p_in, p_out), interval)


class PrefixScanner:
    """Prefix-sum statistics over embedded rows for O(1) interval moments.

    Missing rows are zero-filled and tracked by a separate count prefix, so
    means and ML covariances come out identical (up to round-off) to naive
    re-estimation over the usable rows.
    """

    def __init__(self, emb: Embedding):
        valid = ~emb.missing
        x = np.where(valid[:, None], emb.values, 0.0)
        m, width = x.shape
        self.width = width
        self.lead = int(emb.times[0])
        self.rows = m
        self.counts = np.concatenate([[0], np.cumsum(valid)])
        self.sums = np.vstack([np.zeros(width), np.cumsum(x, axis=0)])
        outer = x[:, :, None] * x[:, None, :]
        self.outer_sums = np.concatenate(
            [np.zeros((1, width, width)), np.cumsum(outer, axis=0)], axis=0
        )
        self.total_count = int(self.counts[-1])
        self.total_sum = self.sums[-1]
        self.total_outer = self.outer_sums[-1]

    def _row_range(self, starts: np.ndarray, length: int) -> tuple[np.ndarray, np.ndarray]:
        lo = np.clip(starts - self.lead, 0, self.rows)
        hi = np.clip(starts + length - self.lead, 0, self.rows)
        return lo, np.maximum(hi, lo)

    def score_batch(self, starts: np.ndarray, length: int) -> np.ndarray:
        """Length-weighted scores for all intervals [s, s+length); NaN if unscorable."""
        lo, hi = self._row_range(starts, length)
        cnt_in = self.counts[hi] - self.counts[lo]
        cnt_out = self.total_count - cnt_in
        ok = (cnt_in >= 2) & (cnt_out >= 2)
        out = np.full(starts.shape, np.nan)
        if not ok.any():
            return out
        lo, hi = lo[ok], hi[ok]
        cin = cnt_in[ok].astype(float)[:, None]
        cout = cnt_out[ok].astype(float)[:, None]

        sum_in = self.sums[hi] - self.sums[lo]
        mu_in = sum_in / cin
        mu_out = (self.total_sum - sum_in) / cout
        m2_in = (self.outer_sums[hi] - self.outer_sums[lo]) / cin[..., None]
        m2_out = (self.total_outer - (self.outer_sums[hi] - self.outer_sums[lo])) / cout[..., None]
        cov_in = m2_in - mu_in[:, :, None] * mu_in[:, None, :]
        cov_out = m2_out - mu_out[:, :, None] * mu_out[:, None, :]

        kl = _batched_kl(mu_in, cov_in, mu_out, cov_out)
        out[ok] = 2.0 * length * kl
        return out


def _batched_kl(mu_p, cov_p, mu_q, cov_q) -> np.ndarray:
    """Vectorized KL(p || q) over stacks of Gaussians; NaN where ill-posed."""
    width = mu_p.shape[1]
    eye = np.eye(width)

    def jittered(cov):
        eps = np.maximum(
            gaussian.JITTER_FLOOR,
            gaussian.JITTER_FLOOR * np.einsum("kii->k", cov) / width,
        )
        return cov + eps[:, None, None] * eye

    cov_p = jittered(cov_p)
    cov_q = jittered(cov_q)
    sign_p, logdet_p = np.linalg.slogdet(cov_p)
    sign_q, logdet_q = np.linalg.slogdet(cov_q)
    diff = mu_q - mu_p
    rhs = np.concatenate([cov_p, diff[:, :, None]], axis=2)
    sol = np.linalg.solve(cov_q, rhs)
    trace_term = np.einsum("kii->k", sol[:, :, :width])
    maha = np.einsum("ki,ki->k", diff, sol[:, :, width])
    kl = 0.5 * (maha + trace_term + logdet_q - logdet_p - width)
    kl = np.where((sign_p > 0) & (sign_q > 0), np.maximum(kl, 0.0), np.nan)
    return kl


def _suppress(scores, starts, lens, order, top_k: int) -> list[Detection]:
    """Greedy non-intersecting selection in descending score order."""
    accepted: list[Detection] = []
    for i in order:
        iv = Interval(int(starts[i]), int(starts[i] + lens[i]))
        if any(iv.intersects(det.interval) for det in accepted):
            continue
        accepted.append(Detection(interval=iv, score=float(scores[i]), rank=len(accepted) + 1))
        if len(accepted) == top_k:
            break
    return accepted


def detect(series: MultivariateSeries, cfg: ScanConfig, threads: int = 1) -> list[Detection]:
    """Scan all candidate intervals and return the top-k disjoint detections.

    Candidates are every (start, length) with len_min <= length <= len_max,
    starts on the stride grid. Suppression is greedy: candidates are taken
    in descending score order and discarded if they intersect an accepted
    one. Ties break deterministically on (start, length).
    """
    n = series.n
    if cfg.len_max > n:
        raise ConfigError(f"len_max {cfg.len_max} exceeds series length {n}")
    emb = embed(series, cfg.embedding)
    scanner = PrefixScanner(emb)

    lengths = range(cfg.len_min, cfg.len_max + 1)

    def scan_one(length: int):
        starts = np.arange(0, n - length + 1, cfg.stride)
        if starts.size == 0:
            return None
        return starts, scanner.score_batch(starts, length), length

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            chunks = [c for c in pool.map(scan_one, lengths) if c is not None]
    else:
        chunks = [c for c in map(scan_one, lengths) if c is not None]

    all_scores, all_starts, all_lengths = [], [], []
    for starts, scores, length in chunks:
        keep = np.isfinite(scores)
        if keep.any():
            all_scores.append(scores[keep])
            all_starts.append(starts[keep])
            all_lengths.append(np.full(int(keep.sum()), length))
    if not all_scores:
        raise ScoringError("no scorable candidate interval on the scan grid")

    scores = np.concatenate(all_scores)
    starts = np.concatenate(all_starts)
    lens = np.concatenate(all_lengths)
    order = np.lexsort((lens, starts, -scores))
    detections = _suppress(scores, starts, lens, order, cfg.top_k)
    log.info(
        "scan over %d candidates produced %d detection(s)", scores.size, len(detections)
    )
    return detections
