"""Synthetic ground-truth generator: stable VAR processes with injected anomalies."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError
from .series import Interval, MultivariateSeries

KINDS = ("mean_shift", "variance_scale", "correlation_break")

BURN_IN = 500


@dataclass(frozen=True)
class Injection:
    """One anomaly: where, which variables, and how the data are perturbed.

    mean_shift adds ``magnitude`` marginal standard deviations; variance_scale
    multiplies the innovations inside the interval by ``magnitude``;
    correlation_break permutes each affected variable in time within the
    interval (independently per variable), which preserves marginals while
    destroying auto- and cross-correlation.
    """

    interval: Interval
    variables: tuple[int, ...]
    kind: str
    magnitude: float = 0.0

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ConfigError(f"unknown anomaly kind {self.kind!r}; choose from {KINDS}")
        variables = tuple(sorted(int(v) for v in self.variables))
        if not variables:
            raise ConfigError("anomaly must target at least one variable")
        if len(set(variables)) != len(variables):
            raise ConfigError(f"anomaly variables contain duplicates: {variables}")
        object.__setattr__(self, "variables", variables)


@dataclass(frozen=True)
class SynthSpec:
    """Simulation recipe: VAR coefficients, innovation covariance, and anomalies."""

    n: int
    d: int
    coeffs: tuple[np.ndarray, ...] = ()
    innovation_cov: np.ndarray | None = None
    anomalies: tuple[Injection, ...] = ()
    seed: int = 0
    names: tuple[str, ...] | None = None
    burn_in: int = BURN_IN

    def __post_init__(self):
        if self.n < 1 or self.d < 1:
            raise ConfigError(f"need n >= 1 and d >= 1, got n={self.n} d={self.d}")
        coeffs = tuple(np.array(c, dtype=float) for c in self.coeffs)
        for c in coeffs:
            if c.shape != (self.d, self.d):
                raise ConfigError(f"coefficient matrix shape {c.shape} != ({self.d}, {self.d})")
        radius = spectral_radius(coeffs, self.d)
        if radius >= 1.0:
            raise ConfigError(f"unstable coefficients: spectral radius {radius:.4f} >= 1")
        cov = np.eye(self.d) if self.innovation_cov is None else np.array(self.innovation_cov, dtype=float)
        if cov.shape != (self.d, self.d):
            raise ConfigError(f"innovation covariance shape {cov.shape} != ({self.d}, {self.d})")
        try:
            np.linalg.cholesky(cov)
        except np.linalg.LinAlgError:
            raise ConfigError("innovation covariance must be positive definite") from None
        for inj in self.anomalies:
            if inj.interval.b > self.n:
                raise ConfigError(
                    f"anomaly interval [{inj.interval.a}, {inj.interval.b}) exceeds n={self.n}"
                )
            if inj.variables[-1] >= self.d:
                raise ConfigError(f"anomaly variables {inj.variables} out of range for d={self.d}")
        object.__setattr__(self, "coeffs", coeffs)
        object.__setattr__(self, "innovation_cov", cov)
        object.__setattr__(self, "anomalies", tuple(self.anomalies))

    @property
    def order(self) -> int:
        return len(self.coeffs)


def spectral_radius(coeffs, d: int) -> float:
    """Spectral radius of the VAR companion matrix (0 for a pure-noise process)."""
    p = len(coeffs)
    if p == 0:
        return 0.0
    companion = np.zeros((d * p, d * p))
    for i, c in enumerate(coeffs):
        companion[:d, i * d : (i + 1) * d] = c
    if p > 1:
        companion[d:, : d * (p - 1)] = np.eye(d * (p - 1))
    return float(np.abs(np.linalg.eigvals(companion)).max())


def _simulate(spec: SynthSpec, innovations: np.ndarray) -> np.ndarray:
    total = spec.burn_in + spec.n
    x = np.zeros((total, spec.d))
    for t in range(total):
        acc = innovations[t].copy()
        for i, c in enumerate(spec.coeffs, start=1):
            if t - i >= 0:
                acc += c @ x[t - i]
        x[t] = acc
    return x[spec.burn_in :]


def generate(spec: SynthSpec) -> tuple[MultivariateSeries, tuple[Injection, ...]]:
    """Simulate the VAR (burn-in discarded) and apply the requested anomalies.

    Deterministic in the spec seed: the innovation stream and each anomaly
    use independent child streams, so adding or removing one anomaly never
    perturbs the base realization or the other anomalies.
    """
    root = np.random.SeedSequence(spec.seed)
    children = root.spawn(1 + len(spec.anomalies))
    rng = np.random.default_rng(children[0])
    chol = np.linalg.cholesky(spec.innovation_cov)
    z = rng.standard_normal((spec.burn_in + spec.n, spec.d))
    innovations = z @ chol.T

    # Innovation-level injections first (they require re-running the
    # recursion), then value-level injections on the resulting paths.
    scaled = innovations
    for inj in spec.anomalies:
        if inj.kind == "variance_scale":
            if scaled is innovations:
                scaled = innovations.copy()
            cols = np.array(inj.variables)
            scaled[spec.burn_in + inj.interval.a : spec.burn_in + inj.interval.b, cols] *= inj.magnitude

    base = _simulate(spec, innovations)
    out = base.copy() if scaled is innovations else _simulate(spec, scaled)
    marginal_std = base.std(axis=0)

    for inj, child in zip(spec.anomalies, children[1:]):
        a, b = inj.interval.a, inj.interval.b
        cols = np.array(inj.variables)
        if inj.kind == "mean_shift":
            out[a:b, cols] += inj.magnitude * marginal_std[cols]
        elif inj.kind == "correlation_break":
            inj_rng = np.random.default_rng(child)
            for j in cols:
                perm = inj_rng.permutation(b - a)
                out[a:b, j] = out[a:b, j][perm]

    series = MultivariateSeries(values=out, names=spec.names)
    return series, spec.anomalies
