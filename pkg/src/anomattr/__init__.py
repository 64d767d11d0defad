"""Anomalous-interval detection and counterfactual variable attribution.

Detection scans a multivariate series for the intervals whose delay-embedded
Gaussian fit diverges most from the rest of the data; attribution replaces
variable subsets inside a detected interval with draws from the nominal
distribution (conditioned on the untouched variables and the surrounding
context) and ranks subsets by how much the replacement lowers the score.
"""

from .attribution import (
    AttributionConfig,
    AttributionReport,
    SubsetScore,
    VariableSubset,
    attribute,
    enumerate_subsets,
    pre_event_scores,
    subset_cap,
    univariate_baseline,
)
from .counterfactual import (
    ReplacementWindow,
    StationaryCovariance,
    apply_replacement,
    assemble_joint,
    conditional_replacement,
    estimate_stationary,
    sample_replacement,
    window_observation,
)
from .detector import Detection, ScanConfig, detect, score_interval
from .errors import (
    AnomattrError,
    ConfigError,
    EstimationError,
    NumericalError,
    ParseError,
    ScoringError,
)
from .gaussian import GaussianModel, estimate, kl_divergence, unbiased_kl
from .series import (
    Embedding,
    EmbeddingConfig,
    Interval,
    MultivariateSeries,
    ZScoreParams,
    embed,
    inverse_zscore,
    load_csv,
    write_csv,
    zscore,
)
from .synth import Injection, SynthSpec, generate

__version__ = "0.1.0"

__all__ = [
    "AnomattrError",
    "AttributionConfig",
    "AttributionReport",
    "ConfigError",
    "Detection",
    "Embedding",
    "EmbeddingConfig",
    "EstimationError",
    "GaussianModel",
    "Injection",
    "Interval",
    "MultivariateSeries",
    "NumericalError",
    "ParseError",
    "ReplacementWindow",
    "ScanConfig",
    "ScoringError",
    "StationaryCovariance",
    "SubsetScore",
    "SynthSpec",
    "VariableSubset",
    "ZScoreParams",
    "apply_replacement",
    "assemble_joint",
    "attribute",
    "conditional_replacement",
    "detect",
    "embed",
    "enumerate_subsets",
    "estimate",
    "estimate_stationary",
    "generate",
    "inverse_zscore",
    "kl_divergence",
    "load_csv",
    "pre_event_scores",
    "sample_replacement",
    "score_interval",
    "subset_cap",
    "unbiased_kl",
    "univariate_baseline",
    "window_observation",
    "write_csv",
    "zscore",
]
