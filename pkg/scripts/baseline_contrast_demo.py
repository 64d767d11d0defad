"""Why per-variable histograms mislead: a correlation break is invisible to
marginals, while slowly wandering variables always look marginally unusual.

Generates a series where variables x1, x2 have their joint structure
destroyed inside an interval (marginals untouched) next to two strongly
autocorrelated variables, then prints the univariate histogram ranking
against the counterfactual-replacement ranking.

Usage: python scripts/baseline_contrast_demo.py [--seed 0]
"""

import argparse

import numpy as np

from anomattr import (
    AttributionConfig,
    Detection,
    Injection,
    Interval,
    SynthSpec,
    attribute,
    generate,
    univariate_baseline,
    zscore,
)


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args()

    d = 4
    interval = Interval(600, 700)
    coeffs = np.diag([0.6, 0.6, 0.98, 0.98])
    coeffs[0, 1] = coeffs[1, 0] = 0.3
    innovation = np.eye(d)
    innovation[0, 1] = innovation[1, 0] = 0.5
    spec = SynthSpec(
        n=1500,
        d=d,
        coeffs=(coeffs,),
        innovation_cov=innovation,
        seed=args.seed,
        anomalies=(Injection(interval, (0, 1), "correlation_break", 0.0),),
    )
    series, _ = generate(spec)
    series, _ = zscore(series)

    baseline = univariate_baseline(series, interval, bins=30)
    print(f"correlation break injected on x1+x2 over [{interval.a}, {interval.b})\n")
    print("univariate histogram scores (high = 'anomalous'):")
    for name, score in sorted(zip(series.names, baseline), key=lambda t: -t[1]):
        print(f"  {name:>4}  {score:.4f}")

    report = attribute(
        series,
        Detection(interval=interval, score=0.0, rank=1),
        AttributionConfig(realizations=10, seed=args.seed),
    )
    print(f"\ncounterfactual replacement scores (low = responsible), original {report.original_score:.1f}:")
    for entry in sorted(report.subsets, key=lambda s: s.mean_score):
        label = "+".join(entry.subset.labels(series.names))
        print(f"  {label:>7}  {entry.mean_score:10.1f} +- {entry.std_score:.1f}")
    print(
        "\nThe histogram ranking points at the wandering variables; replacing"
        "\nthe broken pair is what actually removes the anomaly."
    )


if __name__ == "__main__":
    main()
