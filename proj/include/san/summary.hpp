#pragma once

#include <span>
#include <vector>

namespace san {

struct ParameterSummary {
  double mean = 0.0;
  double sd = 0.0;  ///< n - 1 denominator
  std::vector<double> quantiles;
  double ess = 0.0;
};

/// Type-7 (linear interpolation) quantile of `sorted` at probability p.
double quantile_type7(std::span<const double> sorted, double p);

/// Effective sample size with Geyer's initial monotone sequence estimator.
double effective_sample_size(std::span<const double> draws);

ParameterSummary summarize_posterior(std::span<const double> draws,
                                     const std::vector<double>& probs = {0.025, 0.5, 0.975});

struct Histogram {
  double lo = 0.0;
  double hi = 0.0;
  std::vector<double> edges;  ///< bins + 1 entries
  std::vector<long long> counts;
};

/// Equal-width bins over [min, max] of the draws; the last bin is closed.
Histogram histogram(std::span<const double> draws, int bins = 50);

}  // namespace san
