#include "san/summary.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "san/error.hpp"

namespace san {

double quantile_type7(std::span<const double> sorted, double p) {
  if (sorted.empty()) throw Error(ErrorCode::InvalidArgument, "quantile of an empty chain");
  if (!(p >= 0.0 && p <= 1.0)) throw Error(ErrorCode::InvalidArgument, "quantile probability outside [0, 1]");
  const double h = (static_cast<double>(sorted.size()) - 1.0) * p;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

double effective_sample_size(std::span<const double> x) {
  const std::size_t n = x.size();
  if (n < 4) return static_cast<double>(n);
  double mean = 0.0;
  for (double v : x) mean += v;
  mean /= static_cast<double>(n);
  auto autocov = [&](std::size_t lag) {
    double s = 0.0;
    for (std::size_t i = 0; i + lag < n; ++i) s += (x[i] - mean) * (x[i + lag] - mean);
    return s / static_cast<double>(n);
  };
  const double g0 = autocov(0);
  if (!(g0 > 0.0)) return static_cast<double>(n);
  // Sums of adjacent pairs, kept while positive and forced non-increasing.
  double sum = 0.0;
  double prev = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; 2 * k + 1 < n; ++k) {
    double pair = autocov(2 * k) + autocov(2 * k + 1);
    if (pair <= 0.0) break;
    pair = std::min(pair, prev);
    prev = pair;
    sum += pair;
  }
  const double tau = (2.0 * sum - g0) / g0;
  return static_cast<double>(n) / std::max(tau, 1.0 / std::log10(static_cast<double>(n)));
}

ParameterSummary summarize_posterior(std::span<const double> draws, const std::vector<double>& probs) {
  if (draws.empty()) throw Error(ErrorCode::InvalidArgument, "cannot summarize an empty chain");
  ParameterSummary s;
  const auto n = static_cast<double>(draws.size());
  for (double v : draws) s.mean += v;
  s.mean /= n;
  double ss = 0.0;
  for (double v : draws) ss += (v - s.mean) * (v - s.mean);
  s.sd = draws.size() > 1 ? std::sqrt(ss / (n - 1.0)) : 0.0;
  std::vector<double> sorted(draws.begin(), draws.end());
  std::sort(sorted.begin(), sorted.end());
  for (double p : probs) s.quantiles.push_back(quantile_type7(sorted, p));
  s.ess = effective_sample_size(draws);
  return s;
}

Histogram histogram(std::span<const double> draws, int bins) {
  if (draws.empty()) throw Error(ErrorCode::InvalidArgument, "histogram of an empty chain");
  if (bins < 1) throw Error(ErrorCode::InvalidArgument, "histogram needs at least one bin");
  Histogram h;
  const auto [mn, mx] = std::minmax_element(draws.begin(), draws.end());
  h.lo = *mn;
  h.hi = *mx;
  const double width = h.hi > h.lo ? (h.hi - h.lo) / bins : 1.0;
  for (int b = 0; b <= bins; ++b) h.edges.push_back(b == bins && h.hi > h.lo ? h.hi : h.lo + b * width);
  h.counts.assign(static_cast<std::size_t>(bins), 0);
  for (double v : draws) {
    auto b = static_cast<int>((v - h.lo) / width);
    b = std::clamp(b, 0, bins - 1);
    ++h.counts[static_cast<std::size_t>(b)];
  }
  return h;
}

}  // namespace san
