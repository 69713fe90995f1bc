#pragma once

#include <string>
#include <string_view>

namespace san {

enum class LinkKind { Logit, Probit, Cloglog };

/// Standard normal density, cdf and quantile.
double normal_pdf(double x);
double normal_cdf(double x);
double normal_quantile(double p);

/// A differentiable, strictly increasing map (0,1) -> R.
class Link {
 public:
  constexpr explicit Link(LinkKind kind = LinkKind::Logit) : kind_(kind) {}

  static Link parse(std::string_view name);

  LinkKind kind() const { return kind_; }
  std::string_view name() const;

  double eval(double p) const;
  double inverse(double eta) const;
  /// d eval / dp
  double derivative(double p) const;
  /// d inverse / d eta
  double inverse_derivative(double eta) const;
  /// Odds of the inverse, p/(1-p) at p = inverse(eta), computed without cancellation.
  double inverse_odds(double eta) const;
  /// d inverse_odds / d eta
  double inverse_odds_derivative(double eta) const;

  friend bool operator==(Link a, Link b) { return a.kind_ == b.kind_; }

 private:
  LinkKind kind_;
};

}  // namespace san
