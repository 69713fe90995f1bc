#pragma once

#include "san/link.hpp"
#include "san/table.hpp"

namespace san {

/// The convex generator f(z) = ∫_0^z link(v/(c+v)) dv tied to a link and
/// an odds ratio c = (1-π)/π of the missingness probability π.
class FGenerator {
 public:
  FGenerator(Link link, double c);

  Link link() const { return link_; }
  double c() const { return c_; }

  /// f(z), z >= 0. Closed form for logit, adaptive quadrature otherwise.
  double value(double z) const;
  /// f'(z) = link(z/(c+z)); -inf at z = 0.
  double derivative(double z) const;
  double second_derivative(double z) const;

  /// Inverse of f': the density ratio r(eta) = c * odds(link^{-1}(eta)).
  double ratio(double eta) const { return c_ * link_.inverse_odds(eta); }
  double ratio_derivative(double eta) const { return c_ * link_.inverse_odds_derivative(eta); }
  /// Convex conjugate f*(eta) = ∫_{-inf}^{eta} r(s) ds.
  double conjugate(double eta) const;

 private:
  Link link_;
  double c_;
};

/// f(z) for the generator.
double f_lambda(const FGenerator& generator, double z);

/// I_f(P, Q) = Σ_cells Q f(P/Q); cells with Q = 0 contribute nothing.
/// Throws when P is not dominated by Q.
double f_divergence(const ProbTable& p, const ProbTable& q, const FGenerator& generator);

}  // namespace san
