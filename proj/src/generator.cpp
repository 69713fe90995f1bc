#include "san/generator.hpp"

#include <cmath>
#include <limits>

#include "san/error.hpp"
#include "san/quadrature.hpp"

namespace san {
namespace {

// Ein(x) = ∫_0^x (e^t - 1)/t dt = Σ_{k>=1} x^k / (k k!); all terms positive.
double ein(double x) {
  if (x > 700.0) return std::numeric_limits<double>::infinity();
  double term = x;  // x^k / k!
  double sum = x;
  for (int k = 2; k < 5000; ++k) {
    term *= x / k;
    const double add = term / k;
    sum += add;
    if (add < 1e-17 * sum) break;
  }
  return sum;
}

}  // namespace

FGenerator::FGenerator(Link link, double c) : link_(link), c_(c) {
  if (!(c > 0.0) || !std::isfinite(c))
    throw Error(ErrorCode::InvalidArgument,
                "generator odds ratio c must be positive and finite (0 < pi < 1)");
}

double FGenerator::value(double z) const {
  if (z < 0.0 || std::isnan(z))
    throw Error(ErrorCode::InvalidArgument, "f_lambda needs z >= 0");
  if (z == 0.0) return 0.0;
  if (link_.kind() == LinkKind::Logit) return z * std::log(z / c_) - z;
  // v = z t^2 removes the endpoint singularity of link(v/(c+v)) at v = 0.
  const auto integrand = [this, z](double t) {
    const double v = z * t * t;
    const double p = v / (c_ + v);
    if (!(p > 0.0)) return 0.0;
    return link_.eval(p) * 2.0 * z * t;
  };
  return integrate(integrand, 0.0, 1.0, 1e-14, 1e-14).value;
}

double FGenerator::derivative(double z) const {
  if (z <= 0.0) return -std::numeric_limits<double>::infinity();
  if (link_.kind() == LinkKind::Logit) return std::log(z / c_);
  return link_.eval(z / (c_ + z));
}

double FGenerator::second_derivative(double z) const {
  if (link_.kind() == LinkKind::Logit) return 1.0 / z;
  const double s = c_ + z;
  return link_.derivative(z / s) * c_ / (s * s);
}

double FGenerator::conjugate(double eta) const {
  switch (link_.kind()) {
    case LinkKind::Logit:
      return c_ * std::exp(eta);
    case LinkKind::Cloglog:
      return c_ * ein(std::exp(eta));
    case LinkKind::Probit: {
      constexpr double lower = -40.0;
      if (eta <= lower) return 0.0;
      const auto r = [](double s) { return normal_cdf(s) / normal_cdf(-s); };
      return c_ * integrate(r, lower, eta, 1e-300, 1e-14).value;
    }
  }
  return 0.0;
}

double f_lambda(const FGenerator& generator, double z) { return generator.value(z); }

double f_divergence(const ProbTable& p, const ProbTable& q, const FGenerator& generator) {
  if (!(p.space() == q.space()))
    throw Error(ErrorCode::InvalidArgument, "f-divergence of tables on different spaces");
  double total = 0.0;
  for (Index c = 0; c < p.size(); ++c) {
    if (q[c] == 0.0) {
      if (p[c] != 0.0)
        throw Error(ErrorCode::Dominance, "P is not dominated by Q at cell " +
                                              p.space().cell_label(c));
      continue;
    }
    total += q[c] * generator.value(p[c] / q[c]);
  }
  return total;
}

}  // namespace san
