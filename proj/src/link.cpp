#include "san/link.hpp"

#include <cmath>
#include <numbers>

#include "san/error.hpp"

namespace san {

double normal_pdf(double x) { return std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi); }

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

double normal_quantile(double p) {
  if (!(p > 0.0 && p < 1.0)) {
    if (p == 0.0) return -HUGE_VAL;
    if (p == 1.0) return HUGE_VAL;
    throw Error(ErrorCode::InvalidArgument, "normal quantile outside [0,1]");
  }
  // Acklam's rational approximation followed by one Halley step.
  static constexpr double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                                 -2.759285104469687e+02, 1.383577518672690e+02,
                                 -3.066479806614716e+01, 2.506628277459239e+00};
  static constexpr double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                                 -1.556989798598866e+02, 6.680131188771972e+01,
                                 -1.328068155288572e+01};
  static constexpr double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                                 -2.400758277161838e+00, -2.549732539343734e+00,
                                 4.374664141464968e+00,  2.938163982698783e+00};
  static constexpr double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                                 2.445134137142996e+00, 3.754408661907416e+00};
  constexpr double plow = 0.02425;
  double x;
  if (p < plow) {
    const double q = std::sqrt(-2.0 * std::log(p));
    x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  } else if (p > 1.0 - plow) {
    const double q = std::sqrt(-2.0 * std::log1p(-p));
    x = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  } else {
    const double q = p - 0.5;
    const double r = q * q;
    x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
        (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
  }
  for (int it = 0; it < 2; ++it) {
    // Work on the smaller tail to keep the residual accurate.
    const double e = x < 0.0 ? normal_cdf(x) - p : -(normal_cdf(-x) - (1.0 - p));
    const double u = e * std::sqrt(2.0 * std::numbers::pi) * std::exp(0.5 * x * x);
    x = x - u / (1.0 + 0.5 * x * u);
  }
  return x;
}

Link Link::parse(std::string_view name) {
  if (name == "logit") return Link(LinkKind::Logit);
  if (name == "probit") return Link(LinkKind::Probit);
  if (name == "cloglog") return Link(LinkKind::Cloglog);
  throw Error(ErrorCode::Config, "unknown link '" + std::string(name) + "'", "link");
}

std::string_view Link::name() const {
  switch (kind_) {
    case LinkKind::Logit: return "logit";
    case LinkKind::Probit: return "probit";
    case LinkKind::Cloglog: return "cloglog";
  }
  return "";
}

double Link::eval(double p) const {
  switch (kind_) {
    case LinkKind::Logit: return std::log(p) - std::log1p(-p);
    case LinkKind::Probit: return normal_quantile(p);
    case LinkKind::Cloglog: return std::log(-std::log1p(-p));
  }
  return 0.0;
}

double Link::inverse(double eta) const {
  switch (kind_) {
    case LinkKind::Logit:
      return eta >= 0.0 ? 1.0 / (1.0 + std::exp(-eta)) : std::exp(eta) / (1.0 + std::exp(eta));
    case LinkKind::Probit: return normal_cdf(eta);
    case LinkKind::Cloglog: return -std::expm1(-std::exp(eta));
  }
  return 0.0;
}

double Link::derivative(double p) const {
  switch (kind_) {
    case LinkKind::Logit: return 1.0 / (p * (1.0 - p));
    case LinkKind::Probit: return 1.0 / normal_pdf(normal_quantile(p));
    case LinkKind::Cloglog: return -1.0 / ((1.0 - p) * std::log1p(-p));
  }
  return 0.0;
}

double Link::inverse_derivative(double eta) const {
  switch (kind_) {
    case LinkKind::Logit: {
      const double p = inverse(eta);
      return p * (1.0 - p);
    }
    case LinkKind::Probit: return normal_pdf(eta);
    case LinkKind::Cloglog: return std::exp(eta - std::exp(eta));
  }
  return 0.0;
}

double Link::inverse_odds(double eta) const {
  switch (kind_) {
    case LinkKind::Logit: return std::exp(eta);
    case LinkKind::Probit: return normal_cdf(eta) / normal_cdf(-eta);
    case LinkKind::Cloglog: return std::expm1(std::exp(eta));
  }
  return 0.0;
}

double Link::inverse_odds_derivative(double eta) const {
  switch (kind_) {
    case LinkKind::Logit: return std::exp(eta);
    case LinkKind::Probit: {
      const double s = normal_cdf(-eta);
      return normal_pdf(eta) / (s * s);
    }
    case LinkKind::Cloglog: {
      const double t = std::exp(eta);
      return t * std::exp(t);
    }
  }
  return 0.0;
}

}  // namespace san
