#include "san/samplers.hpp"

#include <cmath>
#include <limits>
#include <numbers>

#include "san/error.hpp"

namespace san {
namespace {

using Index = Eigen::Index;

constexpr double kPi = std::numbers::pi;
constexpr double kTrunc = 0.64;

// Coefficient n of the alternating series for the J*(1, z) density.
double series_coef(int n, double x) {
  const double k = n + 0.5;
  if (x > kTrunc) return kPi * k * std::exp(-0.5 * k * k * kPi * kPi * x);
  return std::pow(2.0 / (kPi * x), 1.5) * kPi * k * std::exp(-2.0 * k * k / x);
}

// Probability of the exponential piece of the proposal.
double mass_texpon(double z) {
  const double fz = 0.125 * kPi * kPi + 0.5 * z * z;
  const double b = std::sqrt(1.0 / kTrunc) * (kTrunc * z - 1.0);
  const double a = -std::sqrt(1.0 / kTrunc) * (kTrunc * z + 1.0);
  const double x0 = std::log(fz) + fz * kTrunc;
  const double xb = x0 - z + std::log(normal_cdf(b));
  const double xa = x0 + z + std::log(normal_cdf(a));
  const double qdivp = 4.0 / kPi * (std::exp(xb) + std::exp(xa));
  return 1.0 / (1.0 + qdivp);
}

// Inverse Gaussian (mean 1/z, shape 1) truncated to (0, r).
double rtigauss(double z, double r, Rng& rng) {
  const double mu = z > 0.0 ? 1.0 / z : std::numeric_limits<double>::infinity();
  double x = r + 1.0;
  if (mu > r) {
    double alpha = 0.0;
    while (rng.uniform() > alpha) {
      double e1, e2;
      do {
        e1 = rng.exponential();
        e2 = rng.exponential();
      } while (e1 * e1 > 2.0 * e2 / r);
      x = r / ((1.0 + r * e1) * (1.0 + r * e1));
      alpha = std::exp(-0.5 * z * z * x);
    }
  } else {
    while (x > r) {
      const double n = rng.normal();
      const double y = n * n;
      x = mu + 0.5 * mu * mu * y - 0.5 * mu * std::sqrt(4.0 * mu * y + mu * mu * y * y);
      if (rng.uniform() > mu / (mu + x)) x = mu * mu / x;
    }
  }
  return x;
}

void check_prior(const Eigen::VectorXd& coeff, const Eigen::VectorXd& prior_sd, int dim) {
  if (coeff.size() != dim || prior_sd.size() != dim)
    throw Error(ErrorCode::InvalidArgument, "coefficient, prior and design sizes disagree");
  if ((prior_sd.array() <= 0.0).any())
    throw Error(ErrorCode::InvalidArgument, "prior standard deviations must be positive");
}

Eigen::VectorXd linear_predictor(const BinaryDesign& d, const Eigen::VectorXd& coeff) {
  Eigen::VectorXd eta(static_cast<Index>(d.rows.size()));
  for (std::size_t i = 0; i < d.rows.size(); ++i) {
    double s = 0.0;
    for (int k : d.rows[i]) s += coeff[k];
    eta[static_cast<Index>(i)] = s;
  }
  return eta;
}

// Draws N(V b, V) with V = A^{-1}.
Eigen::VectorXd gaussian_draw(const Eigen::MatrixXd& a, const Eigen::VectorXd& b, Rng& rng) {
  Eigen::LLT<Eigen::MatrixXd> llt(a);
  if (llt.info() != Eigen::Success)
    throw Error(ErrorCode::NonConvergence, "posterior precision is not positive definite");
  const Eigen::VectorXd mean = llt.solve(b);
  Eigen::VectorXd z(b.size());
  for (Index i = 0; i < z.size(); ++i) z[i] = rng.normal();
  // A = L L^T, so L^{-T} z has covariance A^{-1}.
  return mean + llt.matrixU().solve(z);
}

}  // namespace

double sample_polya_gamma(double z, Rng& rng) {
  z = 0.5 * std::abs(z);
  const double fz = 0.125 * kPi * kPi + 0.5 * z * z;
  const double p_exp = mass_texpon(z);
  for (;;) {
    const double x = rng.uniform() < p_exp ? kTrunc + rng.exponential() / fz : rtigauss(z, kTrunc, rng);
    double s = series_coef(0, x);
    const double y = rng.uniform() * s;
    for (int n = 1;; ++n) {
      if (n % 2 == 1) {
        s -= series_coef(n, x);
        if (y <= s) return 0.25 * x;
      } else {
        s += series_coef(n, x);
        if (y > s) break;
      }
    }
  }
}

double sample_normal_tail(double a, Rng& rng) {
  if (a < 0.45) {
    for (;;) {
      const double z = rng.normal();
      if (z >= a) return z;
    }
  }
  const double alpha = 0.5 * (a + std::sqrt(a * a + 4.0));
  for (;;) {
    const double z = a + rng.exponential() / alpha;
    if (rng.uniform() <= std::exp(-0.5 * (z - alpha) * (z - alpha))) return z;
  }
}

UpdateMethod parse_update_method(const std::string& name) {
  if (name == "polya_gamma") return UpdateMethod::PolyaGamma;
  if (name == "truncated_normal") return UpdateMethod::TruncatedNormal;
  if (name == "random_walk_metropolis") return UpdateMethod::RandomWalk;
  throw Error(ErrorCode::Config, "unknown update method '" + name + "'", "method");
}

const char* update_method_name(UpdateMethod m) {
  switch (m) {
    case UpdateMethod::PolyaGamma: return "polya_gamma";
    case UpdateMethod::TruncatedNormal: return "truncated_normal";
    case UpdateMethod::RandomWalk: return "random_walk_metropolis";
  }
  return "unknown";
}

double RandomWalkState::acceptance_rate() const {
  const double p = proposed.sum();
  return p > 0.0 ? accepted.sum() / p : 0.0;
}

Eigen::VectorXd logistic_conditional_update(const Eigen::VectorXd& coeff,
                                            const BinaryDesign& design,
                                            const Eigen::VectorXd& prior_sd, Link link,
                                            UpdateMethod method, Rng& rng,
                                            RandomWalkState* rw) {
  const int dim = design.dim;
  check_prior(coeff, prior_sd, dim);
  if (design.responses.size() != design.rows.size())
    throw Error(ErrorCode::InvalidArgument, "one response per design row is required");
  if (dim == 0) return coeff;
  const Eigen::VectorXd prior_prec = prior_sd.array().square().inverse();

  switch (method) {
    case UpdateMethod::PolyaGamma: {
      if (link.kind() != LinkKind::Logit)
        throw Error(ErrorCode::Config, "Pólya-Gamma updates need the logit link", "method");
      const Eigen::VectorXd eta = linear_predictor(design, coeff);
      Eigen::MatrixXd a = prior_prec.asDiagonal();
      Eigen::VectorXd b = Eigen::VectorXd::Zero(dim);
      for (std::size_t i = 0; i < design.rows.size(); ++i) {
        const double w = sample_polya_gamma(eta[static_cast<Index>(i)], rng);
        const double kappa = design.responses[i] - 0.5;
        for (int k : design.rows[i]) {
          b[k] += kappa;
          for (int l : design.rows[i]) a(k, l) += w;
        }
      }
      return gaussian_draw(a, b, rng);
    }
    case UpdateMethod::TruncatedNormal: {
      if (link.kind() != LinkKind::Probit)
        throw Error(ErrorCode::Config, "truncated-normal updates need the probit link", "method");
      const Eigen::VectorXd eta = linear_predictor(design, coeff);
      Eigen::MatrixXd a = prior_prec.asDiagonal();
      Eigen::VectorXd b = Eigen::VectorXd::Zero(dim);
      for (std::size_t i = 0; i < design.rows.size(); ++i) {
        const double mu = eta[static_cast<Index>(i)];
        const double z = design.responses[i] == 1 ? mu + sample_normal_tail(-mu, rng)
                                                  : mu - sample_normal_tail(mu, rng);
        for (int k : design.rows[i]) {
          b[k] += z;
          for (int l : design.rows[i]) a(k, l) += 1.0;
        }
      }
      return gaussian_draw(a, b, rng);
    }
    case UpdateMethod::RandomWalk: {
      if (!rw) throw Error(ErrorCode::InvalidArgument, "random-walk updates need a state");
      if (rw->scale.size() != dim) *rw = RandomWalkState(dim);
      std::vector<std::vector<int>> rows_of(static_cast<std::size_t>(dim));
      for (std::size_t i = 0; i < design.rows.size(); ++i)
        for (int k : design.rows[i]) rows_of[static_cast<std::size_t>(k)].push_back(static_cast<int>(i));
      Eigen::VectorXd cur = coeff;
      Eigen::VectorXd eta = linear_predictor(design, cur);
      auto loglik = [&](int i, double e) {
        const double p = link.inverse(e);
        return design.responses[static_cast<std::size_t>(i)] == 1 ? std::log(p) : std::log1p(-p);
      };
      for (int k = 0; k < dim; ++k) {
        const double delta = rw->scale[k] * rng.normal();
        double diff = -0.5 * prior_prec[k] * ((cur[k] + delta) * (cur[k] + delta) - cur[k] * cur[k]);
        for (int i : rows_of[static_cast<std::size_t>(k)])
          diff += loglik(i, eta[i] + delta) - loglik(i, eta[i]);
        rw->proposed[k] += 1.0;
        const bool accept = std::log(rng.uniform()) < diff;
        if (accept) {
          cur[k] += delta;
          for (int i : rows_of[static_cast<std::size_t>(k)]) eta[i] += delta;
          rw->accepted[k] += 1.0;
        }
        if (rw->adapt) rw->scale[k] *= std::exp(0.05 * ((accept ? 1.0 : 0.0) - 0.44));
      }
      return cur;
    }
  }
  return coeff;
}

}  // namespace san
