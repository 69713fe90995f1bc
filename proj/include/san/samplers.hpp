#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

#include "san/link.hpp"
#include "san/random.hpp"

namespace san {

/// Draw from PG(1, z) by the alternating-series accept-reject scheme.
double sample_polya_gamma(double z, Rng& rng);

/// Draw from N(0, 1) conditioned on being >= a.
double sample_normal_tail(double a, Rng& rng);

enum class UpdateMethod { PolyaGamma, TruncatedNormal, RandomWalk };

UpdateMethod parse_update_method(const std::string& name);
const char* update_method_name(UpdateMethod m);

/// Binary regression data with 0/1 design rows, stored sparsely: each row
/// lists the coefficients that are switched on.
struct BinaryDesign {
  int dim = 0;
  std::vector<std::vector<int>> rows;
  std::vector<int> responses;  ///< 0 or 1
};

/// Proposal scales and acceptance counts of the random-walk kernel.
struct RandomWalkState {
  Eigen::VectorXd scale;
  Eigen::VectorXd accepted;
  Eigen::VectorXd proposed;
  bool adapt = false;  ///< tune scales towards 0.44 acceptance (burn-in only)

  explicit RandomWalkState(int dim = 0, double initial = 0.5)
      : scale(Eigen::VectorXd::Constant(dim, initial)),
        accepted(Eigen::VectorXd::Zero(dim)),
        proposed(Eigen::VectorXd::Zero(dim)) {}
  double acceptance_rate() const;
};

/// One Markov step leaving p(coeff | design, responses) invariant under
/// independent N(0, prior_sd^2) priors and the given link.
///
/// Pólya-Gamma needs the logit link and truncated-normal the probit link;
/// the random-walk kernel works with any link and needs `rw`.
Eigen::VectorXd logistic_conditional_update(const Eigen::VectorXd& coeff,
                                            const BinaryDesign& design,
                                            const Eigen::VectorXd& prior_sd, Link link,
                                            UpdateMethod method, Rng& rng,
                                            RandomWalkState* rw = nullptr);

}  // namespace san
