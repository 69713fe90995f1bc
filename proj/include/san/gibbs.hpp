#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "san/likelihood.hpp"
#include "san/samplers.hpp"

namespace san {

struct GibbsConfig {
  int n_iter = 20000;
  int burn_in = 5000;
  int thin = 1;
  std::uint64_t seed = 1;
  UpdateMethod method = UpdateMethod::PolyaGamma;
  int chains = 1;
  /// Hold the mechanism coefficients at their initial values.
  bool update_mechanism = true;
  /// Drop the mechanism factor from the imputation weights (and skip its update).
  bool include_mechanism = true;
  /// Keep the imputed values of every retained draw.
  bool store_imputations = false;
  double rw_initial_scale = 0.5;
  /// Concentration of the Dirichlet random-walk proposal for kappa.
  double kappa_concentration = 1000.0;
  /// Starting values; empty means `initial_params`.
  std::vector<Eigen::VectorXd> initial_gamma;
};

struct PosteriorSample {
  std::vector<Eigen::VectorXd> gamma;
  Eigen::VectorXd theta;
  Eigen::VectorXd kappa;
  std::vector<int> imputations;  ///< one level per entry of `FitResult::imputed`
};

struct Chain {
  std::vector<PosteriorSample> samples;
  double gamma_acceptance = 0.0;  ///< random-walk kernel only
  double kappa_acceptance = 0.0;  ///< estimator-density mode only
};

struct FitResult {
  std::vector<Chain> chains;
  std::vector<std::string> parameter_names;
  /// (record, variable) of each missing entry, record-major.
  std::vector<std::pair<Index, int>> imputed;
  /// Mechanism coefficients never active on a record whose relevant
  /// values are all observed.
  std::vector<std::string> unsupported;
};

/// theta[...] and kappa[...] over the Y cells, then the mechanism coefficients.
std::vector<std::string> parameter_names(const InferenceModel& model);
Eigen::VectorXd flatten(const PosteriorSample& s);

std::vector<std::string> unsupported_cells(const InferenceModel& model, const Dataset& data);

/// Data-augmentation Gibbs sampler. Imputations start from the observed
/// frequencies of each variable; every iteration then updates theta,
/// the mechanism coefficients and kappa given the completed data, and
/// re-imputes the missing entries from their exact conditional.
FitResult gibbs_fit(const InferenceModel& model, const Dataset& data, const GibbsConfig& config);

}  // namespace san
