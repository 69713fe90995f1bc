#pragma once

#include <string>
#include <vector>

#include "san/dataset.hpp"
#include "san/mechanism.hpp"
#include "san/table.hpp"

namespace san {

enum class AuxMode { KnownKappa, RefreshmentSample, EstimatorDensity };

AuxMode parse_aux_mode(const std::string& name);
const char* aux_mode_name(AuxMode mode);

/// What is known about the Y distribution, over the cells of `y_space`.
struct AuxInfo {
  AuxMode mode = AuxMode::KnownKappa;
  Eigen::VectorXd census;       ///< known kappa
  Eigen::VectorXd refreshment;  ///< cell counts of a fully observed Y sample
  /// Estimate of kappa and the covariance of its first K-1 cells (the
  /// last cell is determined by the others).
  Eigen::VectorXd kappa_hat;
  Eigen::MatrixXd covariance;
};

/// Binary outcome X with one Bernoulli parameter per Y cell, a categorical
/// law kappa on Y, and a SAN mechanism with unknown coefficients.
struct InferenceModel {
  SanSpec mechanism;  ///< coefficient values are ignored; the layout is used
  double alpha_sd = 1.5;
  double beta_sd = 3.0;
  AuxInfo aux;
};

/// The Y block alone, in declared Y order.
VariableSpace y_space(const VariableSpace& study);

struct Params {
  std::vector<Eigen::VectorXd> gamma;  ///< free coefficients per step
  Eigen::VectorXd theta;  ///< P(X = second level | y), per Y cell
  Eigen::VectorXd kappa;  ///< per Y cell
};

/// Checks the model layout (one binary X, aux payload sizes, priors) and
/// returns the position of the outcome variable.
int validate_model(const InferenceModel& model);

/// Zero coefficients, theta = 1/2 and kappa from the auxiliary payload.
Params initial_params(const InferenceModel& model);

/// Prior sd of each free coefficient of step j.
Eigen::VectorXd prior_sd(const InferenceModel& model, int j);

/// Observed-data log-likelihood: for each record, the log of the sum over
/// completions of its missing entries of f(m | x, y, gamma) f(x | y, theta)
/// f(y | kappa).
double observed_loglik(const InferenceModel& model, const Params& params, const Dataset& data,
                       bool include_mechanism = true);

/// Same, for a single record.
double record_loglik(const InferenceModel& model, const Params& params,
                     const std::vector<int>& record, bool include_mechanism = true);

/// log A(kappa) of the working likelihood.
double margin_term_logpdf(const AuxInfo& aux, const Eigen::VectorXd& kappa);

}  // namespace san
