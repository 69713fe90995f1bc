#pragma once

// Reference implementations and random fixtures used only by the tests.
// The oracles share no code with the library beyond the table types.

#include <Eigen/Dense>
#include <cstdint>
#include <random>
#include <vector>

#include "san/full_data.hpp"
#include "san/gibbs.hpp"
#include "san/link.hpp"
#include "san/projection.hpp"
#include "san/table.hpp"

namespace san::testing {

/// f'(z) and f''(z) of the link-tied generator, written from the link
/// formulas with Boost's normal quantile for probit.
double oracle_f_prime(LinkKind link, double c, double z);
double oracle_f_second(LinkKind link, double c, double z);
/// f(z) by tanh-sinh quadrature of f' on (0, z).
double oracle_f_value(LinkKind link, double c, double z);

struct OracleResult {
  Eigen::VectorXd mass;  ///< over the cells of q
  double primal_residual = 0.0;
  double stationarity = 0.0;
  bool converged = false;
  bool infeasible = false;  ///< a moment target lies outside its reachable range
};

/// Primal infeasible-start Newton on the KKT system of
///   min Σ q f(p/q)  s.t. fiber sums and moments.
/// Several starting points are tried; the best converged one is returned.
/// A per-moment range check over the fixed-marginal polytope runs first.
OracleResult project_oracle(const ProbTable& q, const ConstraintSet& cs, LinkKind link, double c);

/// KL I-projection by cyclic fiber scaling and one-dimensional exponential
/// tilts, iterated to `tol` on the constraint residual.
Eigen::VectorXd ipf_kl_projection(const ProbTable& q, const ConstraintSet& cs, double tol = 1e-14,
                                  int max_cycles = 200000);

/// A random projection instance: q with zero cells on whole fibers, a fixed marginal
/// over a random subset of variables and random moments over others. The
/// targets come from a table dominated by q, so the instance is feasible
/// with a strictly positive solution.
struct Instance {
  ProbTable q;
  ConstraintSet cs;
  LinkKind link = LinkKind::Logit;
  double c = 1.0;
};

Instance random_instance(std::mt19937_64& rng, LinkKind link, bool allow_zeros = true);

/// Fiber indicators of the fixed marginal and the moment functions, one
/// row each, over the cells of `space`.
Eigen::MatrixXd constraint_matrix(const VariableSpace& space, const ConstraintSet& cs);

/// True when the constraints determine every table supported by q.
bool saturated(const ProbTable& q, const ConstraintSet& cs);

/// Multiplies the cells of `p` by exp(size * e), where e is a random
/// direction orthogonal (over the cells where q > 0) to the constraint rows,
/// scaled to unit sup norm. Tilts inside the span would give the projection
/// onto other targets, which the decomposition test must accept.
ProbTable off_span_perturbation(const ProbTable& p, const ProbTable& q, const ConstraintSet& cs,
                                std::mt19937_64& rng, double size);

/// A random space of 2 to 4 variables with 2 or 3 levels, at most 64 cells.
VariableSpace random_space(std::mt19937_64& rng, int min_vars = 2, int max_vars = 4);

/// Binary X followed by p Y variables with 2 or 3 levels.
VariableSpace random_study_space(std::mt19937_64& rng, int p);

/// A SAN truth: positive joint, N(0, scale^2) mechanism coefficients.
FullDataModel random_san_truth(std::mt19937_64& rng, int p, Submodel submodel, LinkKind link,
                               double scale = 0.7);

/// An unrestricted positive full-data table over the study variables and
/// one indicator per Y variable; its mechanism is generally not SAN.
ProbTable random_full_table(std::mt19937_64& rng, int p);

/// Two records over x, a, b (all binary) with fixed mechanism coefficients
/// and known kappa: record 1 has a and b missing, record 2 has a missing.
/// Its eight latent states are small enough to enumerate.
struct ToyProblem {
  InferenceModel model;
  Dataset data;
  std::vector<Eigen::VectorXd> gamma;
};
ToyProblem toy_problem();

/// Exact posterior over the latent states, theta integrated out under its
/// uniform priors. State index: 4 * a1 + 2 * b1 + a2.
std::vector<double> toy_exact_distribution(const ToyProblem& toy);

/// Total variation between the exact law and the empirical law of the
/// stored imputations of a fit.
double toy_total_variation(const ToyProblem& toy, const FitResult& fit);

}  // namespace san::testing
