#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "san/generator.hpp"
#include "san/table.hpp"

namespace san {

/// Distributions sharing a fixed marginal over a sub-vector and a list of
/// expectations. The fixed marginal may live on the empty space, which
/// only pins the total mass.
struct ConstraintSet {
  ProbTable fixed_marginal;
  std::vector<MomentConstraint> moments;
};

struct ProjectionOptions {
  double tolerance = 1e-10;  ///< on the ∞-norm of the constraint residual
  int max_iterations = 200;
  /// Opt-in: add smoothing_epsilon to every cell of Q (then renormalize)
  /// instead of rejecting zero cells.
  bool smooth_zero_cells = false;
  double smoothing_epsilon = 1e-9;
};

struct ProjectionResult {
  ProbTable table;
  /// One coefficient per cell of the fixed marginal; -inf on cells whose
  /// target mass is zero.
  Eigen::VectorXd fiber_dual;
  /// One coefficient per moment constraint (zero for redundant ones).
  Eigen::VectorXd moment_dual;
  double marginal_residual = 0.0;
  Eigen::VectorXd moment_residuals;
  double max_residual = 0.0;
  double divergence = 0.0;
  int iterations = 0;
  bool smoothed = false;
};

/// The strictly convex dual of the f-projection, over one coefficient per
/// fiber of the fixed marginal with positive target mass and one per
/// linearly independent moment (after removing its fiber means).
///
///   F(a, b) = Σ_c Q_c f*(a_k(c) + Σ_s b_s u_s(c)) - a·t - b·target
///
/// Its gradient is the constraint residual of the primal point
/// P_c = Q_c r(eta_c), with r = (f')^{-1}.
class DualObjective {
 public:
  /// Validates the inputs: dominance (or smoothing), redundant moments and
  /// the per-moment range check.
  DualObjective(const ProbTable& q, const ConstraintSet& constraints, FGenerator generator,
                const ProjectionOptions& options = {});

  int dimension() const { return n_fibers_ + static_cast<int>(kept_.size()); }
  int num_fibers() const { return n_fibers_; }

  double value(const Eigen::VectorXd& theta) const;
  Eigen::VectorXd gradient(const Eigen::VectorXd& theta) const;
  Eigen::MatrixXd hessian(const Eigen::VectorXd& theta) const;
  /// Solves H d = -g via the Schur complement of the diagonal fiber block.
  Eigen::VectorXd newton_direction(const Eigen::VectorXd& theta) const;

  /// Primal weights Q_c r(eta_c) on every cell of Q's space.
  Eigen::VectorXd primal(const Eigen::VectorXd& theta) const;

  /// Dual coefficients expressed against the original constraints.
  void expand_dual(const Eigen::VectorXd& theta, Eigen::VectorXd& fiber_dual,
                   Eigen::VectorXd& moment_dual) const;

  const ProbTable& q() const { return q_table_; }
  const FGenerator& generator() const { return gen_; }
  bool smoothed() const { return smoothed_; }

 private:
  Eigen::VectorXd eta(const Eigen::VectorXd& theta) const;

  FGenerator gen_;
  ProbTable q_table_;
  bool smoothed_ = false;
  std::vector<Index> active_;      // cells of Q in play
  Eigen::VectorXd q_;              // Q on active cells
  std::vector<int> fiber_;         // active fiber of each active cell
  int n_fibers_ = 0;
  std::vector<int> fiber_of_marginal_;  // marginal cell -> active fiber, -1 when target is 0
  Eigen::VectorXd fiber_target_;
  Eigen::MatrixXd features_;       // active cells x kept moments, fiber means removed
  Eigen::VectorXd feature_target_;
  std::vector<int> kept_;          // original index of each kept moment
  Eigen::MatrixXd fiber_means_;    // active fibers x kept moments
  int n_moments_ = 0;
};

/// f-projection of Q onto the constraint set, solved by damped Newton on
/// the dual with backtracking (Armijo) line search, starting at zero.
ProjectionResult project(const ProbTable& q, const ConstraintSet& constraints,
                         const FGenerator& generator, const ProjectionOptions& options = {});

/// Regresses f'(P*/Q) on the fiber indicators of the fixed marginal and the
/// moment functions and returns the Euclidean norm of the residual. Cells
/// where P* or Q vanish are left out.
double additive_decomposition_residual(const ProbTable& p_star, const ProbTable& q,
                                       const ConstraintSet& constraints,
                                       const FGenerator& generator);

/// Residuals of `p` against the constraints: ∞-norm on the marginal and the
/// signed moment gaps.
struct ConstraintResiduals {
  double marginal = 0.0;
  Eigen::VectorXd moments;
  double max() const;
};
ConstraintResiduals constraint_residuals(const ProbTable& p, const ConstraintSet& constraints);

}  // namespace san
