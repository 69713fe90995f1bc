#pragma once

#include <Eigen/Dense>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "san/space.hpp"

namespace san {

/// Tolerance on the total mass of a probability table.
inline constexpr double kNormTolerance = 1e-12;

/// A real-valued function over the cells of a space. Used for moment
/// functions, mechanism tables and unnormalized weights.
class CellFunction {
 public:
  CellFunction() : values_(Eigen::VectorXd::Ones(1)) {}
  CellFunction(VariableSpace space, Eigen::VectorXd values);

  const VariableSpace& space() const { return space_; }
  const Eigen::VectorXd& values() const { return values_; }
  double operator[](Index cell) const { return values_[cell]; }

  /// Extends this function to `target` (a super-space), constant along the
  /// extra variables.
  Eigen::VectorXd broadcast_to(const VariableSpace& target) const;

 private:
  VariableSpace space_;
  Eigen::VectorXd values_;
};

/// Normalized probability mass function over a space.
class ProbTable {
 public:
  ProbTable() : mass_(Eigen::VectorXd::Ones(1)) {}

  /// Normalizes nonnegative weights. Weights already summing to one up to
  /// round-off are kept bit-for-bit, so the operation is idempotent.
  static ProbTable from_weights(VariableSpace space, Eigen::VectorXd weights);
  /// Accepts probabilities summing to one within `tolerance`; renormalizes
  /// silently inside it and rejects outside it.
  static ProbTable from_probabilities(VariableSpace space, Eigen::VectorXd probs,
                                      double tolerance = kNormTolerance);
  static ProbTable uniform(VariableSpace space);

  const VariableSpace& space() const { return space_; }
  const Eigen::VectorXd& mass() const { return mass_; }
  double operator[](Index cell) const { return mass_[cell]; }
  Index size() const { return mass_.size(); }

 private:
  ProbTable(VariableSpace space, Eigen::VectorXd mass)
      : space_(std::move(space)), mass_(std::move(mass)) {}

  VariableSpace space_;
  Eigen::VectorXd mass_;
};

/// `make_table` of the operation list.
inline ProbTable make_table(VariableSpace space, Eigen::VectorXd weights) {
  return ProbTable::from_weights(std::move(space), std::move(weights));
}

/// Sums mass over the variables not in `keep`. The result is laid out in
/// the order given by `keep`.
ProbTable marginalize(const ProbTable& table, const std::vector<std::string>& keep);

/// Sums arbitrary values over dropped variables (no normalization).
Eigen::VectorXd marginal_sums(const VariableSpace& space, const Eigen::VectorXd& values,
                              const VariableSpace& target);

/// Same table with its variables permuted into `order`.
ProbTable reorder(const ProbTable& table, const std::vector<std::string>& order);

/// Variable name -> level label.
using Assignment = std::map<std::string, std::string>;

struct Conditional {
  ProbTable table;     ///< over the unassigned variables
  double probability;  ///< marginal probability of the assignment
};

/// Slice at `assignment`, renormalized. Throws on a null event.
Conditional condition(const ProbTable& table, const Assignment& assignment);

/// Known expectation of a function of some Y variables.
struct MomentConstraint {
  std::string name;
  CellFunction u;  ///< its space is the scope
  double target = 0.0;

  std::vector<std::string> scope() const { return u.space().names(); }
};

/// Validates and builds a moment constraint.
MomentConstraint make_moment(std::string name, VariableSpace scope, Eigen::VectorXd values,
                             double target);

/// Indicator of `level` of variable `var` over a one-variable scope.
MomentConstraint indicator_moment(const Variable& var, int level, double target);

/// E[u] under `table`, extending u as constant over variables outside its scope.
double moment(const ProbTable& table, const MomentConstraint& constraint);

/// Largest absolute difference, requiring identical spaces.
double sup_distance(const ProbTable& a, const ProbTable& b);

}  // namespace san
