#include "san/table.hpp"

#include <cmath>
#include <limits>

#include "san/error.hpp"

namespace san {

CellFunction::CellFunction(VariableSpace space, Eigen::VectorXd values)
    : space_(std::move(space)), values_(std::move(values)) {
  if (values_.size() != space_.num_cells())
    throw Error(ErrorCode::InvalidArgument, "value vector length does not match the space");
}

Eigen::VectorXd CellFunction::broadcast_to(const VariableSpace& target) const {
  const auto map = reduction_map(target, space_);
  Eigen::VectorXd out(target.num_cells());
  for (Index c = 0; c < target.num_cells(); ++c) out[c] = values_[map[static_cast<std::size_t>(c)]];
  return out;
}

ProbTable ProbTable::from_weights(VariableSpace space, Eigen::VectorXd weights) {
  if (weights.size() != space.num_cells())
    throw Error(ErrorCode::InvalidArgument,
                "weight vector has " + std::to_string(weights.size()) + " entries, space has " +
                    std::to_string(space.num_cells()) + " cells");
  for (Index i = 0; i < weights.size(); ++i) {
    if (!std::isfinite(weights[i]) || weights[i] < 0.0)
      throw Error(ErrorCode::InvalidArgument, "negative or non-finite weight at cell " +
                                                  std::to_string(i));
  }
  const double total = weights.sum();
  if (!(total > 0.0)) throw Error(ErrorCode::InvalidArgument, "all weights are zero");
  const double roundoff =
      4.0 * static_cast<double>(weights.size()) * std::numeric_limits<double>::epsilon();
  if (std::abs(total - 1.0) > roundoff) weights /= total;
  return ProbTable(std::move(space), std::move(weights));
}

ProbTable ProbTable::from_probabilities(VariableSpace space, Eigen::VectorXd probs,
                                        double tolerance) {
  if (probs.size() != space.num_cells())
    throw Error(ErrorCode::InvalidArgument, "probability vector length does not match the space");
  const double total = probs.sum();
  if (!(std::abs(total - 1.0) <= tolerance))
    throw Error(ErrorCode::InvalidArgument,
                "probabilities sum to " + std::to_string(total) + ", not 1");
  return from_weights(std::move(space), std::move(probs));
}

ProbTable ProbTable::uniform(VariableSpace space) {
  const Index n = space.num_cells();
  return ProbTable(std::move(space), Eigen::VectorXd::Constant(n, 1.0 / static_cast<double>(n)));
}

Eigen::VectorXd marginal_sums(const VariableSpace& space, const Eigen::VectorXd& values,
                              const VariableSpace& target) {
  const auto map = reduction_map(space, target);
  Eigen::VectorXd out = Eigen::VectorXd::Zero(target.num_cells());
  for (Index c = 0; c < space.num_cells(); ++c) out[map[static_cast<std::size_t>(c)]] += values[c];
  return out;
}

ProbTable marginalize(const ProbTable& table, const std::vector<std::string>& keep) {
  auto target = table.space().subspace(keep);
  auto sums = marginal_sums(table.space(), table.mass(), target);
  return ProbTable::from_weights(std::move(target), std::move(sums));
}

ProbTable reorder(const ProbTable& table, const std::vector<std::string>& order) {
  if (static_cast<int>(order.size()) != table.space().num_variables())
    throw Error(ErrorCode::InvalidArgument, "reorder needs every variable exactly once");
  auto target = table.space().subspace(order);
  const auto map = reduction_map(table.space(), target);
  Eigen::VectorXd out(target.num_cells());
  for (Index c = 0; c < table.size(); ++c) out[map[static_cast<std::size_t>(c)]] = table[c];
  return ProbTable::from_weights(std::move(target), std::move(out));
}

Conditional condition(const ProbTable& table, const Assignment& assignment) {
  const auto& space = table.space();
  std::vector<int> fixed(static_cast<std::size_t>(space.num_variables()), -1);
  for (const auto& [name, label] : assignment) {
    const int i = space.require(name);
    const int l = space.variable(i).find_level(label);
    if (l < 0)
      throw Error(ErrorCode::InvalidArgument,
                  "unknown level '" + label + "' for variable '" + name + "'", name);
    fixed[static_cast<std::size_t>(i)] = l;
  }
  std::vector<std::string> rest;
  for (int i = 0; i < space.num_variables(); ++i)
    if (fixed[static_cast<std::size_t>(i)] < 0) rest.push_back(space.variable(i).name);
  auto target = space.subspace(rest);
  const auto map = reduction_map(space, target);
  Eigen::VectorXd slice = Eigen::VectorXd::Zero(target.num_cells());
  std::vector<int> lv(static_cast<std::size_t>(space.num_variables()));
  for (Index c = 0; c < table.size(); ++c) {
    space.cell_levels(c, lv);
    bool match = true;
    for (std::size_t i = 0; i < lv.size() && match; ++i)
      match = fixed[i] < 0 || fixed[i] == lv[i];
    if (match) slice[map[static_cast<std::size_t>(c)]] += table[c];
  }
  const double prob = slice.sum();
  if (!(prob > 0.0))
    throw Error(ErrorCode::InvalidArgument, "conditioning on a zero-probability assignment");
  return {ProbTable::from_weights(std::move(target), slice / prob), prob};
}

MomentConstraint make_moment(std::string name, VariableSpace scope, Eigen::VectorXd values,
                             double target) {
  if (!std::isfinite(target))
    throw Error(ErrorCode::InvalidArgument, "moment target is not finite", name);
  for (Index i = 0; i < values.size(); ++i)
    if (!std::isfinite(values[i]))
      throw Error(ErrorCode::InvalidArgument, "moment function has a non-finite value", name);
  return {std::move(name), CellFunction(std::move(scope), std::move(values)), target};
}

MomentConstraint indicator_moment(const Variable& var, int level, double target) {
  auto scope = VariableSpace::from_parts({var}, {true});
  Eigen::VectorXd u = Eigen::VectorXd::Zero(var.size());
  u[level] = 1.0;
  return make_moment("1[" + var.name + "=" + var.levels[static_cast<std::size_t>(level)] + "]",
                     std::move(scope), std::move(u), target);
}

double moment(const ProbTable& table, const MomentConstraint& constraint) {
  for (const auto& n : constraint.scope()) {
    if (table.space().find(n) < 0)
      throw Error(ErrorCode::InvalidArgument,
                  "moment scope variable '" + n + "' is not in the table", constraint.name);
  }
  const auto sums = marginal_sums(table.space(), table.mass(), constraint.u.space());
  return sums.dot(constraint.u.values());
}

double sup_distance(const ProbTable& a, const ProbTable& b) {
  if (!(a.space() == b.space()))
    throw Error(ErrorCode::InvalidArgument, "tables live on different spaces");
  return (a.mass() - b.mass()).cwiseAbs().maxCoeff();
}

}  // namespace san
