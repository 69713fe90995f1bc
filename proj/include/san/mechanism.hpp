#pragma once

#include <map>
#include <span>
#include <string>
#include <vector>

#include "san/link.hpp"
#include "san/table.hpp"

namespace san {

/// The six mechanism families, numbered as in the usual presentation.
enum class Submodel : int {
  Full = 0,
  MainEffects = 1,
  OrderInvariant = 2,
  DirectOnly = 3,
  NoDirect = 4,
  Ignorable = 5,
};

/// Throws a config error outside 0..5.
Submodel submodel_from_id(int id);
const char* submodel_name(Submodel s);

enum class TermRole { Alpha, Beta };

/// One additive coefficient table of a missingness model. Variables of the
/// scope flagged materialized take the placeholder level too.
struct Term {
  std::string name;
  TermRole role = TermRole::Alpha;
  VariableSpace space;
  Eigen::VectorXd values;
  std::vector<bool> pinned;  ///< cells held at zero by identification
  std::vector<int> positions;  ///< scope variable -> study-space variable
  std::vector<int> free_index;  ///< cell -> index among free cells, -1 if pinned
  bool direct = false;  ///< scope contains the variable being modeled

  int num_free() const;
};

/// Missingness model for one Y variable.
struct StepMechanism {
  std::string variable;
  int position = 0;  ///< position in the ordering
  std::vector<Term> terms;
};

/// Link, ordering, submodel family, baselines and coefficient tables.
///
/// Study cells are handed over as "materialized levels": one level index per
/// study variable in declared order, where a missing Y takes the index of
/// its placeholder (its number of real levels).
class SanSpec {
 public:
  /// All coefficients start at zero. `ordering` lists every Y variable;
  /// always-observed ones are moved to the end and get no mechanism.
  static SanSpec make(const VariableSpace& space, Submodel submodel, Link link,
                      std::vector<std::string> ordering = {},
                      const std::vector<std::string>& always_observed = {},
                      const std::map<std::string, std::string>& baselines = {});

  const VariableSpace& space() const { return space_; }
  Submodel submodel() const { return submodel_; }
  Link link() const { return link_; }
  const std::vector<std::string>& ordering() const { return ordering_; }
  const std::vector<std::string>& always_observed() const { return always_observed_; }
  bool is_always_observed(const std::string& name) const;
  const std::map<std::string, std::string>& baselines() const { return baselines_; }

  int num_steps() const { return static_cast<int>(steps_.size()); }
  const std::vector<StepMechanism>& steps() const { return steps_; }
  const StepMechanism& step(int j) const { return steps_[static_cast<std::size_t>(j)]; }
  /// Step whose Y variable is `name`, or -1.
  int find_step(const std::string& name) const;

  const Term& term(int j, const std::string& name) const;
  /// Replaces a coefficient table; pinned cells must be zero.
  void set_term(int j, const std::string& name, Eigen::VectorXd values);

  /// Free coefficients of step j, terms concatenated in order.
  int num_parameters(int j) const;
  Eigen::VectorXd parameters(int j) const;
  void set_parameters(int j, const Eigen::VectorXd& free);
  std::vector<std::string> parameter_names(int j) const;
  std::vector<TermRole> parameter_roles(int j) const;
  /// Positions (into `parameters(j)`) of the free cells active at a state;
  /// the linear predictor is the sum of those coefficients.
  void active_parameters(int j, std::span<const int> mlevels, std::vector<int>& out) const;

  /// (X, Y*_{<j}, Y_{>=j}): X in declared order, then Y in ordering order,
  /// materialized before step j.
  VariableSpace state_space(int j) const;
  /// Study-space positions of the variables of `state_space(j)`.
  std::vector<int> state_positions() const;

  /// Link-scale predictor: sum of the terms not involving Y_j, plus the sum
  /// of those that do.
  double eta(int j, std::span<const int> mlevels) const;
  double prob(int j, std::span<const int> mlevels) const { return link_.inverse(eta(j, mlevels)); }

 private:
  VariableSpace space_;
  Submodel submodel_ = Submodel::Full;
  Link link_;
  std::vector<std::string> ordering_;
  std::vector<std::string> always_observed_;
  std::map<std::string, std::string> baselines_;
  std::vector<StepMechanism> steps_;
};

/// P(M_j = 1 | x, y*_{<j}, y_{>=j}) for step j (0-based). `levels` are real
/// levels of all study variables; `m_prefix` flags the earlier steps
/// that went missing.
double mechanism_prob(const SanSpec& spec, int j, std::span<const int> levels,
                      const std::vector<bool>& m_prefix);

/// log f(m | x, y) over all steps.
double mechanism_log_prob(const SanSpec& spec, std::span<const int> levels,
                          const std::vector<bool>& m);

/// P(M_j = 1 | state) over `state_space(j)`, one table per step.
std::vector<CellFunction> mechanism_tables(const SanSpec& spec);

/// The same mechanism written in full-model coordinates.
SanSpec embed_into_full(const SanSpec& spec);

enum class OrderingPolicy { Declared, ByMissingnessDesc, Explicit };

OrderingPolicy parse_ordering_policy(const std::string& name);

/// Resolves the SAN ordering. Always-observed variables go last; the
/// missingness heuristic sorts by decreasing missing fraction (stable).
std::vector<std::string> resolve_ordering(const VariableSpace& space, OrderingPolicy policy,
                                          const std::map<std::string, double>& missing_fraction = {},
                                          const std::vector<std::string>& explicit_order = {},
                                          const std::vector<std::string>& always_observed = {});

}  // namespace san
