#pragma once

#include <string>
#include <vector>

#include "san/table.hpp"

namespace san {

/// Name of the missingness indicator of variable `name` in full-data tables.
std::string indicator_name(const std::string& name);

/// Variable for the indicator of `name`, levels {"0","1"}.
Variable indicator_variable(const std::string& name);

struct MissingnessPattern {
  std::vector<bool> m;  ///< over the Y block, 1 = missing
  std::vector<bool> w;  ///< over the X block, 1 = missing

  friend bool operator==(const MissingnessPattern&, const MissingnessPattern&) = default;
  friend auto operator<=>(const MissingnessPattern&, const MissingnessPattern&) = default;
};

/// Law of the materialized variables. Variables that may go missing are
/// materialized (last level "*"); always-observed variables stay plain.
class ObservedTable {
 public:
  explicit ObservedTable(ProbTable table);

  const ProbTable& table() const { return table_; }
  const VariableSpace& space() const { return table_.space(); }

  struct Slice {
    MissingnessPattern pattern;
    double weight = 0.0;
    /// Conditional law of the observed sub-vector; only set when weight > 0.
    std::vector<std::string> observed;
    Eigen::VectorXd probabilities;
  };

  /// One entry per missingness pattern over the materialized variables.
  std::vector<Slice> patterns() const;

 private:
  ProbTable table_;
};

/// Collapses a full-data table whose indicator variables are named by
/// `indicator_name` onto materialized cells. Variables without an indicator
/// are carried unchanged; the indicators are dropped.
ObservedTable materialize(const ProbTable& full);

}  // namespace san
