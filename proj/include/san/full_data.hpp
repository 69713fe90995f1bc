#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "san/dataset.hpp"
#include "san/mechanism.hpp"
#include "san/table.hpp"

namespace san {

/// Joint law of the study variables with a SAN mechanism.
struct FullDataModel {
  ProbTable joint;  ///< over spec.space()
  SanSpec mechanism;
};

/// The joint's variables followed by one indicator per step, in step order.
VariableSpace full_data_space(const VariableSpace& study, const std::vector<std::string>& steps);

/// g(x, y, m) = joint(x, y) * prod_j P(m_j | x, y*_{<j}, y_{>=j}).
///
/// `mechanisms[j]` gives P(M_j = 1 | ·) over any space whose variables
/// are study variables; a variable of an earlier step appears materialized
/// and takes its placeholder when that step is missing.
ProbTable assemble_full_data(const ProbTable& joint, const std::vector<std::string>& steps,
                             const std::vector<CellFunction>& mechanisms);

ProbTable assemble_full_data(const FullDataModel& model);

/// Draws n records: (x, y) from the joint, then m step by step.
Dataset simulate(const FullDataModel& model, Index n, std::uint64_t seed);

}  // namespace san
