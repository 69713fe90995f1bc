#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "san/dataset.hpp"
#include "san/table.hpp"
#include "json.hpp"

namespace san::io {

using Json = nlohmann::json;

inline constexpr const char* kVersion = "0.1.0";
inline constexpr const char* kMissingToken = "NA";

Json read_json_file(const std::string& path);
/// Two-space indent, trailing newline.
void write_json_file(const std::string& path, const Json& value);

/// {"variables": [{"name", "levels"}...], "y": [names in SAN order]}.
/// Variables not listed under "y" form the X block.
VariableSpace parse_space(const Json& j);
Json space_to_json(const VariableSpace& space);

/// Accepts {"mass": [...]} in row-major order, or a list of entries
/// {"cells": {var: level}, "prob": p} (the variables may also sit at the
/// top level of each entry). Cells absent from a list carry zero mass.
ProbTable parse_table(const Json& j, const VariableSpace& space,
                      double tolerance = kNormTolerance);
/// {"variables": [...], "mass": [...]}; the space is embedded.
Json table_to_json(const ProbTable& table);
/// Reads a table whose space is embedded as written by table_to_json.
ProbTable parse_embedded_table(const Json& j, double tolerance = kNormTolerance);
Json values_to_json(const CellFunction& f);

/// Parsed auxiliary margins. The joint form keeps the table as well as
/// its expansion into cell indicators.
struct Margins {
  std::vector<MomentConstraint> moments;
  std::optional<ProbTable> joint;
};

/// Tolerance on the total of a joint margin.
inline constexpr double kMarginTolerance = 1e-9;

Margins parse_margins(const Json& j, const VariableSpace& y_space);
Margins load_margins(const std::string& path, const VariableSpace& y_space);
/// One indicator constraint per cell of the table's space.
std::vector<MomentConstraint> indicator_constraints(const ProbTable& joint);

/// Header row names the variables (any order, all must be present); "NA"
/// marks a missing entry.
Dataset parse_dataset(const std::vector<std::vector<std::string>>& rows, const VariableSpace& space,
                      const std::vector<std::string>& always_observed = {});
Dataset load_dataset(const std::string& path, const VariableSpace& space,
                     const std::vector<std::string>& always_observed = {});
void write_dataset(std::ostream& out, const Dataset& data);
void write_dataset_file(const std::string& path, const Dataset& data);

/// Per-variable missing fractions rounded to 4 decimals, e.g. "0.0247".
std::vector<std::pair<std::string, std::string>> missingness_report(const Dataset& data);

}  // namespace san::io
