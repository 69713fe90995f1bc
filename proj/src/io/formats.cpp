#include "san/io/formats.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <ostream>
#include <set>

#include "san/error.hpp"
#include "san/io/csv.hpp"

namespace san::io {

namespace {

const Json& require_key(const Json& j, const char* key, const std::string& where) {
  if (!j.is_object() || !j.contains(key))
    throw Error(ErrorCode::Config, where + ": missing key '" + key + "'", key);
  return j.at(key);
}

std::vector<std::string> string_list(const Json& j, const std::string& where) {
  if (!j.is_array()) throw Error(ErrorCode::Config, where + " must be an array of strings", where);
  std::vector<std::string> out;
  for (const auto& e : j) {
    if (!e.is_string()) throw Error(ErrorCode::Config, where + " must be an array of strings", where);
    out.push_back(e.get<std::string>());
  }
  return out;
}

double finite_number(const Json& j, const std::string& where) {
  if (!j.is_number()) throw Error(ErrorCode::Config, where + " must be a number", where);
  const double v = j.get<double>();
  if (!std::isfinite(v)) throw Error(ErrorCode::Config, where + " is not finite", where);
  return v;
}

Eigen::VectorXd number_array(const Json& j, Index expected, const std::string& where) {
  if (!j.is_array() || static_cast<Index>(j.size()) != expected)
    throw Error(ErrorCode::Config,
                where + " must be an array of " + std::to_string(expected) + " numbers", where);
  Eigen::VectorXd v(expected);
  for (Index i = 0; i < expected; ++i) v[i] = finite_number(j[static_cast<std::size_t>(i)], where);
  return v;
}

// An entry of the list form: either {"cells": {...}} or the variables inline.
const Json& entry_cells(const Json& e) { return e.contains("cells") ? e.at("cells") : e; }

Index entry_cell(const Json& e, const VariableSpace& space, const char* value_key,
                 const std::string& where) {
  const Json& cells = entry_cells(e);
  if (!cells.is_object()) throw Error(ErrorCode::Config, where + ": entry is not an object", where);
  std::vector<int> levels(static_cast<std::size_t>(space.num_variables()), -1);
  for (auto it = cells.begin(); it != cells.end(); ++it) {
    if (it.key() == value_key) continue;
    const int v = space.find(it.key());
    if (v < 0) throw Error(ErrorCode::Config, where + ": unknown variable '" + it.key() + "'", it.key());
    if (!it->is_string())
      throw Error(ErrorCode::Config, where + ": level of '" + it.key() + "' must be a string", it.key());
    const int l = space.variable(v).find_level(it->get<std::string>());
    if (l < 0)
      throw Error(ErrorCode::Config,
                  where + ": unknown level '" + it->get<std::string>() + "' of '" + it.key() + "'",
                  it.key());
    levels[static_cast<std::size_t>(v)] = l;
  }
  for (int v = 0; v < space.num_variables(); ++v)
    if (levels[static_cast<std::size_t>(v)] < 0)
      throw Error(ErrorCode::Config, where + ": entry leaves '" + space.variable(v).name + "' unset",
                  space.variable(v).name);
  return space.cell_index(levels);
}

// Variables named by the entries of a list-form table, in the order of `space`.
std::vector<std::string> entry_scope(const Json& list, const VariableSpace& space,
                                     const char* value_key, const std::string& where) {
  if (!list.is_array() || list.empty())
    throw Error(ErrorCode::Config, where + " must be a non-empty array", where);
  std::set<std::string> named;
  for (auto it = entry_cells(list[0]).begin(); it != entry_cells(list[0]).end(); ++it)
    if (it.key() != value_key) named.insert(it.key());
  std::vector<std::string> scope;
  for (const auto& v : space.variables())
    if (named.count(v.name)) scope.push_back(v.name);
  if (scope.size() != named.size()) {
    for (const auto& n : named)
      if (space.find(n) < 0) throw Error(ErrorCode::Config, where + ": unknown variable '" + n + "'", n);
  }
  return scope;
}

Eigen::VectorXd list_values(const Json& list, const VariableSpace& space, const char* value_key,
                            const std::string& where) {
  Eigen::VectorXd v = Eigen::VectorXd::Zero(space.num_cells());
  std::vector<bool> seen(static_cast<std::size_t>(space.num_cells()), false);
  for (const auto& e : list) {
    const Index c = entry_cell(e, space, value_key, where);
    if (seen[static_cast<std::size_t>(c)])
      throw Error(ErrorCode::Config, where + ": duplicate cell " + space.cell_label(c), where);
    seen[static_cast<std::size_t>(c)] = true;
    v[c] = finite_number(require_key(e, value_key, where), where);
  }
  return v;
}

}  // namespace

Json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Io, "cannot open '" + path + "'", path);
  try {
    return Json::parse(in);
  } catch (const Json::parse_error& e) {
    throw Error(ErrorCode::Config, "invalid JSON in '" + path + "': " + e.what(), path);
  }
}

void write_json_file(const std::string& path, const Json& value) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::Io, "cannot write '" + path + "'", path);
  out << value.dump(2) << '\n';
  if (!out) throw Error(ErrorCode::Io, "write failed for '" + path + "'", path);
}

VariableSpace parse_space(const Json& j) {
  const Json& vars = require_key(j, "variables", "space");
  if (!vars.is_array() || vars.empty())
    throw Error(ErrorCode::Config, "space.variables must be a non-empty array", "space.variables");
  std::vector<Variable> vs;
  for (const auto& v : vars) {
    Variable var;
    var.name = require_key(v, "name", "space.variables").get<std::string>();
    var.levels = string_list(require_key(v, "levels", "space.variables"), "space.variables." + var.name);
    vs.push_back(std::move(var));
  }
  std::vector<std::string> y;
  if (j.contains("y")) y = string_list(j.at("y"), "space.y");
  return VariableSpace::build(std::move(vs), y);
}

Json space_to_json(const VariableSpace& space) {
  Json vars = Json::array();
  for (const auto& v : space.variables()) vars.push_back({{"name", v.name}, {"levels", v.levels}});
  Json y = Json::array();
  for (int i : space.y_order()) y.push_back(space.variable(i).name);
  return {{"variables", vars}, {"y", y}};
}

ProbTable parse_table(const Json& j, const VariableSpace& space, double tolerance) {
  Eigen::VectorXd mass;
  if (j.is_object() && j.contains("mass")) {
    mass = number_array(j.at("mass"), space.num_cells(), "mass");
  } else if (j.is_array()) {
    mass = list_values(j, space, "prob", "table");
  } else {
    throw Error(ErrorCode::Config, "a table needs 'mass' or a list of cell entries", "table");
  }
  return ProbTable::from_probabilities(space, std::move(mass), tolerance);
}

Json table_to_json(const ProbTable& table) {
  Json out = space_to_json(table.space());
  out["mass"] = std::vector<double>(table.mass().begin(), table.mass().end());
  return out;
}

ProbTable parse_embedded_table(const Json& j, double tolerance) {
  return parse_table(j, parse_space(j), tolerance);
}

Json values_to_json(const CellFunction& f) {
  Json out = space_to_json(f.space());
  out["values"] = std::vector<double>(f.values().begin(), f.values().end());
  return out;
}

std::vector<MomentConstraint> indicator_constraints(const ProbTable& joint) {
  std::vector<MomentConstraint> out;
  const VariableSpace& s = joint.space();
  for (Index c = 0; c < s.num_cells(); ++c) {
    Eigen::VectorXd u = Eigen::VectorXd::Zero(s.num_cells());
    u[c] = 1.0;
    out.push_back(make_moment("1[" + s.cell_label(c) + "]", s, std::move(u), joint[c]));
  }
  return out;
}

Margins parse_margins(const Json& j, const VariableSpace& y_space) {
  Margins m;
  if (j.is_object() && j.contains("joint")) {
    const Json& list = j.at("joint");
    const VariableSpace scope = y_space.subspace(entry_scope(list, y_space, "prob", "joint"));
    const Eigen::VectorXd probs = list_values(list, scope, "prob", "joint");
    if ((probs.array() < 0.0).any())
      throw Error(ErrorCode::Config, "joint margin has a negative probability", "joint");
    const double total = probs.sum();
    if (std::abs(total - 1.0) > kMarginTolerance) {
      char buf[96];
      std::snprintf(buf, sizeof buf, "joint margin sums to %.12g, not 1", total);
      throw Error(ErrorCode::Config, buf, "joint");
    }
    m.joint = ProbTable::from_probabilities(scope, probs, kMarginTolerance);
    m.moments = indicator_constraints(*m.joint);
    return m;
  }
  if (!(j.is_object() && j.contains("moments")))
    throw Error(ErrorCode::Config, "margins need a 'joint' or a 'moments' entry", "margins");
  const Json& list = j.at("moments");
  if (!list.is_array()) throw Error(ErrorCode::Config, "'moments' must be an array", "moments");
  int k = 0;
  for (const auto& e : list) {
    const std::string where = "moments[" + std::to_string(k) + "]";
    const std::vector<std::string> names = string_list(require_key(e, "scope", where), where + ".scope");
    for (const auto& n : names)
      if (y_space.find(n) < 0)
        throw Error(ErrorCode::Config, where + ": scope names unknown Y variable '" + n + "'", n);
    const VariableSpace scope = y_space.subspace(names);
    const Json& vals = require_key(e, "values_by_cell", where);
    Eigen::VectorXd u;
    if (vals.is_array() && !vals.empty() && vals[0].is_object())
      u = list_values(vals, scope, "value", where);
    else
      u = number_array(vals, scope.num_cells(), where + ".values_by_cell");
    const double target = finite_number(require_key(e, "target", where), where + ".target");
    std::string name = e.contains("name") ? e.at("name").get<std::string>() : "u" + std::to_string(k);
    m.moments.push_back(make_moment(std::move(name), scope, std::move(u), target));
    ++k;
  }
  return m;
}

Margins load_margins(const std::string& path, const VariableSpace& y_space) {
  return parse_margins(read_json_file(path), y_space);
}

Dataset parse_dataset(const std::vector<CsvRow>& rows, const VariableSpace& space,
                      const std::vector<std::string>& always_observed) {
  if (rows.empty()) throw Error(ErrorCode::Io, "dataset has no header row");
  const CsvRow& header = rows[0];
  const int nv = space.num_variables();
  std::vector<int> column(static_cast<std::size_t>(nv), -1);
  for (std::size_t c = 0; c < header.size(); ++c) {
    const int v = space.find(header[c]);
    if (v < 0) throw Error(ErrorCode::Io, "dataset column '" + header[c] + "' is not in the space", header[c]);
    if (column[static_cast<std::size_t>(v)] >= 0)
      throw Error(ErrorCode::Io, "dataset column '" + header[c] + "' appears twice", header[c]);
    column[static_cast<std::size_t>(v)] = static_cast<int>(c);
  }
  for (int v = 0; v < nv; ++v)
    if (column[static_cast<std::size_t>(v)] < 0)
      throw Error(ErrorCode::Io, "dataset lacks column '" + space.variable(v).name + "'",
                  space.variable(v).name);
  std::vector<bool> full(static_cast<std::size_t>(nv), false);
  for (const auto& n : always_observed) full[static_cast<std::size_t>(space.require(n))] = true;
  if (rows.size() < 2) throw Error(ErrorCode::Io, "dataset has no records");

  std::vector<std::vector<int>> out;
  out.reserve(rows.size() - 1);
  for (std::size_t r = 1; r < rows.size(); ++r) {
    const CsvRow& row = rows[r];
    if (row.size() != header.size())
      throw Error(ErrorCode::Io, "malformed CSV: record " + std::to_string(r) + " has " +
                                     std::to_string(row.size()) + " fields, expected " +
                                     std::to_string(header.size()));
    std::vector<int> rec(static_cast<std::size_t>(nv));
    for (int v = 0; v < nv; ++v) {
      const std::string& cell = row[static_cast<std::size_t>(column[static_cast<std::size_t>(v)])];
      const Variable& var = space.variable(v);
      if (cell == kMissingToken) {
        if (full[static_cast<std::size_t>(v)])
          throw Error(ErrorCode::Io,
                      "NA in fully observed variable '" + var.name + "' at record " + std::to_string(r),
                      var.name);
        rec[static_cast<std::size_t>(v)] = kMissing;
        continue;
      }
      const int l = var.find_level(cell);
      if (l < 0 || l == var.placeholder())
        throw Error(ErrorCode::Io,
                    "unknown level '" + cell + "' of '" + var.name + "' at record " + std::to_string(r),
                    var.name);
      rec[static_cast<std::size_t>(v)] = l;
    }
    out.push_back(std::move(rec));
  }
  return Dataset(space, std::move(out));
}

Dataset load_dataset(const std::string& path, const VariableSpace& space,
                     const std::vector<std::string>& always_observed) {
  return parse_dataset(read_csv_file(path), space, always_observed);
}

void write_dataset(std::ostream& out, const Dataset& data) {
  const VariableSpace& s = data.space();
  write_csv_row(out, s.names());
  CsvRow row(static_cast<std::size_t>(s.num_variables()));
  for (const auto& rec : data.rows()) {
    for (int v = 0; v < s.num_variables(); ++v) {
      const int l = rec[static_cast<std::size_t>(v)];
      row[static_cast<std::size_t>(v)] =
          l == kMissing ? std::string(kMissingToken) : s.variable(v).levels[static_cast<std::size_t>(l)];
    }
    write_csv_row(out, row);
  }
}

void write_dataset_file(const std::string& path, const Dataset& data) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::Io, "cannot write '" + path + "'", path);
  write_dataset(out, data);
  if (!out) throw Error(ErrorCode::Io, "write failed for '" + path + "'", path);
}

std::vector<std::pair<std::string, std::string>> missingness_report(const Dataset& data) {
  std::vector<std::pair<std::string, std::string>> out;
  const std::vector<double> f = data.missing_fractions();
  for (int v = 0; v < data.space().num_variables(); ++v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.4f", f[static_cast<std::size_t>(v)]);
    out.emplace_back(data.space().variable(v).name, buf);
  }
  return out;
}

}  // namespace san::io
