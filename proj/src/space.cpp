#include "san/space.hpp"

#include <algorithm>
#include <set>

#include "san/error.hpp"

namespace san {

const char* error_code_name(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::InvalidArgument: return "invalid_argument";
    case ErrorCode::Config: return "config";
    case ErrorCode::Io: return "io";
    case ErrorCode::Dominance: return "dominance";
    case ErrorCode::Infeasible: return "infeasible";
    case ErrorCode::Unidentifiable: return "unidentifiable";
    case ErrorCode::NonConvergence: return "non_convergence";
  }
  return "unknown";
}

int exit_status(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::Infeasible:
    case ErrorCode::Unidentifiable:
      return 3;
    case ErrorCode::NonConvergence:
      return 4;
    default:
      return 2;
  }
}

int Variable::find_level(std::string_view label) const {
  for (int i = 0; i < size(); ++i) {
    if (levels[static_cast<std::size_t>(i)] == label) return i;
  }
  return -1;
}

Variable materialized(const Variable& v) {
  if (v.materialized) return v;
  Variable out = v;
  out.levels.emplace_back(kPlaceholder);
  out.materialized = true;
  return out;
}

Variable unmaterialized(const Variable& v) {
  if (!v.materialized) return v;
  Variable out = v;
  out.levels.pop_back();
  out.materialized = false;
  return out;
}

VariableSpace VariableSpace::build(std::vector<Variable> variables,
                                   const std::vector<std::string>& y_block) {
  std::set<std::string> seen;
  for (const auto& v : variables) {
    if (v.name.empty()) throw Error(ErrorCode::InvalidArgument, "variable with empty name");
    if (!seen.insert(v.name).second)
      throw Error(ErrorCode::InvalidArgument, "duplicate variable name '" + v.name + "'", v.name);
    if (v.materialized)
      throw Error(ErrorCode::InvalidArgument, "declared variables cannot be materialized", v.name);
    if (v.levels.size() < 2)
      throw Error(ErrorCode::InvalidArgument,
                  "variable '" + v.name + "' needs at least 2 levels", v.name);
    std::set<std::string> labels;
    for (const auto& l : v.levels) {
      if (l == kPlaceholder)
        throw Error(ErrorCode::InvalidArgument,
                    "level label '*' is reserved (variable '" + v.name + "')", v.name);
      if (!labels.insert(l).second)
        throw Error(ErrorCode::InvalidArgument,
                    "duplicate level '" + l + "' in variable '" + v.name + "'", v.name);
    }
  }
  std::vector<bool> is_y(variables.size(), false);
  std::vector<int> order;
  for (const auto& name : y_block) {
    auto it = std::find_if(variables.begin(), variables.end(),
                           [&](const Variable& v) { return v.name == name; });
    if (it == variables.end())
      throw Error(ErrorCode::InvalidArgument, "unknown Y variable '" + name + "'", name);
    const auto i = static_cast<int>(it - variables.begin());
    if (is_y[static_cast<std::size_t>(i)])
      throw Error(ErrorCode::InvalidArgument, "Y variable listed twice '" + name + "'", name);
    is_y[static_cast<std::size_t>(i)] = true;
    order.push_back(i);
  }
  return from_parts(std::move(variables), std::move(is_y), std::move(order));
}

VariableSpace VariableSpace::from_parts(std::vector<Variable> variables, std::vector<bool> is_y,
                                        std::vector<int> y_order) {
  VariableSpace s;
  s.vars_ = std::move(variables);
  s.is_y_ = std::move(is_y);
  if (s.is_y_.empty()) s.is_y_.assign(s.vars_.size(), false);
  if (s.is_y_.size() != s.vars_.size())
    throw Error(ErrorCode::InvalidArgument, "role vector length mismatch");
  std::set<std::string> seen;
  for (const auto& v : s.vars_) {
    if (!seen.insert(v.name).second)
      throw Error(ErrorCode::InvalidArgument, "duplicate variable name '" + v.name + "'", v.name);
    if (v.levels.empty())
      throw Error(ErrorCode::InvalidArgument, "variable '" + v.name + "' has no levels", v.name);
  }
  if (y_order.empty()) {
    for (int i = 0; i < s.num_variables(); ++i)
      if (s.is_y_[static_cast<std::size_t>(i)]) y_order.push_back(i);
  }
  s.y_order_ = std::move(y_order);
  s.finalize();
  return s;
}

void VariableSpace::finalize() {
  strides_.assign(vars_.size(), 1);
  cells_ = 1;
  for (int i = num_variables() - 1; i >= 0; --i) {
    strides_[static_cast<std::size_t>(i)] = cells_;
    cells_ *= variable(i).size();
    if (cells_ > kMaxCells)
      throw Error(ErrorCode::InvalidArgument,
                  "space exceeds " + std::to_string(kMaxCells) + " cells");
  }
}

std::vector<std::string> VariableSpace::names() const {
  std::vector<std::string> out;
  out.reserve(vars_.size());
  for (const auto& v : vars_) out.push_back(v.name);
  return out;
}

int VariableSpace::find(std::string_view name) const {
  for (int i = 0; i < num_variables(); ++i)
    if (variable(i).name == name) return i;
  return -1;
}

int VariableSpace::require(std::string_view name) const {
  const int i = find(name);
  if (i < 0)
    throw Error(ErrorCode::InvalidArgument, "unknown variable '" + std::string(name) + "'",
                std::string(name));
  return i;
}

std::vector<int> VariableSpace::x_indices() const {
  std::vector<int> out;
  for (int i = 0; i < num_variables(); ++i)
    if (!is_y(i)) out.push_back(i);
  return out;
}

std::vector<int> VariableSpace::dims() const {
  std::vector<int> out;
  out.reserve(vars_.size());
  for (const auto& v : vars_) out.push_back(v.size());
  return out;
}

Index VariableSpace::cell_index(std::span<const int> levels) const {
  Index cell = 0;
  for (std::size_t i = 0; i < vars_.size(); ++i) cell += strides_[i] * levels[i];
  return cell;
}

void VariableSpace::cell_levels(Index cell, std::span<int> levels) const {
  for (std::size_t i = 0; i < vars_.size(); ++i) {
    levels[i] = static_cast<int>(cell / strides_[i]);
    cell %= strides_[i];
  }
}

std::vector<int> VariableSpace::cell_levels(Index cell) const {
  std::vector<int> out(vars_.size());
  cell_levels(cell, out);
  return out;
}

VariableSpace VariableSpace::subspace(const std::vector<std::string>& names) const {
  std::vector<Variable> vars;
  std::vector<bool> roles;
  for (const auto& n : names) {
    const int i = require(n);
    vars.push_back(variable(i));
    roles.push_back(is_y(i));
  }
  std::vector<int> order;
  for (int yi : y_order_) {
    for (std::size_t k = 0; k < names.size(); ++k)
      if (names[k] == variable(yi).name) order.push_back(static_cast<int>(k));
  }
  return from_parts(std::move(vars), std::move(roles), std::move(order));
}

std::string VariableSpace::cell_label(Index cell) const {
  const auto lv = cell_levels(cell);
  std::string out;
  for (int i = 0; i < num_variables(); ++i) {
    if (i) out += ',';
    out += variable(i).name;
    out += '=';
    out += variable(i).levels[static_cast<std::size_t>(lv[static_cast<std::size_t>(i)])];
  }
  return out;
}

bool operator==(const VariableSpace& a, const VariableSpace& b) {
  if (a.num_variables() != b.num_variables()) return false;
  for (int i = 0; i < a.num_variables(); ++i) {
    const auto& va = a.variable(i);
    const auto& vb = b.variable(i);
    if (va.name != vb.name || va.levels != vb.levels || va.materialized != vb.materialized)
      return false;
  }
  return true;
}

std::vector<Index> reduction_map(const VariableSpace& from, const VariableSpace& to) {
  std::vector<int> pos(static_cast<std::size_t>(to.num_variables()));
  for (int k = 0; k < to.num_variables(); ++k) {
    const int i = from.require(to.variable(k).name);
    if (from.variable(i).levels != to.variable(k).levels)
      throw Error(ErrorCode::InvalidArgument,
                  "level mismatch for variable '" + to.variable(k).name + "'",
                  to.variable(k).name);
    pos[static_cast<std::size_t>(k)] = i;
  }
  std::vector<Index> map(static_cast<std::size_t>(from.num_cells()));
  std::vector<int> lv(static_cast<std::size_t>(from.num_variables()), 0);
  // Odometer walk in row-major order.
  for (Index c = 0; c < from.num_cells(); ++c) {
    Index t = 0;
    for (int k = 0; k < to.num_variables(); ++k)
      t += to.stride(k) * lv[static_cast<std::size_t>(pos[static_cast<std::size_t>(k)])];
    map[static_cast<std::size_t>(c)] = t;
    for (int i = from.num_variables() - 1; i >= 0; --i) {
      auto& l = lv[static_cast<std::size_t>(i)];
      if (++l < from.variable(i).size()) break;
      l = 0;
    }
  }
  return map;
}

}  // namespace san
