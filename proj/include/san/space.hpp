#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace san {

using Index = std::int64_t;

/// Reserved level label for a missing value.
inline constexpr std::string_view kPlaceholder = "*";

/// Spaces larger than this are rejected; tables are dense.
inline constexpr Index kMaxCells = 1'000'000;

struct Variable {
  std::string name;
  std::vector<std::string> levels;
  /// A materialized variable carries the placeholder as its last level.
  bool materialized = false;

  int size() const { return static_cast<int>(levels.size()); }
  /// Number of real (non-placeholder) levels.
  int real_size() const { return size() - (materialized ? 1 : 0); }
  int placeholder() const { return materialized ? size() - 1 : -1; }
  /// Index of `label`, or -1.
  int find_level(std::string_view label) const;
};

/// Ordered categorical variables with an X/Y role partition. Cells are
/// indexed row-major over the declared order: the last variable varies
/// fastest.
class VariableSpace {
 public:
  VariableSpace() = default;

  /// Validated construction from user input. `y_block` lists the Y
  /// variables in their SAN order; the rest form the X block.
  static VariableSpace build(std::vector<Variable> variables,
                             const std::vector<std::string>& y_block);

  /// Construction for derived spaces (sub-spaces, materialized spaces).
  /// Names must be unique; placeholder levels are allowed on
  /// materialized variables.
  static VariableSpace from_parts(std::vector<Variable> variables,
                                  std::vector<bool> is_y,
                                  std::vector<int> y_order = {});

  int num_variables() const { return static_cast<int>(vars_.size()); }
  Index num_cells() const { return cells_; }
  const std::vector<Variable>& variables() const { return vars_; }
  const Variable& variable(int i) const { return vars_[static_cast<std::size_t>(i)]; }
  std::vector<std::string> names() const;

  /// Position of the named variable, or -1.
  int find(std::string_view name) const;
  /// Position of the named variable; throws if absent.
  int require(std::string_view name) const;

  bool is_y(int i) const { return is_y_[static_cast<std::size_t>(i)]; }
  /// Y variables in Y-block order.
  const std::vector<int>& y_order() const { return y_order_; }
  /// X variables in declared order.
  std::vector<int> x_indices() const;
  int p() const { return static_cast<int>(y_order_.size()); }
  int q() const { return num_variables() - p(); }

  std::vector<int> dims() const;
  Index stride(int i) const { return strides_[static_cast<std::size_t>(i)]; }

  Index cell_index(std::span<const int> levels) const;
  void cell_levels(Index cell, std::span<int> levels) const;
  std::vector<int> cell_levels(Index cell) const;

  /// Sub-space over the named variables, in the given order. Roles carry over.
  VariableSpace subspace(const std::vector<std::string>& names) const;

  /// Human-readable cell label, e.g. "age=20-34,sex=male".
  std::string cell_label(Index cell) const;

  friend bool operator==(const VariableSpace& a, const VariableSpace& b);

 private:
  void finalize();

  std::vector<Variable> vars_;
  std::vector<bool> is_y_;
  std::vector<int> y_order_;
  std::vector<Index> strides_;
  Index cells_ = 1;
};

/// Copy of `v` with the placeholder level appended.
Variable materialized(const Variable& v);
/// Copy of `v` with the placeholder level removed.
Variable unmaterialized(const Variable& v);

/// Maps every cell of `from` to the cell of `to` obtained by dropping
/// variables. `to` must be a sub-space of `from` (matched by name; levels
/// must agree).
std::vector<Index> reduction_map(const VariableSpace& from, const VariableSpace& to);

}  // namespace san
