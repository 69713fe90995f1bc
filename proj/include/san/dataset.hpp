#pragma once

#include <string>
#include <vector>

#include "san/space.hpp"

namespace san {

/// Level index marking a missing entry.
inline constexpr int kMissing = -1;

/// n records over a study space; each entry is a level index or kMissing.
class Dataset {
 public:
  Dataset() = default;
  /// Validates every entry against the space.
  Dataset(VariableSpace space, std::vector<std::vector<int>> rows);

  const VariableSpace& space() const { return space_; }
  Index size() const { return static_cast<Index>(rows_.size()); }
  bool empty() const { return rows_.empty(); }
  const std::vector<int>& row(Index i) const { return rows_[static_cast<std::size_t>(i)]; }
  const std::vector<std::vector<int>>& rows() const { return rows_; }

  /// Fraction of missing entries per variable, in space order.
  std::vector<double> missing_fractions() const;

  friend bool operator==(const Dataset& a, const Dataset& b) {
    return a.space_ == b.space_ && a.rows_ == b.rows_;
  }

 private:
  VariableSpace space_;
  std::vector<std::vector<int>> rows_;
};

}  // namespace san
