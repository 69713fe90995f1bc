#include "san/dataset.hpp"

#include "san/error.hpp"

namespace san {

Dataset::Dataset(VariableSpace space, std::vector<std::vector<int>> rows)
    : space_(std::move(space)), rows_(std::move(rows)) {
  const auto k = static_cast<std::size_t>(space_.num_variables());
  for (std::size_t i = 0; i < rows_.size(); ++i) {
    if (rows_[i].size() != k)
      throw Error(ErrorCode::InvalidArgument, "record " + std::to_string(i + 1) + " has " +
                                                  std::to_string(rows_[i].size()) + " fields, expected " +
                                                  std::to_string(k));
    for (std::size_t v = 0; v < k; ++v) {
      const int l = rows_[i][v];
      if (l != kMissing && (l < 0 || l >= space_.variable(static_cast<int>(v)).real_size()))
        throw Error(ErrorCode::InvalidArgument,
                    "record " + std::to_string(i + 1) + ": level index out of range",
                    space_.variable(static_cast<int>(v)).name);
    }
  }
}

std::vector<double> Dataset::missing_fractions() const {
  std::vector<double> out(static_cast<std::size_t>(space_.num_variables()), 0.0);
  if (rows_.empty()) return out;
  for (const auto& r : rows_)
    for (std::size_t v = 0; v < r.size(); ++v)
      if (r[v] == kMissing) out[v] += 1.0;
  for (auto& f : out) f /= static_cast<double>(rows_.size());
  return out;
}

}  // namespace san
