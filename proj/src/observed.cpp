#include "san/observed.hpp"

#include <map>

#include "san/error.hpp"

namespace san {

std::string indicator_name(const std::string& name) { return "M[" + name + "]"; }

Variable indicator_variable(const std::string& name) {
  return Variable{indicator_name(name), {"0", "1"}, false};
}

ObservedTable::ObservedTable(ProbTable table) : table_(std::move(table)) {}

std::vector<ObservedTable::Slice> ObservedTable::patterns() const {
  const auto& space = table_.space();
  std::vector<int> mat;
  for (int i = 0; i < space.num_variables(); ++i)
    if (space.variable(i).materialized) mat.push_back(i);

  std::map<MissingnessPattern, Eigen::VectorXd> acc;
  std::map<MissingnessPattern, std::vector<std::string>> obs_names;
  std::vector<int> lv(static_cast<std::size_t>(space.num_variables()));
  for (Index c = 0; c < table_.size(); ++c) {
    space.cell_levels(c, lv);
    MissingnessPattern pat;
    std::vector<std::string> observed;
    std::vector<Variable> obs_vars;
    for (int i = 0; i < space.num_variables(); ++i) {
      const auto& v = space.variable(i);
      const bool miss = v.materialized && lv[static_cast<std::size_t>(i)] == v.placeholder();
      if (v.materialized) (space.is_y(i) ? pat.m : pat.w).push_back(miss);
      if (!miss) {
        observed.push_back(v.name);
        obs_vars.push_back(unmaterialized(v));
      }
    }
    auto sub = VariableSpace::from_parts(obs_vars, {});
    auto it = acc.find(pat);
    if (it == acc.end()) {
      it = acc.emplace(pat, Eigen::VectorXd::Zero(sub.num_cells())).first;
      obs_names.emplace(pat, observed);
    }
    std::vector<int> olv;
    for (int i = 0; i < space.num_variables(); ++i) {
      const auto& v = space.variable(i);
      const int l = lv[static_cast<std::size_t>(i)];
      if (!(v.materialized && l == v.placeholder())) olv.push_back(l);
    }
    it->second[sub.cell_index(olv)] += table_[c];
  }
  std::vector<Slice> out;
  for (auto& [pat, vals] : acc) {
    Slice s;
    s.pattern = pat;
    s.weight = vals.sum();
    s.observed = obs_names[pat];
    if (s.weight > 0.0) s.probabilities = vals / s.weight;
    out.push_back(std::move(s));
  }
  return out;
}

ObservedTable materialize(const ProbTable& full) {
  const auto& space = full.space();
  // Base variables and, for each, the position of its indicator (or -1).
  std::vector<int> base;
  std::vector<int> ind_of;
  std::vector<bool> is_indicator(static_cast<std::size_t>(space.num_variables()), false);
  for (int i = 0; i < space.num_variables(); ++i) {
    const int k = space.find(indicator_name(space.variable(i).name));
    if (k >= 0) is_indicator[static_cast<std::size_t>(k)] = true;
  }
  std::vector<Variable> out_vars;
  std::vector<bool> roles;
  for (int i = 0; i < space.num_variables(); ++i) {
    if (is_indicator[static_cast<std::size_t>(i)]) continue;
    const int k = space.find(indicator_name(space.variable(i).name));
    if (k >= 0 && space.variable(k).size() != 2)
      throw Error(ErrorCode::InvalidArgument, "indicator variables must be binary",
                  space.variable(k).name);
    base.push_back(i);
    ind_of.push_back(k);
    out_vars.push_back(k >= 0 ? materialized(space.variable(i)) : space.variable(i));
    roles.push_back(space.is_y(i));
  }
  auto out_space = VariableSpace::from_parts(std::move(out_vars), std::move(roles));
  Eigen::VectorXd out = Eigen::VectorXd::Zero(out_space.num_cells());
  std::vector<int> lv(static_cast<std::size_t>(space.num_variables()));
  std::vector<int> olv(base.size());
  for (Index c = 0; c < full.size(); ++c) {
    space.cell_levels(c, lv);
    for (std::size_t b = 0; b < base.size(); ++b) {
      const int k = ind_of[b];
      const bool miss = k >= 0 && lv[static_cast<std::size_t>(k)] == 1;
      olv[b] = miss ? out_space.variable(static_cast<int>(b)).placeholder()
                    : lv[static_cast<std::size_t>(base[b])];
    }
    out[out_space.cell_index(olv)] += full[c];
  }
  return ObservedTable(ProbTable::from_weights(std::move(out_space), std::move(out)));
}

}  // namespace san
