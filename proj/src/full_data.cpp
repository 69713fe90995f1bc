#include "san/full_data.hpp"

#include <algorithm>

#include "san/error.hpp"
#include "san/observed.hpp"
#include "san/random.hpp"

namespace san {

VariableSpace full_data_space(const VariableSpace& study, const std::vector<std::string>& steps) {
  std::vector<Variable> vars = study.variables();
  std::vector<bool> roles;
  for (int i = 0; i < study.num_variables(); ++i) roles.push_back(study.is_y(i));
  std::vector<int> order = study.y_order();
  for (const auto& s : steps) {
    study.require(s);
    vars.push_back(indicator_variable(s));
    roles.push_back(false);
  }
  return VariableSpace::from_parts(std::move(vars), std::move(roles), std::move(order));
}

ProbTable assemble_full_data(const ProbTable& joint, const std::vector<std::string>& steps,
                             const std::vector<CellFunction>& mechanisms) {
  const VariableSpace& study = joint.space();
  if (steps.size() != mechanisms.size())
    throw Error(ErrorCode::InvalidArgument, "one mechanism table per step is required");
  const int p = static_cast<int>(steps.size());
  if (p > 20) throw Error(ErrorCode::InvalidArgument, "too many steps");
  VariableSpace full = full_data_space(study, steps);

  std::vector<int> step_pos;
  for (const auto& s : steps) step_pos.push_back(study.require(s));
  struct Lookup {
    std::vector<int> pos;
    std::vector<Index> stride;
  };
  std::vector<Lookup> lookups;
  for (const auto& m : mechanisms) {
    Lookup l;
    for (int i = 0; i < m.space().num_variables(); ++i) {
      const Variable& v = m.space().variable(i);
      const int pos = study.require(v.name);
      if (unmaterialized(v).levels != study.variable(pos).levels)
        throw Error(ErrorCode::InvalidArgument, "mechanism level mismatch", v.name);
      l.pos.push_back(pos);
      l.stride.push_back(m.space().stride(i));
    }
    lookups.push_back(std::move(l));
  }

  const Index n_study = study.num_cells();
  const Index n_m = Index{1} << p;
  Eigen::VectorXd mass(full.num_cells());
  std::vector<int> lv(static_cast<std::size_t>(study.num_variables()));
  std::vector<int> ml(lv.size());
  for (Index c = 0; c < n_study; ++c) {
    study.cell_levels(c, lv);
    for (Index mbits = 0; mbits < n_m; ++mbits) {
      std::copy(lv.begin(), lv.end(), ml.begin());
      double prob = joint[c];
      Index m_index = 0;
      for (int j = 0; j < p; ++j) {
        const bool miss = (mbits >> (p - 1 - j)) & 1;
        m_index = 2 * m_index + (miss ? 1 : 0);
        const Lookup& l = lookups[static_cast<std::size_t>(j)];
        Index cell = 0;
        for (std::size_t i = 0; i < l.pos.size(); ++i)
          cell += l.stride[i] * ml[static_cast<std::size_t>(l.pos[i])];
        const double pi = mechanisms[static_cast<std::size_t>(j)][cell];
        prob *= miss ? pi : 1.0 - pi;
        if (miss) {
          const int pos = step_pos[static_cast<std::size_t>(j)];
          ml[static_cast<std::size_t>(pos)] = study.variable(pos).size();
        }
      }
      mass[c * n_m + m_index] = prob;
    }
  }
  return ProbTable::from_weights(std::move(full), std::move(mass));
}

ProbTable assemble_full_data(const FullDataModel& model) {
  if (!(model.joint.space() == model.mechanism.space()))
    throw Error(ErrorCode::InvalidArgument, "joint and mechanism spaces differ");
  std::vector<std::string> steps;
  for (const auto& s : model.mechanism.steps()) steps.push_back(s.variable);
  return assemble_full_data(model.joint, steps, mechanism_tables(model.mechanism));
}

Dataset simulate(const FullDataModel& model, Index n, std::uint64_t seed) {
  if (n < 1) throw Error(ErrorCode::InvalidArgument, "simulate needs n >= 1");
  const SanSpec& spec = model.mechanism;
  const VariableSpace& study = spec.space();
  if (!(model.joint.space() == study))
    throw Error(ErrorCode::InvalidArgument, "joint and mechanism spaces differ");
  Rng rng(seed);
  std::vector<double> cdf(static_cast<std::size_t>(model.joint.size()));
  double acc = 0.0;
  for (Index c = 0; c < model.joint.size(); ++c) cdf[static_cast<std::size_t>(c)] = acc += model.joint[c];

  std::vector<int> step_pos;
  for (const auto& s : spec.steps()) step_pos.push_back(study.find(s.variable));
  std::vector<std::vector<int>> rows;
  rows.reserve(static_cast<std::size_t>(n));
  std::vector<int> lv(static_cast<std::size_t>(study.num_variables()));
  for (Index i = 0; i < n; ++i) {
    const double u = rng.uniform() * acc;
    auto it = std::upper_bound(cdf.begin(), cdf.end(), u);
    Index cell = std::min<Index>(static_cast<Index>(it - cdf.begin()), model.joint.size() - 1);
    while (model.joint[cell] == 0.0 && cell > 0) --cell;
    study.cell_levels(cell, lv);
    std::vector<int> ml = lv;
    std::vector<int> row = lv;
    for (int j = 0; j < spec.num_steps(); ++j) {
      const double pi = spec.prob(j, ml);
      if (rng.uniform() < pi) {
        const int pos = step_pos[static_cast<std::size_t>(j)];
        ml[static_cast<std::size_t>(pos)] = study.variable(pos).size();
        row[static_cast<std::size_t>(pos)] = kMissing;
      }
    }
    rows.push_back(std::move(row));
  }
  return Dataset(study, std::move(rows));
}

}  // namespace san
