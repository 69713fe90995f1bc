#include "san/identify.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "san/error.hpp"
#include "san/full_data.hpp"

namespace san {
namespace {

bool contains(const std::vector<std::string>& v, const std::string& s) {
  return std::find(v.begin(), v.end(), s) != v.end();
}

}  // namespace

std::vector<MomentConstraint> span_restricted_moments(const VariableSpace& y_space,
                                                      const std::vector<MomentConstraint>& moments,
                                                      const std::vector<std::string>& keep,
                                                      const std::string& label) {
  const Index n = y_space.num_cells();
  const Index k = static_cast<Index>(moments.size());
  std::vector<MomentConstraint> out;
  if (k == 0) return out;
  const VariableSpace keep_space = y_space.subspace(keep);
  const double dropped = static_cast<double>(n / keep_space.num_cells());
  const auto map = reduction_map(y_space, keep_space);

  Eigen::MatrixXd u(n, k);
  Eigen::VectorXd b(k);
  for (Index s = 0; s < k; ++s) {
    u.col(s) = moments[static_cast<std::size_t>(s)].u.broadcast_to(y_space);
    b[s] = moments[static_cast<std::size_t>(s)].target;
  }
  // Projection onto functions of `keep`: average over the other variables.
  Eigen::MatrixXd avg_keep = Eigen::MatrixXd::Zero(keep_space.num_cells(), k);
  for (Index c = 0; c < n; ++c) avg_keep.row(map[static_cast<std::size_t>(c)]) += u.row(c);
  avg_keep /= dropped;
  Eigen::MatrixXd resid(n, k);
  for (Index c = 0; c < n; ++c) resid.row(c) = u.row(c) - avg_keep.row(map[static_cast<std::size_t>(c)]);

  Eigen::JacobiSVD<Eigen::MatrixXd> svd(resid, Eigen::ComputeFullV);
  const Eigen::VectorXd& sv = svd.singularValues();
  const double scale = std::max(1.0, u.cwiseAbs().maxCoeff() * std::sqrt(static_cast<double>(n)));
  const double tol = 1e-10 * scale;
  int idx = 0;
  for (Index i = 0; i < k; ++i) {
    const bool null = i >= sv.size() || sv[i] <= tol;
    if (!null) continue;
    const Eigen::VectorXd a = svd.matrixV().col(i);
    out.push_back(make_moment(label + "#" + std::to_string(idx++), keep_space, avg_keep * a, b.dot(a)));
  }
  return out;
}

Reconstruction reconstruct_algorithm1(const ObservedTable& observed,
                                      const std::vector<MomentConstraint>& moments, Link link,
                                      std::vector<std::string> ordering,
                                      const IdentifyOptions& options) {
  const VariableSpace& obs = observed.space();
  std::vector<std::string> x_names;
  std::vector<std::string> declared_y;
  std::vector<std::string> fixed_y;
  for (int i = 0; i < obs.num_variables(); ++i) {
    const Variable& v = obs.variable(i);
    if (!obs.is_y(i)) {
      if (v.materialized)
        throw Error(ErrorCode::InvalidArgument,
                    "X variables must be fully observed for the reconstruction", v.name);
      x_names.push_back(v.name);
    }
  }
  for (int i : obs.y_order()) {
    declared_y.push_back(obs.variable(i).name);
    if (!obs.variable(i).materialized) fixed_y.push_back(obs.variable(i).name);
  }
  if (declared_y.empty()) throw Error(ErrorCode::InvalidArgument, "no Y variables");
  if (ordering.empty()) ordering = declared_y;
  {
    auto a = ordering, b = declared_y;
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    if (a != b) throw Error(ErrorCode::Config, "ordering must be a permutation of the Y block", "ordering");
  }
  std::stable_partition(ordering.begin(), ordering.end(),
                        [&](const std::string& n) { return !contains(fixed_y, n); });
  const int n_steps = static_cast<int>(ordering.size() - fixed_y.size());

  // State layout before step k: X, then Y in ordering, materialized below k.
  auto state_space = [&](int k) {
    std::vector<Variable> vars;
    std::vector<bool> roles;
    for (const auto& x : x_names) {
      vars.push_back(obs.variable(obs.find(x)));
      roles.push_back(false);
    }
    for (int i = 0; i < static_cast<int>(ordering.size()); ++i) {
      const Variable& v = obs.variable(obs.find(ordering[static_cast<std::size_t>(i)]));
      vars.push_back(i < k && i < n_steps ? v : unmaterialized(v));
      roles.push_back(true);
    }
    return VariableSpace::from_parts(std::move(vars), std::move(roles));
  };

  std::vector<Variable> yv;
  for (const auto& y : ordering) yv.push_back(unmaterialized(obs.variable(obs.find(y))));
  const VariableSpace y_space = VariableSpace::from_parts(yv, std::vector<bool>(yv.size(), true));
  for (const auto& m : moments)
    for (const auto& v : m.scope())
      if (y_space.find(v) < 0)
        throw Error(ErrorCode::InvalidArgument,
                    "moment '" + m.name + "' uses '" + v + "', which is not a Y variable", m.name);

  // At least one non-constant function of each Y_j must be known.
  for (int j = 0; j < n_steps; ++j) {
    const std::string& var = ordering[static_cast<std::size_t>(j)];
    bool ok = false;
    for (const auto& f : span_restricted_moments(y_space, moments, {var}, var)) {
      const auto& v = f.u.values();
      if (v.maxCoeff() - v.minCoeff() > 1e-9 * std::max(1.0, v.cwiseAbs().maxCoeff())) ok = true;
    }
    if (!ok)
      throw Error(ErrorCode::Unidentifiable,
                  "the auxiliary moments contain no non-constant function of '" + var + "'", var);
  }

  std::vector<std::string> names;
  for (const auto& x : x_names) names.push_back(x);
  for (const auto& y : ordering) names.push_back(y);
  ProbTable state = reorder(observed.table(), names);

  Reconstruction out;
  out.steps.assign(ordering.begin(), ordering.begin() + n_steps);
  out.mechanisms.resize(static_cast<std::size_t>(n_steps));
  out.diagnostics.resize(static_cast<std::size_t>(n_steps));

  for (int j = n_steps - 1; j >= 0; --j) {
    const std::string& var = ordering[static_cast<std::size_t>(j)];
    const VariableSpace& cur = state.space();
    const VariableSpace next = state_space(j);
    const int v = static_cast<int>(x_names.size()) + j;
    const int star = cur.variable(v).placeholder();
    std::vector<std::string> marg_names;
    for (int i = 0; i < next.num_variables(); ++i)
      if (i != v) marg_names.push_back(next.variable(i).name);
    const VariableSpace marg_space = next.subspace(marg_names);

    Eigen::VectorXd observed_part = Eigen::VectorXd::Zero(next.num_cells());
    Eigen::VectorXd missing_part = Eigen::VectorXd::Zero(marg_space.num_cells());
    std::vector<int> lv(static_cast<std::size_t>(cur.num_variables()));
    std::vector<int> mlv(marg_names.size());
    for (Index c = 0; c < cur.num_cells(); ++c) {
      cur.cell_levels(c, lv);
      if (lv[static_cast<std::size_t>(v)] == star) {
        for (int i = 0, k = 0; i < cur.num_variables(); ++i)
          if (i != v) mlv[static_cast<std::size_t>(k++)] = lv[static_cast<std::size_t>(i)];
        missing_part[marg_space.cell_index(mlv)] += state[c];
      } else {
        observed_part[next.cell_index(lv)] = state[c];
      }
    }
    const double miss_mass = missing_part.sum();
    const double obs_mass = observed_part.sum();
    const double pi = miss_mass / (miss_mass + obs_mass);

    StepDiagnostics& diag = out.diagnostics[static_cast<std::size_t>(j)];
    diag.variable = var;
    diag.position = j;
    diag.pi = pi;
    if (miss_mass <= 0.0) {
      diag.skipped = true;
      diag.c = std::numeric_limits<double>::infinity();
      out.mechanisms[static_cast<std::size_t>(j)] = CellFunction(next, Eigen::VectorXd::Zero(next.num_cells()));
      state = ProbTable::from_weights(next, observed_part);
      continue;
    }
    if (!(obs_mass > 0.0))
      throw Error(ErrorCode::Unidentifiable, "variable '" + var + "' is never observed", var);

    const ProbTable q = ProbTable::from_weights(next, observed_part);
    diag.c = obs_mass / miss_mass;
    diag.reference = q;
    diag.constraints.fixed_marginal = ProbTable::from_weights(marg_space, missing_part);

    // Targets of the functions of Y_{>=j} given M_j = 1.
    std::vector<std::string> suffix(ordering.begin() + j, ordering.end());
    const VariableSpace suffix_space = next.subspace(suffix);
    const Eigen::VectorXd g0 = marginal_sums(next, observed_part / (miss_mass + obs_mass), suffix_space);
    for (auto m : span_restricted_moments(y_space, moments, suffix, "U[" + var + "]")) {
      const double e0 = g0.dot(m.u.values());
      m.target = (m.target - e0) / pi;
      diag.constraints.moments.push_back(std::move(m));
    }

    const FGenerator gen(link, diag.c);
    try {
      diag.projection = project(q, diag.constraints, gen, options.projection);
    } catch (const Error& e) {
      throw Error(e.code(), "step for '" + var + "': " + e.what(),
                  e.subject().empty() ? var : e.subject());
    }
    if (options.residuals)
      diag.decomposition_residual =
          additive_decomposition_residual(diag.projection.table, q, diag.constraints, gen);

    const Eigen::VectorXd miss_joint = diag.projection.table.mass() * pi;
    const Eigen::VectorXd obs_joint = q.mass() * (1.0 - pi);
    const Eigen::VectorXd joint = miss_joint + obs_joint;
    Eigen::VectorXd mech(next.num_cells());
    for (Index c = 0; c < next.num_cells(); ++c) mech[c] = joint[c] > 0.0 ? miss_joint[c] / joint[c] : 0.0;
    out.mechanisms[static_cast<std::size_t>(j)] = CellFunction(next, std::move(mech));
    state = ProbTable::from_weights(next, joint);
  }

  std::vector<std::string> study_names;
  for (int i = 0; i < obs.num_variables(); ++i) study_names.push_back(obs.variable(i).name);
  out.joint = reorder(state, study_names);
  out.full = assemble_full_data(out.joint, out.steps, out.mechanisms);
  return out;
}

EquivalenceReport observational_equivalence(const ProbTable& a, const ProbTable& b,
                                            const std::vector<MomentConstraint>& moments) {
  if (!(a.space() == b.space()))
    throw Error(ErrorCode::InvalidArgument, "full-data tables on different spaces");
  EquivalenceReport r;
  r.max_obs_gap = sup_distance(materialize(a).table(), materialize(b).table());
  for (const auto& m : moments)
    r.max_moment_gap = std::max(r.max_moment_gap, std::abs(moment(a, m) - moment(b, m)));
  return r;
}

}  // namespace san
