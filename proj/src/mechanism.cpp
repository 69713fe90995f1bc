#include "san/mechanism.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "san/error.hpp"

namespace san {
namespace {

struct ScopeEntry {
  int position;
  bool materialized;
};

Term make_term(const VariableSpace& space, std::string name, TermRole role,
               const std::vector<ScopeEntry>& scope, int target) {
  Term t;
  t.name = std::move(name);
  t.role = role;
  std::vector<Variable> vars;
  std::vector<bool> roles;
  for (const auto& e : scope) {
    const Variable& v = space.variable(e.position);
    vars.push_back(e.materialized ? materialized(v) : v);
    roles.push_back(space.is_y(e.position));
    t.positions.push_back(e.position);
    if (e.position == target) t.direct = true;
  }
  t.space = VariableSpace::from_parts(std::move(vars), std::move(roles));
  t.values = Eigen::VectorXd::Zero(t.space.num_cells());
  t.pinned.assign(static_cast<std::size_t>(t.space.num_cells()), false);
  return t;
}

// Pins the cells where scope variable `k` sits at `level`.
void pin(Term& t, int k, int level) {
  std::vector<int> lv(static_cast<std::size_t>(t.space.num_variables()));
  for (Index c = 0; c < t.space.num_cells(); ++c) {
    t.space.cell_levels(c, lv);
    if (lv[static_cast<std::size_t>(k)] == level) t.pinned[static_cast<std::size_t>(c)] = true;
  }
}

void index_free(Term& t) {
  t.free_index.assign(t.pinned.size(), -1);
  int next = 0;
  for (std::size_t c = 0; c < t.pinned.size(); ++c)
    if (!t.pinned[c]) t.free_index[c] = next++;
}

Index term_cell(const Term& t, std::span<const int> mlevels) {
  Index cell = 0;
  for (std::size_t i = 0; i < t.positions.size(); ++i)
    cell += t.space.stride(static_cast<int>(i)) * mlevels[static_cast<std::size_t>(t.positions[i])];
  return cell;
}

}  // namespace

Submodel submodel_from_id(int id) {
  if (id < 0 || id > 5)
    throw Error(ErrorCode::Config, "submodel must be in 0..5, got " + std::to_string(id),
                "submodel");
  return static_cast<Submodel>(id);
}

const char* submodel_name(Submodel s) {
  switch (s) {
    case Submodel::Full: return "full";
    case Submodel::MainEffects: return "main_effects";
    case Submodel::OrderInvariant: return "order_invariant";
    case Submodel::DirectOnly: return "direct_only";
    case Submodel::NoDirect: return "no_direct";
    case Submodel::Ignorable: return "ignorable";
  }
  return "unknown";
}

int Term::num_free() const {
  return static_cast<int>(std::count(pinned.begin(), pinned.end(), false));
}

SanSpec SanSpec::make(const VariableSpace& space, Submodel submodel, Link link,
                      std::vector<std::string> ordering,
                      const std::vector<std::string>& always_observed,
                      const std::map<std::string, std::string>& baselines) {
  SanSpec s;
  s.space_ = space;
  s.submodel_ = submodel;
  s.link_ = link;
  if (space.p() == 0) throw Error(ErrorCode::InvalidArgument, "the space has no Y variables");

  std::set<std::string> ys;
  for (int i : space.y_order()) ys.insert(space.variable(i).name);
  for (const auto& a : always_observed)
    if (!ys.count(a))
      throw Error(ErrorCode::InvalidArgument, "always-observed variable '" + a + "' is not in Y", a);
  s.ordering_ = resolve_ordering(space, ordering.empty() ? OrderingPolicy::Declared
                                                         : OrderingPolicy::Explicit,
                                 {}, ordering, always_observed);
  for (const auto& n : s.ordering_)
    if (std::find(always_observed.begin(), always_observed.end(), n) != always_observed.end())
      s.always_observed_.push_back(n);

  for (const auto& [name, level] : baselines) {
    if (!ys.count(name))
      throw Error(ErrorCode::InvalidArgument, "baseline for unknown Y variable '" + name + "'", name);
    if (space.variable(space.find(name)).find_level(level) < 0)
      throw Error(ErrorCode::InvalidArgument,
                  "baseline level '" + level + "' not found in '" + name + "'", name);
  }
  for (const auto& n : s.ordering_) {
    auto it = baselines.find(n);
    s.baselines_[n] = it != baselines.end() ? it->second : space.variable(space.find(n)).levels[0];
  }

  const std::vector<int> xs = space.x_indices();
  std::vector<int> ypos;
  for (const auto& n : s.ordering_) ypos.push_back(space.find(n));
  const int p_all = static_cast<int>(ypos.size());
  const int steps = p_all - static_cast<int>(s.always_observed_.size());
  auto base_level = [&](int pos) {
    const Variable& v = space.variable(pos);
    return v.find_level(s.baselines_.at(v.name));
  };

  for (int j = 0; j < steps; ++j) {
    StepMechanism m;
    m.variable = s.ordering_[static_cast<std::size_t>(j)];
    m.position = j;
    const int target = ypos[static_cast<std::size_t>(j)];
    std::vector<ScopeEntry> x_scope;
    for (int x : xs) x_scope.push_back({x, false});
    std::vector<ScopeEntry> prefix;  // Y*_{<j}
    for (int k = 0; k < j; ++k) prefix.push_back({ypos[static_cast<std::size_t>(k)], true});
    std::vector<ScopeEntry> suffix;  // Y_{>j}
    for (int k = j + 1; k < p_all; ++k) suffix.push_back({ypos[static_cast<std::size_t>(k)], false});
    std::vector<ScopeEntry> fixed;  // always observed
    for (int k = steps; k < p_all; ++k) fixed.push_back({ypos[static_cast<std::size_t>(k)], false});

    auto concat = [](std::initializer_list<const std::vector<ScopeEntry>*> parts) {
      std::vector<ScopeEntry> out;
      for (const auto* part : parts) out.insert(out.end(), part->begin(), part->end());
      return out;
    };
    const std::vector<ScopeEntry> none;
    const std::vector<ScopeEntry> self{{target, false}};

    auto add_beta = [&](std::vector<ScopeEntry> scope) {
      Term t = make_term(space, "beta", TermRole::Beta, scope, target);
      pin(t, 0, base_level(target));
      m.terms.push_back(std::move(t));
    };

    switch (submodel) {
      case Submodel::Full:
        m.terms.push_back(make_term(space, "alpha", TermRole::Alpha,
                                    concat({&x_scope, &prefix, &suffix}), target));
        add_beta(concat({&self, &suffix}));
        break;
      case Submodel::MainEffects:
        m.terms.push_back(make_term(space, "alpha", TermRole::Alpha, x_scope, target));
        for (int k = 0; k < p_all; ++k) {
          const int pos = ypos[static_cast<std::size_t>(k)];
          const bool star = k < j;
          Term t = make_term(space, "beta[" + space.variable(pos).name + "]", TermRole::Beta,
                             {{pos, star}}, target);
          pin(t, 0, star ? t.space.variable(0).placeholder() : base_level(pos));
          m.terms.push_back(std::move(t));
        }
        break;
      case Submodel::OrderInvariant:
        m.terms.push_back(make_term(space, "alpha", TermRole::Alpha,
                                    concat({&x_scope, &fixed}), target));
        add_beta(concat({&self, &fixed}));
        break;
      case Submodel::DirectOnly:
        m.terms.push_back(make_term(space, "alpha", TermRole::Alpha, none, target));
        add_beta(self);
        break;
      case Submodel::NoDirect:
        m.terms.push_back(make_term(space, "alpha", TermRole::Alpha,
                                    concat({&x_scope, &prefix, &suffix}), target));
        break;
      case Submodel::Ignorable:
        m.terms.push_back(make_term(space, "alpha", TermRole::Alpha,
                                    concat({&x_scope, &prefix}), target));
        break;
    }
    for (auto& t : m.terms) index_free(t);
    s.steps_.push_back(std::move(m));
  }
  return s;
}

bool SanSpec::is_always_observed(const std::string& name) const {
  return std::find(always_observed_.begin(), always_observed_.end(), name) !=
         always_observed_.end();
}

int SanSpec::find_step(const std::string& name) const {
  for (int j = 0; j < num_steps(); ++j)
    if (steps_[static_cast<std::size_t>(j)].variable == name) return j;
  return -1;
}

const Term& SanSpec::term(int j, const std::string& name) const {
  if (j < 0 || j >= num_steps())
    throw Error(ErrorCode::InvalidArgument, "step index out of range");
  for (const auto& t : step(j).terms)
    if (t.name == name) return t;
  throw Error(ErrorCode::InvalidArgument,
              "no term '" + name + "' in the mechanism of '" + step(j).variable + "'", name);
}

void SanSpec::set_term(int j, const std::string& name, Eigen::VectorXd values) {
  term(j, name);  // validates
  Term& t = *std::find_if(steps_[static_cast<std::size_t>(j)].terms.begin(),
                          steps_[static_cast<std::size_t>(j)].terms.end(),
                          [&](const Term& x) { return x.name == name; });
  if (values.size() != t.values.size())
    throw Error(ErrorCode::InvalidArgument,
                "term '" + name + "' expects " + std::to_string(t.values.size()) + " values", name);
  for (Index c = 0; c < values.size(); ++c) {
    if (!std::isfinite(values[c]))
      throw Error(ErrorCode::InvalidArgument, "non-finite coefficient in term '" + name + "'", name);
    if (t.pinned[static_cast<std::size_t>(c)] && values[c] != 0.0)
      throw Error(ErrorCode::InvalidArgument,
                  "term '" + name + "' must be zero at " + t.space.cell_label(c), name);
  }
  t.values = std::move(values);
}

int SanSpec::num_parameters(int j) const {
  int n = 0;
  for (const auto& t : step(j).terms) n += t.num_free();
  return n;
}

Eigen::VectorXd SanSpec::parameters(int j) const {
  Eigen::VectorXd out(num_parameters(j));
  int k = 0;
  for (const auto& t : step(j).terms)
    for (Index c = 0; c < t.values.size(); ++c)
      if (!t.pinned[static_cast<std::size_t>(c)]) out[k++] = t.values[c];
  return out;
}

void SanSpec::set_parameters(int j, const Eigen::VectorXd& free) {
  if (free.size() != num_parameters(j))
    throw Error(ErrorCode::InvalidArgument, "parameter vector length mismatch");
  int k = 0;
  for (auto& t : steps_[static_cast<std::size_t>(j)].terms)
    for (Index c = 0; c < t.values.size(); ++c)
      if (!t.pinned[static_cast<std::size_t>(c)]) t.values[c] = free[k++];
}

std::vector<std::string> SanSpec::parameter_names(int j) const {
  std::vector<std::string> out;
  const std::string prefix = "gamma[" + step(j).variable + "].";
  for (const auto& t : step(j).terms)
    for (Index c = 0; c < t.values.size(); ++c)
      if (!t.pinned[static_cast<std::size_t>(c)])
        out.push_back(prefix + t.name + "(" + t.space.cell_label(c) + ")");
  return out;
}

std::vector<TermRole> SanSpec::parameter_roles(int j) const {
  std::vector<TermRole> out;
  for (const auto& t : step(j).terms) out.insert(out.end(), static_cast<std::size_t>(t.num_free()), t.role);
  return out;
}

void SanSpec::active_parameters(int j, std::span<const int> mlevels, std::vector<int>& out) const {
  out.clear();
  int offset = 0;
  for (const auto& t : step(j).terms) {
    const int f = t.free_index[static_cast<std::size_t>(term_cell(t, mlevels))];
    if (f >= 0) out.push_back(offset + f);
    offset += t.num_free();
  }
}

std::vector<int> SanSpec::state_positions() const {
  std::vector<int> out = space_.x_indices();
  for (const auto& n : ordering_) out.push_back(space_.find(n));
  return out;
}

VariableSpace SanSpec::state_space(int j) const {
  std::vector<Variable> vars;
  std::vector<bool> roles;
  int k = 0;
  for (int pos : state_positions()) {
    const Variable& v = space_.variable(pos);
    const bool y = space_.is_y(pos);
    const bool star = y && k < j && !is_always_observed(v.name);
    if (y) ++k;
    vars.push_back(star ? materialized(v) : v);
    roles.push_back(y);
  }
  return VariableSpace::from_parts(std::move(vars), std::move(roles));
}

double SanSpec::eta(int j, std::span<const int> mlevels) const {
  double alpha = 0.0;
  double beta = 0.0;
  for (const auto& t : step(j).terms) {
    const double v = t.values[term_cell(t, mlevels)];
    if (t.direct)
      beta += v;
    else
      alpha += v;
  }
  return alpha + beta;
}

double mechanism_prob(const SanSpec& spec, int j, std::span<const int> levels,
                      const std::vector<bool>& m_prefix) {
  if (j < 0 || j >= spec.num_steps())
    throw Error(ErrorCode::InvalidArgument, "step index out of range");
  if (static_cast<int>(m_prefix.size()) != j)
    throw Error(ErrorCode::InvalidArgument, "missingness prefix must have length j");
  std::vector<int> ml(levels.begin(), levels.end());
  for (int k = 0; k < j; ++k) {
    if (!m_prefix[static_cast<std::size_t>(k)]) continue;
    const int pos = spec.space().find(spec.step(k).variable);
    ml[static_cast<std::size_t>(pos)] = spec.space().variable(pos).size();
  }
  return spec.prob(j, ml);
}

double mechanism_log_prob(const SanSpec& spec, std::span<const int> levels,
                          const std::vector<bool>& m) {
  std::vector<int> ml(levels.begin(), levels.end());
  double total = 0.0;
  for (int j = 0; j < spec.num_steps(); ++j) {
    const double pi = spec.prob(j, ml);
    const bool miss = m[static_cast<std::size_t>(j)];
    total += std::log(miss ? pi : 1.0 - pi);
    if (miss) {
      const int pos = spec.space().find(spec.step(j).variable);
      ml[static_cast<std::size_t>(pos)] = spec.space().variable(pos).size();
    }
  }
  return total;
}

std::vector<CellFunction> mechanism_tables(const SanSpec& spec) {
  std::vector<CellFunction> out;
  const std::vector<int> pos = spec.state_positions();
  std::vector<int> ml(static_cast<std::size_t>(spec.space().num_variables()), 0);
  for (int j = 0; j < spec.num_steps(); ++j) {
    VariableSpace st = spec.state_space(j);
    Eigen::VectorXd vals(st.num_cells());
    std::vector<int> lv(pos.size());
    for (Index c = 0; c < st.num_cells(); ++c) {
      st.cell_levels(c, lv);
      for (std::size_t i = 0; i < pos.size(); ++i) ml[static_cast<std::size_t>(pos[i])] = lv[i];
      vals[c] = spec.prob(j, ml);
    }
    out.emplace_back(std::move(st), std::move(vals));
  }
  return out;
}

SanSpec embed_into_full(const SanSpec& spec) {
  SanSpec full = SanSpec::make(spec.space(), Submodel::Full, spec.link(), spec.ordering(),
                               spec.always_observed(), spec.baselines());
  std::vector<int> ml(static_cast<std::size_t>(spec.space().num_variables()), 0);
  for (int j = 0; j < spec.num_steps(); ++j) {
    for (const bool direct : {false, true}) {
      const Term& ft = full.term(j, direct ? "beta" : "alpha");
      Eigen::VectorXd vals(ft.values.size());
      std::vector<int> lv(static_cast<std::size_t>(ft.space.num_variables()));
      for (Index c = 0; c < ft.space.num_cells(); ++c) {
        ft.space.cell_levels(c, lv);
        for (std::size_t i = 0; i < lv.size(); ++i) ml[static_cast<std::size_t>(ft.positions[i])] = lv[i];
        double sum = 0.0;
        for (const auto& t : spec.step(j).terms)
          if (t.direct == direct) sum += t.values[term_cell(t, ml)];
        vals[c] = sum;
      }
      full.set_term(j, ft.name, std::move(vals));
    }
  }
  return full;
}

OrderingPolicy parse_ordering_policy(const std::string& name) {
  if (name == "declared") return OrderingPolicy::Declared;
  if (name == "by_missingness_desc") return OrderingPolicy::ByMissingnessDesc;
  if (name == "explicit") return OrderingPolicy::Explicit;
  throw Error(ErrorCode::Config, "unknown ordering policy '" + name + "'", "ordering");
}

std::vector<std::string> resolve_ordering(const VariableSpace& space, OrderingPolicy policy,
                                          const std::map<std::string, double>& missing_fraction,
                                          const std::vector<std::string>& explicit_order,
                                          const std::vector<std::string>& always_observed) {
  std::vector<std::string> declared;
  for (int i : space.y_order()) declared.push_back(space.variable(i).name);
  std::vector<std::string> order;
  switch (policy) {
    case OrderingPolicy::Declared:
      order = declared;
      break;
    case OrderingPolicy::Explicit: {
      order = explicit_order;
      std::vector<std::string> a = order, b = declared;
      std::sort(a.begin(), a.end());
      std::sort(b.begin(), b.end());
      if (a != b)
        throw Error(ErrorCode::Config, "explicit ordering must be a permutation of the Y block",
                    "ordering");
      break;
    }
    case OrderingPolicy::ByMissingnessDesc: {
      order = declared;
      auto frac = [&](const std::string& n) {
        auto it = missing_fraction.find(n);
        return it == missing_fraction.end() ? 0.0 : it->second;
      };
      std::stable_sort(order.begin(), order.end(), [&](const std::string& a, const std::string& b) {
        return frac(a) > frac(b);
      });
      break;
    }
  }
  std::stable_partition(order.begin(), order.end(), [&](const std::string& n) {
    return std::find(always_observed.begin(), always_observed.end(), n) == always_observed.end();
  });
  return order;
}

}  // namespace san
