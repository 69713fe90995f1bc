#include "san/gibbs.hpp"

#include <cmath>
#include <exception>
#include <map>
#include <thread>

#include "san/error.hpp"

namespace san {
namespace {

double dirichlet_logpdf(const Eigen::VectorXd& x, const Eigen::VectorXd& a) {
  double s = std::lgamma(a.sum());
  for (Index i = 0; i < x.size(); ++i) s += (a[i] - 1.0) * std::log(x[i]) - std::lgamma(a[i]);
  return s;
}

Eigen::VectorXd dirichlet(const Eigen::VectorXd& a, Rng& rng) {
  Eigen::VectorXd x(a.size());
  for (Index i = 0; i < a.size(); ++i) x[i] = rng.gamma(a[i]);
  return x / x.sum();
}

struct Problem {
  const InferenceModel& model;
  const Dataset& data;
  const GibbsConfig& cfg;
  int outcome;
  std::vector<int> y_pos;
  std::vector<Index> y_stride;
  Index n_y;
  std::vector<int> step_pos;
  // Distinct incomplete records and the records sharing each.
  std::vector<std::vector<int>> patterns;
  std::vector<std::vector<Index>> members;
  std::vector<std::pair<Index, int>> imputed;
};

Index y_cell(const Problem& pb, const std::vector<int>& lv) {
  Index c = 0;
  for (std::size_t k = 0; k < pb.y_pos.size(); ++k)
    c += pb.y_stride[k] * lv[static_cast<std::size_t>(pb.y_pos[k])];
  return c;
}

Chain run_chain(const Problem& pb, int chain_id) {
  const GibbsConfig& cfg = pb.cfg;
  const InferenceModel& model = pb.model;
  const VariableSpace& space = model.mechanism.space();
  Rng rng(cfg.seed, static_cast<std::uint64_t>(chain_id));
  SanSpec spec = model.mechanism;
  Params params = initial_params(model);
  if (!cfg.initial_gamma.empty()) params.gamma = cfg.initial_gamma;
  for (int j = 0; j < spec.num_steps(); ++j) spec.set_parameters(j, params.gamma[static_cast<std::size_t>(j)]);

  const Index n = pb.data.size();
  std::vector<std::vector<int>> complete = pb.data.rows();
  {
    // Start from the observed frequencies of each variable.
    std::vector<Eigen::VectorXd> freq;
    for (int v = 0; v < space.num_variables(); ++v) {
      Eigen::VectorXd f = Eigen::VectorXd::Zero(space.variable(v).real_size());
      for (const auto& r : pb.data.rows())
        if (r[static_cast<std::size_t>(v)] != kMissing) f[r[static_cast<std::size_t>(v)]] += 1.0;
      if (f.sum() == 0.0) f.setOnes();
      freq.push_back(f);
    }
    for (const auto& [i, v] : pb.imputed) {
      const auto& f = freq[static_cast<std::size_t>(v)];
      complete[static_cast<std::size_t>(i)][static_cast<std::size_t>(v)] =
          rng.categorical(std::span<const double>(f.data(), static_cast<std::size_t>(f.size())));
    }
  }

  const bool mech = cfg.include_mechanism;
  std::vector<RandomWalkState> rw;
  std::vector<Eigen::VectorXd> sds;
  for (int j = 0; j < spec.num_steps(); ++j) {
    rw.emplace_back(spec.num_parameters(j), cfg.rw_initial_scale);
    sds.push_back(prior_sd(model, j));
  }
  // Missingness indicators never change.
  std::vector<std::vector<bool>> m(static_cast<std::size_t>(n));
  for (Index i = 0; i < n; ++i)
    for (int pos : pb.step_pos) m[static_cast<std::size_t>(i)].push_back(pb.data.row(i)[static_cast<std::size_t>(pos)] == kMissing);

  Chain chain;
  double kappa_acc = 0.0;
  double kappa_prop = 0.0;
  std::vector<BinaryDesign> designs(static_cast<std::size_t>(spec.num_steps()));
  for (int j = 0; j < spec.num_steps(); ++j) {
    auto& d = designs[static_cast<std::size_t>(j)];
    d.dim = spec.num_parameters(j);
    d.rows.resize(static_cast<std::size_t>(n));
    d.responses.resize(static_cast<std::size_t>(n));
    for (Index i = 0; i < n; ++i) d.responses[static_cast<std::size_t>(i)] = m[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] ? 1 : 0;
  }
  std::vector<int> ml;
  std::vector<double> weights;
  std::vector<std::vector<int>> completions;

  for (int it = 1; it <= cfg.n_iter; ++it) {
    // theta | completed data
    Eigen::VectorXd ny = Eigen::VectorXd::Zero(pb.n_y);
    Eigen::VectorXd sy = Eigen::VectorXd::Zero(pb.n_y);
    for (const auto& r : complete) {
      const Index c = y_cell(pb, r);
      ny[c] += 1.0;
      sy[c] += r[static_cast<std::size_t>(pb.outcome)] == 1 ? 1.0 : 0.0;
    }
    for (Index c = 0; c < pb.n_y; ++c) params.theta[c] = rng.beta(1.0 + sy[c], 1.0 + ny[c] - sy[c]);

    // gamma | completed data
    if (mech && cfg.update_mechanism) {
      for (int j = 0; j < spec.num_steps(); ++j) {
        auto& d = designs[static_cast<std::size_t>(j)];
        for (Index i = 0; i < n; ++i) {
          ml = complete[static_cast<std::size_t>(i)];
          for (int k = 0; k < j; ++k)
            if (m[static_cast<std::size_t>(i)][static_cast<std::size_t>(k)]) {
              const int pos = pb.step_pos[static_cast<std::size_t>(k)];
              ml[static_cast<std::size_t>(pos)] = space.variable(pos).size();
            }
          spec.active_parameters(j, ml, d.rows[static_cast<std::size_t>(i)]);
        }
        rw[static_cast<std::size_t>(j)].adapt = it <= cfg.burn_in;
        params.gamma[static_cast<std::size_t>(j)] = logistic_conditional_update(
            params.gamma[static_cast<std::size_t>(j)], d, sds[static_cast<std::size_t>(j)], spec.link(),
            cfg.method, rng, &rw[static_cast<std::size_t>(j)]);
        spec.set_parameters(j, params.gamma[static_cast<std::size_t>(j)]);
      }
    }

    // kappa | completed data
    if (model.aux.mode != AuxMode::KnownKappa) {
      if (model.aux.mode == AuxMode::RefreshmentSample) {
        params.kappa = dirichlet((ny.array() + model.aux.refreshment.array() + 1.0).matrix(), rng);
      } else {
        auto target = [&](const Eigen::VectorXd& k) {
          double s = 0.0;
          for (Index c = 0; c < k.size(); ++c)
            if (ny[c] > 0.0) s += ny[c] * std::log(k[c]);
          return s + margin_term_logpdf(model.aux, k);
        };
        const Eigen::VectorXd a_fwd = cfg.kappa_concentration * params.kappa;
        const Eigen::VectorXd prop = dirichlet(a_fwd, rng);
        kappa_prop += 1.0;
        if ((prop.array() > 0.0).all()) {
          const Eigen::VectorXd a_back = cfg.kappa_concentration * prop;
          const double log_ratio = target(prop) - target(params.kappa) +
                                   dirichlet_logpdf(params.kappa, a_back) - dirichlet_logpdf(prop, a_fwd);
          if (std::log(rng.uniform()) < log_ratio) {
            params.kappa = prop;
            kappa_acc += 1.0;
          }
        }
      }
    }

    // missing entries | parameters
    for (std::size_t g = 0; g < pb.patterns.size(); ++g) {
      const auto& rec = pb.patterns[g];
      std::vector<int> miss;
      for (int v = 0; v < space.num_variables(); ++v)
        if (rec[static_cast<std::size_t>(v)] == kMissing) miss.push_back(v);
      const auto& mi = m[static_cast<std::size_t>(pb.members[g][0])];
      weights.clear();
      completions.clear();
      std::vector<int> lv = rec;
      for (int v : miss) lv[static_cast<std::size_t>(v)] = 0;
      for (;;) {
        const Index c = y_cell(pb, lv);
        const double th = params.theta[c];
        double w = params.kappa[c] * (lv[static_cast<std::size_t>(pb.outcome)] == 1 ? th : 1.0 - th);
        if (mech) w *= std::exp(mechanism_log_prob(spec, lv, mi));
        weights.push_back(w);
        completions.push_back(lv);
        std::size_t k = miss.size();
        while (k > 0) {
          const int v = miss[k - 1];
          if (++lv[static_cast<std::size_t>(v)] < space.variable(v).real_size()) break;
          lv[static_cast<std::size_t>(v)] = 0;
          --k;
        }
        if (k == 0) break;
      }
      for (Index i : pb.members[g])
        complete[static_cast<std::size_t>(i)] = completions[static_cast<std::size_t>(rng.categorical(weights))];
    }

    if (it > cfg.burn_in && (it - cfg.burn_in) % cfg.thin == 0) {
      PosteriorSample s;
      s.gamma = params.gamma;
      s.theta = params.theta;
      s.kappa = params.kappa;
      if (cfg.store_imputations) {
        s.imputations.reserve(pb.imputed.size());
        for (const auto& [i, v] : pb.imputed)
          s.imputations.push_back(complete[static_cast<std::size_t>(i)][static_cast<std::size_t>(v)]);
      }
      chain.samples.push_back(std::move(s));
    }
  }
  if (cfg.method == UpdateMethod::RandomWalk && !rw.empty()) {
    double acc = 0.0, prop = 0.0;
    for (const auto& r : rw) {
      acc += r.accepted.sum();
      prop += r.proposed.sum();
    }
    chain.gamma_acceptance = prop > 0.0 ? acc / prop : 0.0;
  }
  chain.kappa_acceptance = kappa_prop > 0.0 ? kappa_acc / kappa_prop : 0.0;
  return chain;
}

}  // namespace

std::vector<std::string> parameter_names(const InferenceModel& model) {
  const VariableSpace ys = y_space(model.mechanism.space());
  std::vector<std::string> out;
  for (const char* prefix : {"theta", "kappa"})
    for (Index c = 0; c < ys.num_cells(); ++c) out.push_back(std::string(prefix) + "[" + ys.cell_label(c) + "]");
  for (int j = 0; j < model.mechanism.num_steps(); ++j)
    for (auto& n : model.mechanism.parameter_names(j)) out.push_back(std::move(n));
  return out;
}

Eigen::VectorXd flatten(const PosteriorSample& s) {
  Index n = s.theta.size() + s.kappa.size();
  for (const auto& g : s.gamma) n += g.size();
  Eigen::VectorXd out(n);
  Index k = 0;
  out.segment(k, s.theta.size()) = s.theta;
  k += s.theta.size();
  out.segment(k, s.kappa.size()) = s.kappa;
  k += s.kappa.size();
  for (const auto& g : s.gamma) {
    out.segment(k, g.size()) = g;
    k += g.size();
  }
  return out;
}

std::vector<std::string> unsupported_cells(const InferenceModel& model, const Dataset& data) {
  const SanSpec& spec = model.mechanism;
  const VariableSpace& space = spec.space();
  std::vector<std::string> out;
  for (int j = 0; j < spec.num_steps(); ++j) {
    std::vector<int> support(static_cast<std::size_t>(spec.num_parameters(j)), 0);
    std::vector<int> prior_steps;
    for (int k = 0; k < j; ++k) prior_steps.push_back(space.find(spec.step(k).variable));
    for (const auto& r : data.rows()) {
      int offset = 0;
      for (const auto& t : spec.step(j).terms) {
        bool determined = true;
        Index cell = 0;
        for (std::size_t i = 0; i < t.positions.size(); ++i) {
          const int pos = t.positions[i];
          const int l = r[static_cast<std::size_t>(pos)];
          const bool star = t.space.variable(static_cast<int>(i)).materialized;
          if (l == kMissing && !star) {
            determined = false;
            break;
          }
          cell += t.space.stride(static_cast<int>(i)) * (l == kMissing ? space.variable(pos).size() : l);
        }
        if (determined) {
          const int f = t.free_index[static_cast<std::size_t>(cell)];
          if (f >= 0) ++support[static_cast<std::size_t>(offset + f)];
        }
        offset += t.num_free();
      }
    }
    const auto names = spec.parameter_names(j);
    for (std::size_t k = 0; k < support.size(); ++k)
      if (support[k] == 0) out.push_back(names[k]);
  }
  return out;
}

FitResult gibbs_fit(const InferenceModel& model, const Dataset& data, const GibbsConfig& config) {
  if (config.n_iter <= config.burn_in || config.burn_in < 0)
    throw Error(ErrorCode::Config, "need n_iter > burn_in >= 0", "mcmc");
  if (config.thin < 1) throw Error(ErrorCode::Config, "thin must be >= 1", "mcmc.thin");
  if (config.chains < 1) throw Error(ErrorCode::Config, "chains must be >= 1", "mcmc.chains");
  if (!(config.kappa_concentration > 0.0))
    throw Error(ErrorCode::Config, "kappa proposal concentration must be positive", "mcmc");
  if (data.empty()) throw Error(ErrorCode::InvalidArgument, "the dataset has no records");
  if (!(data.space() == model.mechanism.space()))
    throw Error(ErrorCode::InvalidArgument, "dataset and model spaces differ");
  const Link link = model.mechanism.link();
  if (config.method == UpdateMethod::PolyaGamma && link.kind() != LinkKind::Logit)
    throw Error(ErrorCode::Config, "polya_gamma needs the logit link", "method");
  if (config.method == UpdateMethod::TruncatedNormal && link.kind() != LinkKind::Probit)
    throw Error(ErrorCode::Config, "truncated_normal needs the probit link", "method");

  Problem pb{model, data, config, validate_model(model), {}, {}, 0, {}, {}, {}, {}};
  const VariableSpace& space = model.mechanism.space();
  pb.y_pos = space.y_order();
  const VariableSpace ys = y_space(space);
  pb.n_y = ys.num_cells();
  for (int i = 0; i < ys.num_variables(); ++i) pb.y_stride.push_back(ys.stride(i));
  for (const auto& s : model.mechanism.steps()) pb.step_pos.push_back(space.find(s.variable));
  if (!config.initial_gamma.empty()) {
    if (static_cast<int>(config.initial_gamma.size()) != model.mechanism.num_steps())
      throw Error(ErrorCode::Config, "initial_gamma needs one vector per step", "mcmc");
    for (int j = 0; j < model.mechanism.num_steps(); ++j)
      if (config.initial_gamma[static_cast<std::size_t>(j)].size() != model.mechanism.num_parameters(j))
        throw Error(ErrorCode::Config, "initial_gamma has the wrong length", "mcmc");
  }

  std::map<std::vector<int>, std::size_t> index;
  for (Index i = 0; i < data.size(); ++i) {
    const auto& r = data.row(i);
    bool incomplete = false;
    for (std::size_t v = 0; v < r.size(); ++v) {
      if (r[v] != kMissing) continue;
      incomplete = true;
      if (space.is_y(static_cast<int>(v)) && model.mechanism.is_always_observed(space.variable(static_cast<int>(v)).name))
        throw Error(ErrorCode::InvalidArgument,
                    "variable '" + space.variable(static_cast<int>(v)).name +
                        "' is declared always observed but is missing",
                    space.variable(static_cast<int>(v)).name);
      pb.imputed.emplace_back(i, static_cast<int>(v));
    }
    if (!incomplete) continue;
    auto [it, fresh] = index.emplace(r, pb.patterns.size());
    if (fresh) {
      pb.patterns.push_back(r);
      pb.members.emplace_back();
    }
    pb.members[it->second].push_back(i);
  }

  FitResult out;
  out.parameter_names = parameter_names(model);
  out.imputed = pb.imputed;
  out.unsupported = unsupported_cells(model, data);
  out.chains.resize(static_cast<std::size_t>(config.chains));
  if (config.chains == 1) {
    out.chains[0] = run_chain(pb, 0);
    return out;
  }
  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(config.chains));
  std::vector<std::thread> threads;
  for (int c = 0; c < config.chains; ++c)
    threads.emplace_back([&, c] {
      try {
        out.chains[static_cast<std::size_t>(c)] = run_chain(pb, c);
      } catch (...) {
        errors[static_cast<std::size_t>(c)] = std::current_exception();
      }
    });
  for (auto& t : threads) t.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
  return out;
}

}  // namespace san
