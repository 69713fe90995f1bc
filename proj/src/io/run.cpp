#include "san/io/run.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <ostream>

#include "san/error.hpp"
#include "san/full_data.hpp"
#include "san/gibbs.hpp"
#include "san/identify.hpp"
#include "san/io/csv.hpp"
#include "san/io/formats.hpp"
#include "san/likelihood.hpp"
#include "san/mechanism.hpp"
#include "san/observed.hpp"
#include "san/projection.hpp"
#include "san/summary.hpp"

namespace san::io {

namespace fs = std::filesystem;

namespace {

struct Context {
  std::string command;
  Json config;
  fs::path base;
  fs::path out;
  std::uint64_t seed = 1;
  std::ostream* log = nullptr;

  std::string path(const std::string& p) const {
    const fs::path q(p);
    return (q.is_absolute() ? q : base / q).string();
  }
  std::string output(const std::string& name) const { return (out / name).string(); }

  Json provenance() const {
    return {{"command", command}, {"version", kVersion}, {"seed", seed}, {"config", config}};
  }
};

const Json& section(const Context& ctx, const char* name) {
  static const Json empty = Json::object();
  if (!ctx.config.contains(name)) return empty;
  const Json& j = ctx.config.at(name);
  if (!j.is_object()) throw Error(ErrorCode::Config, std::string("'") + name + "' must be an object", name);
  return j;
}

template <typename T>
T get_or(const Json& j, const char* key, T fallback) {
  if (!j.contains(key)) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const Json::exception&) {
    throw Error(ErrorCode::Config, std::string("config key '") + key + "' has the wrong type", key);
  }
}

std::vector<std::string> names_or_empty(const Json& j, const char* key) {
  return get_or<std::vector<std::string>>(j, key, {});
}

// Shared model declaration.
struct Declaration {
  VariableSpace space;
  Link link;
  Submodel submodel = Submodel::DirectOnly;
  std::vector<std::string> always_observed;
  std::map<std::string, std::string> baselines;
  OrderingPolicy policy = OrderingPolicy::Declared;
  std::vector<std::string> explicit_order;
};

Declaration declaration(const Context& ctx) {
  const Json& c = ctx.config;
  if (!c.contains("space")) throw Error(ErrorCode::Config, "config lacks 'space'", "space");
  Declaration d;
  d.space = parse_space(c.at("space"));
  d.link = Link::parse(get_or<std::string>(c, "link", "logit"));
  d.submodel = submodel_from_id(get_or<int>(c, "submodel", 3));
  d.always_observed = names_or_empty(c, "always_observed");
  d.baselines = get_or<std::map<std::string, std::string>>(c, "baselines", {});
  if (c.contains("ordering")) {
    const Json& o = c.at("ordering");
    if (o.is_string()) {
      d.policy = parse_ordering_policy(o.get<std::string>());
    } else if (o.is_array()) {
      d.policy = OrderingPolicy::Explicit;
      d.explicit_order = o.get<std::vector<std::string>>();
    } else {
      d.policy = parse_ordering_policy(get_or<std::string>(o, "policy", "declared"));
      d.explicit_order = names_or_empty(o, "order");
    }
    if (d.policy == OrderingPolicy::Explicit && d.explicit_order.empty())
      throw Error(ErrorCode::Config, "explicit ordering needs 'order'", "ordering");
  }
  return d;
}

std::vector<std::string> ordering(const Declaration& d, const std::map<std::string, double>& missing = {}) {
  return resolve_ordering(d.space, d.policy, missing, d.explicit_order, d.always_observed);
}

// Truth model: joint over the study space plus mechanism coefficients.
FullDataModel truth_model(const Context& ctx, const Declaration& d) {
  if (!ctx.config.contains("truth")) throw Error(ErrorCode::Config, "config lacks 'truth'", "truth");
  const Json& t = ctx.config.at("truth");
  if (!t.contains("joint")) throw Error(ErrorCode::Config, "truth lacks 'joint'", "truth.joint");
  FullDataModel m{parse_table(t.at("joint"), d.space, kMarginTolerance),
                  SanSpec::make(d.space, d.submodel, d.link, ordering(d), d.always_observed, d.baselines)};
  if (t.contains("mechanism")) {
    const Json& mech = t.at("mechanism");
    for (auto it = mech.begin(); it != mech.end(); ++it) {
      const int j = m.mechanism.find_step(it.key());
      if (j < 0)
        throw Error(ErrorCode::Config, "truth.mechanism names '" + it.key() + "', which is not a step", it.key());
      const Json& spec = *it;
      if (spec.contains("free")) {
        const auto v = spec.at("free").get<std::vector<double>>();
        m.mechanism.set_parameters(j, Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Index>(v.size())));
        continue;
      }
      for (auto term = spec.begin(); term != spec.end(); ++term) {
        const auto v = term->get<std::vector<double>>();
        m.mechanism.set_term(j, term.key(),
                             Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Index>(v.size())));
      }
    }
  }
  return m;
}

Margins margins_from(const Context& ctx, const Json& j, const VariableSpace& ys, const Declaration& d) {
  if (j.is_string()) {
    if (j.get<std::string>() == "truth") {
      const ProbTable joint = marginalize(truth_model(ctx, d).joint, ys.names());
      return Margins{indicator_constraints(joint), joint};
    }
    return load_margins(ctx.path(j.get<std::string>()), ys);
  }
  return parse_margins(j, ys);
}

ProjectionOptions projection_options(const Json& j) {
  ProjectionOptions o;
  o.tolerance = get_or<double>(j, "tolerance", o.tolerance);
  o.max_iterations = get_or<int>(j, "max_iterations", o.max_iterations);
  o.smooth_zero_cells = get_or<bool>(j, "smooth_zero_cells", o.smooth_zero_cells);
  o.smoothing_epsilon = get_or<double>(j, "smoothing_epsilon", o.smoothing_epsilon);
  return o;
}

Json vector_json(const Eigen::VectorXd& v) { return std::vector<double>(v.begin(), v.end()); }

// Largest cellwise gap after aligning `b` to the variable order of `a`.
double sup_by_names(const ProbTable& a, const ProbTable& b) {
  const ProbTable bb = reorder(b, a.space().names());
  return (a.mass() - bb.mass()).cwiseAbs().maxCoeff();
}

std::map<std::string, double> fractions(const Dataset& data) {
  std::map<std::string, double> out;
  const auto f = data.missing_fractions();
  for (int v = 0; v < data.space().num_variables(); ++v)
    out[data.space().variable(v).name] = f[static_cast<std::size_t>(v)];
  return out;
}

Json missingness_json(const Dataset& data) {
  Json out = Json::object();
  for (const auto& [name, frac] : missingness_report(data)) out[name] = frac;
  return out;
}

void ensure_out(const Context& ctx) {
  std::error_code ec;
  fs::create_directories(ctx.out, ec);
  if (ec) throw Error(ErrorCode::Io, "cannot create '" + ctx.out.string() + "'", ctx.out.string());
}

// Observed table of the empirical materialized distribution of a dataset.
ObservedTable empirical_observed(const Dataset& data, const std::vector<std::string>& always_observed) {
  const VariableSpace& s = data.space();
  std::vector<Variable> vars;
  std::vector<bool> roles;
  for (int v = 0; v < s.num_variables(); ++v) {
    const Variable& var = s.variable(v);
    const bool fixed = !s.is_y(v) ||
                       std::find(always_observed.begin(), always_observed.end(), var.name) != always_observed.end();
    vars.push_back(fixed ? var : materialized(var));
    roles.push_back(s.is_y(v));
  }
  const VariableSpace ms = VariableSpace::from_parts(vars, roles, s.y_order());
  Eigen::VectorXd counts = Eigen::VectorXd::Zero(ms.num_cells());
  std::vector<int> lv(static_cast<std::size_t>(s.num_variables()));
  for (const auto& rec : data.rows()) {
    for (int v = 0; v < s.num_variables(); ++v) {
      const int l = rec[static_cast<std::size_t>(v)];
      if (l == kMissing && !ms.variable(v).materialized)
        throw Error(ErrorCode::Io, "'" + s.variable(v).name + "' has missing entries but is treated as observed",
                    s.variable(v).name);
      lv[static_cast<std::size_t>(v)] = l == kMissing ? ms.variable(v).placeholder() : l;
    }
    counts[ms.cell_index(lv)] += 1.0;
  }
  return ObservedTable(ProbTable::from_weights(ms, counts));
}

Json summaries_json(const std::vector<std::string>& names, const std::vector<std::vector<double>>& columns,
                    const std::vector<double>& probs, int bins) {
  Json out = Json::array();
  for (std::size_t k = 0; k < names.size(); ++k) {
    const ParameterSummary s = summarize_posterior(columns[k], probs);
    const Histogram h = histogram(columns[k], bins);
    Json q = Json::object();
    for (std::size_t i = 0; i < probs.size(); ++i) q[format_double(probs[i])] = s.quantiles[i];
    out.push_back({{"name", names[k]},
                   {"mean", s.mean},
                   {"sd", s.sd},
                   {"quantiles", q},
                   {"ess", s.ess},
                   {"histogram", {{"edges", h.edges}, {"counts", h.counts}}}});
  }
  return out;
}

// ---- subcommands ----------------------------------------------------------

void cmd_simulate(const Context& ctx) {
  const Declaration d = declaration(ctx);
  const Json& s = section(ctx, "simulate");
  const auto n = get_or<long long>(s, "n", 0);
  if (n <= 0) throw Error(ErrorCode::Config, "simulate.n must be positive", "simulate.n");
  const FullDataModel model = truth_model(ctx, d);
  const Dataset data = simulate(model, n, ctx.seed);
  ensure_out(ctx);
  const std::string file = get_or<std::string>(s, "dataset", "dataset.csv");
  write_dataset_file(ctx.output(file), data);
  Json report = ctx.provenance();
  report["records"] = n;
  report["dataset"] = file;
  report["missing_fractions"] = missingness_json(data);
  write_json_file(ctx.output("simulate.json"), report);
  *ctx.log << "simulate: " << n << " records -> " << ctx.output(file) << '\n';
}

void cmd_project(const Context& ctx) {
  const Json& p = section(ctx, "project");
  if (!p.contains("q")) throw Error(ErrorCode::Config, "project lacks 'q'", "project.q");
  const ProbTable q = parse_embedded_table(p.at("q"), kMarginTolerance);
  ConstraintSet cs;
  if (p.contains("fixed_marginal")) {
    const Json& fm = p.at("fixed_marginal");
    const VariableSpace sub = q.space().subspace(names_or_empty(fm, "variables"));
    cs.fixed_marginal = parse_table(fm.contains("cells") ? fm.at("cells") : fm, sub, kMarginTolerance);
  }
  if (p.contains("moments")) cs.moments = parse_margins(Json{{"moments", p.at("moments")}}, q.space()).moments;
  const Link link = Link::parse(get_or<std::string>(p, "link", get_or<std::string>(ctx.config, "link", "logit")));
  double c = get_or<double>(p, "c", 1.0);
  if (p.contains("pi")) {
    const double pi = p.at("pi").get<double>();
    if (!(pi > 0.0 && pi < 1.0)) throw Error(ErrorCode::Config, "project.pi must lie in (0,1)", "project.pi");
    c = (1.0 - pi) / pi;
  }
  const FGenerator gen(link, c);
  const ProjectionResult r = project(q, cs, gen, projection_options(p));

  Json report = ctx.provenance();
  report["table"] = table_to_json(r.table);
  report["fiber_dual"] = vector_json(r.fiber_dual);
  report["moment_dual"] = vector_json(r.moment_dual);
  report["residuals"] = {{"marginal", r.marginal_residual},
                         {"moments", vector_json(r.moment_residuals)},
                         {"max", r.max_residual}};
  report["divergence"] = r.divergence;
  report["iterations"] = r.iterations;
  report["smoothed"] = r.smoothed;
  report["decomposition_residual"] = additive_decomposition_residual(r.table, q, cs, gen);
  ensure_out(ctx);
  write_json_file(ctx.output("projection.json"), report);
  *ctx.log << "project: " << r.iterations << " Newton iterations, residual " << r.max_residual << '\n';
}

void cmd_identify(const Context& ctx) {
  const Declaration d = declaration(ctx);
  const Json& s = section(ctx, "identify");
  const VariableSpace ys = y_space(d.space);

  std::optional<FullDataModel> truth;
  std::optional<ProbTable> truth_full;
  if (ctx.config.contains("truth")) {
    truth = truth_model(ctx, d);
    truth_full = assemble_full_data(*truth);
  }
  const Json source = s.contains("observed") ? s.at("observed") : Json("truth");
  std::optional<ObservedTable> observed;
  std::map<std::string, double> missing;
  if (source.is_string() && source.get<std::string>() == "truth") {
    if (!truth) throw Error(ErrorCode::Config, "identify.observed = truth needs a 'truth' section", "truth");
    observed = materialize(*truth_full);
  } else {
    const Dataset data =
        load_dataset(ctx.path(get_or<std::string>(source, "dataset", "")), d.space, d.always_observed);
    missing = fractions(data);
    observed = empirical_observed(data, d.always_observed);
  }
  if (missing.empty()) {
    const ProbTable& t = observed->table();
    for (int v = 0; v < t.space().num_variables(); ++v) {
      const Variable& var = t.space().variable(v);
      if (!var.materialized) continue;
      const ProbTable m = marginalize(t, {var.name});
      missing[var.name] = m[var.placeholder()];
    }
  }
  const Margins margins = margins_from(ctx, s.contains("margins") ? s.at("margins") : Json("truth"), ys, d);
  IdentifyOptions opt;
  opt.projection = projection_options(s);
  const Reconstruction rec = reconstruct_algorithm1(*observed, margins.moments, d.link, ordering(d, missing), opt);

  Json report = ctx.provenance();
  report["steps"] = rec.steps;
  report["joint"] = table_to_json(rec.joint);
  report["full_data"] = table_to_json(rec.full);
  Json mechs = Json::object();
  for (std::size_t j = 0; j < rec.steps.size(); ++j) mechs[rec.steps[j]] = values_to_json(rec.mechanisms[j]);
  report["mechanisms"] = mechs;
  Json diags = Json::array();
  for (const auto& g : rec.diagnostics)
    diags.push_back({{"variable", g.variable},
                     {"position", g.position},
                     {"pi", g.pi},
                     {"c", g.c},
                     {"skipped", g.skipped},
                     {"iterations", g.projection.iterations},
                     {"max_residual", g.projection.max_residual},
                     {"divergence", g.projection.divergence},
                     {"smoothed", g.projection.smoothed},
                     {"decomposition_residual", g.decomposition_residual}});
  report["diagnostics"] = diags;
  const double obs_gap = sup_by_names(observed->table(), materialize(rec.full).table());
  double moment_gap = 0.0;
  for (const auto& m : margins.moments) moment_gap = std::max(moment_gap, std::abs(moment(rec.joint, m) - m.target));
  report["observed_gap"] = obs_gap;
  report["moment_gap"] = moment_gap;
  if (truth) {
    report["sup_norm"] = sup_by_names(*truth_full, rec.full);
    report["joint_sup_norm"] = sup_by_names(truth->joint, rec.joint);
  }
  ensure_out(ctx);
  write_json_file(ctx.output("identify.json"), report);
  *ctx.log << "identify: " << rec.steps.size() << " steps, observed gap " << obs_gap << '\n';
}

AuxInfo aux_info(const Context& ctx, const Json& a, const VariableSpace& ys, const Declaration& d) {
  AuxInfo aux;
  aux.mode = parse_aux_mode(get_or<std::string>(a, "mode", "known_kappa"));
  auto joint_over_y = [&](const Json& j, const char* key) {
    const Margins m = margins_from(ctx, j, ys, d);
    if (!m.joint || m.joint->space().num_variables() != ys.num_variables())
      throw Error(ErrorCode::Config, std::string(key) + " must be a joint table over every Y variable", key);
    return reorder(*m.joint, ys.names()).mass();
  };
  switch (aux.mode) {
    case AuxMode::KnownKappa:
      if (!a.contains("margins")) throw Error(ErrorCode::Config, "known_kappa needs 'margins'", "aux.margins");
      aux.census = joint_over_y(a.at("margins"), "aux.margins");
      break;
    case AuxMode::RefreshmentSample: {
      if (!a.contains("refreshment"))
        throw Error(ErrorCode::Config, "refreshment_sample needs 'refreshment'", "aux.refreshment");
      const Dataset r = load_dataset(ctx.path(a.at("refreshment").get<std::string>()), ys, ys.names());
      aux.refreshment = Eigen::VectorXd::Zero(ys.num_cells());
      for (const auto& rec : r.rows()) aux.refreshment[ys.cell_index(rec)] += 1.0;
      break;
    }
    case AuxMode::EstimatorDensity: {
      if (!a.contains("kappa_hat") || !a.contains("covariance"))
        throw Error(ErrorCode::Config, "estimator_density needs 'kappa_hat' and 'covariance'", "aux");
      aux.kappa_hat = joint_over_y(a.at("kappa_hat"), "aux.kappa_hat");
      const auto rows = a.at("covariance").get<std::vector<std::vector<double>>>();
      aux.covariance.resize(static_cast<Index>(rows.size()), rows.empty() ? 0 : static_cast<Index>(rows[0].size()));
      for (std::size_t i = 0; i < rows.size(); ++i) {
        if (static_cast<Index>(rows[i].size()) != aux.covariance.cols())
          throw Error(ErrorCode::Config, "covariance rows differ in length", "aux.covariance");
        for (std::size_t k = 0; k < rows[i].size(); ++k)
          aux.covariance(static_cast<Index>(i), static_cast<Index>(k)) = rows[i][k];
      }
      break;
    }
  }
  return aux;
}

void write_samples(const std::string& path, const FitResult& fit) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::Io, "cannot write '" + path + "'", path);
  CsvRow header{"chain", "draw"};
  header.insert(header.end(), fit.parameter_names.begin(), fit.parameter_names.end());
  write_csv_row(out, header);
  CsvRow row(header.size());
  for (std::size_t c = 0; c < fit.chains.size(); ++c) {
    const auto& samples = fit.chains[c].samples;
    for (std::size_t i = 0; i < samples.size(); ++i) {
      const Eigen::VectorXd v = flatten(samples[i]);
      row[0] = std::to_string(c);
      row[1] = std::to_string(i);
      for (Index k = 0; k < v.size(); ++k) row[static_cast<std::size_t>(k) + 2] = format_double(v[k]);
      write_csv_row(out, row);
    }
  }
  if (!out) throw Error(ErrorCode::Io, "write failed for '" + path + "'", path);
}

std::vector<double> probs_of(const Json& j) {
  return get_or<std::vector<double>>(j, "probs", {0.025, 0.5, 0.975});
}

void cmd_fit(const Context& ctx) {
  const Declaration d = declaration(ctx);
  const Json& f = section(ctx, "fit");
  if (!f.contains("dataset")) throw Error(ErrorCode::Config, "fit lacks 'dataset'", "fit.dataset");
  const Dataset data = load_dataset(ctx.path(f.at("dataset").get<std::string>()), d.space, d.always_observed);
  const VariableSpace ys = y_space(d.space);

  InferenceModel model{SanSpec::make(d.space, d.submodel, d.link, ordering(d, fractions(data)),
                                     d.always_observed, d.baselines),
                       1.5, 3.0, {}};
  const Json priors = f.contains("priors") ? f.at("priors") : Json::object();
  model.alpha_sd = get_or<double>(priors, "alpha_sd", model.alpha_sd);
  model.beta_sd = get_or<double>(priors, "beta_sd", model.beta_sd);
  model.aux = aux_info(ctx, f.contains("aux") ? f.at("aux") : Json::object(), ys, d);

  const Json mc = f.contains("mcmc") ? f.at("mcmc") : Json::object();
  GibbsConfig gc;
  gc.n_iter = get_or<int>(mc, "n_iter", gc.n_iter);
  gc.burn_in = get_or<int>(mc, "burn_in", gc.burn_in);
  gc.thin = get_or<int>(mc, "thin", gc.thin);
  gc.chains = get_or<int>(mc, "chains", gc.chains);
  gc.method = parse_update_method(get_or<std::string>(mc, "method", "polya_gamma"));
  gc.update_mechanism = get_or<bool>(mc, "update_mechanism", gc.update_mechanism);
  gc.include_mechanism = get_or<bool>(mc, "include_mechanism", gc.include_mechanism);
  gc.rw_initial_scale = get_or<double>(mc, "rw_initial_scale", gc.rw_initial_scale);
  gc.kappa_concentration = get_or<double>(mc, "kappa_concentration", gc.kappa_concentration);
  gc.seed = ctx.seed;

  const FitResult fit = gibbs_fit(model, data, gc);
  ensure_out(ctx);
  const std::string samples = get_or<std::string>(f, "samples", "samples.csv");
  write_samples(ctx.output(samples), fit);

  std::vector<std::vector<double>> columns(fit.parameter_names.size());
  for (const auto& ch : fit.chains)
    for (const auto& s : ch.samples) {
      const Eigen::VectorXd v = flatten(s);
      for (Index k = 0; k < v.size(); ++k) columns[static_cast<std::size_t>(k)].push_back(v[k]);
    }
  Json report = ctx.provenance();
  report["samples"] = samples;
  report["records"] = data.size();
  report["missing_fractions"] = missingness_json(data);
  report["ordering"] = model.mechanism.ordering();
  report["unsupported_cells"] = fit.unsupported;
  Json acc = Json::array();
  for (const auto& ch : fit.chains)
    acc.push_back({{"gamma", ch.gamma_acceptance}, {"kappa", ch.kappa_acceptance}});
  report["acceptance"] = acc;
  report["parameters"] = summaries_json(fit.parameter_names, columns, probs_of(f), get_or<int>(f, "bins", 50));
  write_json_file(ctx.output("summary.json"), report);
  *ctx.log << "fit: " << columns.front().size() << " retained draws -> " << ctx.output(samples) << '\n';
}

void cmd_summarize(const Context& ctx) {
  const Json& s = section(ctx, "summarize");
  const std::string file = s.contains("samples") ? ctx.path(s.at("samples").get<std::string>())
                                                 : ctx.output("samples.csv");
  const auto rows = read_csv_file(file);
  if (rows.size() < 2) throw Error(ErrorCode::Io, "samples file has no draws", file);
  const CsvRow& header = rows[0];
  std::vector<std::string> names;
  std::vector<std::size_t> cols;
  for (std::size_t c = 0; c < header.size(); ++c)
    if (header[c] != "chain" && header[c] != "draw") {
      names.push_back(header[c]);
      cols.push_back(c);
    }
  std::vector<std::vector<double>> columns(names.size());
  for (std::size_t r = 1; r < rows.size(); ++r) {
    if (rows[r].size() != header.size())
      throw Error(ErrorCode::Io, "malformed CSV: record " + std::to_string(r) + " has the wrong width", file);
    for (std::size_t k = 0; k < cols.size(); ++k) {
      const std::string& cell = rows[r][cols[k]];
      char* end = nullptr;
      const double v = std::strtod(cell.c_str(), &end);
      if (cell.empty() || *end != '\0')
        throw Error(ErrorCode::Io, "non-numeric sample '" + cell + "' in column '" + names[k] + "'", names[k]);
      columns[k].push_back(v);
    }
  }
  const int bins = get_or<int>(s, "bins", 50);
  if (bins < 1) throw Error(ErrorCode::Config, "summarize.bins must be positive", "summarize.bins");
  Json report = ctx.provenance();
  report["samples"] = file;
  report["draws"] = rows.size() - 1;
  report["parameters"] = summaries_json(names, columns, probs_of(s), bins);
  ensure_out(ctx);
  write_json_file(ctx.output(get_or<std::string>(s, "output", "summary.json")), report);
  *ctx.log << "summarize: " << names.size() << " parameters\n";
}

void report_error(std::ostream& err, const char* code, const std::string& message, const std::string& subject) {
  Json e = {{"error", code}, {"message", message}};
  if (!subject.empty()) e["subject"] = subject;
  err << e.dump() << '\n';
}

}  // namespace

int run(const std::string& command, const RunOptions& options, std::ostream& log, std::ostream& err) {
  try {
    Context ctx;
    ctx.command = command;
    ctx.log = &log;
    ctx.config = read_json_file(options.config_path);
    if (!ctx.config.is_object()) throw Error(ErrorCode::Config, "config must be a JSON object");
    ctx.base = fs::path(options.config_path).parent_path();
    ctx.seed = options.seed ? *options.seed : get_or<std::uint64_t>(ctx.config, "seed", 1);
    const std::string out = options.out ? *options.out : get_or<std::string>(ctx.config, "out", ".");
    ctx.out = options.out ? fs::path(out) : fs::path(ctx.path(out));

    if (command == "simulate") cmd_simulate(ctx);
    else if (command == "project") cmd_project(ctx);
    else if (command == "identify") cmd_identify(ctx);
    else if (command == "fit") cmd_fit(ctx);
    else if (command == "summarize") cmd_summarize(ctx);
    else throw Error(ErrorCode::Config, "unknown command '" + command + "'", command);
    return 0;
  } catch (const Error& e) {
    report_error(err, error_code_name(e.code()), e.what(), e.subject());
    return exit_status(e.code());
  } catch (const Json::exception& e) {
    report_error(err, error_code_name(ErrorCode::Config), e.what(), {});
    return exit_status(ErrorCode::Config);
  }
}

}  // namespace san::io
