#include "san/likelihood.hpp"

#include <cmath>
#include <limits>
#include <map>
#include <numbers>

#include "san/error.hpp"

namespace san {
namespace {

struct Layout {
  int outcome;
  std::vector<int> y_pos;  // study positions of Y, declared order
  std::vector<Index> y_stride;
  std::vector<int> step_pos;
};

Layout layout_of(const InferenceModel& model) {
  const VariableSpace& s = model.mechanism.space();
  Layout l;
  l.outcome = validate_model(model);
  l.y_pos = s.y_order();
  const VariableSpace ys = y_space(s);
  for (int i = 0; i < ys.num_variables(); ++i) l.y_stride.push_back(ys.stride(i));
  for (const auto& st : model.mechanism.steps()) l.step_pos.push_back(s.find(st.variable));
  return l;
}

SanSpec with_params(const SanSpec& spec, const Params& params) {
  SanSpec out = spec;
  if (static_cast<int>(params.gamma.size()) != spec.num_steps())
    throw Error(ErrorCode::InvalidArgument, "one coefficient vector per step is required");
  for (int j = 0; j < spec.num_steps(); ++j) out.set_parameters(j, params.gamma[static_cast<std::size_t>(j)]);
  return out;
}

double loglik_one(const SanSpec& spec, const Layout& l, const Params& params,
                  const std::vector<int>& record, bool include_mechanism) {
  const VariableSpace& s = spec.space();
  std::vector<int> missing;
  for (int i = 0; i < s.num_variables(); ++i)
    if (record[static_cast<std::size_t>(i)] == kMissing) {
      if (s.is_y(i) && spec.is_always_observed(s.variable(i).name))
        throw Error(ErrorCode::InvalidArgument,
                    "variable '" + s.variable(i).name + "' is declared always observed but is missing",
                    s.variable(i).name);
      missing.push_back(i);
    }
  std::vector<bool> m;
  for (int pos : l.step_pos) m.push_back(record[static_cast<std::size_t>(pos)] == kMissing);

  std::vector<int> lv = record;
  for (int i : missing) lv[static_cast<std::size_t>(i)] = 0;
  double total = 0.0;
  for (;;) {
    Index yc = 0;
    for (std::size_t k = 0; k < l.y_pos.size(); ++k)
      yc += l.y_stride[k] * lv[static_cast<std::size_t>(l.y_pos[k])];
    const double th = params.theta[yc];
    double term = params.kappa[yc] * (lv[static_cast<std::size_t>(l.outcome)] == 1 ? th : 1.0 - th);
    if (include_mechanism) term *= std::exp(mechanism_log_prob(spec, lv, m));
    total += term;
    std::size_t k = missing.size();
    while (k > 0) {
      const int i = missing[k - 1];
      if (++lv[static_cast<std::size_t>(i)] < s.variable(i).real_size()) break;
      lv[static_cast<std::size_t>(i)] = 0;
      --k;
    }
    if (k == 0) break;
  }
  return std::log(total);
}

}  // namespace

AuxMode parse_aux_mode(const std::string& name) {
  if (name == "known_kappa") return AuxMode::KnownKappa;
  if (name == "refreshment_sample") return AuxMode::RefreshmentSample;
  if (name == "estimator_density") return AuxMode::EstimatorDensity;
  throw Error(ErrorCode::Config, "unknown aux mode '" + name + "'", "aux.mode");
}

const char* aux_mode_name(AuxMode mode) {
  switch (mode) {
    case AuxMode::KnownKappa: return "known_kappa";
    case AuxMode::RefreshmentSample: return "refreshment_sample";
    case AuxMode::EstimatorDensity: return "estimator_density";
  }
  return "unknown";
}

VariableSpace y_space(const VariableSpace& study) {
  std::vector<std::string> names;
  for (int i : study.y_order()) names.push_back(study.variable(i).name);
  return study.subspace(names);
}

int validate_model(const InferenceModel& model) {
  const VariableSpace& s = model.mechanism.space();
  const std::vector<int> xs = s.x_indices();
  if (xs.size() != 1 || s.variable(xs[0]).real_size() != 2)
    throw Error(ErrorCode::Config, "the outcome model needs exactly one binary X variable", "space");
  if (!(model.alpha_sd > 0.0) || !(model.beta_sd > 0.0))
    throw Error(ErrorCode::Config, "prior standard deviations must be positive", "priors");
  const Index k = y_space(s).num_cells();
  const AuxInfo& a = model.aux;
  switch (a.mode) {
    case AuxMode::KnownKappa:
      if (a.census.size() != k || (a.census.array() < 0.0).any() ||
          std::abs(a.census.sum() - 1.0) > 1e-9)
        throw Error(ErrorCode::Config, "known kappa must be a distribution over the Y cells", "aux");
      break;
    case AuxMode::RefreshmentSample:
      if (a.refreshment.size() != k || (a.refreshment.array() < 0.0).any())
        throw Error(ErrorCode::Config, "refreshment counts must cover the Y cells", "aux");
      break;
    case AuxMode::EstimatorDensity: {
      if (a.kappa_hat.size() != k || a.covariance.rows() != k - 1 || a.covariance.cols() != k - 1)
        throw Error(ErrorCode::Config,
                    "estimator density needs kappa_hat over the Y cells and a (K-1)x(K-1) covariance",
                    "aux");
      Eigen::LLT<Eigen::MatrixXd> llt(a.covariance);
      if (llt.info() != Eigen::Success)
        throw Error(ErrorCode::Config, "covariance is not positive definite", "aux.covariance");
      break;
    }
  }
  return xs[0];
}

Params initial_params(const InferenceModel& model) {
  validate_model(model);
  Params p;
  for (int j = 0; j < model.mechanism.num_steps(); ++j)
    p.gamma.push_back(Eigen::VectorXd::Zero(model.mechanism.num_parameters(j)));
  const Index k = y_space(model.mechanism.space()).num_cells();
  p.theta = Eigen::VectorXd::Constant(k, 0.5);
  switch (model.aux.mode) {
    case AuxMode::KnownKappa:
      p.kappa = model.aux.census;
      break;
    case AuxMode::RefreshmentSample:
      p.kappa = (model.aux.refreshment.array() + 1.0).matrix();
      p.kappa /= p.kappa.sum();
      break;
    case AuxMode::EstimatorDensity:
      p.kappa = model.aux.kappa_hat.cwiseMax(1e-6);
      p.kappa /= p.kappa.sum();
      break;
  }
  return p;
}

Eigen::VectorXd prior_sd(const InferenceModel& model, int j) {
  const auto roles = model.mechanism.parameter_roles(j);
  Eigen::VectorXd sd(static_cast<Index>(roles.size()));
  for (std::size_t i = 0; i < roles.size(); ++i)
    sd[static_cast<Index>(i)] = roles[i] == TermRole::Alpha ? model.alpha_sd : model.beta_sd;
  return sd;
}

double record_loglik(const InferenceModel& model, const Params& params,
                     const std::vector<int>& record, bool include_mechanism) {
  const Layout l = layout_of(model);
  return loglik_one(with_params(model.mechanism, params), l, params, record, include_mechanism);
}

double observed_loglik(const InferenceModel& model, const Params& params, const Dataset& data,
                       bool include_mechanism) {
  if (!(data.space() == model.mechanism.space()))
    throw Error(ErrorCode::InvalidArgument, "dataset and model spaces differ");
  const Layout l = layout_of(model);
  const Index k = y_space(model.mechanism.space()).num_cells();
  if (params.theta.size() != k || params.kappa.size() != k)
    throw Error(ErrorCode::InvalidArgument, "theta and kappa need one entry per Y cell");
  const SanSpec spec = with_params(model.mechanism, params);
  std::map<std::vector<int>, Index> counts;
  for (const auto& r : data.rows()) ++counts[r];
  double total = 0.0;
  for (const auto& [r, n] : counts)
    total += static_cast<double>(n) * loglik_one(spec, l, params, r, include_mechanism);
  return total;
}

double margin_term_logpdf(const AuxInfo& aux, const Eigen::VectorXd& kappa) {
  switch (aux.mode) {
    case AuxMode::KnownKappa:
      if (kappa.size() != aux.census.size())
        throw Error(ErrorCode::InvalidArgument, "kappa size mismatch");
      return (kappa - aux.census).cwiseAbs().maxCoeff() <= 1e-12
                 ? 0.0
                 : -std::numeric_limits<double>::infinity();
    case AuxMode::RefreshmentSample: {
      if (kappa.size() != aux.refreshment.size())
        throw Error(ErrorCode::InvalidArgument, "kappa size mismatch");
      double s = 0.0;
      for (Index c = 0; c < kappa.size(); ++c)
        if (aux.refreshment[c] > 0.0) s += aux.refreshment[c] * std::log(kappa[c]);
      return s;
    }
    case AuxMode::EstimatorDensity: {
      const Index d = aux.covariance.rows();
      if (kappa.size() != d + 1) throw Error(ErrorCode::InvalidArgument, "kappa size mismatch");
      Eigen::LLT<Eigen::MatrixXd> llt(aux.covariance);
      if (llt.info() != Eigen::Success)
        throw Error(ErrorCode::InvalidArgument, "covariance is not positive definite");
      const Eigen::VectorXd diff = aux.kappa_hat.head(d) - kappa.head(d);
      const Eigen::VectorXd z = llt.matrixL().solve(diff);
      const double logdet = 2.0 * llt.matrixL().toDenseMatrix().diagonal().array().log().sum();
      return -0.5 * z.squaredNorm() - 0.5 * static_cast<double>(d) * std::log(2.0 * std::numbers::pi) -
             0.5 * logdet;
    }
  }
  return 0.0;
}

}  // namespace san
