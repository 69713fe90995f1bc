#include "san/projection.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>

#include "san/error.hpp"

namespace san {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

// f* blows up fast; past these points the dual value is treated as +inf.
bool conjugate_overflows(const Link& link, double eta) {
  switch (link.kind()) {
    case LinkKind::Logit: return eta > 700.0;
    case LinkKind::Probit: return eta > 37.0;
    case LinkKind::Cloglog: return eta > 6.5;
  }
  return false;
}

}  // namespace

DualObjective::DualObjective(const ProbTable& q, const ConstraintSet& constraints,
                             FGenerator generator, const ProjectionOptions& options)
    : gen_(generator), q_table_(q) {
  const VariableSpace& space = q.space();
  const ProbTable& fixed = constraints.fixed_marginal;
  const std::vector<Index> fiber_map = reduction_map(space, fixed.space());

  const Index n = space.num_cells();
  bool has_zero = false;
  for (Index c = 0; c < n; ++c)
    if (q[c] == 0.0 && fixed[fiber_map[static_cast<std::size_t>(c)]] > 0.0) has_zero = true;
  if (has_zero) {
    if (!options.smooth_zero_cells)
      throw Error(ErrorCode::Dominance,
                  "reference table has zero cells inside fibers with positive target mass");
    Eigen::VectorXd w = q.mass().array() + options.smoothing_epsilon;
    q_table_ = ProbTable::from_weights(space, std::move(w));
    smoothed_ = true;
  }

  fiber_of_marginal_.assign(static_cast<std::size_t>(fixed.size()), -1);
  std::vector<double> targets;
  for (Index k = 0; k < fixed.size(); ++k) {
    if (fixed[k] > 0.0) {
      fiber_of_marginal_[static_cast<std::size_t>(k)] = n_fibers_++;
      targets.push_back(fixed[k]);
    }
  }
  fiber_target_ = Eigen::Map<Eigen::VectorXd>(targets.data(), n_fibers_);

  std::vector<double> qa;
  for (Index c = 0; c < n; ++c) {
    const int f = fiber_of_marginal_[static_cast<std::size_t>(fiber_map[static_cast<std::size_t>(c)])];
    if (f < 0 || q_table_[c] == 0.0) continue;
    active_.push_back(c);
    fiber_.push_back(f);
    qa.push_back(q_table_[c]);
  }
  const Index na = static_cast<Index>(active_.size());
  q_ = Eigen::Map<Eigen::VectorXd>(qa.data(), na);

  // Moment functions on active cells, fiber means removed.
  n_moments_ = static_cast<int>(constraints.moments.size());
  Eigen::MatrixXd centered(na, n_moments_);
  Eigen::MatrixXd means = Eigen::MatrixXd::Zero(n_fibers_, n_moments_);
  Eigen::VectorXd counts = Eigen::VectorXd::Zero(n_fibers_);
  for (Index a = 0; a < na; ++a) counts[fiber_[static_cast<std::size_t>(a)]] += 1.0;
  Eigen::VectorXd reduced_target(n_moments_);
  for (int s = 0; s < n_moments_; ++s) {
    const MomentConstraint& mc = constraints.moments[static_cast<std::size_t>(s)];
    if (!std::isfinite(mc.target))
      throw Error(ErrorCode::InvalidArgument, "moment target is not finite", mc.name);
    for (const auto& v : mc.scope())
      if (space.find(v) < 0)
        throw Error(ErrorCode::InvalidArgument, "moment scope variable '" + v +
                                                    "' is not in the projected space", mc.name);
    const Eigen::VectorXd u = mc.u.broadcast_to(space);
    for (Index a = 0; a < na; ++a) {
      centered(a, s) = u[active_[static_cast<std::size_t>(a)]];
      means(fiber_[static_cast<std::size_t>(a)], s) += centered(a, s);
    }
    means.col(s).array() /= counts.array();
    for (Index a = 0; a < na; ++a) centered(a, s) -= means(fiber_[static_cast<std::size_t>(a)], s);
    reduced_target[s] = mc.target - fiber_target_.dot(means.col(s));
  }

  // Keep a linearly independent subset; the rest must agree with it.
  if (n_moments_ > 0 && na > 0) {
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(centered);
    qr.setThreshold(1e-10);
    const int rank = static_cast<int>(qr.rank());
    for (int i = 0; i < rank; ++i) kept_.push_back(qr.colsPermutation().indices()[i]);
    std::sort(kept_.begin(), kept_.end());
  }
  const int r = static_cast<int>(kept_.size());
  features_.resize(na, r);
  feature_target_.resize(r);
  fiber_means_.resize(n_fibers_, r);
  for (int i = 0; i < r; ++i) {
    features_.col(i) = centered.col(kept_[static_cast<std::size_t>(i)]);
    feature_target_[i] = reduced_target[kept_[static_cast<std::size_t>(i)]];
    fiber_means_.col(i) = means.col(kept_[static_cast<std::size_t>(i)]);
  }
  if (r < n_moments_) {
    Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod;
    if (r > 0) cod.compute(features_);
    for (int s = 0; s < n_moments_; ++s) {
      if (std::binary_search(kept_.begin(), kept_.end(), s)) continue;
      const Eigen::VectorXd x = r > 0 ? Eigen::VectorXd(cod.solve(centered.col(s)))
                                      : Eigen::VectorXd();
      const double implied = r > 0 ? x.dot(feature_target_) : 0.0;
      const double scale = 1.0 + std::abs(reduced_target[s]) +
                           (r > 0 ? (x.array().abs() * feature_target_.array().abs()).sum() : 0.0);
      if (std::abs(reduced_target[s] - implied) > 1e-8 * scale)
        throw Error(ErrorCode::Infeasible,
                    "moment '" + constraints.moments[static_cast<std::size_t>(s)].name +
                        "' is a combination of other constraints but its target disagrees (" +
                        fmt(reduced_target[s]) + " vs implied " + fmt(implied) + ")",
                    constraints.moments[static_cast<std::size_t>(s)].name);
    }
  }

  // Exact range of each kept moment given the fixed marginal.
  for (int i = 0; i < r; ++i) {
    Eigen::VectorXd lo = Eigen::VectorXd::Constant(n_fibers_, kInf);
    Eigen::VectorXd hi = Eigen::VectorXd::Constant(n_fibers_, -kInf);
    for (Index a = 0; a < na; ++a) {
      const int f = fiber_[static_cast<std::size_t>(a)];
      lo[f] = std::min(lo[f], features_(a, i));
      hi[f] = std::max(hi[f], features_(a, i));
    }
    const double min = fiber_target_.dot(lo);
    const double max = fiber_target_.dot(hi);
    const double margin = 1e-12 * std::max(1.0, max - min);
    if (!(feature_target_[i] > min + margin && feature_target_[i] < max - margin)) {
      const MomentConstraint& mc = constraints.moments[static_cast<std::size_t>(kept_[static_cast<std::size_t>(i)])];
      const double shift = mc.target - feature_target_[i];
      throw Error(ErrorCode::Infeasible,
                  "target " + fmt(mc.target) + " of moment '" + mc.name +
                      "' is not inside its achievable range (" + fmt(min + shift) + ", " +
                      fmt(max + shift) + ") given the fixed marginal",
                  mc.name);
    }
  }
}

Eigen::VectorXd DualObjective::eta(const Eigen::VectorXd& theta) const {
  const Index na = q_.size();
  Eigen::VectorXd e(na);
  if (!kept_.empty())
    e = features_ * theta.tail(static_cast<Index>(kept_.size()));
  else
    e.setZero();
  for (Index a = 0; a < na; ++a) e[a] += theta[fiber_[static_cast<std::size_t>(a)]];
  return e;
}

double DualObjective::value(const Eigen::VectorXd& theta) const {
  const Eigen::VectorXd e = eta(theta);
  double total = 0.0;
  for (Index a = 0; a < e.size(); ++a) {
    if (conjugate_overflows(gen_.link(), e[a])) return kInf;
    total += q_[a] * gen_.conjugate(e[a]);
  }
  total -= theta.head(n_fibers_).dot(fiber_target_);
  if (!kept_.empty()) total -= theta.tail(static_cast<Index>(kept_.size())).dot(feature_target_);
  return total;
}

Eigen::VectorXd DualObjective::gradient(const Eigen::VectorXd& theta) const {
  const Eigen::VectorXd e = eta(theta);
  Eigen::VectorXd p(e.size());
  for (Index a = 0; a < e.size(); ++a) p[a] = q_[a] * gen_.ratio(e[a]);
  Eigen::VectorXd g(dimension());
  g.head(n_fibers_) = -fiber_target_;
  for (Index a = 0; a < e.size(); ++a) g[fiber_[static_cast<std::size_t>(a)]] += p[a];
  if (!kept_.empty()) g.tail(static_cast<Index>(kept_.size())) = features_.transpose() * p - feature_target_;
  return g;
}

Eigen::MatrixXd DualObjective::hessian(const Eigen::VectorXd& theta) const {
  const Eigen::VectorXd e = eta(theta);
  const int r = static_cast<int>(kept_.size());
  Eigen::MatrixXd h = Eigen::MatrixXd::Zero(dimension(), dimension());
  for (Index a = 0; a < e.size(); ++a) {
    const double w = q_[a] * gen_.ratio_derivative(e[a]);
    const int f = fiber_[static_cast<std::size_t>(a)];
    h(f, f) += w;
    for (int s = 0; s < r; ++s) {
      h(f, n_fibers_ + s) += w * features_(a, s);
      for (int t = 0; t <= s; ++t) h(n_fibers_ + s, n_fibers_ + t) += w * features_(a, s) * features_(a, t);
    }
  }
  for (int s = 0; s < r; ++s) {
    for (int k = 0; k < n_fibers_; ++k) h(n_fibers_ + s, k) = h(k, n_fibers_ + s);
    for (int t = 0; t < s; ++t) h(n_fibers_ + t, n_fibers_ + s) = h(n_fibers_ + s, n_fibers_ + t);
  }
  return h;
}

Eigen::VectorXd DualObjective::newton_direction(const Eigen::VectorXd& theta) const {
  const Eigen::VectorXd e = eta(theta);
  const Eigen::VectorXd g = gradient(theta);
  const int r = static_cast<int>(kept_.size());
  Eigen::VectorXd w(e.size());
  for (Index a = 0; a < e.size(); ++a) w[a] = q_[a] * gen_.ratio_derivative(e[a]);

  Eigen::VectorXd d = Eigen::VectorXd::Zero(n_fibers_);
  Eigen::MatrixXd b = Eigen::MatrixXd::Zero(n_fibers_, r);
  for (Index a = 0; a < e.size(); ++a) {
    const int f = fiber_[static_cast<std::size_t>(a)];
    d[f] += w[a];
    if (r > 0) b.row(f) += w[a] * features_.row(a);
  }
  d = d.cwiseMax(std::numeric_limits<double>::min());
  const Eigen::VectorXd ga = g.head(n_fibers_);
  Eigen::VectorXd step(dimension());
  if (r == 0) {
    step = -ga.cwiseQuotient(d);
    return step;
  }
  const Eigen::MatrixXd c = features_.transpose() * w.asDiagonal() * features_;
  const Eigen::MatrixXd dinv_b = d.cwiseInverse().asDiagonal() * b;
  const Eigen::MatrixXd schur = c - b.transpose() * dinv_b;
  const Eigen::VectorXd rhs = -g.tail(r) + dinv_b.transpose() * ga;
  Eigen::LDLT<Eigen::MatrixXd> ldlt(schur);
  Eigen::VectorXd db = ldlt.solve(rhs);
  if (ldlt.info() != Eigen::Success || !db.allFinite()) return -g;
  step.tail(r) = db;
  step.head(n_fibers_) = (-ga - b * db).cwiseQuotient(d);
  return step;
}

Eigen::VectorXd DualObjective::primal(const Eigen::VectorXd& theta) const {
  const Eigen::VectorXd e = eta(theta);
  Eigen::VectorXd p = Eigen::VectorXd::Zero(q_table_.size());
  for (Index a = 0; a < e.size(); ++a) p[active_[static_cast<std::size_t>(a)]] = q_[a] * gen_.ratio(e[a]);
  return p;
}

void DualObjective::expand_dual(const Eigen::VectorXd& theta, Eigen::VectorXd& fiber_dual,
                                Eigen::VectorXd& moment_dual) const {
  const int r = static_cast<int>(kept_.size());
  const Eigen::VectorXd beta = theta.tail(r);
  fiber_dual.resize(static_cast<Index>(fiber_of_marginal_.size()));
  for (std::size_t k = 0; k < fiber_of_marginal_.size(); ++k) {
    const int f = fiber_of_marginal_[k];
    fiber_dual[static_cast<Index>(k)] =
        f < 0 ? -kInf : theta[f] - (r > 0 ? fiber_means_.row(f).dot(beta) : 0.0);
  }
  moment_dual = Eigen::VectorXd::Zero(n_moments_);
  for (int i = 0; i < r; ++i) moment_dual[kept_[static_cast<std::size_t>(i)]] = beta[i];
}

double ConstraintResiduals::max() const {
  double m = marginal;
  if (moments.size() > 0) m = std::max(m, moments.cwiseAbs().maxCoeff());
  return m;
}

ConstraintResiduals constraint_residuals(const ProbTable& p, const ConstraintSet& constraints) {
  ConstraintResiduals out;
  const VariableSpace& fixed_space = constraints.fixed_marginal.space();
  const Eigen::VectorXd sums = marginal_sums(p.space(), p.mass(), fixed_space);
  out.marginal = (sums - constraints.fixed_marginal.mass()).cwiseAbs().maxCoeff();
  out.moments.resize(static_cast<Index>(constraints.moments.size()));
  for (std::size_t s = 0; s < constraints.moments.size(); ++s)
    out.moments[static_cast<Index>(s)] = moment(p, constraints.moments[s]) - constraints.moments[s].target;
  return out;
}

ProjectionResult project(const ProbTable& q, const ConstraintSet& constraints,
                         const FGenerator& generator, const ProjectionOptions& options) {
  const DualObjective dual(q, constraints, generator, options);
  Eigen::VectorXd theta = Eigen::VectorXd::Zero(dual.dimension());
  Eigen::VectorXd g = dual.gradient(theta);
  double residual = g.size() ? g.cwiseAbs().maxCoeff() : 0.0;
  double f0 = dual.value(theta);
  int it = 0;
  while (residual >= options.tolerance) {
    if (it >= options.max_iterations)
      throw Error(ErrorCode::NonConvergence,
                  "projection did not converge in " + std::to_string(options.max_iterations) +
                      " iterations (residual " + fmt(residual) + ")");
    ++it;
    Eigen::VectorXd d = dual.newton_direction(theta);
    double slope = g.dot(d);
    if (!(slope < 0.0)) {
      d = -g;
      slope = -g.squaredNorm();
    }
    bool accepted = false;
    double t = 1.0;
    for (int ls = 0; ls < 80; ++ls, t *= 0.5) {
      const Eigen::VectorXd trial = theta + t * d;
      const double f1 = dual.value(trial);
      if (!std::isfinite(f1)) continue;
      bool ok = f1 <= f0 + 1e-4 * t * slope;
      Eigen::VectorXd g1;
      if (!ok && f1 <= f0 + 1e-13 * (1.0 + std::abs(f0))) {
        // Round-off regime: accept when the residual still shrinks.
        g1 = dual.gradient(trial);
        ok = g1.cwiseAbs().maxCoeff() < residual;
      }
      if (ok) {
        theta = trial;
        f0 = f1;
        g = g1.size() ? g1 : dual.gradient(theta);
        residual = g.cwiseAbs().maxCoeff();
        accepted = true;
        break;
      }
    }
    if (!accepted)
      throw Error(ErrorCode::NonConvergence,
                  "projection line search stalled (residual " + fmt(residual) +
                      "); constraints may be jointly infeasible");
  }

  ProjectionResult out;
  out.table = ProbTable::from_weights(q.space(), dual.primal(theta));
  dual.expand_dual(theta, out.fiber_dual, out.moment_dual);
  const ConstraintResiduals res = constraint_residuals(out.table, constraints);
  out.marginal_residual = res.marginal;
  out.moment_residuals = res.moments;
  out.max_residual = res.max();
  out.divergence = f_divergence(out.table, dual.q(), generator);
  out.iterations = it;
  out.smoothed = dual.smoothed();
  return out;
}

double additive_decomposition_residual(const ProbTable& p_star, const ProbTable& q,
                                       const ConstraintSet& constraints,
                                       const FGenerator& generator) {
  if (!(p_star.space() == q.space()))
    throw Error(ErrorCode::InvalidArgument, "tables on different spaces");
  const VariableSpace& space = q.space();
  const std::vector<Index> fiber_map = reduction_map(space, constraints.fixed_marginal.space());
  std::vector<Index> cells;
  for (Index c = 0; c < space.num_cells(); ++c) {
    if (q[c] == 0.0) {
      if (p_star[c] != 0.0)
        throw Error(ErrorCode::Dominance, "P is not dominated by Q at cell " + space.cell_label(c));
      continue;
    }
    if (p_star[c] > 0.0) cells.push_back(c);
  }
  const Index n = static_cast<Index>(cells.size());
  if (n == 0) return 0.0;

  std::vector<int> fiber_col(static_cast<std::size_t>(constraints.fixed_marginal.size()), -1);
  int n_fib = 0;
  for (Index c : cells) {
    int& col = fiber_col[static_cast<std::size_t>(fiber_map[static_cast<std::size_t>(c)])];
    if (col < 0) col = n_fib++;
  }
  const int k = static_cast<int>(constraints.moments.size());
  Eigen::MatrixXd x = Eigen::MatrixXd::Zero(n, n_fib + k);
  Eigen::VectorXd h(n);
  std::vector<Eigen::VectorXd> u;
  for (const auto& mc : constraints.moments) u.push_back(mc.u.broadcast_to(space));
  for (Index i = 0; i < n; ++i) {
    const Index c = cells[static_cast<std::size_t>(i)];
    h[i] = generator.derivative(p_star[c] / q[c]);
    x(i, fiber_col[static_cast<std::size_t>(fiber_map[static_cast<std::size_t>(c)])]) = 1.0;
    for (int s = 0; s < k; ++s) x(i, n_fib + s) = u[static_cast<std::size_t>(s)][c];
  }
  Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(x);
  const Eigen::VectorXd coef = cod.solve(h);
  return (h - x * coef).norm();
}

}  // namespace san
