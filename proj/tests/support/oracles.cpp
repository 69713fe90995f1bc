#include "support/oracles.hpp"

#include <algorithm>
#include <boost/math/distributions/normal.hpp>
#include <boost/math/quadrature/tanh_sinh.hpp>
#include <cmath>
#include <limits>

namespace san::testing {

namespace {

const boost::math::normal_distribution<double> kStdNormal;

double probit_of_odds(double c, double z) {
  // p = z/(c+z), 1-p = c/(c+z); evaluate on the smaller tail
  if (z <= c) return boost::math::quantile(kStdNormal, z / (c + z));
  return boost::math::quantile(boost::math::complement(kStdNormal, c / (c + z)));
}

struct Rows {
  Eigen::MatrixXd a;  // independent constraint rows over active cells
  Eigen::VectorXd b;
};

struct Active {
  std::vector<Index> cells;
  Eigen::VectorXd q;
  std::vector<int> fiber;
  Eigen::VectorXd fiber_target;
  Eigen::MatrixXd u;  // active cells x moments
  Eigen::VectorXd u_target;
};

Active active_set(const ProbTable& q, const ConstraintSet& cs) {
  Active s;
  const VariableSpace& space = q.space();
  const std::vector<Index> map = reduction_map(space, cs.fixed_marginal.space());
  std::vector<int> fib(static_cast<std::size_t>(cs.fixed_marginal.size()), -1);
  std::vector<double> targets;
  for (Index k = 0; k < cs.fixed_marginal.size(); ++k)
    if (cs.fixed_marginal[k] > 0.0) {
      fib[static_cast<std::size_t>(k)] = static_cast<int>(targets.size());
      targets.push_back(cs.fixed_marginal[k]);
    }
  s.fiber_target = Eigen::Map<Eigen::VectorXd>(targets.data(), static_cast<Index>(targets.size()));
  std::vector<double> qa;
  for (Index c = 0; c < space.num_cells(); ++c) {
    const int f = fib[static_cast<std::size_t>(map[static_cast<std::size_t>(c)])];
    if (f < 0 || q[c] <= 0.0) continue;
    s.cells.push_back(c);
    s.fiber.push_back(f);
    qa.push_back(q[c]);
  }
  const Index n = static_cast<Index>(s.cells.size());
  s.q = Eigen::Map<Eigen::VectorXd>(qa.data(), n);
  const Index k = static_cast<Index>(cs.moments.size());
  s.u.resize(n, k);
  s.u_target.resize(k);
  for (Index j = 0; j < k; ++j) {
    const Eigen::VectorXd full = cs.moments[static_cast<std::size_t>(j)].u.broadcast_to(space);
    for (Index i = 0; i < n; ++i) s.u(i, j) = full[s.cells[static_cast<std::size_t>(i)]];
    s.u_target[j] = cs.moments[static_cast<std::size_t>(j)].target;
  }
  return s;
}

Rows independent_rows(const Active& s) {
  const Index n = s.q.size();
  const Index nf = s.fiber_target.size();
  const Index k = s.u.cols();
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(nf + k, n);
  Eigen::VectorXd b(nf + k);
  for (Index i = 0; i < n; ++i) a(s.fiber[static_cast<std::size_t>(i)], i) = 1.0;
  b.head(nf) = s.fiber_target;
  a.bottomRows(k) = s.u.transpose();
  b.tail(k) = s.u_target;
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(a.transpose());
  qr.setThreshold(1e-9);
  const Index r = qr.rank();
  Rows out{Eigen::MatrixXd(r, n), Eigen::VectorXd(r)};
  for (Index i = 0; i < r; ++i) {
    const Index row = qr.colsPermutation().indices()[i];
    out.a.row(i) = a.row(row);
    out.b[i] = b[row];
  }
  return out;
}

}  // namespace

double oracle_f_prime(LinkKind link, double c, double z) {
  switch (link) {
    case LinkKind::Logit: return std::log(z / c);
    case LinkKind::Cloglog: return std::log(std::log1p(z / c));
    case LinkKind::Probit: return probit_of_odds(c, z);
  }
  return 0.0;
}

double oracle_f_second(LinkKind link, double c, double z) {
  switch (link) {
    case LinkKind::Logit: return 1.0 / z;
    case LinkKind::Cloglog: return 1.0 / ((c + z) * std::log1p(z / c));
    case LinkKind::Probit: {
      const double x = probit_of_odds(c, z);
      return c / ((c + z) * (c + z) * boost::math::pdf(kStdNormal, x));
    }
  }
  return 0.0;
}

double oracle_f_value(LinkKind link, double c, double z) {
  if (z == 0.0) return 0.0;
  boost::math::quadrature::tanh_sinh<double> integrator;
  return integrator.integrate([&](double v) { return oracle_f_prime(link, c, v); }, 0.0, z);
}

OracleResult project_oracle(const ProbTable& q, const ConstraintSet& cs, LinkKind link, double c) {
  const Active s = active_set(q, cs);
  const Index nf = s.fiber_target.size();
  for (Index j = 0; j < s.u.cols(); ++j) {
    Eigen::VectorXd lo = Eigen::VectorXd::Constant(nf, std::numeric_limits<double>::infinity());
    Eigen::VectorXd hi = -lo;
    for (Index i = 0; i < s.q.size(); ++i) {
      const int f = s.fiber[static_cast<std::size_t>(i)];
      lo[f] = std::min(lo[f], s.u(i, j));
      hi[f] = std::max(hi[f], s.u(i, j));
    }
    const double t = s.u_target[j];
    const double a = s.fiber_target.dot(lo), b = s.fiber_target.dot(hi);
    const double slack = 1e-12 * std::max(1.0, std::abs(t));
    if (t < a - slack || t > b + slack || (b - a > slack && (t <= a || t >= b))) {
      OracleResult bad;
      bad.infeasible = true;
      return bad;
    }
  }
  const Rows rows = independent_rows(s);
  const Index n = s.q.size();
  const Index m = rows.a.rows();

  auto residual = [&](const Eigen::VectorXd& x, const Eigen::VectorXd& nu, Eigen::VectorXd& g) {
    g.resize(n);
    for (Index i = 0; i < n; ++i) g[i] = oracle_f_prime(link, c, x[i] / s.q[i]);
    Eigen::VectorXd r(n + m);
    r.head(n) = g + rows.a.transpose() * nu;
    r.tail(m) = rows.a * x - rows.b;
    return r;
  };

  std::vector<Eigen::VectorXd> starts;
  {
    Eigen::VectorXd fq = Eigen::VectorXd::Zero(s.fiber_target.size());
    Eigen::VectorXd cnt = Eigen::VectorXd::Zero(s.fiber_target.size());
    for (Index i = 0; i < n; ++i) {
      fq[s.fiber[static_cast<std::size_t>(i)]] += s.q[i];
      cnt[s.fiber[static_cast<std::size_t>(i)]] += 1.0;
    }
    Eigen::VectorXd x1(n), x2(n), x3(n);
    for (Index i = 0; i < n; ++i) {
      const int f = s.fiber[static_cast<std::size_t>(i)];
      x1[i] = s.q[i] * s.fiber_target[f] / fq[f];
      x2[i] = s.fiber_target[f] / cnt[f];
      x3[i] = 0.5 * (x1[i] + x2[i]);
    }
    starts = {x1, x2, x3};
  }

  OracleResult best;
  double best_score = std::numeric_limits<double>::infinity();
  for (const Eigen::VectorXd& x0 : starts) {
    Eigen::VectorXd x = x0;
    Eigen::VectorXd nu = Eigen::VectorXd::Zero(m);
    Eigen::VectorXd g;
    Eigen::VectorXd r = residual(x, nu, g);
    for (int it = 0; it < 500; ++it) {
      if (r.tail(m).lpNorm<Eigen::Infinity>() < 1e-14 && r.head(n).lpNorm<Eigen::Infinity>() < 1e-11) break;
      Eigen::MatrixXd kkt = Eigen::MatrixXd::Zero(n + m, n + m);
      for (Index i = 0; i < n; ++i) kkt(i, i) = oracle_f_second(link, c, x[i] / s.q[i]) / s.q[i];
      kkt.topRightCorner(n, m) = rows.a.transpose();
      kkt.bottomLeftCorner(m, n) = rows.a;
      const Eigen::VectorXd step = kkt.partialPivLu().solve(-r);
      const Eigen::VectorXd dx = step.head(n);
      const Eigen::VectorXd dnu = step.tail(m);
      double t = 1.0;
      while (((x + t * dx).array() <= 0.0).any() && t > 1e-20) t *= 0.5;
      const double r0 = r.norm();
      Eigen::VectorXd g_new;
      Eigen::VectorXd r_new = residual(x + t * dx, nu + t * dnu, g_new);
      while (r_new.norm() > (1.0 - 0.01 * t) * r0 && t > 1e-12) {
        t *= 0.5;
        r_new = residual(x + t * dx, nu + t * dnu, g_new);
      }
      x += t * dx;
      nu += t * dnu;
      r = r_new;
      if (t <= 1e-12) break;
    }
    const double pr = r.tail(m).lpNorm<Eigen::Infinity>();
    const double st = r.head(n).lpNorm<Eigen::Infinity>();
    const double score = pr + 1e-3 * st;
    if (score < best_score) {
      best_score = score;
      best.mass = Eigen::VectorXd::Zero(q.size());
      for (Index i = 0; i < n; ++i) best.mass[s.cells[static_cast<std::size_t>(i)]] = x[i];
      best.primal_residual = pr;
      best.stationarity = st;
      best.converged = pr < 1e-12 && st < 1e-8;
    }
  }
  return best;
}

Eigen::VectorXd ipf_kl_projection(const ProbTable& q, const ConstraintSet& cs, double tol, int max_cycles) {
  const Active s = active_set(q, cs);
  const Index n = s.q.size();
  const Index nf = s.fiber_target.size();
  Eigen::VectorXd x = s.q;
  auto fiber_sums = [&] {
    Eigen::VectorXd f = Eigen::VectorXd::Zero(nf);
    for (Index i = 0; i < n; ++i) f[s.fiber[static_cast<std::size_t>(i)]] += x[i];
    return f;
  };
  for (int cycle = 0; cycle < max_cycles; ++cycle) {
    const Eigen::VectorXd f = fiber_sums();
    for (Index i = 0; i < n; ++i) {
      const int k = s.fiber[static_cast<std::size_t>(i)];
      x[i] *= s.fiber_target[k] / f[k];
    }
    for (Index j = 0; j < s.u.cols(); ++j) {
      const Eigen::VectorXd u = s.u.col(j);
      const double t = s.u_target[j];
      // Solve E_lambda[u] = t for the tilt exp(lambda u); the map is increasing.
      double lam = 0.0;
      for (int it = 0; it < 100; ++it) {
        const Eigen::ArrayXd w = x.array() * (lam * (u.array() - t)).exp();
        const double z = w.sum();
        const double mean = (w * u.array()).sum() / z;
        const double var = (w * (u.array() - mean).square()).sum() / z;
        const double d = (mean - t) / var;
        lam -= d;
        if (std::abs(d) < 1e-16 * std::max(1.0, std::abs(lam))) break;
      }
      x = (x.array() * (lam * (u.array() - t)).exp()).matrix();
      x /= x.sum();
    }
    // Residual after the whole cycle.
    const Eigen::VectorXd f2 = fiber_sums();
    double res = (f2 - s.fiber_target).lpNorm<Eigen::Infinity>();
    if (s.u.cols() > 0) res = std::max(res, (s.u.transpose() * x - s.u_target).lpNorm<Eigen::Infinity>());
    if (res < tol) break;
  }
  Eigen::VectorXd out = Eigen::VectorXd::Zero(q.size());
  for (Index i = 0; i < n; ++i) out[s.cells[static_cast<std::size_t>(i)]] = x[i];
  return out;
}

Eigen::MatrixXd constraint_matrix(const VariableSpace& space, const ConstraintSet& cs) {
  const std::vector<Index> fib = reduction_map(space, cs.fixed_marginal.space());
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(cs.fixed_marginal.size() + static_cast<Index>(cs.moments.size()),
                                            space.num_cells());
  for (Index c = 0; c < space.num_cells(); ++c) a(fib[static_cast<std::size_t>(c)], c) = 1.0;
  for (std::size_t m = 0; m < cs.moments.size(); ++m)
    a.row(cs.fixed_marginal.size() + static_cast<Index>(m)) = cs.moments[m].u.broadcast_to(space).transpose();
  return a;
}

namespace {

std::vector<Index> live_cells(const ProbTable& q) {
  std::vector<Index> live;
  for (Index c = 0; c < q.size(); ++c)
    if (q[c] > 0.0) live.push_back(c);
  return live;
}

}  // namespace

bool saturated(const ProbTable& q, const ConstraintSet& cs) {
  const std::vector<Index> live = live_cells(q);
  const Eigen::MatrixXd a = constraint_matrix(q.space(), cs)(Eigen::all, live);
  return Eigen::FullPivLU<Eigen::MatrixXd>(a).rank() == static_cast<Index>(live.size());
}

ProbTable off_span_perturbation(const ProbTable& p, const ProbTable& q, const ConstraintSet& cs,
                                std::mt19937_64& rng, double size) {
  std::normal_distribution<double> norm(0.0, 1.0);
  const std::vector<Index> live = live_cells(q);
  const Eigen::MatrixXd a = constraint_matrix(q.space(), cs)(Eigen::all, live);
  Eigen::VectorXd e(static_cast<Index>(live.size()));
  for (auto& v : e) v = norm(rng);
  // remove the row-space component
  const Eigen::MatrixXd basis = Eigen::FullPivLU<Eigen::MatrixXd>(a).kernel();
  const Eigen::HouseholderQR<Eigen::MatrixXd> qr(basis);
  const Eigen::MatrixXd orth = qr.householderQ() * Eigen::MatrixXd::Identity(basis.rows(), basis.cols());
  e = orth * (orth.transpose() * e);
  e /= e.cwiseAbs().maxCoeff();
  Eigen::VectorXd w = p.mass();
  for (std::size_t k = 0; k < live.size(); ++k) w[live[k]] *= std::exp(size * e[static_cast<Index>(k)]);
  return ProbTable::from_weights(p.space(), w);
}

VariableSpace random_space(std::mt19937_64& rng, int min_vars, int max_vars) {
  std::uniform_int_distribution<int> nv_dist(min_vars, max_vars);
  std::uniform_int_distribution<int> lv_dist(2, 3);
  const int nv = nv_dist(rng);
  std::vector<Variable> vars;
  Index cells = 1;
  for (int v = 0; v < nv; ++v) {
    int l = lv_dist(rng);
    if (cells * l > 64) l = 2;
    cells *= l;
    Variable var{"v" + std::to_string(v), {}};
    for (int k = 0; k < l; ++k) var.levels.push_back(std::string(1, static_cast<char>('a' + k)));
    vars.push_back(std::move(var));
  }
  std::vector<std::string> y;
  for (int v = 1; v < nv; ++v) y.push_back(vars[static_cast<std::size_t>(v)].name);
  return VariableSpace::build(std::move(vars), y);
}

Instance random_instance(std::mt19937_64& rng, LinkKind link, bool allow_zeros) {
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::normal_distribution<double> norm(0.0, 1.0);
  const VariableSpace space = random_space(rng);
  const Index n = space.num_cells();
  const int nv = space.num_variables();

  std::vector<std::string> names = space.names();
  std::shuffle(names.begin(), names.end(), rng);
  const int nk = std::uniform_int_distribution<int>(0, nv - 1)(rng);
  std::vector<std::string> kept(names.begin(), names.begin() + nk);
  std::vector<std::string> rest(names.begin() + nk, names.end());

  // Zero cells of q come as whole fibers of the fixed marginal, which then
  // carry zero target mass.
  const VariableSpace fixed_space = space.subspace(kept);
  const std::vector<Index> fiber = reduction_map(space, fixed_space);
  std::vector<bool> dead(static_cast<std::size_t>(fixed_space.num_cells()), false);
  if (allow_zeros && fixed_space.num_cells() > 1)
    for (auto&& d : dead) d = unif(rng) < 0.15;
  Eigen::VectorXd qw(n), p0(n);
  for (Index c = 0; c < n; ++c) qw[c] = dead[static_cast<std::size_t>(fiber[static_cast<std::size_t>(c)])] ? 0.0 : 0.05 + unif(rng);
  if (qw.sum() == 0.0) qw.setConstant(1.0);
  for (Index c = 0; c < n; ++c) p0[c] = qw[c] * std::exp(1.5 * norm(rng));
  Instance inst;
  inst.q = ProbTable::from_weights(space, qw);
  const ProbTable p = ProbTable::from_weights(space, p0);
  inst.link = link;
  inst.c = std::exp(std::log(5.0) * (2.0 * unif(rng) - 1.0));

  inst.cs.fixed_marginal = marginalize(p, kept);

  const int nm = std::uniform_int_distribution<int>(1, 3)(rng);
  for (int k = 0; k < nm; ++k) {
    std::vector<std::string> scope;
    for (const auto& r : rest)
      if (unif(rng) < 0.6) scope.push_back(r);
    if (scope.empty()) scope.push_back(rest[static_cast<std::size_t>(k) % rest.size()]);
    // occasionally a redundant function of the fixed variables
    if (k == 2 && !kept.empty()) scope = {kept[0]};
    const VariableSpace sub = space.subspace(scope);
    Eigen::VectorXd u(sub.num_cells());
    for (Index c = 0; c < u.size(); ++c) u[c] = norm(rng);
    MomentConstraint mc = make_moment("u" + std::to_string(k), sub, u, 0.0);
    mc.target = moment(p, mc);
    inst.cs.moments.push_back(std::move(mc));
  }
  return inst;
}

VariableSpace random_study_space(std::mt19937_64& rng, int p) {
  std::uniform_int_distribution<int> lv(2, 3);
  std::vector<Variable> vars{{"x", {"0", "1"}}};
  std::vector<std::string> y;
  for (int k = 0; k < p; ++k) {
    Variable v{"y" + std::to_string(k), {}};
    const int l = lv(rng);
    for (int i = 0; i < l; ++i) v.levels.push_back(std::to_string(i));
    y.push_back(v.name);
    vars.push_back(std::move(v));
  }
  return VariableSpace::build(std::move(vars), y);
}

FullDataModel random_san_truth(std::mt19937_64& rng, int p, Submodel submodel, LinkKind link,
                               double scale) {
  std::uniform_real_distribution<double> unif(0.2, 1.2);
  std::normal_distribution<double> norm(0.0, scale);
  const VariableSpace space = random_study_space(rng, p);
  Eigen::VectorXd w(space.num_cells());
  for (auto& v : w) v = unif(rng);
  FullDataModel m{ProbTable::from_weights(space, w), SanSpec::make(space, submodel, Link(link))};
  for (int j = 0; j < m.mechanism.num_steps(); ++j) {
    Eigen::VectorXd g(m.mechanism.num_parameters(j));
    for (auto& v : g) v = norm(rng);
    m.mechanism.set_parameters(j, g);
  }
  return m;
}

ProbTable random_full_table(std::mt19937_64& rng, int p) {
  std::uniform_real_distribution<double> unif(0.05, 1.05);
  const VariableSpace space = random_study_space(rng, p);
  std::vector<std::string> y;
  for (int i : space.y_order()) y.push_back(space.variable(i).name);
  const VariableSpace fs = full_data_space(space, y);
  Eigen::VectorXd w(fs.num_cells());
  for (auto& v : w) v = unif(rng);
  return ProbTable::from_weights(fs, w);
}

ToyProblem toy_problem() {
  const VariableSpace space = VariableSpace::build(
      {{"x", {"0", "1"}}, {"a", {"0", "1"}}, {"b", {"0", "1"}}}, {"a", "b"});
  ToyProblem t{{SanSpec::make(space, Submodel::DirectOnly, Link(LinkKind::Logit)), 1.5, 3.0, {}},
               Dataset(space, {{1, -1, -1}, {0, -1, 1}}),
               {Eigen::Vector2d(-0.3, 1.2), Eigen::Vector2d(0.4, -0.9)}};
  t.model.aux.census = Eigen::Vector4d(0.1, 0.2, 0.3, 0.4);
  return t;
}

std::vector<double> toy_exact_distribution(const ToyProblem& toy) {
  const auto sigma = [](double v) { return 1.0 / (1.0 + std::exp(-v)); };
  // P(M = 1) for a and b by level
  const double pa[2] = {sigma(toy.gamma[0][0]), sigma(toy.gamma[0][0] + toy.gamma[0][1])};
  const double pb[2] = {sigma(toy.gamma[1][0]), sigma(toy.gamma[1][0] + toy.gamma[1][1])};
  const Eigen::VectorXd& kappa = toy.model.aux.census;
  std::vector<double> w(8);
  double total = 0.0;
  for (int a1 = 0; a1 < 2; ++a1)
    for (int b1 = 0; b1 < 2; ++b1)
      for (int a2 = 0; a2 < 2; ++a2) {
        const int c1 = 2 * a1 + b1;
        const int c2 = 2 * a2 + 1;
        // x = 1 in cell c1 and x = 0 in cell c2 under independent Beta(1, 1)
        const double theta_part = c1 == c2 ? 1.0 / 6.0 : 1.0 / 4.0;
        const double v = kappa[c1] * pa[a1] * pb[b1] * kappa[c2] * pa[a2] * (1.0 - pb[1]) * theta_part;
        w[static_cast<std::size_t>(4 * a1 + 2 * b1 + a2)] = v;
        total += v;
      }
  for (auto& v : w) v /= total;
  return w;
}

double toy_total_variation(const ToyProblem& toy, const FitResult& fit) {
  const std::vector<double> exact = toy_exact_distribution(toy);
  std::vector<double> freq(8, 0.0);
  double n = 0.0;
  for (const auto& chain : fit.chains)
    for (const auto& s : chain.samples) {
      // imputed entries are record-major: (r1, a), (r1, b), (r2, a)
      freq[static_cast<std::size_t>(4 * s.imputations[0] + 2 * s.imputations[1] + s.imputations[2])] += 1.0;
      n += 1.0;
    }
  double tv = 0.0;
  for (std::size_t k = 0; k < 8; ++k) tv += std::abs(freq[k] / n - exact[k]);
  return 0.5 * tv;
}

}  // namespace san::testing
