#include <cmath>
#include <random>

#include "doctest.h"
#include "san/error.hpp"
#include "san/full_data.hpp"
#include "san/identify.hpp"
#include "san/io/formats.hpp"
#include "san/projection.hpp"
#include "support/oracles.hpp"

using namespace san;

namespace {

VariableSpace study3() {
  return VariableSpace::build(
      {{"x", {"0", "1"}}, {"a", {"a0", "a1", "a2"}}, {"b", {"b0", "b1"}}, {"c", {"c0", "c1"}}},
      {"a", "b", "c"});
}

ProbTable random_joint(const VariableSpace& s, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> w(0.2, 1.2);
  Eigen::VectorXd v(s.num_cells());
  for (auto& e : v) e = w(rng);
  return make_table(s, v);
}

void randomize(SanSpec& s, std::mt19937_64& rng) {
  std::normal_distribution<double> n01(0.0, 1.0);
  for (int j = 0; j < s.num_steps(); ++j) {
    Eigen::VectorXd g(s.num_parameters(j));
    for (auto& v : g) v = n01(rng);
    s.set_parameters(j, g);
  }
}

double logistic(double t) { return 1.0 / (1.0 + std::exp(-t)); }

}  // namespace

TEST_CASE("zero coefficients give probability one half") {
  const VariableSpace s = study3();
  for (int id = 0; id < 6; ++id) {
    const SanSpec spec = SanSpec::make(s, submodel_from_id(id), Link(LinkKind::Logit));
    std::vector<int> lv(4);
    for (Index c = 0; c < s.num_cells(); ++c) {
      s.cell_levels(c, lv);
      for (int j = 0; j < spec.num_steps(); ++j)
        CHECK(mechanism_prob(spec, j, lv, std::vector<bool>(static_cast<std::size_t>(j), true)) == 0.5);
    }
  }
}

TEST_CASE("direct-only step at its baseline level is the inverse link of alpha") {
  const VariableSpace s = study3();
  SanSpec spec = SanSpec::make(s, Submodel::DirectOnly, Link(LinkKind::Logit));
  spec.set_parameters(0, Eigen::Vector3d(1.0, 0.3, -0.2));
  const std::vector<int> lv{1, 0, 1, 0};
  CHECK(mechanism_prob(spec, 0, lv, {}) == Link(LinkKind::Logit).inverse(1.0));
  CHECK(mechanism_prob(spec, 0, lv, {}) == doctest::Approx(0.7311).epsilon(1e-4));
}

TEST_CASE("missing earlier variables do not move later steps") {
  std::mt19937_64 rng(31);
  const VariableSpace s = study3();
  for (int id = 0; id < 6; ++id) {
    SanSpec spec = SanSpec::make(s, submodel_from_id(id), Link(LinkKind::Probit));
    randomize(spec, rng);
    std::vector<int> pos;
    for (const auto& n : spec.ordering()) pos.push_back(s.require(n));
    std::vector<int> lv(4);
    for (int j = 1; j < spec.num_steps(); ++j)
      for (int mask = 0; mask < (1 << j); ++mask) {
        std::vector<bool> prefix(static_cast<std::size_t>(j));
        for (int k = 0; k < j; ++k) prefix[static_cast<std::size_t>(k)] = (mask >> k) & 1;
        for (Index c = 0; c < s.num_cells(); ++c) {
          s.cell_levels(c, lv);
          const double base = mechanism_prob(spec, j, lv, prefix);
          for (int k = 0; k < j; ++k) {
            if (!prefix[static_cast<std::size_t>(k)]) continue;
            std::vector<int> other = lv;
            const int v = pos[static_cast<std::size_t>(k)];
            for (int l = 0; l < s.variable(v).size(); ++l) {
              other[static_cast<std::size_t>(v)] = l;
              CHECK(mechanism_prob(spec, j, other, prefix) == base);
            }
          }
        }
      }
  }
}

TEST_CASE("ignorable zero mechanism spreads each cell evenly over patterns") {
  std::mt19937_64 rng(32);
  const VariableSpace s = study3();
  const FullDataModel model{random_joint(s, rng), SanSpec::make(s, Submodel::Ignorable, Link(LinkKind::Logit))};
  const ProbTable full = assemble_full_data(model);
  CHECK(full.mass().sum() == doctest::Approx(1.0).epsilon(1e-14));
  std::vector<int> lv(static_cast<std::size_t>(full.space().num_variables()));
  for (Index c = 0; c < full.size(); ++c) {
    full.space().cell_levels(c, lv);
    const Index jc = s.cell_index(std::span<const int>(lv.data(), 4));
    CHECK(std::abs(full[c] - model.joint[jc] / 8.0) < 1e-16);
  }
}

TEST_CASE("single-variable assembly matches direct enumeration") {
  std::mt19937_64 rng(33);
  const VariableSpace s = VariableSpace::build({{"x", {"0", "1"}}, {"y", {"u", "v", "w"}}}, {"y"});
  FullDataModel model{random_joint(s, rng), SanSpec::make(s, Submodel::DirectOnly, Link(LinkKind::Logit))};
  const Eigen::Vector3d g(-0.4, 0.9, -1.3);
  model.mechanism.set_parameters(0, g);
  const ProbTable full = reorder(assemble_full_data(model), {"x", "y", "M[y]"});
  const double beta[3] = {0.0, g[1], g[2]};
  for (int x = 0; x < 2; ++x)
    for (int y = 0; y < 3; ++y) {
      const double f = model.joint[s.cell_index(std::vector<int>{x, y})];
      const double pm = logistic(g[0] + beta[y]);
      CHECK(full[full.space().cell_index(std::vector<int>{x, y, 1})] == doctest::Approx(f * pm).epsilon(1e-14));
      CHECK(full[full.space().cell_index(std::vector<int>{x, y, 0})] ==
            doctest::Approx(f * (1.0 - pm)).epsilon(1e-14));
    }
}

TEST_CASE("simulated missing fractions match the exact table") {
  std::mt19937_64 rng(34);
  const VariableSpace s = study3();
  FullDataModel model{random_joint(s, rng), SanSpec::make(s, Submodel::Ignorable, Link(LinkKind::Logit))};
  randomize(model.mechanism, rng);
  const ProbTable full = assemble_full_data(model);
  const Index n = 100000;
  const Dataset data = simulate(model, n, 5);
  REQUIRE(data.size() == n);
  const auto frac = data.missing_fractions();
  for (const std::string v : {"a", "b", "c"}) {
    const double p = marginalize(full, {"M[" + v + "]"})[1];
    const double se = std::sqrt(p * (1.0 - p) / static_cast<double>(n));
    CAPTURE(v);
    CHECK(std::abs(frac[static_cast<std::size_t>(s.require(v))] - p) < 3.0 * se);
  }
  CHECK(frac[0] == 0.0);
  CHECK(simulate(model, 50, 9) == simulate(model, 50, 9));
  CHECK(!(simulate(model, 50, 9) == simulate(model, 50, 10)));

  const Dataset one = simulate(model, 1, 3);
  REQUIRE(one.size() == 1);
  for (int v = 0; v < 4; ++v) {
    const int l = one.row(0)[static_cast<std::size_t>(v)];
    CHECK((l == kMissing || (l >= 0 && l < s.variable(v).size())));
  }
  CHECK_THROWS_AS(simulate(model, 0, 3), Error);
}

TEST_CASE("a variable that is never missing is skipped") {
  std::mt19937_64 rng(35);
  const VariableSpace s = VariableSpace::build({{"x", {"0", "1"}}, {"a", {"a0", "a1"}}, {"b", {"b0", "b1", "b2"}}},
                                               {"a", "b"});
  const ProbTable joint = random_joint(s, rng);
  const VariableSpace xs = s.subspace({"x"});
  std::vector<CellFunction> mech{CellFunction(xs, Eigen::Vector2d(0.3, 0.6)),
                                 CellFunction(xs, Eigen::Vector2d::Zero())};
  const ProbTable full = assemble_full_data(joint, {"a", "b"}, mech);
  const auto moments = io::indicator_constraints(marginalize(joint, {"a", "b"}));
  const auto rec = reconstruct_algorithm1(materialize(full), moments, Link(LinkKind::Logit), {"a", "b"});
  CHECK(rec.diagnostics[1].skipped);
  CHECK(rec.diagnostics[1].pi == 0.0);
  CHECK(!rec.diagnostics[0].skipped);
  CHECK(rec.mechanisms[1].values().cwiseAbs().maxCoeff() == 0.0);
  CHECK(sup_distance(reorder(rec.full, full.space().names()), full) < 1e-9);

  mech[1] = CellFunction(xs, Eigen::Vector2d::Ones());
  const ProbTable never = assemble_full_data(joint, {"a", "b"}, mech);
  try {
    reconstruct_algorithm1(materialize(never), moments, Link(LinkKind::Logit), {"a", "b"});
    FAIL("expected an identification error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::Unidentifiable);
    CHECK(e.subject() == "b");
  }
}

TEST_CASE("one-variable reconstruction is a single projection") {
  std::mt19937_64 rng(36);
  for (int t = 0; t < 3; ++t) {
    const LinkKind lk = static_cast<LinkKind>(t);
    const ProbTable full = reorder(testing::random_full_table(rng, 1), {"x", "y0", "M[y0]"});
    const VariableSpace& fs = full.space();
    const VariableSpace xy = VariableSpace::build({fs.variable(0), fs.variable(1)}, {"y0"});
    const int nx = xy.variable(0).size();
    const int ny = xy.variable(1).size();

    // g(x, y, M = 0) and g(x, y, M = 1), read straight off the table
    Eigen::VectorXd obs(xy.num_cells());
    Eigen::VectorXd mis(xy.num_cells());
    for (int x = 0; x < nx; ++x)
      for (int y = 0; y < ny; ++y) {
        const Index c = xy.cell_index(std::vector<int>{x, y});
        obs[c] = full[fs.cell_index(std::vector<int>{x, y, 0})];
        mis[c] = full[fs.cell_index(std::vector<int>{x, y, 1})];
      }
    const double pi = mis.sum();
    ConstraintSet cs;
    Eigen::VectorXd gx = Eigen::VectorXd::Zero(nx);
    for (int x = 0; x < nx; ++x)
      for (int y = 0; y < ny; ++y) gx[x] += mis[xy.cell_index(std::vector<int>{x, y})];
    cs.fixed_marginal = make_table(xy.subspace({"x"}), gx);
    for (int y = 0; y < ny; ++y) {
      double total = 0.0, e0 = 0.0;
      for (int x = 0; x < nx; ++x) {
        const Index c = xy.cell_index(std::vector<int>{x, y});
        total += obs[c] + mis[c];
        e0 += obs[c];
      }
      cs.moments.push_back(indicator_moment(xy.variable(1), y, (total - e0) / pi));
    }
    const ProjectionResult direct =
        project(make_table(xy, obs), cs, FGenerator(Link(lk), (1.0 - pi) / pi));

    std::vector<MomentConstraint> moments;
    const ProbTable ym = marginalize(full, {"y0"});
    for (int y = 0; y < ny; ++y) moments.push_back(indicator_moment(ym.space().variable(0), y, ym[y]));
    const auto rec = reconstruct_algorithm1(materialize(full), moments, Link(lk));
    const ProbTable got = reorder(rec.full, {"x", "y0", "M[y0]"});
    CAPTURE(t);
    for (Index c = 0; c < xy.num_cells(); ++c) {
      const auto lv = xy.cell_levels(c);
      CHECK(std::abs(got[fs.cell_index(std::vector<int>{lv[0], lv[1], 1})] - pi * direct.table[c]) < 1e-10);
    }
  }
}

TEST_CASE("observational equivalence detects a changed mechanism") {
  std::mt19937_64 rng(37);
  FullDataModel truth = testing::random_san_truth(rng, 2, Submodel::Full, LinkKind::Logit);
  const ProbTable full = assemble_full_data(truth);
  std::vector<std::string> y;
  for (int i : truth.joint.space().y_order()) y.push_back(truth.joint.space().variable(i).name);
  const auto moments = io::indicator_constraints(marginalize(truth.joint, y));
  const auto same = observational_equivalence(full, full, moments);
  CHECK(same.max_obs_gap == 0.0);
  CHECK(same.max_moment_gap == 0.0);

  Eigen::VectorXd g = truth.mechanism.parameters(0);
  g[0] += 1.0;
  truth.mechanism.set_parameters(0, g);
  CHECK(observational_equivalence(full, assemble_full_data(truth), moments).max_obs_gap > 1e-3);

  const ProbTable other = testing::random_full_table(rng, 1);
  CHECK_THROWS_AS(observational_equivalence(full, other, {}), Error);
}
