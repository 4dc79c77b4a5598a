#include "doctest.h"

#include <cmath>
#include <limits>
#include <random>

#include "afem/adapt.hpp"

using namespace afem;

namespace {

const double kPi = 3.14159265358979323846;

IndicatorSet make_set(std::vector<double> values) {
  IndicatorSet s;
  s.kind = IndicatorSet::Kind::element;
  double t2 = 0.0;
  for (double v : values) t2 += v * v;
  s.values = std::move(values);
  s.total = std::sqrt(t2);
  return s;
}

Problem square_sine_problem() {
  Problem prob;
  prob.name = "square";
  prob.initial = build_initial_mesh("unit_square");
  prob.f = [](Vec2 x) { return 2.0 * kPi * kPi * std::sin(kPi * x.x) * std::sin(kPi * x.y); };
  prob.exact_grad = [](Vec2 x) {
    return Vec2{kPi * std::cos(kPi * x.x) * std::sin(kPi * x.y),
                kPi * std::sin(kPi * x.x) * std::cos(kPi * x.y)};
  };
  return prob;
}

}  // namespace

TEST_CASE("doerfler marking basics") {
  SUBCASE("largest value can carry the whole criterion") {
    MarkResult mk = doerfler_mark(make_set({4.0, 3.0, 2.0, 1.0}), 0.5);
    CHECK(!mk.converged);
    REQUIRE(mk.marked.size() == 1);
    CHECK(mk.marked[0] == 0);
  }

  SUBCASE("equal values need the closed-form count") {
    MarkResult mk = doerfler_mark(make_set(std::vector<double>(16, 1.0)), 0.5);
    CHECK(mk.marked.size() == 4);
    CHECK(mk.marked == std::vector<int>{0, 1, 2, 3});
  }

  SUBCASE("theta one saturates on the positive entries") {
    MarkResult mk = doerfler_mark(make_set({0.5, 0.0, 0.25, 1.0, 0.0}), 1.0);
    CHECK(mk.marked == std::vector<int>{0, 2, 3});
  }

  SUBCASE("ties break toward the smaller id") {
    MarkResult mk = doerfler_mark(make_set({2.0, 2.0, 1.0}), 0.5);
    REQUIRE(mk.marked.size() == 1);
    CHECK(mk.marked[0] == 0);
  }

  SUBCASE("all zero converges") {
    MarkResult mk = doerfler_mark(make_set({0.0, 0.0}), 0.3);
    CHECK(mk.converged);
    CHECK(mk.marked.empty());
  }

  SUBCASE("invalid theta and negative values are rejected") {
    CHECK_THROWS_AS((void)doerfler_mark(make_set({1.0}), 0.0), std::invalid_argument);
    CHECK_THROWS_AS((void)doerfler_mark(make_set({1.0}), 1.0001), std::invalid_argument);
    CHECK_THROWS_AS((void)doerfler_mark(make_set({-1.0}), 0.5), std::invalid_argument);
  }
}

TEST_CASE("doerfler marking is minimal against exhaustive search") {
  std::mt19937 rng(17);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::uniform_int_distribution<int> size(4, 12);
  for (int trial = 0; trial < 10; ++trial) {
    int n = size(rng);
    std::vector<double> v(n);
    for (double& x : v) x = unit(rng) < 0.2 ? 0.0 : unit(rng);
    double theta = (trial % 3 == 0) ? 0.3 : (trial % 3 == 1 ? 0.5 : 0.9);
    double total2 = 0.0;
    for (double x : v) total2 += x * x;
    if (total2 == 0.0) continue;
    MarkResult mk = doerfler_mark(make_set(v), theta);

    int best = n + 1;
    for (int mask = 0; mask < (1 << n); ++mask) {
      double s2 = 0.0;
      int card = 0;
      for (int i = 0; i < n; ++i)
        if (mask & (1 << i)) {
          s2 += v[i] * v[i];
          ++card;
        }
      if (s2 >= theta * theta * total2) best = std::min(best, card);
    }
    CHECK(static_cast<int>(mk.marked.size()) == best);
    double s2 = 0.0;
    for (int i : mk.marked) s2 += v[i] * v[i];
    CHECK(s2 >= theta * theta * total2 * (1.0 - 1e-15));
  }
}

TEST_CASE("contraction factor formula") {
  CHECK(contraction_factor(0.3, {1.6, false}) ==
        doctest::Approx(std::sqrt(1.0 - 0.09 / (9.0 * 2.56))).epsilon(1e-14));
  CHECK(contraction_factor(0.3, {1.6, false}) == doctest::Approx(0.998045).epsilon(1e-6));
  CHECK(contraction_factor(0.3, {0.0, true}) == 1.0);
  CHECK(contraction_factor(1.0, {1.0 / 3.0, false}) == doctest::Approx(0.0).epsilon(1e-12));
  CHECK_THROWS_AS((void)contraction_factor(0.3, {0.0, false}), std::invalid_argument);
  CHECK_THROWS_AS((void)contraction_factor(0.0, {1.0, false}), std::invalid_argument);
  CHECK_THROWS_AS((void)contraction_factor(1.5, {1.0, false}), std::invalid_argument);
}

TEST_CASE("adapt config validation") {
  AdaptConfig cfg;
  CHECK_NOTHROW(cfg.validate());
  AdaptConfig bad = cfg;
  bad.theta = 0.0;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  bad = cfg;
  bad.theta = 1.2;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  bad = cfg;
  bad.beta_max = 2;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  bad.algorithm = Algorithm::element;
  CHECK_NOTHROW(bad.validate());
  bad = cfg;
  bad.clb_max = 0.0;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  bad = cfg;
  bad.p = 0;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
}

TEST_CASE("rate fitting") {
  auto synth = [](const std::vector<double>& dofs, const std::vector<double>& vals) {
    std::vector<AdaptRecord> recs(dofs.size());
    for (size_t i = 0; i < dofs.size(); ++i) {
      recs[i].n_dofs = static_cast<int>(dofs[i]);
      recs[i].error = vals[i];
    }
    return recs;
  };
  auto err = [](const AdaptRecord& r) { return r.error; };

  std::vector<double> dofs = {100, 400, 1600, 6400};
  std::vector<double> vals;
  for (double d : dofs) vals.push_back(std::pow(d, -0.5));
  CHECK(fit_rate(synth(dofs, vals), 4, err) == doctest::Approx(-0.5).epsilon(1e-12));

  CHECK(fit_rate(synth(dofs, {2.0, 2.0, 2.0, 2.0}), 4, err) == doctest::Approx(0.0).epsilon(1e-12));

  CHECK_THROWS_AS((void)fit_rate(synth({100, 200}, {1.0, 0.5}), 4, err), std::invalid_argument);
  CHECK_THROWS_AS((void)fit_rate(synth(dofs, vals), 2, err), std::invalid_argument);
}

TEST_CASE("vertex adaptive run on the square") {
  AdaptConfig cfg;
  cfg.problem = "square";
  cfg.p = 1;
  cfg.theta = 0.3;
  cfg.max_iters = 6;
  AdaptState st = make_state(square_sine_problem(), cfg);
  run_adaptive(st);
  REQUIRE(st.records.size() == 6);

  for (size_t i = 0; i < st.records.size(); ++i) {
    const AdaptRecord& r = st.records[i];
    CHECK(r.level == static_cast<int>(i));
    CHECK(r.marked > 0);
    CHECK(std::isfinite(r.error));
    CHECK(r.error <= r.eta_elem_total);
    CHECK(r.eta_elem_total <= std::sqrt(3.0) * r.eta_vertex_total * (1.0 + 1e-12));
    CHECK(r.q_ctr > 0.0);
    CHECK(r.q_ctr <= 1.0);
    CHECK(r.clb_max >= r.clb_min);
    CHECK(r.clb_max <= 10.0);
    int hist = 0;
    for (int c : r.beta_hist) hist += c;
    CHECK(hist == r.marked);
    if (i > 0) CHECK(r.n_dofs > st.records[i - 1].n_dofs);
  }

  SUBCASE("backfilled ratios and difference norms") {
    for (size_t i = 0; i + 1 < st.records.size(); ++i) {
      const AdaptRecord& r = st.records[i];
      CHECK(std::isfinite(r.err_ratio));
      CHECK(r.err_ratio > 0.0);
      CHECK(std::isfinite(r.eta_ratio));
      CHECK(std::isfinite(r.diff_norm));
      CHECK(r.diff_norm > 0.0);
    }
    CHECK(!std::isfinite(st.records.back().err_ratio));
    CHECK(!std::isfinite(st.records.back().diff_norm));
  }

  SUBCASE("discrete efficiency at every step") {
    for (size_t i = 0; i + 1 < st.records.size(); ++i) {
      const AdaptRecord& r = st.records[i];
      CHECK(r.diff_norm >= r.eta_marked / (std::sqrt(3.0) * r.clb_max) - 1e-9);
    }
  }

  SUBCASE("effectivity and equivalence stay sane") {
    for (const AdaptRecord& r : st.records) {
      CHECK(r.effectivity >= 1.0);
      CHECK(r.effectivity <= 2.0);
      CHECK(std::isfinite(r.zeta_over_eta_max));
      CHECK(std::isfinite(r.eta_over_zeta_max));
      CHECK(r.zeta_over_eta_max > 0.0);
      CHECK(r.eta_over_zeta_max > 0.0);
    }
  }
}

TEST_CASE("Pythagoras identity on a pre-refined square") {
  // The identity is exact for nested Galerkin solutions; what remains is the
  // quadrature error of the analytic data, which scales like h^8 relative to
  // the squared error. Starting from h = 1/8 puts every level below 1e-9.
  Problem prob = square_sine_problem();
  prob.initial = uniform_refine(prob.initial, 7);
  AdaptConfig cfg;
  cfg.max_iters = 4;
  AdaptState st = make_state(prob, cfg);
  run_adaptive(st);
  REQUIRE(st.records.size() == 4);
  for (size_t i = 0; i + 1 < st.records.size(); ++i) {
    const AdaptRecord& r = st.records[i];
    double lhs = st.records[i + 1].error * st.records[i + 1].error;
    double rhs = r.error * r.error - r.diff_norm * r.diff_norm;
    CHECK(std::abs(lhs - rhs) <= 1e-9 * r.error * r.error);
  }
}

TEST_CASE("exactly representable solution converges at level zero") {
  Problem prob;
  prob.name = "poly";
  prob.initial = build_initial_mesh("unit_square");
  prob.initial = uniform_refine(prob.initial, 1);
  prob.g = [](Vec2 x) { return x.x * x.x - x.y * x.y; };
  prob.exact_grad = [](Vec2 x) { return Vec2{2.0 * x.x, -2.0 * x.y}; };
  AdaptConfig cfg;
  cfg.p = 2;
  cfg.max_iters = 5;
  AdaptState st = make_state(prob, cfg);
  run_adaptive(st);
  REQUIRE(st.records.size() == 1);
  CHECK(st.records[0].converged);
  CHECK(st.records[0].marked == 0);
  CHECK(st.converged);
  CHECK_THROWS_AS((void)vertex_adaptive_step(st), std::logic_error);
}

TEST_CASE("element algorithm with theta one refines uniformly") {
  Problem prob;
  prob.name = "lshape_f1";
  prob.initial = build_initial_mesh("lshape");
  prob.f = [](Vec2) { return 1.0; };
  AdaptConfig cfg;
  cfg.theta = 1.0;
  cfg.algorithm = Algorithm::element;
  cfg.max_iters = 3;
  AdaptState st = make_state(prob, cfg);
  run_adaptive(st);
  REQUIRE(st.records.size() == 3);
  for (size_t i = 0; i < st.records.size(); ++i) {
    const AdaptRecord& r = st.records[i];
    CHECK(r.marked == r.n_elem);
    if (i > 0) {
      CHECK(r.n_elem == 2 * st.records[i - 1].n_elem);
      CHECK(r.eta_elem_total < st.records[i - 1].eta_elem_total);
      CHECK(r.zeta_total < st.records[i - 1].zeta_total);
    }
    CHECK(!std::isfinite(r.q_ctr));
    CHECK(r.beta_hist.empty());
  }
}

TEST_CASE("adaptive loop honors the DoF cap") {
  AdaptConfig cfg;
  cfg.max_dofs = 60;
  cfg.max_iters = 50;
  AdaptState st = make_state(square_sine_problem(), cfg);
  run_adaptive(st);
  REQUIRE(st.records.size() >= 2);
  CHECK(st.records.back().n_dofs >= 60);
  for (size_t i = 0; i + 1 < st.records.size(); ++i) CHECK(st.records[i].n_dofs < 60);
}
