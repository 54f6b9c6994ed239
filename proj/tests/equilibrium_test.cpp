// Copyright 2026 The smoothmech Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.


#include <cmath>
#include <memory>
#include <numeric>
#include <random>

#include "doctest.h"
#include "smoothmech/equilibrium.hpp"
#include "smoothmech/valuations.hpp"

using namespace smoothmech;

namespace {

const double kE1 = 1.0 - std::exp(-1.0);

ValuationPtr item(double v) {
  return std::make_shared<TabulatedValuation>(ProductSpace({Coordinate{{0, 1}, 0}}),
                                              std::vector<double>{0, v});
}

SingleItemAuction auction(SingleItemFormat format, int points = 6) {
  return SingleItemAuction(format, scalar_grids(2, 1, points));
}

double total(const std::vector<double>& p) { return std::accumulate(p.begin(), p.end(), 0.0); }

std::vector<double> pure(const GameTable& t, std::vector<int> actions) {
  std::vector<double> p(t.num_profiles, 0.0);
  p[t.index(actions)] = 1.0;
  return p;
}

}  // namespace

TEST_CASE("exact CE bounds on the single-item instance") {
  const ValuationProfile v{item(1.0), item(0.6)};
  for (int points : {6, 11}) {
    auto fp = auction(SingleItemFormat::first_price(), points);
    const auto tf = to_normal_form(fp, v);
    const auto ce = ce_extreme_welfare(tf, WelfareSense::kMin);
    CHECK_FALSE(ce.refinement_empty);
    CHECK(total(ce.probability) == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(incentive_residual(tf, ce.probability) <= 1e-9);
    CHECK(ce.welfare >= kE1 - 1e-6);
    CHECK(verify_poa(ce, 2, 1.0, poa_bound(kE1, 1)).pass);

    auto ap = auction(SingleItemFormat::all_pay(), points);
    const auto ca = ce_extreme_welfare(to_normal_form(ap, v), WelfareSense::kMin);
    CHECK(ca.welfare >= 0.5 - 1e-6);

    auto sp = auction(SingleItemFormat::second_price(), points);
    auto ts = to_normal_form(sp, v);
    attach_willingness_to_pay(ts, sp);
    const auto cs = ce_extreme_welfare(ts, WelfareSense::kMin, Refinement::kNoOverbidding);
    CHECK_FALSE(cs.refinement_empty);
    CHECK(cs.welfare >= 0.5 - 1e-6);
    CHECK(check_no_overbidding(ts, cs.probability).pass);
  }
}

TEST_CASE("grid-6 CE welfare values") {
  // Reference values from independent LP runs on the same tables.
  const ValuationProfile v{item(1.0), item(0.6)};
  auto fp = auction(SingleItemFormat::first_price());
  const auto tf = to_normal_form(fp, v);
  CHECK(ce_extreme_welfare(tf, WelfareSense::kMin).welfare == doctest::Approx(0.866666666667));
  CHECK(ce_extreme_welfare(tf, WelfareSense::kMin, Refinement::kNone, true).welfare <=
        ce_extreme_welfare(tf, WelfareSense::kMin).welfare + 1e-9);
  auto ap = auction(SingleItemFormat::all_pay());
  CHECK(ce_extreme_welfare(to_normal_form(ap, v), WelfareSense::kMin).welfare ==
        doctest::Approx(0.84));
}

TEST_CASE("max CE welfare never exceeds the optimum") {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(0.05, 1.0);
  for (int k = 0; k < 10; ++k) {
    const ValuationProfile v{item(u(rng)), item(u(rng))};
    for (auto f : {SingleItemFormat::first_price(), SingleItemFormat::all_pay(),
                   SingleItemFormat::second_price()}) {
      auto m = auction(f, 5);
      const double opt = m.optimum(v).value;
      const auto t = to_normal_form(m, v);
      const auto hi = ce_extreme_welfare(t, WelfareSense::kMax);
      const auto lo = ce_extreme_welfare(t, WelfareSense::kMin);
      CHECK(hi.welfare <= opt + 1e-9);
      CHECK(lo.welfare <= hi.welfare + 1e-9);
      CHECK(incentive_residual(t, hi.probability) <= 1e-9);
    }
  }
}

TEST_CASE("learning from one round is uniform play") {
  auto fp = auction(SingleItemFormat::first_price());
  const auto t = to_normal_form(fp, {item(1.0), item(0.6)});
  const auto d = swap_regret_learn(t, 1, {.seed = 3});
  CHECK(d.rounds == 1);
  for (double p : d.probability) CHECK(p == doctest::Approx(1.0 / 36.0));
  CHECK(d.incentive_residual > 0.01);
  CHECK_THROWS_AS(swap_regret_learn(t, 0), DomainError);
}

TEST_CASE("constant game has zero regret") {
  auto fp = auction(SingleItemFormat::first_price());
  auto t = to_normal_form(fp, {item(1.0), item(0.6)});
  std::fill(t.utility.begin(), t.utility.end(), 0.25);
  const auto d = swap_regret_learn(t, 50);
  for (double r : d.swap_regret) CHECK(std::abs(r) <= 1e-12);
}

TEST_CASE("swap-regret learning on first price") {
  auto fp = auction(SingleItemFormat::first_price());
  const auto t = to_normal_form(fp, {item(1.0), item(0.6)});
  const auto d = swap_regret_learn(t, 200000, {.seed = 1});
  REQUIRE(d.swap_regret.size() == 2);
  double regret = 0.0;
  for (double r : d.swap_regret) {
    CHECK(r <= 0.02);
    regret += r;
  }
  CHECK(total(d.probability) == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(d.welfare >= kE1 - 0.05);
  const auto ce = ce_extreme_welfare(t, WelfareSense::kMin);
  CHECK(d.welfare >= ce.welfare - regret - 1e-6);
  CHECK(verify_poa(d, 2, 1.0, poa_bound(kE1, 1)).pass);

  const auto again = swap_regret_learn(t, 2000, {.seed = 7, .sampled = true});
  const auto same = swap_regret_learn(t, 2000, {.seed = 7, .sampled = true});
  CHECK(again.probability == same.probability);
}

TEST_CASE("Bayesian first price with two types") {
  auto fp = auction(SingleItemFormat::first_price());
  BayesianGame g;
  for (int i = 0; i < 2; ++i) {
    g.types.push_back({item(0.5), item(1.0)});
    g.priors.push_back({0.5, 0.5});
  }
  const auto r = bayes_best_response(fp, g, {.seed = 1});
  CHECK(r.expected_optimum == doctest::Approx(0.875));
  CHECK(r.epsilon <= 0.02);
  CHECK(r.welfare >= kE1 * 0.875 - 2 * r.epsilon);
  CHECK(r.welfare >= poa_bound(kE1, 1) * r.expected_optimum - 2 * r.epsilon - 1e-6);
  const auto b = check_bluffing(fp, g, r, canonical_deviation_source());
  CHECK(b.max_gain <= r.epsilon + 1e-9);
  for (const auto& per_type : r.strategy)
    for (const auto& mix : per_type) CHECK(total(mix) == doctest::Approx(1.0));
}

TEST_CASE("degenerate prior matches the full-information game") {
  auto fp = auction(SingleItemFormat::first_price());
  BayesianGame full, degenerate;
  for (int i = 0; i < 2; ++i) {
    full.types.push_back({item(i == 0 ? 1.0 : 0.6)});
    full.priors.push_back({1.0});
    degenerate.types.push_back({item(0.3), item(i == 0 ? 1.0 : 0.6)});
    degenerate.priors.push_back({0.0, 1.0});
  }
  const auto a = bayes_best_response(fp, full, {.seed = 2});
  const auto b = bayes_best_response(fp, degenerate, {.seed = 2});
  CHECK(a.welfare == doctest::Approx(b.welfare));
  CHECK(a.expected_optimum == doctest::Approx(1.0));
  CHECK(b.expected_optimum == doctest::Approx(1.0));
  for (int i = 0; i < 2; ++i)
    for (std::size_t k = 0; k < a.strategy[i][0].size(); ++k)
      CHECK(a.strategy[i][0][k] == doctest::Approx(b.strategy[i][1][k]));

  BayesianGame bad = full;
  bad.priors[0] = {0.7};
  CHECK_THROWS_AS(bayes_best_response(fp, bad), DomainError);
}

TEST_CASE("verify_poa") {
  CHECK(verify_poa(0.8667, 0.0, 2, 1.0, kE1).pass);
  CHECK_FALSE(verify_poa(0.8667, 0.0, 2, 1.0, 1.0).pass);
  const auto r = verify_poa(0.62, 0.01, 2, 1.0, kE1);
  CHECK(r.slack == doctest::Approx(0.02 + 1e-7));
  CHECK(r.pass);
  CHECK(r.ratio == doctest::Approx(0.62));
  CHECK_FALSE(verify_poa(0.6, 0.01, 2, 1.0, kE1).pass);
}

TEST_CASE("no-overbidding on pure profiles") {
  const ValuationProfile v{item(0.4), item(0.6)};
  auto sp = SingleItemAuction(SingleItemFormat::second_price(), scalar_grids(2, 1, 11));
  auto t = to_normal_form(sp, v);
  attach_willingness_to_pay(t, sp);
  CHECK(check_no_overbidding(t, pure(t, {4, 6})).pass);    // truthful
  CHECK(check_no_overbidding(t, pure(t, {0, 0})).pass);    // zero bids
  const auto over = check_no_overbidding(t, pure(t, {8, 6}));  // player 0 bids 2v and wins
  CHECK_FALSE(over.pass);
  CHECK(over.player == 0);
  CHECK(check_no_overbidding(sp, v, pure(t, {4, 6})).pass);
}

TEST_CASE("project_to_grid rounds bids up") {
  const auto grid = uniform_grid(1.0, 6);
  const auto p = project_to_grid(DeviationDistribution::at_point(0.3), grid);
  REQUIRE(p.size() == 6);
  CHECK(p[2] == doctest::Approx(1.0));
  CHECK(total(project_to_grid(DeviationDistribution::uniform(1.0), grid)) ==
        doctest::Approx(1.0));
}
