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
#include <random>

#include "doctest.h"
#include "smoothmech/mechanisms.hpp"
#include "smoothmech/valuations.hpp"

using namespace smoothmech;

namespace {

std::vector<Action> bids(std::initializer_list<double> b) {
  std::vector<Action> p;
  for (double x : b) p.push_back({x});
  return p;
}

// Single-label valuation over the given labels.
ValuationPtr labelled(std::vector<double> labels, std::vector<double> values) {
  return std::make_shared<TabulatedValuation>(ProductSpace({Coordinate{std::move(labels), 0}}),
                                              std::move(values));
}

ValuationPtr item_value(double v) { return labelled({0, 1}, {0, v}); }

// Exhaustively checks the mechanism-wide invariants on every grid profile.
void check_invariants(const Mechanism& m) {
  const int n = m.num_players();
  std::vector<int> idx(n, 0);
  std::vector<Action> a(n);
  for (std::size_t p = 0; p < m.profile_count(); ++p) {
    std::size_t c = p;
    for (int i = n - 1; i >= 0; --i) {
      idx[i] = static_cast<int>(c % m.grid(i).size());
      c /= m.grid(i).size();
    }
    for (int i = 0; i < n; ++i) a[i] = m.grid(i)[idx[i]];
    const Outcome o = m.run(a);
    for (int i = 0; i < n; ++i) {
      CHECK(o.payments[i] >= 0.0);
      CHECK(willingness_to_pay_sup(m, i, a[i], o.allocation[i]) >= o.payments[i] - 1e-9);
      auto w = a;
      w[i] = m.withdraw_action(i);
      CHECK(m.run(w).payments[i] == 0.0);
    }
  }
}

}  // namespace

TEST_CASE("utility and welfare") {
  const auto v = item_value(1.0);
  Outcome o{{{1.0}}, {0.4}};
  CHECK(utility(*v, o, 0) == doctest::Approx(0.6));
  o.payments[0] = 0.8;
  o.allocation[0] = {1.0};
  CHECK(utility(*item_value(0.5), o, 0) == doctest::Approx(-0.3));
  CHECK_THROWS_AS(utility(*v, Outcome{{{2.0}}, {0.0}}, 0), DomainError);

  ValuationProfile prof{item_value(1.0), item_value(0.6)};
  CHECK(social_welfare(prof, Outcome{{{1.0}, {1.0}}, {0, 0}}) == doctest::Approx(1.6));
  CHECK(social_welfare(prof, Outcome{{{0.0}, {0.0}}, {0, 0}}) == 0.0);

  SingleItemAuction fp(SingleItemFormat::first_price(), scalar_grids(2, 1.0, 5));
  const auto opt = optimal_welfare(prof, fp.outcome_space());
  CHECK(opt.value == doctest::Approx(1.0));
  CHECK(opt.allocation[0] == Allocation{1.0});

  ValuationProfile zero{item_value(0.0), item_value(0.0)};
  const auto z = optimal_welfare(zero, fp.outcome_space());
  CHECK(z.value == 0.0);
  CHECK(z.allocation == fp.outcome_space().feasible.front());
  CHECK_THROWS_AS(optimal_welfare(prof, OutcomeSpace{}), DomainError);
}

TEST_CASE("optimal welfare for single-minded bidders") {
  // Item mask labels: bit 0 is A, bit 1 is B.
  ValuationProfile prof{labelled({0, 1, 2, 3}, {0, 0, 0, 3}), labelled({0, 1, 2, 3}, {0, 2, 0, 2}),
                        labelled({0, 1, 2, 3}, {0, 0, 2, 2})};
  GreedyCombinatorialAuction g(2, 1.0, PaymentStyle::kPayYourBid,
                               std::vector<std::vector<Action>>(3, {{0.0, 0.0}}));
  const auto opt = optimal_welfare(prof, g.outcome_space());
  CHECK(opt.value == doctest::Approx(4.0));
  CHECK(g.outcome_space().feasible.size() == 16);
}

TEST_CASE("normal form table") {
  SingleItemAuction fp(SingleItemFormat::first_price(),
                       {{{0.0}, {0.5}, {0.8}, {1.0}}, {{0.0}, {0.5}, {0.8}, {1.0}}});
  ValuationProfile prof{item_value(1.0), item_value(0.6)};
  const auto t = to_normal_form(fp, prof);
  CHECK(t.num_profiles == 16);
  const std::vector<int> cell{2, 1};
  const auto p = t.index(cell);
  CHECK(t.u(p, 0) == doctest::Approx(0.2));
  CHECK(t.u(p, 1) == 0.0);
  const std::vector<int> withdraw{0, 3};
  CHECK(t.payment[t.index(withdraw) * 2 + 0] == 0.0);
  CHECK(t.u(t.index(withdraw), 0) == 0.0);

  std::vector<int> back(2);
  t.decode(p, back);
  CHECK(back == cell);
  CHECK(t.with_action(p, 1, 3) == t.index(std::vector<int>{2, 3}));

  const auto again = to_normal_form(fp, prof);
  CHECK(again.utility == t.utility);
  CHECK(again.payment == t.payment);
  for (std::size_t q = 0; q < t.num_profiles; ++q) {
    double us = 0.0;
    for (int i = 0; i < 2; ++i) us += t.u(q, i);
    CHECK(t.welfare(q) == doctest::Approx(us + t.revenue(q)));
    CHECK(t.welfare(q) <= 1.0 + 1e-9);
  }
  CHECK_THROWS_AS(to_normal_form(fp, prof, 10), SizeError);
}

TEST_CASE("single item formats") {
  const auto b = bids({0.8, 0.5});
  const auto grids = scalar_grids(2, 1.0, 11);
  SingleItemAuction fp(SingleItemFormat::first_price(), grids);
  SingleItemAuction ap(SingleItemFormat::all_pay(), grids);
  SingleItemAuction sp(SingleItemFormat::second_price(), grids);
  auto o = fp.run(b);
  CHECK(o.allocation[0] == Allocation{1.0});
  CHECK(o.payments == std::vector<double>{0.8, 0.0});
  CHECK(ap.run(b).payments == std::vector<double>{0.8, 0.5});
  CHECK(sp.run(b).payments == std::vector<double>{0.5, 0.0});
  CHECK(fp.run(bids({0.5, 0.5})).allocation[0] == Allocation{1.0});
  CHECK_THROWS_AS(SingleItemFormat::hybrid(1.5), DomainError);
  CHECK_THROWS_AS(fp.run(bids({-0.1, 0.5})), DomainError);

  SingleItemAuction h1(SingleItemFormat::hybrid(1.0), grids);
  SingleItemAuction h0(SingleItemFormat::hybrid(0.0), grids);
  SingleItemAuction half(SingleItemFormat::hybrid(0.5), grids);
  CHECK(half.run(b).payments[0] == doctest::Approx(0.65));
  for (const auto& x : grids[0])
    for (const auto& y : grids[1]) {
      const std::vector<Action> p{x, y};
      CHECK(h1.run(p).payments == fp.run(p).payments);
      CHECK(h1.run(p).allocation == fp.run(p).allocation);
      CHECK(h0.run(p).payments == sp.run(p).payments);
    }
  for (const Mechanism* m : std::initializer_list<const Mechanism*>{&fp, &ap, &sp, &half})
    check_invariants(*m);
}

TEST_CASE("greedy combinatorial auction") {
  const std::vector<Action> p{{3.0, 3.0}, {1.0, 2.0}, {2.0, 2.0}};
  std::vector<std::vector<Action>> grids(3, {{0.0, 0.0}});
  GreedyCombinatorialAuction linear(2, 1.0, PaymentStyle::kPayYourBid, grids);
  auto o = linear.run(p);
  CHECK(o.allocation[0] == Allocation{0.0});
  CHECK(o.allocation[1] == Allocation{1.0});
  CHECK(o.allocation[2] == Allocation{2.0});
  CHECK(o.payments == std::vector<double>{0, 2, 2});

  GreedyCombinatorialAuction root(2, 0.5, PaymentStyle::kPayYourBid, grids);
  o = root.run(p);
  CHECK(o.allocation[0] == Allocation{3.0});
  CHECK(o.payments == std::vector<double>{3, 0, 0});

  // Threshold: each single-item winner is shielded by the other, who blocks
  // the bundle bid, so both thresholds are 0.
  GreedyCombinatorialAuction thr(2, 1.0, PaymentStyle::kThreshold, grids);
  o = thr.run(p);
  CHECK(o.payments[1] == 0.0);
  CHECK(o.payments[2] == 0.0);
  // Threshold bids with player 1 (lowest index) winning ties.
  const std::vector<Action> q{{3.0, 4.0}, {1.0, 2.0}, {2.0, 2.0}};
  CHECK(thr.run(q).payments[0] == doctest::Approx(4.0));
  const std::vector<Action> r{{3.0, 5.0}, {1.0, 2.0}, {2.0, 2.0}};
  CHECK(thr.run(r).payments[0] == doctest::Approx(4.0));

  // One item, ranking by value: first price.
  GreedyCombinatorialAuction one(1, 0.0, PaymentStyle::kPayYourBid,
                                 {greedy_declaration_grid({1}, 1.0, 6),
                                  greedy_declaration_grid({1}, 1.0, 6)});
  SingleItemAuction fp(SingleItemFormat::first_price(), scalar_grids(2, 1.0, 6));
  for (const auto& x : one.grid(0))
    for (const auto& y : one.grid(1)) {
      if (x[0] == 0 || y[0] == 0) continue;
      const std::vector<Action> gp{x, y};
      const std::vector<Action> sp{{x[1]}, {y[1]}};
      CHECK(one.run(gp).payments == fp.run(sp).payments);
    }

  GreedyCombinatorialAuction small(2, 0.5, PaymentStyle::kThreshold,
                                   {greedy_declaration_grid({1, 3}, 2.0, 3),
                                    greedy_declaration_grid({2}, 2.0, 3)});
  check_invariants(small);
  GreedyCombinatorialAuction small_pb(2, 0.5, PaymentStyle::kPayYourBid, small.grids());
  check_invariants(small_pb);
}

TEST_CASE("threshold bid scan") {
  SingleItemAuction fp(SingleItemFormat::first_price(), scalar_grids(2, 1.0, 11));
  const auto p = bids({0.7, 0.0});
  CHECK(threshold_bid(fp, 1, {1.0}, p) == doctest::Approx(0.7));

  GreedyCombinatorialAuction g(1, 0.0, PaymentStyle::kThreshold,
                               {greedy_declaration_grid({1}, 4.0, 5),
                                greedy_declaration_grid({1}, 4.0, 5)});
  const std::vector<Action> q{{1.0, 2.0}, {1.0, 0.0}};
  CHECK(threshold_bid(g, 1, {1.0}, q) == doctest::Approx(2.0));
  // A declaration capped at the opponent's bid never wins for player 2.
  GreedyCombinatorialAuction capped(1, 0.0, PaymentStyle::kThreshold,
                                    {greedy_declaration_grid({1}, 4.0, 5),
                                     greedy_declaration_grid({1}, 2.0, 3)});
  CHECK(threshold_bid(capped, 1, {1.0}, q) == kInf);
}

TEST_CASE("position auctions") {
  const auto grids = scalar_grids(3, 3.0, 4);
  PositionAuction pb(ClickModel::kPerImpression, {}, PaymentStyle::kPayYourBid, grids);
  PositionAuction th(ClickModel::kPerImpression, {}, PaymentStyle::kThreshold, grids);
  const auto b = bids({3, 2, 1});
  auto o = pb.run(b);
  CHECK(o.allocation == std::vector<Allocation>{{1.0}, {2.0}, {3.0}});
  CHECK(o.payments == std::vector<double>{3, 2, 1});
  CHECK(th.run(b).payments == std::vector<double>{2, 1, 0});
  PositionAuction two(ClickModel::kPerImpression, {}, PaymentStyle::kPayYourBid,
                      scalar_grids(2, 2.0, 3));
  CHECK(two.run(bids({2, 2})).allocation[0] == Allocation{1.0});

  for (std::size_t p = 0; p < pb.profile_count(); ++p) {
    std::vector<Action> a{grids[0][p / 16], grids[1][(p / 4) % 4], grids[2][p % 4]};
    const auto x = pb.run(a), y = th.run(a);
    CHECK(x.allocation == y.allocation);
    for (int i = 0; i < 3; ++i) CHECK(y.payments[i] <= x.payments[i] + 1e-12);
  }
  check_invariants(pb);
  check_invariants(th);

  PositionAuction pc(ClickModel::kMonotonePerClick, {{0.9, 0.5}, {0.8, 0.4}},
                     PaymentStyle::kPayYourBid, scalar_grids(2, 2.0, 5));
  o = pc.run(bids({1, 2}));
  CHECK(o.allocation[1] == Allocation{1.0});
  CHECK(o.payments[1] == doctest::Approx(1.6));
  CHECK(o.payments[0] == doctest::Approx(0.5));

  PositionAuction gsp(ClickModel::kPositionIndependent, separable_ctrs({1.0, 0.5}, {1.0, 1.0}),
                      PaymentStyle::kThreshold, scalar_grids(2, 2.0, 5));
  o = gsp.run(bids({2, 1}));
  CHECK(o.payments[0] == doctest::Approx(1.0));
  CHECK(o.payments[1] == 0.0);
  check_invariants(gsp);
  check_invariants(pc);

  CHECK_THROWS_AS(validate_ctrs({{0.5, 0.9}, {0.8, 0.4}}), DomainError);
  CHECK_THROWS_AS(validate_ctrs({{0.5, 0.4}}), DomainError);
}

TEST_CASE("public project auction") {
  PublicProjectAuction m(2, std::vector<std::vector<Action>>(2, project_bid_grid(2, 1.0, 3)));
  auto o = m.run(std::vector<Action>{{1.0, 0.0}, {0.0, 0.5}});
  CHECK(o.allocation[0] == Allocation{1.0});
  CHECK(o.allocation[1] == Allocation{1.0});
  CHECK(o.payments == std::vector<double>{1.0, 0.0});
  o = m.run(std::vector<Action>{{0.5, 0.0}, {0.0, 0.5}});
  CHECK(o.allocation[0] == Allocation{1.0});
  o = m.run(std::vector<Action>{{0.0, 0.0}, {0.0, 0.0}});
  CHECK(o.allocation[1] == Allocation{1.0});
  CHECK(o.payments == std::vector<double>{0.0, 0.0});
  check_invariants(m);
}

TEST_CASE("proportional bandwidth") {
  ProportionalBandwidth m(1.0, scalar_grids(2, 3.0, 4));
  auto o = m.run(bids({1, 1}));
  CHECK(o.allocation[0][0] == doctest::Approx(0.5));
  CHECK(o.payments == std::vector<double>{1, 1});
  o = m.run(bids({3, 1}));
  CHECK(o.allocation[0][0] == doctest::Approx(0.75));
  CHECK(o.allocation[1][0] == doctest::Approx(0.25));
  o = m.run(bids({0, 0}));
  CHECK(o.allocation[0][0] == 0.0);
  CHECK(o.payments == std::vector<double>{0, 0});
  CHECK_THROWS_AS(m.outcome_space(), DomainError);
  check_invariants(m);

  // Water-filling: slopes 2 (to 0.3) and 1 beat slope 1.5 for the second
  // player only after the first segment.
  ValuationProfile prof{std::make_shared<ConcaveCurveValuation>(std::vector<double>{0, 0.3, 1},
                                                                std::vector<double>{0, 0.6, 1.3}),
                        std::make_shared<ConcaveCurveValuation>(std::vector<double>{0, 1},
                                                                std::vector<double>{0, 1.5})};
  const auto opt = m.optimum(prof);
  CHECK(opt.allocation[0][0] == doctest::Approx(0.3));
  CHECK(opt.allocation[1][0] == doctest::Approx(0.7));
  CHECK(opt.value == doctest::Approx(0.6 + 1.05));
  // Brute force over a fine split agrees.
  double best = 0.0;
  for (int k = 0; k <= 1000; ++k) {
    const double s = k / 1000.0;
    const std::vector<double> a{s}, b{1 - s};
    best = std::max(best, prof[0]->value(a) + prof[1]->value(b));
  }
  CHECK(opt.value >= best - 1e-12);
}

TEST_CASE("multi-unit greedy") {
  const auto g = std::vector<std::vector<Action>>(2, marginal_bid_grid(2, 2.0, 3));
  MultiUnitGreedy pb(2, PaymentStyle::kPayYourBid, g);
  MultiUnitGreedy th(2, PaymentStyle::kThreshold, g);
  const std::vector<Action> p{{2.0, 1.0}, {1.5, 0.5}};
  auto o = pb.run(p);
  CHECK(o.allocation == std::vector<Allocation>{{1.0}, {1.0}});
  CHECK(o.payments == std::vector<double>{2.0, 1.5});
  o = pb.run(std::vector<Action>{{2.0, 1.8}, {1.5, 0.0}});
  CHECK(o.allocation == std::vector<Allocation>{{2.0}, {0.0}});
  CHECK(o.payments[0] == doctest::Approx(3.8));
  CHECK(th.run(p).payments == std::vector<double>{1.0, 1.0});
  CHECK_THROWS_AS(pb.run(std::vector<Action>{{1.0, 2.0}, {1.5, 0.5}}), DomainError);
  CHECK(g[0].size() == 6);
  check_invariants(pb);
  check_invariants(th);

  // Truthful concave marginals on two players and two units: greedy is optimal.
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int t = 0; t < 50; ++t) {
    std::vector<Action> m(2);
    ValuationProfile prof;
    for (int i = 0; i < 2; ++i) {
      const double a = u(rng), b = u(rng);
      m[i] = {std::max(a, b), std::min(a, b)};
      prof.push_back(labelled({0, 1, 2}, {0, m[i][0], m[i][0] + m[i][1]}));
    }
    const auto opt = optimal_welfare(prof, pb.outcome_space());
    CHECK(social_welfare(prof, pb.run(m)) == doctest::Approx(opt.value));
  }
}

TEST_CASE("uniform price auction") {
  UniformPriceAuction m3(3, std::vector<std::vector<Action>>(2, quantity_bid_grid(3, 2.0, 3)));
  auto o = m3.run(std::vector<Action>{{2, 2}, {2, 1}});
  CHECK(o.allocation == std::vector<Allocation>{{2.0}, {1.0}});
  CHECK(o.payments == std::vector<double>{2.0, 1.0});
  UniformPriceAuction m4(4, std::vector<std::vector<Action>>(2, quantity_bid_grid(4, 2.0, 3)));
  o = m4.run(std::vector<Action>{{2, 2}, {2, 1}});
  CHECK(o.allocation == std::vector<Allocation>{{2.0}, {2.0}});
  CHECK(o.payments == std::vector<double>{0.0, 0.0});
  UniformPriceAuction m2(2, std::vector<std::vector<Action>>(2, quantity_bid_grid(2, 2.0, 3)));
  o = m2.run(std::vector<Action>{{2, 2}, {1, 1}});
  CHECK(o.allocation == std::vector<Allocation>{{2.0}, {0.0}});
  CHECK(o.payments == std::vector<double>{2.0, 0.0});
  check_invariants(m2);
  check_invariants(m3);
}

TEST_CASE("willingness to pay") {
  const auto grids = scalar_grids(2, 1.0, 11);
  SingleItemAuction sp(SingleItemFormat::second_price(), grids);
  SingleItemAuction fp(SingleItemFormat::first_price(), grids);
  CHECK(willingness_to_pay(sp, 0, {0.8}, {1.0}) == doctest::Approx(0.8));
  CHECK(willingness_to_pay_sup(sp, 0, {0.8}, {1.0}) == doctest::Approx(0.8));
  CHECK(willingness_to_pay(fp, 0, {0.8}, {1.0}) == doctest::Approx(0.8));
  // Player 2 cannot win at bid 0 against any opponent with lowest-index ties.
  CHECK(willingness_to_pay(fp, 1, {0.0}, {1.0}) == -kInf);

  UniformPriceAuction up(2, std::vector<std::vector<Action>>(2, quantity_bid_grid(2, 2.0, 5)));
  CHECK(willingness_to_pay(up, 0, {2.0, 1.5}, {2.0}) == doctest::Approx(3.0));
  CHECK(willingness_to_pay_sup(up, 0, {2.0, 1.5}, {2.0}) == doctest::Approx(3.0));

  // Grid maxima never exceed the closed-form supremum.
  std::vector<std::unique_ptr<Mechanism>> ms;
  ms.push_back(std::make_unique<SingleItemAuction>(SingleItemFormat::hybrid(0.3), grids));
  ms.push_back(std::make_unique<PositionAuction>(ClickModel::kPerImpression,
                                                 std::vector<std::vector<double>>{},
                                                 PaymentStyle::kThreshold, scalar_grids(3, 1.0, 5)));
  ms.push_back(std::make_unique<MultiUnitGreedy>(
      2, PaymentStyle::kThreshold, std::vector<std::vector<Action>>(2, marginal_bid_grid(2, 1.0, 4))));
  ms.push_back(std::make_unique<GreedyCombinatorialAuction>(
      2, 0.5, PaymentStyle::kThreshold,
      std::vector<std::vector<Action>>{greedy_declaration_grid({1, 3}, 1.0, 4),
                                       greedy_declaration_grid({2, 3}, 1.0, 4)}));
  for (const auto& m : ms) {
    for (const auto& a : m->grid(0)) {
      std::vector<Action> p(m->num_players());
      for (int k = 1; k < m->num_players(); ++k) p[k] = m->grid(k)[0];
      p[0] = a;
      for (const auto& x : m->outcome_space().feasible) {
        const double grid = willingness_to_pay(*m, 0, a, x[0]);
        if (grid == -kInf) continue;
        CHECK(grid <= willingness_to_pay_sup(*m, 0, a, x[0]) + 1e-9);
      }
    }
  }

  ValuationProfile prof{item_value(1.0), item_value(0.6)};
  auto t = to_normal_form(fp, prof);
  attach_willingness_to_pay(t, fp);
  for (std::size_t q = 0; q < t.num_profiles; ++q)
    for (int i = 0; i < 2; ++i) CHECK(t.willingness[q * 2 + i] >= t.payment[q * 2 + i] - 1e-9);
}
