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
#include "smoothmech/composition.hpp"
#include "smoothmech/equilibrium.hpp"

using namespace smoothmech;

namespace {

const double kE1 = 1.0 - std::exp(-1.0);

MechanismPtr first_price(int points) {
  return std::make_shared<SingleItemAuction>(SingleItemFormat::first_price(),
                                             scalar_grids(2, 1, points));
}

std::vector<ValuationProfile> corpus(int count, bool unit_demand, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  const auto space = chain_space(2, 2);
  std::vector<ValuationProfile> out;
  for (int k = 0; k < count; ++k) {
    ValuationProfile p;
    for (int i = 0; i < 2; ++i)
      p.push_back(std::make_shared<TabulatedValuation>(
          unit_demand ? random_unit_demand(space, rng) : random_xos(space, 2, rng)));
    out.push_back(p);
  }
  return out;
}

}  // namespace

TEST_CASE("simultaneous grid is the product of component grids") {
  SimultaneousComposition sim({first_price(4), first_price(4)});
  CHECK(sim.grid(0).size() == 16);
  CHECK(sim.grid(1).size() == 16);
  CHECK(sim.profile_count() == 256);
  CHECK(sim.withdraw_action(0) == Action{0.0, 0.0});
}

TEST_CASE("simultaneous payments add up per component") {
  SimultaneousComposition sim({first_price(11), first_price(11)});
  const std::vector<Action> profile{{0.8, 0.2}, {0.5, 0.6}};
  const Outcome o = sim.run(profile);
  CHECK(o.payments[0] == doctest::Approx(0.8));
  CHECK(o.payments[1] == doctest::Approx(0.6));
  CHECK(o.allocation[0] == Allocation{1.0, 0.0});
  CHECK(o.allocation[1] == Allocation{0.0, 1.0});
}

TEST_CASE("composing one mechanism is the identity") {
  const auto fp = first_price(6);
  SimultaneousComposition sim({fp});
  SequentialComposition seq({fp}, InfoPolicy::kFullBids);
  CHECK(sim.grid(0).size() == fp->grid(0).size());
  CHECK(seq.grid(0).size() == fp->grid(0).size());
  CHECK(SequentialComposition::plan_count({fp}, InfoPolicy::kFullBids, 0) == "6");
  for (const auto& a : fp->grid(0))
    for (const auto& b : fp->grid(1)) {
      const std::vector<Action> p{a, b};
      const Outcome base = fp->run(p);
      const Outcome s = sim.run(p);
      CHECK(s.allocation == base.allocation);
      CHECK(s.payments == base.payments);
    }
  // Plan k of a one-round composition plays grid action k.
  for (std::size_t k = 0; k < 6; ++k)
    for (std::size_t l = 0; l < 6; ++l) {
      const std::vector<Action> plans{{double(k)}, {double(l)}};
      const std::vector<Action> bids{fp->grid(0)[k], fp->grid(1)[l]};
      CHECK(seq.run(plans).payments == fp->run(bids).payments);
    }
}

TEST_CASE("sequential plan counts") {
  std::vector<MechanismPtr> rounds{first_price(2), first_price(2)};
  CHECK(SequentialComposition::plan_count(rounds, InfoPolicy::kNone, 0) == "4");
  // Reduced plans: first bid times one response per opponent bid.
  CHECK(SequentialComposition::plan_count(rounds, InfoPolicy::kFullBids, 0) == "8");
  CHECK(SequentialComposition::plan_count(rounds, InfoPolicy::kOwnOutcomeOnly, 0) == "6");
  std::vector<MechanismPtr> three{first_price(3), first_price(3)};
  CHECK(SequentialComposition::plan_count(three, InfoPolicy::kFullBids, 0) == "81");
  CHECK(SequentialComposition::plan_count(three, InfoPolicy::kNone, 1) == "9");

  SequentialComposition seq(rounds, InfoPolicy::kFullBids);
  CHECK(seq.grid(0).size() == 8);

  // Exact counts in the cap error.
  std::vector<MechanismPtr> big{first_price(11), first_price(11), first_price(11)};
  CHECK_THROWS_AS(SequentialComposition(big, InfoPolicy::kFullBids), SizeError);
  CHECK(SequentialComposition::plan_count(big, InfoPolicy::kNone, 0) == "1331");
}

TEST_CASE("sequential plans respond to the released history") {
  std::vector<MechanismPtr> rounds{first_price(2), first_price(2)};
  SequentialComposition seq(rounds, InfoPolicy::kFullBids);
  // Plans differ only by how they answer the opponent's round-0 bid.
  bool responsive = false;
  for (std::size_t plan = 0; plan < seq.grid(0).size(); ++plan) {
    const int first = seq.plan_action(0, plan, {});
    const std::vector<int> low{0}, high{1};
    CHECK(first == seq.plan_action(0, plan, {}));
    if (seq.plan_action(0, plan, low) != seq.plan_action(0, plan, high)) responsive = true;
  }
  CHECK(responsive);

  SequentialComposition blind(rounds, InfoPolicy::kNone);
  for (std::size_t plan = 0; plan < blind.grid(0).size(); ++plan) {
    const std::vector<int> none{0};
    CHECK(blind.plan_action(0, plan, none) >= 0);
  }
  const auto played = seq.play(std::vector<Action>{{0.0}, {0.0}}, 1);
  CHECK(played.size() == 2);
}

TEST_CASE("willingness to pay is additive over simultaneous components") {
  const auto a = first_price(3);
  const auto b = std::make_shared<SingleItemAuction>(SingleItemFormat::all_pay(),
                                                     scalar_grids(2, 1, 3));
  SimultaneousComposition sim({a, b});
  for (const auto& action : sim.grid(0))
    for (double x0 : {0.0, 1.0})
      for (double x1 : {0.0, 1.0}) {
        const Allocation x{x0, x1};
        const double whole = willingness_to_pay(sim, 0, action, x);
        const double parts = willingness_to_pay(*a, 0, sim.action_part(0, action, 0), {x0}) +
                             willingness_to_pay(*b, 0, sim.action_part(0, action, 1), {x1});
        if (std::isinf(whole) || std::isinf(parts)) {
          CHECK(std::isinf(whole));
          CHECK(std::isinf(parts));
        } else {
          CHECK(whole == doctest::Approx(parts).epsilon(1e-12));
        }
        CHECK(willingness_to_pay_sup(sim, 0, action, x) ==
              doctest::Approx(willingness_to_pay_sup(*a, 0, sim.action_part(0, action, 0), {x0}) +
                              willingness_to_pay_sup(*b, 0, sim.action_part(0, action, 1), {x1})));
      }
}

TEST_CASE("simultaneous certificate matches the components") {
  SimultaneousComposition sim({first_price(5), first_price(5)});
  const auto xs = corpus(20, false, 4);
  const auto c = certify(sim, xs, kE1, 1, simultaneous_deviation_source());
  CHECK(c.pass);
  CHECK(c.margin >= -1e-7);
  CHECK(c.valuations_checked == 20);
  CHECK_FALSE(certify(sim, xs, 0.8, 1, simultaneous_deviation_source()).pass);
}

TEST_CASE("single-component lift reduces to the component deviation") {
  const auto fp = first_price(6);
  SimultaneousComposition sim({fp});
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> u(0.05, 1.0);
  for (int k = 0; k < 5; ++k) {
    ValuationProfile p;
    for (int i = 0; i < 2; ++i)
      p.push_back(std::make_shared<TabulatedValuation>(
          ProductSpace({Coordinate{{0, 1}, 0}}), std::vector<double>{0, u(rng)}));
    const auto direct = certify(*fp, {p}, kE1, 1, canonical_deviation_source());
    const auto lifted = certify(sim, {p}, kE1, 1, simultaneous_deviation_source());
    CHECK(lifted.margin == doctest::Approx(direct.margin).epsilon(1e-9));
  }
}

TEST_CASE("sequential certificates agree across info policies") {
  const auto us = corpus(20, true, 4);
  std::vector<MechanismPtr> rounds{first_price(2), first_price(2)};
  std::vector<bool> verdict_mu2, verdict_mu1;
  std::vector<double> margins;
  for (auto policy : {InfoPolicy::kFullBids, InfoPolicy::kOwnOutcomeOnly, InfoPolicy::kNone}) {
    SequentialComposition seq(rounds, policy);
    const auto c = certify(seq, us, kE1, 2, sequential_deviation_source());
    verdict_mu2.push_back(c.pass);
    margins.push_back(c.margin);
    verdict_mu1.push_back(certify(seq, us, kE1, 1, sequential_deviation_source()).pass);
  }
  CHECK(verdict_mu2 == std::vector<bool>{true, true, true});
  CHECK(verdict_mu1[0] == verdict_mu1[1]);
  CHECK(verdict_mu1[1] == verdict_mu1[2]);
  CHECK(margins[0] >= -1e-7);
}

TEST_CASE("sequential lift rejects valuations that are not unit-demand") {
  std::mt19937_64 rng(2);
  const auto space = chain_space(2, 2);
  ValuationProfile p;
  for (int i = 0; i < 2; ++i) {
    auto v = random_additive(space, rng);
    REQUIRE_FALSE(is_unit_demand(v));
    p.push_back(std::make_shared<TabulatedValuation>(std::move(v)));
  }
  SequentialComposition seq({first_price(2), first_price(2)}, InfoPolicy::kNone);
  CHECK_THROWS_AS(certify(seq, {p}, kE1, 2, sequential_deviation_source()), DomainError);
  CHECK(is_unit_demand(random_unit_demand(space, rng)));
}

TEST_CASE("composed min-CE welfare respects the composed bounds") {
  SimultaneousComposition sim({first_price(4), first_price(4)});
  for (const auto& p : corpus(3, false, 11)) {
    const double opt = sim.optimum(p).value;
    const auto ce = ce_extreme_welfare(to_normal_form(sim, p), WelfareSense::kMin);
    CHECK(ce.welfare >= poa_bound(kE1, 1) * opt - 1e-6);
  }
  SequentialComposition seq({first_price(2), first_price(2)}, InfoPolicy::kFullBids);
  for (const auto& p : corpus(3, true, 12)) {
    const double opt = seq.optimum(p).value;
    const auto ce = ce_extreme_welfare(to_normal_form(seq, p), WelfareSense::kMin);
    CHECK(ce.welfare >= poa_bound(kE1, 2) * opt - 1e-6);
  }
}

TEST_CASE("info policy names round-trip") {
  for (auto policy : {InfoPolicy::kFullBids, InfoPolicy::kOwnOutcomeOnly, InfoPolicy::kNone})
    CHECK(info_policy_from_string(to_string(policy)) == policy);
  CHECK_THROWS_AS(info_policy_from_string("partial"), DomainError);
}
