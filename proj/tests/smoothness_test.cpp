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
#include "smoothmech/smoothness.hpp"
#include "smoothmech/valuations.hpp"

using namespace smoothmech;

namespace {

const double kE1 = 1.0 - std::exp(-1.0);

ValuationPtr labelled(std::vector<double> labels, std::vector<double> values) {
  std::optional<int> bottom;
  if (labels.front() == 0.0) bottom = 0;
  return std::make_shared<TabulatedValuation>(ProductSpace({Coordinate{std::move(labels), bottom}}),
                                              std::move(values));
}

ValuationPtr item_value(double v) { return labelled({0, 1}, {0, v}); }

std::vector<Action> bids(std::initializer_list<double> b) {
  std::vector<Action> p;
  for (double x : b) p.push_back({x});
  return p;
}

std::vector<ValuationProfile> item_corpus(int count, int players, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.05, 1.0);
  std::vector<ValuationProfile> out;
  for (int k = 0; k < count; ++k) {
    ValuationProfile p;
    for (int i = 0; i < players; ++i) p.push_back(item_value(u(rng)));
    out.push_back(p);
  }
  return out;
}

DeviationSource withdraw_source() {
  return {[](const Mechanism& m, const ValuationProfile&, int i, const Action&, const Optimum&) {
            return DeviationDistribution::withdraw(m, i);
          },
          false, "withdraw"};
}

}  // namespace

TEST_CASE("canonical deviations for single-item auctions") {
  SingleItemAuction fp(SingleItemFormat::first_price(), scalar_grids(2, 1, 11));
  const ValuationProfile v{item_value(1.0), item_value(0.6)};
  const Optimum opt = fp.optimum(v);
  const auto d = canonical_deviation(fp, v, 0, {0.0}, opt);
  CHECK(d.family == DeviationDistribution::Family::kReciprocal);
  CHECK(d.value == doctest::Approx(1.0));
  CHECK(d.cap == doctest::Approx(kE1).epsilon(1e-12));
  const auto low = canonical_deviation(fp, v, 1, {0.0}, opt);
  CHECK(low.family == DeviationDistribution::Family::kPoint);
  CHECK(low.point == 0.0);

  SingleItemAuction hy(SingleItemFormat::hybrid(0.5), scalar_grids(2, 1, 11));
  const auto h = canonical_deviation(hy, v, 0, {0.0}, opt);
  REQUIRE(h.family == DeviationDistribution::Family::kMixture);
  REQUIRE(h.mixture.size() == 2);
  CHECK(h.mixture[0].first == doctest::Approx(0.5));
  CHECK(h.mixture[0].second.family == DeviationDistribution::Family::kReciprocal);
  CHECK(h.mixture[0].second.cap == doctest::Approx(kE1));
  CHECK(h.mixture[1].first == doctest::Approx(0.5));
  CHECK(h.mixture[1].second.family == DeviationDistribution::Family::kPoint);
  CHECK(h.mixture[1].second.point == doctest::Approx(1.0));
}

TEST_CASE("deviation expected utility examples") {
  SingleItemAuction fp(SingleItemFormat::first_price(), scalar_grids(2, 1, 11));
  SingleItemAuction ap(SingleItemFormat::all_pay(), scalar_grids(2, 1, 11));
  const auto v = item_value(1.0);
  const auto rec = DeviationDistribution::reciprocal(1.0, 1.0);
  const auto uni = DeviationDistribution::uniform(1.0);
  EvalOptions quad;
  quad.closed_form = false;
  for (const EvalOptions& o : {EvalOptions{}, quad}) {
    CHECK(deviation_expected_utility(fp, *v, rec, bids({0, 0.3}), 0, o) ==
          doctest::Approx(kE1 - 0.3).epsilon(1e-9));
    CHECK(std::abs(deviation_expected_utility(fp, *v, rec, bids({0, 0.7}), 0, o)) < 1e-12);
    CHECK(deviation_expected_utility(ap, *v, uni, bids({0, 0.3}), 0, o) ==
          doctest::Approx(0.2).epsilon(1e-9));
  }
}

TEST_CASE("closed forms agree with quadrature on the single-item family") {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  EvalOptions quad;
  quad.closed_form = false;
  for (double gamma : {0.0, 0.3, 0.5, 1.0}) {
    for (auto format : {SingleItemFormat::first_price(), SingleItemFormat::all_pay(),
                        SingleItemFormat::second_price(), SingleItemFormat::hybrid(gamma)}) {
      SingleItemAuction m(format, scalar_grids(3, 1, 11));
      for (int k = 0; k < 15; ++k) {
        const double value = 0.05 + u(rng);
        const auto v = item_value(value);
        const auto profile = bids({0, u(rng), u(rng)});
        for (const auto& d : {DeviationDistribution::reciprocal(value, 1.0),
                              DeviationDistribution::reciprocal(value, 0.5),
                              DeviationDistribution::uniform(value),
                              DeviationDistribution::at_point(u(rng)),
                              DeviationDistribution::mix(
                                  {{0.4, DeviationDistribution::reciprocal(value, 1.0)},
                                   {0.6, DeviationDistribution::at_point(value)}})}) {
          const double exact = deviation_expected_utility(m, *v, d, profile, 0);
          const double numeric = deviation_expected_utility(m, *v, d, profile, 0, quad);
          CHECK(std::abs(exact - numeric) <= 1e-7);
        }
      }
    }
  }
}

TEST_CASE("densities integrate to one") {
  for (double beta : {1.0, 0.5, 1.0 / 3.0, 2.0}) {
    const auto d = DeviationDistribution::reciprocal(0.8, beta);
    CHECK(std::abs(d.total_mass() - 1.0) <= 1e-9);
    CHECK(d.cap == doctest::Approx(0.8 * (1 - std::exp(-1 / beta))));
  }
  CHECK(std::abs(DeviationDistribution::uniform(0.7).total_mass() - 1.0) <= 1e-9);
  const auto mixed = DeviationDistribution::mix(
      {{0.25, DeviationDistribution::uniform(1.0)},
       {0.75, DeviationDistribution::reciprocal(1.0, 1.0)}});
  CHECK(std::abs(mixed.total_mass() - 1.0) <= 1e-9);
  CHECK_THROWS_AS(DeviationDistribution::mix({{0.5, DeviationDistribution::uniform(1.0)}}),
                  DomainError);
}

TEST_CASE("allocation law of the reciprocal first-price deviation") {
  SingleItemAuction fp(SingleItemFormat::first_price(), scalar_grids(2, 1, 11));
  const auto law =
      allocation_law(fp, DeviationDistribution::reciprocal(1.0, 1.0), bids({0, 0.3}), 0);
  double win = 0.0, total = 0.0;
  for (const auto& [x, p] : law.outcomes) {
    total += p;
    if (x[0] == 1.0) win += p;
  }
  CHECK(total == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(win == doctest::Approx(1.0 + std::log(0.7)).epsilon(1e-10));
  CHECK(law.expected_payment ==
        doctest::Approx(std::exp(-1.0) + 0.3 + std::log(0.7)).epsilon(1e-10));
  CHECK(win - law.expected_payment == doctest::Approx(0.7 - std::exp(-1.0)).epsilon(1e-10));
}

TEST_CASE("certify single-item claims") {
  const auto corpus = item_corpus(20, 2, 11);
  const auto src = canonical_deviation_source();
  SingleItemAuction fp(SingleItemFormat::first_price(), scalar_grids(2, 1, 11));
  SingleItemAuction ap(SingleItemFormat::all_pay(), scalar_grids(2, 1, 11));
  SingleItemAuction sp(SingleItemFormat::second_price(), scalar_grids(2, 1, 11));

  const ValuationProfile example{item_value(1.0), item_value(0.6)};
  const auto c = certify(fp, {example}, kE1, 1.0, src);
  CHECK(c.pass);
  CHECK(c.margin >= -kCertificateTolerance);

  const auto bad = certify(fp, {example}, 0.99, 1.0, src);
  CHECK_FALSE(bad.pass);
  CHECK(bad.margin < 0.0);
  REQUIRE(bad.worst_profile.size() == 2);

  CHECK(certify(fp, corpus, kE1, 1.0, src).pass);
  CHECK(certify(ap, corpus, 0.5, 1.0, src).pass);
  CHECK(certify_weak(sp, corpus, 1.0, 0.0, 1.0, src).pass);
  CHECK(certify_weak(sp, {example}, 1.0, 0.0, 1.0, src).pass);
  for (double g : {0.0, 0.5, 1.0}) {
    SingleItemAuction hy(SingleItemFormat::hybrid(g), scalar_grids(2, 1, 11));
    CHECK(certify_weak(hy, corpus, g * kE1 + (1 - g) * (1 - g), 1.0, (1 - g) * (1 - g), src).pass);
  }

  for (const Mechanism* m : std::initializer_list<const Mechanism*>{&fp, &ap, &sp})
    CHECK(certify(*m, corpus, 0.0, 0.0, withdraw_source()).pass);
}

TEST_CASE("certificates are independent of the thread count") {
  const auto corpus = item_corpus(6, 2, 5);
  SingleItemAuction fp(SingleItemFormat::first_price(), scalar_grids(2, 1, 11));
  CertifyOptions one, four;
  four.threads = 4;
  const auto a = certify(fp, corpus, 0.9, 1.0, canonical_deviation_source(), one);
  const auto b = certify(fp, corpus, 0.9, 1.0, canonical_deviation_source(), four);
  CHECK(a.margin == b.margin);
  CHECK(a.worst_valuation == b.worst_valuation);
  CHECK(a.worst_profile == b.worst_profile);
}

TEST_CASE("catalog certificates on small corpora") {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0.05, 1.0);
  const auto src = canonical_deviation_source();

  SUBCASE("position auction per impression") {
    std::vector<ValuationProfile> vs;
    for (int k = 0; k < 20; ++k) {
      ValuationProfile p;
      for (int i = 0; i < 2; ++i) {
        const double a = u(rng), b = u(rng) * a;
        p.push_back(labelled({1, 2}, {a, b}));
      }
      vs.push_back(p);
    }
    PositionAuction pb(ClickModel::kPerImpression, {}, PaymentStyle::kPayYourBid,
                       scalar_grids(2, 1, 6));
    PositionAuction th(ClickModel::kPerImpression, {}, PaymentStyle::kThreshold,
                       scalar_grids(2, 1, 6));
    CHECK(certify(pb, vs, 0.5, 1.0, src).pass);
    CHECK(certify_weak(th, vs, 0.5, 0.0, 1.0, src).pass);
  }
  SUBCASE("public project") {
    std::vector<ValuationProfile> vs;
    for (int k = 0; k < 20; ++k) {
      ValuationProfile p;
      for (int i = 0; i < 2; ++i) p.push_back(labelled({1, 2}, {u(rng), u(rng)}));
      vs.push_back(p);
    }
    PublicProjectAuction m(2, std::vector<std::vector<Action>>(2, project_bid_grid(2, 1, 5)));
    CHECK(certify(m, vs, (1 - std::exp(-2.0)) / 2, 1.0, src).pass);
  }
  SUBCASE("multi-unit greedy and uniform price") {
    std::vector<ValuationProfile> vs;
    for (int k = 0; k < 20; ++k) {
      ValuationProfile p;
      for (int i = 0; i < 2; ++i) {
        const double a = u(rng), b = u(rng) * a;
        p.push_back(labelled({0, 1, 2}, {0, a, a + b}));
      }
      vs.push_back(p);
    }
    MultiUnitGreedy m(2, PaymentStyle::kPayYourBid,
                      std::vector<std::vector<Action>>(2, marginal_bid_grid(2, 1, 5)));
    CHECK(certify(m, vs, 0.5 * kE1, 1.0, src).pass);
    UniformPriceAuction up(2, std::vector<std::vector<Action>>(2, quantity_bid_grid(2, 1, 5)));
    CHECK(certify_weak(up, vs, 0.5 * kE1, 0.0, 1.0, src).pass);
  }
  SUBCASE("bandwidth") {
    std::vector<ValuationProfile> vs;
    for (int k = 0; k < 20; ++k) {
      ValuationProfile p;
      for (int i = 0; i < 2; ++i) {
        const double s1 = 2 * u(rng), s2 = u(rng) * s1;
        p.push_back(std::make_shared<ConcaveCurveValuation>(
            std::vector<double>{0, 0.5, 1}, std::vector<double>{0, 0.5 * s1, 0.5 * (s1 + s2)}));
      }
      vs.push_back(p);
    }
    ProportionalBandwidth m(1.0, scalar_grids(2, 1, 6));
    CHECK(certify(m, vs, 2 - std::sqrt(3.0), 1.0, src).pass);
  }
}

TEST_CASE("conservative audits") {
  SingleItemAuction fp(SingleItemFormat::first_price(), scalar_grids(2, 1, 11));
  SingleItemAuction ap(SingleItemFormat::all_pay(), scalar_grids(2, 1, 11));
  const auto v = item_value(1.0);

  const auto rec = check_conservative(fp, DeviationDistribution::reciprocal(1.0, 1.0), *v, 0);
  CHECK(rec.pass);
  CHECK(rec.max_payment == doctest::Approx(kE1));
  CHECK(check_conservative(ap, DeviationDistribution::uniform(1.0), *v, 0).pass);

  const auto over = check_conservative(fp, DeviationDistribution::at_point(2.0), *v, 0);
  CHECK_FALSE(over.pass);
  CHECK(over.max_payment > over.max_value);
  REQUIRE(over.witness_action.size() == 1);
  CHECK(over.witness_action[0] == doctest::Approx(2.0));
  CHECK(over.witness_opponents.size() == 2);

  // Canonical deviations of the position, multi-unit, bandwidth and greedy
  // auctions on random instances.
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> u(0.05, 1.0);
  PositionAuction pos(ClickModel::kPerImpression, {}, PaymentStyle::kPayYourBid,
                      scalar_grids(2, 1, 6));
  MultiUnitGreedy mu(2, PaymentStyle::kPayYourBid,
                     std::vector<std::vector<Action>>(2, marginal_bid_grid(2, 1, 5)));
  UniformPriceAuction up(2, std::vector<std::vector<Action>>(2, quantity_bid_grid(2, 1, 5)));
  ProportionalBandwidth bw(1.0, scalar_grids(2, 1, 6));
  GreedyCombinatorialAuction gr(
      2, 0.0, PaymentStyle::kPayYourBid,
      std::vector<std::vector<Action>>(2, greedy_declaration_grid({1, 2, 3}, 1, 5)));
  for (int k = 0; k < 20; ++k) {
    const double a = u(rng), b = u(rng) * a, c = u(rng), d = u(rng) * c;
    auto audit = [&](const Mechanism& m, const ValuationProfile& p) {
      const Optimum opt = m.optimum(p);
      for (int i = 0; i < 2; ++i) {
        const auto dev = canonical_deviation(m, p, i, m.grid(i)[0], opt);
        CHECK(check_conservative(m, dev, *p[i], i).pass);
      }
    };
    audit(pos, {labelled({1, 2}, {a, b}), labelled({1, 2}, {c, d})});
    audit(mu, {labelled({0, 1, 2}, {0, a, a + b}), labelled({0, 1, 2}, {0, c, c + d})});
    audit(up, {labelled({0, 1, 2}, {0, a, a + b}), labelled({0, 1, 2}, {0, c, c + d})});
    audit(bw, {std::make_shared<ConcaveCurveValuation>(std::vector<double>{0, 0.5, 1},
                                                       std::vector<double>{0, a, a + b}),
               std::make_shared<ConcaveCurveValuation>(std::vector<double>{0, 0.5, 1},
                                                       std::vector<double>{0, c, c + d})});
    audit(gr, {labelled({0, 1, 2, 3}, {0, a, 0, a}), labelled({0, 1, 2, 3}, {0, 0, 0, c})});
  }
}

TEST_CASE("fit_lambda dominates certified parameters") {
  const ValuationProfile v{item_value(1.0), item_value(0.6)};
  const auto src = canonical_deviation_source();
  SingleItemAuction fp(SingleItemFormat::first_price(), scalar_grids(2, 1, 11));
  SingleItemAuction ap(SingleItemFormat::all_pay(), scalar_grids(2, 1, 11));
  const auto f = fit_lambda(fp, v, 1.0, src);
  CHECK(f.status == lp::Status::kOptimal);
  CHECK(certify(fp, {v}, kE1, 1.0, src).pass);
  CHECK(f.lambda >= kE1 - 1e-6);
  const auto g = fit_lambda(ap, v, 1.0, src);
  CHECK(g.lambda >= 0.5 - 1e-6);
  // Certifying at the fitted value with the canonical deviation can only fail.
  CHECK_FALSE(certify(fp, {v}, f.lambda + 0.05, 1.0, src).pass);
}

TEST_CASE("fit_lambda on a one-action game") {
  // One player, one action: the margin row reads u + mu P >= lambda OPT.
  SingleItemAuction m(SingleItemFormat::first_price(), {{{0.5}}});
  const ValuationProfile v{item_value(1.0)};
  DeviationSource same{[](const Mechanism&, const ValuationProfile&, int, const Action&,
                          const Optimum&) { return DeviationDistribution::at_point(0.5); },
                       false, "same"};
  for (double mu : {0.0, 0.5, 1.0}) {
    const auto f = fit_lambda(m, v, mu, same);
    CHECK(f.status == lp::Status::kOptimal);
    CHECK(f.lambda == doctest::Approx(0.5 + mu * 0.5).epsilon(1e-9));
  }
}

TEST_CASE("price of anarchy bounds") {
  CHECK(poa_bound(kE1, 1.0) == doctest::Approx(0.63212).epsilon(1e-5));
  CHECK(weak_poa_bound(1.0, 0.0, 1.0) == doctest::Approx(0.5));
  CHECK(poa_bound(2 - std::sqrt(3.0), 1.0) == doctest::Approx(0.26795).epsilon(1e-5));
  CHECK(poa_bound(0.5, 2.0) == doctest::Approx(0.25));
  CHECK(weak_poa_bound(0.5, 2.0, 1.0) == doctest::Approx(0.5 / 3));
  CHECK(bandwidth_bid_scale() == doctest::Approx(1.0 / (2.3660254037844 * 1.3660254037844)));
}
