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

#ifndef SMOOTHMECH_SMOOTHNESS_HPP_
#define SMOOTHMECH_SMOOTHNESS_HPP_

#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "smoothmech/lp.hpp"
#include "smoothmech/mechanisms.hpp"
#include "smoothmech/model.hpp"

namespace smoothmech {

// Places a scalar deviation bid t into a full action: base with every listed
// coordinate set to t.
struct BidEmbedding {
  Action base;
  std::vector<int> coords;

  Action at(double t) const;
  static BidEmbedding scalar() { return {{0.0}, {0}}; }
};

// A randomized deviation. Continuous families live on a bid coordinate;
// discrete ones list whole actions.
struct DeviationDistribution {
  enum class Family { kPoint, kUniform, kReciprocal, kMixture, kDiscrete, kCustom };
  using Evaluator = std::function<double(const Mechanism&, const Valuation&,
                                         std::span<const Action>, int, const struct EvalOptions&)>;

  Family family = Family::kPoint;
  double point = 0.0;  // kPoint
  double value = 0.0;  // kReciprocal: density beta / (value - t)
  double beta = 1.0;
  double cap = 0.0;    // upper end of the support for kUniform, kReciprocal
  BidEmbedding embed = BidEmbedding::scalar();
  std::vector<std::pair<double, DeviationDistribution>> mixture;
  std::vector<std::pair<double, Action>> discrete;
  // kCustom: expected utility from a caller-supplied routine, with a finite
  // list of representative support actions for audits.
  Evaluator evaluator;
  std::vector<Action> custom_support;
  std::string label;

  static DeviationDistribution at_point(double b, BidEmbedding embed = BidEmbedding::scalar());
  static DeviationDistribution uniform(double cap, BidEmbedding embed = BidEmbedding::scalar());
  // Support [0, (1 - e^{-1/beta}) value], which makes the density integrate
  // to 1. A zero value collapses to the point 0.
  static DeviationDistribution reciprocal(double value, double beta,
                                          BidEmbedding embed = BidEmbedding::scalar());
  static DeviationDistribution mix(std::vector<std::pair<double, DeviationDistribution>> parts);
  static DeviationDistribution over_actions(std::vector<std::pair<double, Action>> actions);
  static DeviationDistribution withdraw(const Mechanism& m, int player);
  static DeviationDistribution custom(std::string label, Evaluator evaluator,
                                      std::vector<Action> support);

  double density(double t) const;
  // Largest action in the support, measured on the bid coordinate.
  double support_max() const;
  // Numerical integral of the density over its support (continuous families)
  // or the weight total.
  double total_mass() const;
  std::string describe() const;
};

struct EvalOptions {
  bool closed_form = true;  // use exact formulas for single-item families
  int scan_samples = 128;
};

// E[v_i(X_i(a'_i, a_-i)) - P_i(a'_i, a_-i)] for a'_i drawn from `dist`;
// profile[player] is ignored.
double deviation_expected_utility(const Mechanism& mechanism, const Valuation& value,
                                  const DeviationDistribution& dist,
                                  std::span<const Action> profile, int player,
                                  const EvalOptions& options = {});

// Distribution of the deviating player's allocation, with its expected
// payment. Requires piecewise-constant allocations in the bid.
struct AllocationLaw {
  std::vector<std::pair<Allocation, double>> outcomes;
  double expected_payment = 0.0;
};

AllocationLaw allocation_law(const Mechanism& mechanism, const DeviationDistribution& dist,
                             std::span<const Action> profile, int player,
                             const EvalOptions& options = {});

struct CanonicalDeviationOptions {
  double beta = 1.0;  // greedy combinatorial family parameter
};

// The catalog deviation for `player`. `optimum` must be the mechanism's
// welfare optimum for `profile`.
DeviationDistribution canonical_deviation(const Mechanism& mechanism, const ValuationProfile& profile,
                                      int player, const Action& own, const Optimum& optimum,
                                      const CanonicalDeviationOptions& options = {});

struct DeviationSource {
  std::function<DeviationDistribution(const Mechanism&, const ValuationProfile&, int,
                                      const Action&, const Optimum&)>
      make;
  // When false the deviation ignores the player's current action, so its
  // utility is evaluated once per opponent profile.
  bool uses_own_action = false;
  std::string name;
};

DeviationSource canonical_deviation_source(CanonicalDeviationOptions options = {});

struct SmoothnessCertificate {
  std::string mechanism;
  std::string deviation;
  bool weak = false;
  double lambda = 0.0;
  double mu1 = 0.0;  // mu for the plain form
  double mu2 = 0.0;
  double margin = kInf;
  bool pass = false;
  std::size_t worst_valuation = 0;
  std::vector<Action> worst_profile;
  std::size_t valuations_checked = 0;
  std::size_t profiles_checked = 0;
  std::string grid_note;
};

struct CertifyOptions {
  double tolerance = kCertificateTolerance;
  int threads = 1;
  EvalOptions eval;
};

// margin = sum_i E[u_i(dev_i, a_-i)] - lambda OPT + mu sum_i P_i(a), minimized
// over every valuation profile and grid action profile.
SmoothnessCertificate certify(const Mechanism& mechanism,
                              const std::vector<ValuationProfile>& profiles, double lambda,
                              double mu, const DeviationSource& source,
                              const CertifyOptions& options = {});

// As certify with mu1 sum_i P_i(a) + mu2 sum_i B_i(a_i, X_i(a)), B in its
// supremum form.
SmoothnessCertificate certify_weak(const Mechanism& mechanism,
                                   const std::vector<ValuationProfile>& profiles, double lambda,
                                   double mu1, double mu2, const DeviationSource& source,
                                   const CertifyOptions& options = {});

struct ConservativeAudit {
  bool pass = true;
  double max_payment = 0.0;
  double max_value = 0.0;
  Action witness_action;
  std::vector<Action> witness_opponents;
};

// Worst-case payment of each support action (over opponents' grid actions and
// their continuous supremum) against the player's maximum value.
ConservativeAudit check_conservative(const Mechanism& mechanism,
                                     const DeviationDistribution& dist, const Valuation& value,
                                     int player);

struct LambdaFit {
  double lambda = 0.0;
  lp::Status status = lp::Status::kInfeasible;
  std::size_t rows = 0;
  std::size_t columns = 0;
};

// Largest lambda for which mixed deviations over grid actions (plus the
// source's deviation as an extra column), one per (player, own action), give
// every profile a nonnegative margin at fixed mu.
LambdaFit fit_lambda(const Mechanism& mechanism, const ValuationProfile& profile, double mu,
                     const DeviationSource& source, const EvalOptions& eval = {},
                     std::size_t max_rows = 20000);

double poa_bound(double lambda, double mu);
double weak_poa_bound(double lambda, double mu1, double mu2);

// Constants of the bandwidth deviation: mu' = (3 + sqrt 3) / 2 and bid scale
// 1 / (mu' (mu' - 1)).
double bandwidth_bid_scale();

}  // namespace smoothmech

#endif  // SMOOTHMECH_SMOOTHNESS_HPP_
