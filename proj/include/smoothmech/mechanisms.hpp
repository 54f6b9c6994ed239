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

#ifndef SMOOTHMECH_MECHANISMS_HPP_
#define SMOOTHMECH_MECHANISMS_HPP_

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "smoothmech/model.hpp"

namespace smoothmech {

enum class PaymentStyle { kPayYourBid, kThreshold };

std::string to_string(PaymentStyle style);
PaymentStyle payment_style_from_string(const std::string& name);

struct SingleItemFormat {
  enum class Kind { kFirstPrice, kAllPay, kSecondPrice, kHybrid };
  Kind kind = Kind::kFirstPrice;
  double gamma = 1.0;  // hybrid only: probability of charging the own bid

  static SingleItemFormat first_price() { return {Kind::kFirstPrice, 1.0}; }
  static SingleItemFormat all_pay() { return {Kind::kAllPay, 1.0}; }
  static SingleItemFormat second_price() { return {Kind::kSecondPrice, 0.0}; }
  static SingleItemFormat hybrid(double gamma);
  std::string name() const;
};

// Mechanisms whose actions can be single-minded declarations (x_i, theta).
class DirectMechanism {
 public:
  virtual ~DirectMechanism() = default;
  // The (allocation, declared value) pair an action declares, if it is a
  // single-minded declaration.
  virtual std::optional<std::pair<Allocation, double>> declared(
      int player, const Action& action) const = 0;
};

class SingleItemAuction : public Mechanism, public DirectMechanism {
 public:
  SingleItemAuction(SingleItemFormat format, std::vector<std::vector<Action>> grids);

  std::string kind() const override;
  Outcome run(std::span<const Action> profile) const override;
  Action withdraw_action(int) const override { return {0.0}; }
  OutcomeSpace outcome_space() const override;
  std::optional<double> willingness_to_pay_closed_form(
      int player, const Action& action, const Allocation& allocation) const override;
  std::optional<std::pair<Allocation, double>> declared(
      int player, const Action& action) const override;

  const SingleItemFormat& format() const { return format_; }

 private:
  SingleItemFormat format_;
};

// Greedy direct combinatorial auction over single-minded declarations.
// Actions are {item mask, declared value}; mask 0 withdraws. Ranking is
// value / |S|^rank_exponent.
class GreedyCombinatorialAuction : public Mechanism, public DirectMechanism {
 public:
  GreedyCombinatorialAuction(int items, double rank_exponent, PaymentStyle payment,
                             std::vector<std::vector<Action>> grids);

  std::string kind() const override { return "greedy_combinatorial"; }
  Outcome run(std::span<const Action> profile) const override;
  Action withdraw_action(int) const override { return {0.0, 0.0}; }
  OutcomeSpace outcome_space() const override;
  std::optional<double> willingness_to_pay_closed_form(
      int player, const Action& action, const Allocation& allocation) const override;
  std::vector<double> deviation_hints(int player,
                                      std::span<const Action> profile) const override;
  std::optional<std::pair<Allocation, double>> declared(
      int player, const Action& action) const override;

  int items() const { return items_; }
  double rank_exponent() const { return rank_exponent_; }
  PaymentStyle payment() const { return payment_; }
  double score(const Action& action) const;
  // Infimum declared value with which `player` still wins its declared set.
  double threshold(int player, std::span<const Action> profile) const;

 private:
  std::vector<int> allocate(std::span<const Action> profile) const;
  int items_;
  double rank_exponent_;
  PaymentStyle payment_;
};

enum class ClickModel { kPerImpression, kMonotonePerClick, kPositionIndependent };
std::string to_string(ClickModel model);

// n players, n positions. Position j goes to the remaining player with the
// largest ctr[i][j] * b_i. Per-impression auctions use unit ctrs.
class PositionAuction : public Mechanism {
 public:
  PositionAuction(ClickModel model, std::vector<std::vector<double>> ctrs,
                  PaymentStyle payment, std::vector<std::vector<Action>> grids);

  std::string kind() const override;
  Outcome run(std::span<const Action> profile) const override;
  Action withdraw_action(int) const override { return {0.0}; }
  OutcomeSpace outcome_space() const override;
  std::optional<double> willingness_to_pay_closed_form(
      int player, const Action& action, const Allocation& allocation) const override;
  std::vector<double> deviation_hints(int player,
                                      std::span<const Action> profile) const override;

  ClickModel model() const { return model_; }
  PaymentStyle payment() const { return payment_; }
  const std::vector<std::vector<double>>& ctrs() const { return ctrs_; }
  double ctr(int player, int position) const { return ctrs_[player][position - 1]; }
  // Infimum bid keeping `player` at `position` or better.
  double threshold(int player, int position, std::span<const Action> profile) const;

 private:
  std::vector<int> assign(std::span<const Action> profile) const;
  ClickModel model_;
  std::vector<std::vector<double>> ctrs_;
  PaymentStyle payment_;
};

// Validates a ctr matrix: square, entries in (0, 1], non-increasing in
// position.
void validate_ctrs(const std::vector<std::vector<double>>& ctrs);
std::vector<std::vector<double>> separable_ctrs(const std::vector<double>& alpha,
                                                const std::vector<double>& gamma);

// First-price public project auction. Actions are per-project bid vectors;
// allocation label is the chosen project, numbered from 1.
class PublicProjectAuction : public Mechanism {
 public:
  PublicProjectAuction(int projects, std::vector<std::vector<Action>> grids);

  std::string kind() const override { return "public_project"; }
  Outcome run(std::span<const Action> profile) const override;
  Action withdraw_action(int) const override { return Action(projects_, 0.0); }
  OutcomeSpace outcome_space() const override;
  std::optional<double> willingness_to_pay_closed_form(
      int player, const Action& action, const Allocation& allocation) const override;
  std::vector<double> deviation_hints(int player,
                                      std::span<const Action> profile) const override;

  int projects() const { return projects_; }

 private:
  int projects_;
};

class ProportionalBandwidth : public Mechanism {
 public:
  ProportionalBandwidth(double capacity, std::vector<std::vector<Action>> grids);

  std::string kind() const override { return "proportional_bandwidth"; }
  Outcome run(std::span<const Action> profile) const override;
  Action withdraw_action(int) const override { return {0.0}; }
  // Shares are continuous; there is no finite outcome list.
  OutcomeSpace outcome_space() const override;
  // Exact water-filling over concave piecewise-linear curves.
  Optimum optimum(const ValuationProfile& profile) const override;
  std::optional<double> willingness_to_pay_closed_form(
      int player, const Action& action, const Allocation& allocation) const override;
  std::vector<double> piece_signature(const Outcome& outcome) const override;

  double capacity() const { return capacity_; }

 private:
  double capacity_;
};

// Greedy multi-unit auction over non-increasing marginal bids (one per unit).
class MultiUnitGreedy : public Mechanism {
 public:
  MultiUnitGreedy(int units, PaymentStyle payment, std::vector<std::vector<Action>> grids);

  std::string kind() const override { return "multi_unit_greedy"; }
  Outcome run(std::span<const Action> profile) const override;
  Action withdraw_action(int) const override { return Action(units_, 0.0); }
  OutcomeSpace outcome_space() const override;
  std::optional<double> willingness_to_pay_closed_form(
      int player, const Action& action, const Allocation& allocation) const override;

  int units() const { return units_; }
  PaymentStyle payment() const { return payment_; }

 private:
  int units_;
  PaymentStyle payment_;
};

// Uniform price auction; actions are {quantity, per-unit bid}.
class UniformPriceAuction : public Mechanism {
 public:
  UniformPriceAuction(int units, std::vector<std::vector<Action>> grids);

  std::string kind() const override { return "uniform_price"; }
  Outcome run(std::span<const Action> profile) const override;
  Action withdraw_action(int) const override { return {0.0, 0.0}; }
  OutcomeSpace outcome_space() const override;
  std::optional<double> willingness_to_pay_closed_form(
      int player, const Action& action, const Allocation& allocation) const override;
  std::vector<double> deviation_hints(int player,
                                      std::span<const Action> profile) const override;

  int units() const { return units_; }

 private:
  int units_;
};

// Outcome spaces shared by the unit-count mechanisms: every (k_1..k_n) with
// sum at most `units`.
OutcomeSpace unit_count_space(int players, int units);

// Grid builders.
std::vector<std::vector<Action>> scalar_grids(int players, double cap, int points);
std::vector<Action> greedy_declaration_grid(const std::vector<int>& masks,
                                            double cap, int points);
std::vector<Action> project_bid_grid(int projects, double cap, int points);
std::vector<Action> marginal_bid_grid(int units, double cap, int points);
std::vector<Action> quantity_bid_grid(int units, double cap, int points);

// Smallest grid declaration theta such that every grid declaration
// (x_i, theta') with theta' > theta wins x_i against `profile`'s opponents.
// +inf when even the largest grid declaration loses.
double threshold_bid(const Mechanism& mechanism, int player, const Allocation& allocation,
                     std::span<const Action> profile);

// Exhaustive maximum of P_i over opponents' grid actions that leave `player`
// with `allocation` under `action`; -inf when unreachable.
double willingness_to_pay(const Mechanism& mechanism, int player, const Action& action,
                          const Allocation& allocation);

// Supremum over opponents' continuous actions: the closed form when the
// mechanism has one, otherwise the grid maximum.
double willingness_to_pay_sup(const Mechanism& mechanism, int player,
                              const Action& action, const Allocation& allocation);

// Fills table.willingness with the supremum form of B_i(a_i, X_i(a)).
void attach_willingness_to_pay(GameTable& table, const Mechanism& mechanism);

// Infimum scalar value at which `wins` turns true, scanning candidate
// breakpoints; +inf when it never does.
template <class Predicate>
double infimum_winning(std::vector<double> candidates, Predicate wins);

}  // namespace smoothmech

#include "smoothmech/detail/infimum.hpp"

#endif  // SMOOTHMECH_MECHANISMS_HPP_
