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

#ifndef SMOOTHMECH_MODEL_HPP_
#define SMOOTHMECH_MODEL_HPP_

#include <cstddef>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "smoothmech/common.hpp"

namespace smoothmech {

// A player's action: a scalar bid or a small tuple (bid vector, declaration).
using Action = std::vector<double>;
// One player's allocation label(s). Base mechanisms use a single label;
// composed mechanisms concatenate one label per component.
using Allocation = std::vector<double>;

struct Outcome {
  std::vector<Allocation> allocation;
  std::vector<double> payments;
};

class Valuation {
 public:
  virtual ~Valuation() = default;
  // Throws DomainError for an allocation outside the valuation's domain.
  virtual double value(std::span<const double> allocation) const = 0;
  virtual double max_value() const = 0;
};

using ValuationPtr = std::shared_ptr<const Valuation>;
using ValuationProfile = std::vector<ValuationPtr>;

// Explicit list of feasible outcomes; each entry holds one allocation per
// player.
struct OutcomeSpace {
  std::vector<std::vector<Allocation>> feasible;
};

struct Optimum {
  double value = 0.0;
  std::vector<Allocation> allocation;
};

double utility(const Valuation& v, const Outcome& outcome, int player);
double social_welfare(const ValuationProfile& profile, const Outcome& outcome);
// Exhaustive maximum; ties resolve to the first feasible outcome listed.
Optimum optimal_welfare(const ValuationProfile& profile,
                        const OutcomeSpace& space);

// A mechanism restricted to finite per-player action grids. The allocation
// and payment rules accept any real-valued action so that continuous
// deviations can be evaluated against grid profiles.
class Mechanism {
 public:
  explicit Mechanism(std::vector<std::vector<Action>> grids);
  virtual ~Mechanism() = default;

  virtual std::string kind() const = 0;
  virtual Outcome run(std::span<const Action> profile) const = 0;
  virtual Action withdraw_action(int player) const = 0;
  virtual OutcomeSpace outcome_space() const = 0;

  int num_players() const { return static_cast<int>(grids_.size()); }
  const std::vector<Action>& grid(int player) const;
  const std::vector<std::vector<Action>>& grids() const { return grids_; }
  std::size_t profile_count() const;

  virtual Optimum optimum(const ValuationProfile& profile) const;

  // Supremum of P_i over opponent actions that keep allocation x_i, when the
  // mechanism knows it in closed form.
  virtual std::optional<double> willingness_to_pay_closed_form(
      int player, const Action& action, const Allocation& allocation) const;

  // Candidate scalar bids at which player's outcome may change, given the
  // other players' actions in `profile`.
  virtual std::vector<double> deviation_hints(
      int player, std::span<const Action> profile) const;

  // Discrete summary of an outcome; allocation changes with a deviating bid
  // happen only where this summary changes.
  virtual std::vector<double> piece_signature(const Outcome& outcome) const;

 private:
  std::vector<std::vector<Action>> grids_;
};

using MechanismPtr = std::shared_ptr<const Mechanism>;

// Uniform scalar grid {0, cap/(points-1), ..., cap}.
std::vector<Action> uniform_grid(double cap, int points);

// Dense normal-form table of the game a mechanism induces on a valuation
// profile. Profiles are enumerated lexicographically with player 0 most
// significant.
struct GameTable {
  int num_players = 0;
  std::vector<int> num_actions;
  std::vector<std::size_t> strides;
  std::size_t num_profiles = 0;
  std::vector<double> utility;  // [profile * num_players + player]
  std::vector<double> payment;
  std::vector<double> value;
  // Optional: willingness to pay B_i(a_i, X_i(a)); filled on demand.
  std::vector<double> willingness;
  // Optional: nonzero marks a cell whose payment exceeds the player's budget.
  std::vector<unsigned char> invalid;

  std::size_t index(std::span<const int> actions) const;
  void decode(std::size_t profile, std::span<int> actions) const;
  int action_of(std::size_t profile, int player) const;
  // Profile obtained by replacing player's action.
  std::size_t with_action(std::size_t profile, int player, int action) const;
  double welfare(std::size_t profile) const;
  double revenue(std::size_t profile) const;
  double u(std::size_t profile, int player) const {
    return utility[profile * num_players + player];
  }
};

inline constexpr std::size_t kDefaultTableCap = 1'000'000;

GameTable to_normal_form(const Mechanism& mechanism,
                         const ValuationProfile& profile,
                         std::size_t cap = kDefaultTableCap);

}  // namespace smoothmech

#endif  // SMOOTHMECH_MODEL_HPP_
