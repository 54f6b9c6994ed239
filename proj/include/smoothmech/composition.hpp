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


#ifndef SMOOTHMECH_COMPOSITION_HPP_
#define SMOOTHMECH_COMPOSITION_HPP_

#include <cstddef>
#include <string>
#include <vector>

#include "smoothmech/model.hpp"
#include "smoothmech/smoothness.hpp"
#include "smoothmech/valuations.hpp"

namespace smoothmech {

inline constexpr std::size_t kDefaultJointGridCap = 4096;
inline constexpr std::size_t kDefaultPlanCap = 4096;

// All components run at once on their own slice of every player's action.
// Joint actions are concatenations, component 0 most significant in the
// grid order; allocations concatenate and payments add.
class SimultaneousComposition : public Mechanism {
 public:
  explicit SimultaneousComposition(std::vector<MechanismPtr> components,
                                   std::size_t cap = kDefaultJointGridCap);

  std::string kind() const override;
  Outcome run(std::span<const Action> profile) const override;
  Action withdraw_action(int player) const override;
  OutcomeSpace outcome_space() const override;
  std::optional<double> willingness_to_pay_closed_form(
      int player, const Action& action, const Allocation& allocation) const override;

  int size() const { return static_cast<int>(components_.size()); }
  const Mechanism& component(int j) const { return *components_[j]; }
  Action action_part(int player, const Action& action, int j) const;
  Allocation allocation_part(int player, const Allocation& allocation, int j) const;
  // Offset and width of component j inside a player's allocation.
  int allocation_offset(int player, int j) const { return alloc_offset_[player][j]; }
  int allocation_width(int player, int j) const { return alloc_width_[player][j]; }
  std::vector<Action> component_profile(std::span<const Action> profile, int j) const;

 private:
  std::vector<MechanismPtr> components_;
  std::vector<std::vector<int>> action_offset_, action_width_;
  std::vector<std::vector<int>> alloc_offset_, alloc_width_;
};

enum class InfoPolicy { kFullBids, kOwnOutcomeOnly, kNone };
std::string to_string(InfoPolicy policy);
InfoPolicy info_policy_from_string(const std::string& name);

// Rounds run one after another. A player's action is the index of a
// contingency plan: a round-1 action plus a response to every observation
// that can follow the player's own earlier choices. Observations per round:
// the opponents' grid actions (full_bids), the player's own allocation and
// payment (own_outcome_only), or nothing (none).
class SequentialComposition : public Mechanism {
 public:
  SequentialComposition(std::vector<MechanismPtr> rounds, InfoPolicy policy,
                        std::size_t cap = kDefaultPlanCap);

  // Exact number of plans for `player`, in decimal.
  static std::string plan_count(const std::vector<MechanismPtr>& rounds, InfoPolicy policy,
                                int player);

  std::string kind() const override;
  Outcome run(std::span<const Action> profile) const override;
  Action withdraw_action(int player) const override;
  OutcomeSpace outcome_space() const override;

  struct Round {
    std::vector<int> indices;  // grid index per player
    std::vector<Action> actions;
    Outcome outcome;
  };
  // Replays rounds 0..last for a profile of plan indices.
  std::vector<Round> play(std::span<const Action> profile, int last) const;

  int size() const { return static_cast<int>(rounds_.size()); }
  const Mechanism& round(int r) const { return *rounds_[r]; }
  InfoPolicy policy() const { return policy_; }
  int allocation_offset(int player, int r) const { return alloc_offset_[player][r]; }
  int allocation_width(int player, int r) const { return alloc_width_[player][r]; }
  // Grid action of `player` in round r after the given earlier observation
  // indices; exposed for tests.
  int plan_action(int player, std::size_t plan, std::span<const int> observations) const;

  struct Layout;

 private:
  explicit SequentialComposition(Layout layout);

  int observation_index(int player, int r, const Round& round) const;
  std::size_t sub_power(int player, int r, int k) const;

  std::vector<MechanismPtr> rounds_;
  InfoPolicy policy_;
  // sub_[i][r]: plans for rounds r.. from one node; sub_[i][R] = 1.
  std::vector<std::vector<std::size_t>> sub_;
  // obs_size_[i][r][a]: observations after round r when playing a.
  std::vector<std::vector<std::vector<int>>> obs_size_;
  // own_outcome_only keys: obs_keys_[i][r][a] lists (allocation, payment).
  std::vector<std::vector<std::vector<std::vector<std::pair<Allocation, double>>>>> obs_keys_;
  std::vector<std::vector<int>> alloc_offset_, alloc_width_;
};

// Restriction of a valuation over a concatenated allocation to the
// coordinates [offset, offset + width), every other coordinate at bottom.
TabulatedValuation component_valuation(const TabulatedValuation& v, int offset, int width);

// Unit-demand valuation: max over rounds of a per-coordinate value, zero at
// bottom.
TabulatedValuation random_unit_demand(const ProductSpace& space, std::mt19937_64& rng,
                                      double scale = 1.0);
bool is_unit_demand(const TabulatedValuation& v, double tolerance = 1e-12);

// Independent component deviations, one per component, each taken from
// `inner` on the component game whose valuations are the additive XOS
// component supporting x*_i. Valuations must be tabulated over the
// concatenated labels.
DeviationSource simultaneous_deviation_source(DeviationSource inner = canonical_deviation_source());

// Follow the plan until the round j*_i where the player's optimal item is
// worth most, play that round's component deviation against the opponents'
// actual actions, then withdraw. Later rounds are left out of the utility,
// which only lowers it. Valuations must be unit-demand across rounds.
DeviationSource sequential_deviation_source(DeviationSource inner = canonical_deviation_source());

}  // namespace smoothmech

#endif  // SMOOTHMECH_COMPOSITION_HPP_
