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

#include "smoothmech/model.hpp"

#include <cmath>
#include <limits>
#include <string>

namespace smoothmech {

double utility(const Valuation& v, const Outcome& outcome, int player) {
  if (player < 0 || player >= static_cast<int>(outcome.allocation.size()))
    throw DomainError("utility: player index out of range");
  return v.value(outcome.allocation[player]) - outcome.payments[player];
}

double social_welfare(const ValuationProfile& profile, const Outcome& outcome) {
  if (profile.size() != outcome.allocation.size())
    throw DomainError("social_welfare: profile and outcome sizes differ");
  double total = 0.0;
  for (std::size_t i = 0; i < profile.size(); ++i)
    total += profile[i]->value(outcome.allocation[i]);
  return total;
}

Optimum optimal_welfare(const ValuationProfile& profile,
                        const OutcomeSpace& space) {
  if (space.feasible.empty())
    throw DomainError("optimal_welfare: empty feasible set");
  Optimum best;
  best.value = -kInf;
  for (const auto& x : space.feasible) {
    if (x.size() != profile.size())
      throw DomainError("optimal_welfare: outcome has wrong player count");
    double w = 0.0;
    for (std::size_t i = 0; i < profile.size(); ++i)
      w += profile[i]->value(x[i]);
    if (w > best.value + kTolerance) {
      best.value = w;
      best.allocation = x;
    }
  }
  return best;
}

Mechanism::Mechanism(std::vector<std::vector<Action>> grids)
    : grids_(std::move(grids)) {
  if (grids_.empty()) throw DomainError("mechanism needs at least one player");
  for (const auto& g : grids_)
    if (g.empty()) throw DomainError("empty action grid");
}

const std::vector<Action>& Mechanism::grid(int player) const {
  if (player < 0 || player >= num_players())
    throw DomainError("player index out of range");
  return grids_[player];
}

std::size_t Mechanism::profile_count() const {
  std::size_t count = 1;
  for (const auto& g : grids_) {
    if (count > std::numeric_limits<std::size_t>::max() / g.size())
      return std::numeric_limits<std::size_t>::max();
    count *= g.size();
  }
  return count;
}

Optimum Mechanism::optimum(const ValuationProfile& profile) const {
  return optimal_welfare(profile, outcome_space());
}

std::optional<double> Mechanism::willingness_to_pay_closed_form(
    int, const Action&, const Allocation&) const {
  return std::nullopt;
}

std::vector<double> Mechanism::deviation_hints(
    int player, std::span<const Action> profile) const {
  std::vector<double> hints;
  for (int j = 0; j < static_cast<int>(profile.size()); ++j) {
    if (j == player) continue;
    hints.insert(hints.end(), profile[j].begin(), profile[j].end());
  }
  return hints;
}

std::vector<double> Mechanism::piece_signature(const Outcome& outcome) const {
  std::vector<double> sig;
  for (const auto& x : outcome.allocation) sig.insert(sig.end(), x.begin(), x.end());
  return sig;
}

std::vector<Action> uniform_grid(double cap, int points) {
  if (points < 2 || !(cap >= 0.0))
    throw DomainError("uniform_grid: need at least 2 points and cap >= 0");
  std::vector<Action> grid;
  grid.reserve(points);
  for (int k = 0; k < points; ++k)
    grid.push_back({cap * k / (points - 1)});
  return grid;
}

std::size_t GameTable::index(std::span<const int> actions) const {
  std::size_t idx = 0;
  for (int i = 0; i < num_players; ++i) idx += strides[i] * actions[i];
  return idx;
}

void GameTable::decode(std::size_t profile, std::span<int> actions) const {
  for (int i = 0; i < num_players; ++i) {
    actions[i] = static_cast<int>(profile / strides[i]);
    profile %= strides[i];
  }
}

int GameTable::action_of(std::size_t profile, int player) const {
  return static_cast<int>((profile / strides[player]) % num_actions[player]);
}

std::size_t GameTable::with_action(std::size_t profile, int player,
                                   int action) const {
  const int current = action_of(profile, player);
  return profile + strides[player] * action - strides[player] * current;
}

double GameTable::welfare(std::size_t profile) const {
  double w = 0.0;
  for (int i = 0; i < num_players; ++i) w += value[profile * num_players + i];
  return w;
}

double GameTable::revenue(std::size_t profile) const {
  double r = 0.0;
  for (int i = 0; i < num_players; ++i) r += payment[profile * num_players + i];
  return r;
}

namespace {

GameTable empty_table(const Mechanism& mechanism, std::size_t cap) {
  GameTable t;
  t.num_players = mechanism.num_players();
  const std::size_t count = mechanism.profile_count();
  if (count > cap)
    throw SizeError("to_normal_form: joint action profile count " +
                        std::to_string(count) + " exceeds cap " +
                        std::to_string(cap),
                    count, cap);
  t.num_profiles = count;
  t.num_actions.resize(t.num_players);
  t.strides.assign(t.num_players, 1);
  for (int i = 0; i < t.num_players; ++i)
    t.num_actions[i] = static_cast<int>(mechanism.grid(i).size());
  for (int i = t.num_players - 2; i >= 0; --i)
    t.strides[i] = t.strides[i + 1] * t.num_actions[i + 1];
  return t;
}

}  // namespace

GameTable to_normal_form(const Mechanism& mechanism,
                         const ValuationProfile& profile, std::size_t cap) {
  if (static_cast<int>(profile.size()) != mechanism.num_players())
    throw DomainError("to_normal_form: profile size differs from player count");
  GameTable t = empty_table(mechanism, cap);
  const int n = t.num_players;
  t.utility.resize(t.num_profiles * n);
  t.payment.resize(t.num_profiles * n);
  t.value.resize(t.num_profiles * n);
  std::vector<int> idx(n);
  std::vector<Action> actions(n);
  for (std::size_t p = 0; p < t.num_profiles; ++p) {
    t.decode(p, idx);
    for (int i = 0; i < n; ++i) actions[i] = mechanism.grid(i)[idx[i]];
    const Outcome o = mechanism.run(actions);
    for (int i = 0; i < n; ++i) {
      const double v = profile[i]->value(o.allocation[i]);
      t.value[p * n + i] = v;
      t.payment[p * n + i] = o.payments[i];
      t.utility[p * n + i] = v - o.payments[i];
    }
  }
  return t;
}

}  // namespace smoothmech
