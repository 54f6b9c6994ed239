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


#include "smoothmech/composition.hpp"

#include <algorithm>
#include <boost/multiprecision/cpp_int.hpp>
#include <cmath>
#include <map>
#include <memory>
#include <mutex>
#include <random>

namespace smoothmech {

namespace {

using boost::multiprecision::cpp_int;

void check_components(const std::vector<MechanismPtr>& cs) {
  if (cs.empty()) throw DomainError("composition needs at least one component");
  for (const auto& c : cs)
    if (!c) throw DomainError("composition component is null");
  const int n = cs[0]->num_players();
  for (const auto& c : cs)
    if (c->num_players() != n) throw DomainError("composition components disagree on player count");
}

std::vector<Action> withdraw_profile(const Mechanism& m) {
  std::vector<Action> a;
  for (int i = 0; i < m.num_players(); ++i) a.push_back(m.withdraw_action(i));
  return a;
}

std::vector<std::vector<Action>> joint_grids(const std::vector<MechanismPtr>& cs,
                                             std::size_t cap) {
  check_components(cs);
  const int n = cs[0]->num_players();
  std::vector<std::vector<Action>> grids(n);
  for (int i = 0; i < n; ++i) {
    std::size_t size = 1;
    for (const auto& c : cs) {
      size *= c->grid(i).size();
      if (size > cap) throw SizeError("simultaneous composition: joint grid too large", size, cap);
    }
    std::vector<Action> cur{Action{}};
    for (const auto& c : cs) {
      std::vector<Action> next;
      for (const auto& prefix : cur)
        for (const auto& a : c->grid(i)) {
          Action joint = prefix;
          joint.insert(joint.end(), a.begin(), a.end());
          next.push_back(std::move(joint));
        }
      cur = std::move(next);
    }
    grids[i] = std::move(cur);
  }
  return grids;
}

// Allocation widths per player and component from an all-withdraw run.
void allocation_layout(const std::vector<MechanismPtr>& cs, std::vector<std::vector<int>>& offset,
                       std::vector<std::vector<int>>& width) {
  const int n = cs[0]->num_players();
  offset.assign(n, {});
  width.assign(n, {});
  std::vector<int> total(n, 0);
  for (const auto& c : cs) {
    const Outcome o = c->run(withdraw_profile(*c));
    for (int i = 0; i < n; ++i) {
      offset[i].push_back(total[i]);
      width[i].push_back(static_cast<int>(o.allocation[i].size()));
      total[i] += width[i].back();
    }
  }
}

OutcomeSpace product_space(const std::vector<MechanismPtr>& cs) {
  const int n = cs[0]->num_players();
  std::vector<std::vector<Allocation>> cur{std::vector<Allocation>(n)};
  for (const auto& c : cs) {
    const auto part = c->outcome_space();
    std::vector<std::vector<Allocation>> next;
    for (const auto& x : cur)
      for (const auto& y : part.feasible) {
        auto z = x;
        for (int i = 0; i < n; ++i) z[i].insert(z[i].end(), y[i].begin(), y[i].end());
        next.push_back(std::move(z));
      }
    cur = std::move(next);
    if (cur.size() > kDefaultTableCap)
      throw SizeError("composed outcome space too large", cur.size(), kDefaultTableCap);
  }
  return {std::move(cur)};
}

void decode_round(const Mechanism& m, std::size_t p, std::vector<int>& idx) {
  for (int i = m.num_players() - 1; i >= 0; --i) {
    idx[i] = static_cast<int>(p % m.grid(i).size());
    p /= m.grid(i).size();
  }
}

std::size_t plan_of(const Action& a, std::size_t count) {
  if (a.size() != 1 || !(a[0] >= 0.0) || a[0] != std::floor(a[0]) ||
      a[0] >= static_cast<double>(count))
    throw DomainError("sequential composition: action is not a plan index");
  return static_cast<std::size_t>(a[0]);
}

bool same_key(const std::pair<Allocation, double>& k, const Allocation& x, double p) {
  return k.first == x && k.second == p;
}

const TabulatedValuation& tabulated(const Valuation& v) {
  const auto* t = dynamic_cast<const TabulatedValuation*>(&v);
  if (!t) throw DomainError("composed deviations need tabulated valuations");
  return *t;
}

ProductSpace subspace(const ProductSpace& space, int offset, int width) {
  if (offset < 0 || width < 0 || offset + width > space.dims())
    throw DomainError("component coordinates fall outside the valuation's space");
  std::vector<Coordinate> coords;
  for (int c = 0; c < width; ++c) coords.push_back(space.coordinate(offset + c));
  return ProductSpace(std::move(coords));
}

Allocation bottom_labels(const ProductSpace& space) {
  Allocation x;
  for (int j = 0; j < space.dims(); ++j) {
    const auto& c = space.coordinate(j);
    if (!c.bottom) throw DomainError("composed deviations need a bottom label on every coordinate");
    x.push_back(c.labels[*c.bottom]);
  }
  return x;
}

// Largest actions a deviation can take; used as audit support.
std::vector<Action> extremes(const DeviationDistribution& d) {
  using Family = DeviationDistribution::Family;
  switch (d.family) {
    case Family::kPoint: return {d.embed.at(d.point)};
    case Family::kUniform:
    case Family::kReciprocal: return {d.embed.at(0.0), d.embed.at(d.cap)};
    case Family::kMixture: {
      std::vector<Action> out;
      for (const auto& [_, part] : d.mixture) {
        auto e = extremes(part);
        out.insert(out.end(), e.begin(), e.end());
      }
      return out;
    }
    case Family::kDiscrete: {
      std::vector<Action> out;
      for (const auto& [_, a] : d.discrete) out.push_back(a);
      return out;
    }
    case Family::kCustom: return d.custom_support;
  }
  return {};
}

}  // namespace

// ---------------------------------------------------------------------------
// Simultaneous

SimultaneousComposition::SimultaneousComposition(std::vector<MechanismPtr> components,
                                                 std::size_t cap)
    : Mechanism(joint_grids(components, cap)), components_(std::move(components)) {
  const int n = num_players();
  action_offset_.assign(n, {});
  action_width_.assign(n, {});
  for (int i = 0; i < n; ++i) {
    int total = 0;
    for (const auto& c : components_) {
      const int w = static_cast<int>(c->grid(i).front().size());
      for (const auto& a : c->grid(i))
        if (static_cast<int>(a.size()) != w)
          throw DomainError("component grid mixes action widths");
      action_offset_[i].push_back(total);
      action_width_[i].push_back(w);
      total += w;
    }
  }
  allocation_layout(components_, alloc_offset_, alloc_width_);
}

std::string SimultaneousComposition::kind() const {
  std::string s = "simultaneous[";
  for (std::size_t j = 0; j < components_.size(); ++j)
    s += (j ? "," : "") + components_[j]->kind();
  return s + "]";
}

Action SimultaneousComposition::action_part(int player, const Action& action, int j) const {
  const int off = action_offset_[player][j], w = action_width_[player][j];
  if (static_cast<int>(action.size()) < off + w)
    throw DomainError("joint action is shorter than the component layout");
  return Action(action.begin() + off, action.begin() + off + w);
}

Allocation SimultaneousComposition::allocation_part(int player, const Allocation& allocation,
                                                    int j) const {
  const int off = alloc_offset_[player][j], w = alloc_width_[player][j];
  return Allocation(allocation.begin() + off, allocation.begin() + off + w);
}

std::vector<Action> SimultaneousComposition::component_profile(std::span<const Action> profile,
                                                               int j) const {
  std::vector<Action> out;
  for (int i = 0; i < num_players(); ++i) out.push_back(action_part(i, profile[i], j));
  return out;
}

Outcome SimultaneousComposition::run(std::span<const Action> profile) const {
  const int n = num_players();
  Outcome o{std::vector<Allocation>(n), std::vector<double>(n, 0.0)};
  for (int j = 0; j < size(); ++j) {
    const Outcome part = components_[j]->run(component_profile(profile, j));
    for (int i = 0; i < n; ++i) {
      o.allocation[i].insert(o.allocation[i].end(), part.allocation[i].begin(),
                             part.allocation[i].end());
      o.payments[i] += part.payments[i];
    }
  }
  return o;
}

Action SimultaneousComposition::withdraw_action(int player) const {
  Action a;
  for (const auto& c : components_) {
    const Action w = c->withdraw_action(player);
    a.insert(a.end(), w.begin(), w.end());
  }
  return a;
}

OutcomeSpace SimultaneousComposition::outcome_space() const { return product_space(components_); }

std::optional<double> SimultaneousComposition::willingness_to_pay_closed_form(
    int player, const Action& action, const Allocation& allocation) const {
  double total = 0.0;
  for (int j = 0; j < size(); ++j) {
    const auto part = components_[j]->willingness_to_pay_closed_form(
        player, action_part(player, action, j), allocation_part(player, allocation, j));
    if (!part) return std::nullopt;
    total += *part;
  }
  return total;
}

// ---------------------------------------------------------------------------
// Sequential

std::string to_string(InfoPolicy policy) {
  switch (policy) {
    case InfoPolicy::kFullBids: return "full_bids";
    case InfoPolicy::kOwnOutcomeOnly: return "own_outcome_only";
    case InfoPolicy::kNone: return "none";
  }
  return "?";
}

InfoPolicy info_policy_from_string(const std::string& name) {
  if (name == "full_bids") return InfoPolicy::kFullBids;
  if (name == "own_outcome_only") return InfoPolicy::kOwnOutcomeOnly;
  if (name == "none") return InfoPolicy::kNone;
  throw DomainError("unknown info policy '" + name + "'");
}

struct SequentialComposition::Layout {
  std::vector<MechanismPtr> rounds;
  InfoPolicy policy = InfoPolicy::kFullBids;
  std::vector<std::vector<Action>> grids;
  std::vector<std::vector<std::size_t>> sub;
  std::vector<std::vector<std::vector<int>>> obs_size;
  std::vector<std::vector<std::vector<std::vector<std::pair<Allocation, double>>>>> obs_keys;
  std::vector<std::vector<cpp_int>> exact;
};

namespace {

SequentialComposition::Layout build_layout(std::vector<MechanismPtr> rounds, InfoPolicy policy,
                                           std::size_t cap, bool enforce_cap) {
  check_components(rounds);
  SequentialComposition::Layout L;
  L.policy = policy;
  const int n = rounds[0]->num_players();
  const int R = static_cast<int>(rounds.size());
  L.obs_size.assign(n, std::vector<std::vector<int>>(R));
  L.obs_keys.assign(n, std::vector<std::vector<std::vector<std::pair<Allocation, double>>>>(R));
  for (int r = 0; r < R; ++r) {
    const Mechanism& m = *rounds[r];
    for (int i = 0; i < n; ++i) {
      const int actions = static_cast<int>(m.grid(i).size());
      L.obs_keys[i][r].assign(actions, {});
      std::size_t opponents = 1;
      for (int k = 0; k < n; ++k)
        if (k != i) opponents *= m.grid(k).size();
      L.obs_size[i][r].assign(actions, policy == InfoPolicy::kFullBids
                                           ? static_cast<int>(opponents)
                                           : 1);
    }
    if (policy != InfoPolicy::kOwnOutcomeOnly) continue;
    std::vector<int> idx(n);
    std::vector<Action> a(n);
    for (std::size_t p = 0; p < m.profile_count(); ++p) {
      decode_round(m, p, idx);
      for (int i = 0; i < n; ++i) a[i] = m.grid(i)[idx[i]];
      const Outcome o = m.run(a);
      for (int i = 0; i < n; ++i) {
        auto& keys = L.obs_keys[i][r][idx[i]];
        const bool seen = std::any_of(keys.begin(), keys.end(), [&](const auto& k) {
          return same_key(k, o.allocation[i], o.payments[i]);
        });
        if (!seen) keys.emplace_back(o.allocation[i], o.payments[i]);
      }
    }
    for (int i = 0; i < n; ++i)
      for (std::size_t act = 0; act < L.obs_keys[i][r].size(); ++act)
        L.obs_size[i][r][act] = static_cast<int>(L.obs_keys[i][r][act].size());
  }

  L.exact.assign(n, std::vector<cpp_int>(R + 1));
  L.sub.assign(n, std::vector<std::size_t>(R + 1, 1));
  for (int i = 0; i < n; ++i) {
    L.exact[i][R] = 1;
    for (int r = R - 1; r >= 0; --r) {
      cpp_int total = 0;
      for (int k : L.obs_size[i][r]) total += boost::multiprecision::pow(L.exact[i][r + 1], k);
      L.exact[i][r] = total;
    }
    if (!enforce_cap) continue;
    if (L.exact[i][0] > cap) {
      const std::size_t shown = L.exact[i][0] > std::numeric_limits<std::size_t>::max()
                                    ? std::numeric_limits<std::size_t>::max()
                                    : static_cast<std::size_t>(L.exact[i][0]);
      throw SizeError("sequential composition: player " + std::to_string(i) + " has " +
                          L.exact[i][0].str() + " plans",
                      shown, cap);
    }
    for (int r = 0; r <= R; ++r) L.sub[i][r] = static_cast<std::size_t>(L.exact[i][r]);
  }
  if (enforce_cap) {
    L.grids.assign(n, {});
    for (int i = 0; i < n; ++i)
      for (std::size_t p = 0; p < L.sub[i][0]; ++p) L.grids[i].push_back({static_cast<double>(p)});
  }
  L.rounds = std::move(rounds);
  return L;
}

}  // namespace

SequentialComposition::SequentialComposition(std::vector<MechanismPtr> rounds, InfoPolicy policy,
                                             std::size_t cap)
    : SequentialComposition(build_layout(std::move(rounds), policy, cap, true)) {}

SequentialComposition::SequentialComposition(Layout layout)
    : Mechanism(std::move(layout.grids)),
      rounds_(std::move(layout.rounds)),
      policy_(layout.policy),
      sub_(std::move(layout.sub)),
      obs_size_(std::move(layout.obs_size)),
      obs_keys_(std::move(layout.obs_keys)) {
  allocation_layout(rounds_, alloc_offset_, alloc_width_);
}

std::string SequentialComposition::plan_count(const std::vector<MechanismPtr>& rounds,
                                              InfoPolicy policy, int player) {
  const auto L = build_layout(rounds, policy, 0, false);
  if (player < 0 || player >= static_cast<int>(L.exact.size()))
    throw DomainError("plan_count: player out of range");
  return L.exact[player][0].str();
}

std::string SequentialComposition::kind() const {
  std::string s = "sequential[";
  for (std::size_t r = 0; r < rounds_.size(); ++r) s += (r ? "," : "") + rounds_[r]->kind();
  return s + "]/" + to_string(policy_);
}

std::size_t SequentialComposition::sub_power(int player, int r, int k) const {
  std::size_t p = 1;
  for (int t = 0; t < k; ++t) p *= sub_[player][r];
  return p;
}

int SequentialComposition::observation_index(int player, int r, const Round& round) const {
  switch (policy_) {
    case InfoPolicy::kNone: return 0;
    case InfoPolicy::kFullBids: {
      int k = 0;
      for (int q = 0; q < num_players(); ++q) {
        if (q == player) continue;
        if (round.indices[q] < 0) throw DomainError("full_bids history contains an off-grid bid");
        k = k * static_cast<int>(rounds_[r]->grid(q).size()) + round.indices[q];
      }
      return k;
    }
    case InfoPolicy::kOwnOutcomeOnly: {
      const auto& keys = obs_keys_[player][r][round.indices[player]];
      for (std::size_t k = 0; k < keys.size(); ++k)
        if (same_key(keys[k], round.outcome.allocation[player], round.outcome.payments[player]))
          return static_cast<int>(k);
      throw DomainError("own outcome not reachable from grid play");
    }
  }
  return 0;
}

namespace {

// Splits a node's plan index into the action and the packed sub-plans.
template <class Block>
std::pair<int, std::size_t> split_node(std::size_t q, int actions, const Block& block) {
  for (int a = 0; a < actions; ++a) {
    const std::size_t b = block(a);
    if (q < b) return {a, q};
    q -= b;
  }
  throw DomainError("plan index out of range");
}

}  // namespace

int SequentialComposition::plan_action(int player, std::size_t plan,
                                       std::span<const int> observations) const {
  const int r = static_cast<int>(observations.size());
  if (r >= size()) throw DomainError("plan_action: too many observations");
  std::size_t q = plan;
  for (int t = 0;; ++t) {
    auto block = [&](int a) { return sub_power(player, t + 1, obs_size_[player][t][a]); };
    const auto [a, rem] =
        split_node(q, static_cast<int>(rounds_[t]->grid(player).size()), block);
    if (t == r) return a;
    if (observations[t] < 0 || observations[t] >= obs_size_[player][t][a])
      throw DomainError("plan_action: observation out of range");
    q = (rem / sub_power(player, t + 1, observations[t])) % sub_[player][t + 1];
  }
}

std::vector<SequentialComposition::Round> SequentialComposition::play(
    std::span<const Action> profile, int last) const {
  const int n = num_players();
  if (static_cast<int>(profile.size()) != n) throw DomainError("profile size mismatch");
  if (last < 0 || last >= size()) throw DomainError("play: round out of range");
  std::vector<std::size_t> q(n);
  for (int i = 0; i < n; ++i) q[i] = plan_of(profile[i], sub_[i][0]);
  std::vector<Round> out;
  for (int r = 0; r <= last; ++r) {
    Round rec;
    rec.indices.resize(n);
    rec.actions.resize(n);
    std::vector<std::size_t> rem(n);
    for (int i = 0; i < n; ++i) {
      auto block = [&](int a) { return sub_power(i, r + 1, obs_size_[i][r][a]); };
      const auto [a, rest] = split_node(q[i], static_cast<int>(rounds_[r]->grid(i).size()), block);
      rec.indices[i] = a;
      rec.actions[i] = rounds_[r]->grid(i)[a];
      rem[i] = rest;
    }
    rec.outcome = rounds_[r]->run(rec.actions);
    if (r + 1 < size())
      for (int i = 0; i < n; ++i) {
        const int k = observation_index(i, r, rec);
        q[i] = (rem[i] / sub_power(i, r + 1, k)) % sub_[i][r + 1];
      }
    out.push_back(std::move(rec));
  }
  return out;
}

Outcome SequentialComposition::run(std::span<const Action> profile) const {
  const int n = num_players();
  Outcome o{std::vector<Allocation>(n), std::vector<double>(n, 0.0)};
  for (const auto& rec : play(profile, size() - 1))
    for (int i = 0; i < n; ++i) {
      o.allocation[i].insert(o.allocation[i].end(), rec.outcome.allocation[i].begin(),
                             rec.outcome.allocation[i].end());
      o.payments[i] += rec.outcome.payments[i];
    }
  return o;
}

Action SequentialComposition::withdraw_action(int player) const {
  // The plan that withdraws in every round whatever it observes.
  std::size_t s = 0;
  for (int r = size() - 1; r >= 0; --r) {
    const auto& grid = rounds_[r]->grid(player);
    const auto it = std::find(grid.begin(), grid.end(), rounds_[r]->withdraw_action(player));
    if (it == grid.end())
      throw DomainError("round " + std::to_string(r) + " grid lacks the withdraw action");
    const int w = static_cast<int>(it - grid.begin());
    std::size_t offset = 0;
    for (int a = 0; a < w; ++a) offset += sub_power(player, r + 1, obs_size_[player][r][a]);
    std::size_t packed = 0;
    for (int k = 0; k < obs_size_[player][r][w]; ++k) packed += s * sub_power(player, r + 1, k);
    s = offset + packed;
  }
  return {static_cast<double>(s)};
}

OutcomeSpace SequentialComposition::outcome_space() const { return product_space(rounds_); }

// ---------------------------------------------------------------------------
// Valuation helpers

TabulatedValuation component_valuation(const TabulatedValuation& v, int offset, int width) {
  const auto& space = v.space();
  ProductSpace sub = subspace(space, offset, width);
  std::vector<int> full(space.dims());
  for (int j = 0; j < space.dims(); ++j) {
    if (j >= offset && j < offset + width) continue;
    const auto& c = space.coordinate(j);
    if (!c.bottom) throw DomainError("component valuation needs bottoms outside the component");
    full[j] = *c.bottom;
  }
  std::vector<double> table(sub.size());
  for (std::size_t y = 0; y < sub.size(); ++y) {
    for (int c = 0; c < width; ++c) full[offset + c] = sub.digit(y, c);
    table[y] = v.at(space.index(full));
  }
  return TabulatedValuation(std::move(sub), std::move(table));
}

TabulatedValuation random_unit_demand(const ProductSpace& space, std::mt19937_64& rng,
                                      double scale) {
  std::uniform_real_distribution<double> u(0.0, scale);
  std::vector<std::vector<double>> w(space.dims());
  for (int j = 0; j < space.dims(); ++j) {
    const auto& c = space.coordinate(j);
    if (!c.bottom) throw DomainError("unit-demand generator needs bottoms");
    for (int d = 0; d < space.extent(j); ++d) w[j].push_back(d == *c.bottom ? 0.0 : u(rng));
  }
  std::vector<double> table(space.size(), 0.0);
  for (std::size_t x = 0; x < space.size(); ++x)
    for (int j = 0; j < space.dims(); ++j) table[x] = std::max(table[x], w[j][space.digit(x, j)]);
  return TabulatedValuation(space, std::move(table));
}

bool is_unit_demand(const TabulatedValuation& v, double tolerance) {
  const auto& space = v.space();
  if (!space.has_bottoms()) return false;
  const std::size_t bottom = space.bottom_point();
  for (std::size_t x = 0; x < space.size(); ++x) {
    double best = 0.0;
    for (int j = 0; j < space.dims(); ++j)
      best = std::max(best, v.at(space.with_digit(bottom, j, space.digit(x, j))));
    if (std::abs(best - v.at(x)) > tolerance) return false;
  }
  return true;
}

// ---------------------------------------------------------------------------
// Lifted deviations

DeviationSource simultaneous_deviation_source(DeviationSource inner) {
  auto make = [inner](const Mechanism& mech, const ValuationProfile& profile, int player,
                      const Action& own, const Optimum& opt) {
    const auto* comp = dynamic_cast<const SimultaneousComposition*>(&mech);
    if (!comp) throw DomainError("simultaneous deviation needs a simultaneous composition");
    const int n = comp->num_players();

    std::vector<AdditiveComponent> support(n);
    for (int k = 0; k < n; ++k) {
      const auto& tv = tabulated(*profile[k]);
      const auto rep = xos_from_fractional(tv);
      const auto point = tv.space().find(opt.allocation[k]);
      if (!point) throw DomainError("optimal allocation is outside the valuation's space");
      if (rep.components.empty()) throw DomainError("missing representative component");
      support[k] = rep.components[rep.argmax(tv.space(), *point)];
    }

    auto parts = std::make_shared<std::vector<DeviationDistribution>>();
    for (int j = 0; j < comp->size(); ++j) {
      ValuationProfile induced(n);
      for (int k = 0; k < n; ++k) {
        const auto& space = tabulated(*profile[k]).space();
        const int off = comp->allocation_offset(k, j), w = comp->allocation_width(k, j);
        ProductSpace sub = subspace(space, off, w);
        std::vector<double> table(sub.size(), 0.0);
        for (std::size_t y = 0; y < sub.size(); ++y)
          for (int c = 0; c < w; ++c) table[y] += support[k].values[off + c][sub.digit(y, c)];
        if (sub.has_bottoms() && std::abs(table[sub.bottom_point()]) > 1e-12)
          throw NumericError("XOS component is nonzero at bottom");
        if (sub.has_bottoms()) table[sub.bottom_point()] = 0.0;
        induced[k] = std::make_shared<TabulatedValuation>(std::move(sub), std::move(table));
      }
      const Mechanism& m = comp->component(j);
      parts->push_back(inner.make(m, induced, player, comp->action_part(player, own, j),
                                  m.optimum(induced)));
    }

    std::vector<Action> audit{Action{}};
    for (int j = 0; j < comp->size(); ++j) {
      std::vector<Action> next;
      for (const auto& prefix : audit)
        for (const auto& a : extremes((*parts)[j])) {
          Action joint = prefix;
          joint.insert(joint.end(), a.begin(), a.end());
          next.push_back(std::move(joint));
        }
      audit = std::move(next);
    }

    std::string label = "product(";
    for (std::size_t j = 0; j < parts->size(); ++j) label += (j ? ", " : "") + (*parts)[j].describe();
    label += ")";

    auto evaluate = [parts](const Mechanism& m, const Valuation& v, std::span<const Action> prof,
                            int i, const EvalOptions& eval) {
      const auto& comp = dynamic_cast<const SimultaneousComposition&>(m);
      std::vector<AllocationLaw> laws;
      double paid = 0.0;
      for (int j = 0; j < comp.size(); ++j) {
        laws.push_back(allocation_law(comp.component(j), (*parts)[j], comp.component_profile(prof, j),
                                      i, eval));
        paid += laws.back().expected_payment;
      }
      // Expectation over the product of the component laws.
      double value = 0.0;
      std::vector<std::size_t> pick(laws.size(), 0);
      while (true) {
        Allocation x;
        double p = 1.0;
        for (std::size_t j = 0; j < laws.size(); ++j) {
          const auto& [y, q] = laws[j].outcomes[pick[j]];
          x.insert(x.end(), y.begin(), y.end());
          p *= q;
        }
        if (p > 0.0) value += p * v.value(x);
        std::size_t j = laws.size();
        while (j > 0 && ++pick[j - 1] == laws[j - 1].outcomes.size()) pick[--j] = 0;
        if (j == 0) break;
      }
      return value - paid;
    };
    return DeviationDistribution::custom(label, evaluate, audit);
  };
  return {make, false, "simultaneous(" + inner.name + ")"};
}

DeviationSource sequential_deviation_source(DeviationSource inner) {
  auto make = [inner](const Mechanism& mech, const ValuationProfile& profile, int player,
                      const Action&, const Optimum& opt) {
    const auto* seq = dynamic_cast<const SequentialComposition*>(&mech);
    if (!seq) throw DomainError("sequential deviation needs a sequential composition");
    const int n = seq->num_players(), R = seq->size();

    std::vector<std::vector<std::shared_ptr<TabulatedValuation>>> parts(n);
    std::vector<int> best_round(n, 0);
    for (int k = 0; k < n; ++k) {
      const auto& tv = tabulated(*profile[k]);
      double best = -kInf;
      for (int r = 0; r < R; ++r) {
        const int off = seq->allocation_offset(k, r), w = seq->allocation_width(k, r);
        parts[k].push_back(
            std::make_shared<TabulatedValuation>(component_valuation(tv, off, w)));
        const Allocation slice(opt.allocation[k].begin() + off, opt.allocation[k].begin() + off + w);
        const double worth = parts[k][r]->value(slice);
        if (worth > best) {
          best = worth;
          best_round[k] = r;
        }
      }
      // Unit demand across rounds: v(x) = max_r v^r(x^r).
      const auto& space = tv.space();
      for (std::size_t x = 0; x < space.size(); ++x) {
        const Allocation labels = space.labels(x);
        double m = 0.0;
        for (int r = 0; r < R; ++r) {
          const int off = seq->allocation_offset(k, r), w = seq->allocation_width(k, r);
          m = std::max(m, parts[k][r]->value(
                              std::span<const double>(labels.data() + off, static_cast<std::size_t>(w))));
        }
        if (std::abs(m - tv.at(x)) > 1e-9)
          throw DomainError("player " + std::to_string(k) + " is not unit-demand across rounds");
      }
    }

    const int j = best_round[player];
    ValuationProfile induced(n);
    for (int k = 0; k < n; ++k) {
      if (best_round[k] == j) {
        induced[k] = parts[k][j];
      } else {
        const auto& space = parts[k][j]->space();
        induced[k] = std::make_shared<TabulatedValuation>(space, std::vector<double>(space.size(), 0.0));
      }
    }
    const Mechanism& m = seq->round(j);
    const auto dev = std::make_shared<DeviationDistribution>(
        inner.make(m, induced, player, m.withdraw_action(player), m.optimum(induced)));

    // Laws depend only on the opponents' actions in round j.
    struct Cache {
      std::mutex lock;
      std::map<std::vector<Action>, AllocationLaw> laws;
    };
    auto cache = std::make_shared<Cache>();

    auto evaluate = [dev, j, cache](const Mechanism& mm, const Valuation& v,
                                    std::span<const Action> prof, int i, const EvalOptions& eval) {
      const auto& seq = dynamic_cast<const SequentialComposition&>(mm);
      const auto& tv = tabulated(v);
      const auto history = seq.play(prof, j);
      Allocation x = bottom_labels(tv.space());
      double paid = 0.0;
      for (int r = 0; r < j; ++r) {
        const auto& own = history[r].outcome.allocation[i];
        std::copy(own.begin(), own.end(), x.begin() + seq.allocation_offset(i, r));
        paid += history[r].outcome.payments[i];
      }
      auto key = history[j].actions;
      key[i].clear();
      AllocationLaw law;
      {
        std::lock_guard<std::mutex> guard(cache->lock);
        auto it = cache->laws.find(key);
        if (it == cache->laws.end())
          it = cache->laws.emplace(key, allocation_law(seq.round(j), *dev, history[j].actions, i, eval))
                   .first;
        law = it->second;
      }
      double value = 0.0;
      for (const auto& [y, p] : law.outcomes) {
        std::copy(y.begin(), y.end(), x.begin() + seq.allocation_offset(i, j));
        value += p * tv.value(x);
      }
      return value - paid - law.expected_payment;
    };
    return DeviationDistribution::custom(
        "round " + std::to_string(j) + ": " + dev->describe(), evaluate, {});
  };
  return {make, true, "sequential(" + inner.name + ")"};
}

}  // namespace smoothmech
