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

#include "smoothmech/mechanisms.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <map>
#include <numeric>

#include "smoothmech/valuations.hpp"

namespace smoothmech {

namespace {

double bid(const Action& a, std::size_t k = 0) {
  if (a.size() <= k) throw DomainError("action has too few coordinates");
  return a[k];
}

void require_nonnegative(std::span<const Action> profile) {
  for (const auto& a : profile)
    for (double x : a)
      if (!(x >= 0.0)) throw DomainError("bids must be nonnegative");
}

void require_players(const Mechanism& m, std::span<const Action> profile) {
  if (static_cast<int>(profile.size()) != m.num_players())
    throw DomainError(m.kind() + ": profile has wrong number of players");
}

// Largest entry of `values` with lowest index on ties.
int argmax_first(const std::vector<double>& values) {
  int best = 0;
  for (int i = 1; i < static_cast<int>(values.size()); ++i)
    if (values[i] > values[best]) best = i;
  return best;
}

Outcome empty_outcome(int n, double label = 0.0) {
  Outcome o;
  o.allocation.assign(n, Allocation{label});
  o.payments.assign(n, 0.0);
  return o;
}

int label_int(const Allocation& x) {
  if (x.size() != 1) throw DomainError("allocation must be a single label");
  return static_cast<int>(std::lround(x[0]));
}

}  // namespace

std::string to_string(PaymentStyle style) {
  return style == PaymentStyle::kPayYourBid ? "pay_your_bid" : "threshold";
}

PaymentStyle payment_style_from_string(const std::string& name) {
  if (name == "pay_your_bid") return PaymentStyle::kPayYourBid;
  if (name == "threshold") return PaymentStyle::kThreshold;
  throw DomainError("unknown payment style '" + name + "'");
}

SingleItemFormat SingleItemFormat::hybrid(double gamma) {
  if (!(gamma >= 0.0 && gamma <= 1.0)) throw DomainError("hybrid gamma must lie in [0, 1]");
  return {Kind::kHybrid, gamma};
}

std::string SingleItemFormat::name() const {
  switch (kind) {
    case Kind::kFirstPrice: return "first_price";
    case Kind::kAllPay: return "all_pay";
    case Kind::kSecondPrice: return "second_price";
    case Kind::kHybrid: return "hybrid";
  }
  return "?";
}

SingleItemAuction::SingleItemAuction(SingleItemFormat format,
                                     std::vector<std::vector<Action>> grids)
    : Mechanism(std::move(grids)), format_(format) {
  if (format_.kind == SingleItemFormat::Kind::kHybrid) format_ = SingleItemFormat::hybrid(format_.gamma);
}

std::string SingleItemAuction::kind() const { return format_.name(); }

Outcome SingleItemAuction::run(std::span<const Action> profile) const {
  require_players(*this, profile);
  require_nonnegative(profile);
  const int n = num_players();
  std::vector<double> bids(n);
  for (int i = 0; i < n; ++i) bids[i] = bid(profile[i]);
  const int w = argmax_first(bids);
  double second = 0.0;
  for (int i = 0; i < n; ++i)
    if (i != w) second = std::max(second, bids[i]);
  Outcome o = empty_outcome(n);
  o.allocation[w] = {1.0};
  switch (format_.kind) {
    case SingleItemFormat::Kind::kFirstPrice: o.payments[w] = bids[w]; break;
    case SingleItemFormat::Kind::kAllPay: o.payments = bids; break;
    case SingleItemFormat::Kind::kSecondPrice: o.payments[w] = second; break;
    case SingleItemFormat::Kind::kHybrid:
      o.payments[w] = format_.gamma * bids[w] + (1.0 - format_.gamma) * second;
      break;
  }
  return o;
}

OutcomeSpace SingleItemAuction::outcome_space() const {
  const int n = num_players();
  OutcomeSpace s;
  for (int w = 0; w < n; ++w) {
    std::vector<Allocation> x(n, Allocation{0.0});
    x[w] = {1.0};
    s.feasible.push_back(std::move(x));
  }
  s.feasible.emplace_back(n, Allocation{0.0});
  return s;
}

std::optional<double> SingleItemAuction::willingness_to_pay_closed_form(
    int, const Action& action, const Allocation& allocation) const {
  const bool wins = label_int(allocation) == 1;
  const double b = bid(action);
  if (format_.kind == SingleItemFormat::Kind::kAllPay) return b;
  // The winner's payment approaches its own bid as the runner-up bid
  // approaches it from below.
  return wins ? b : 0.0;
}

std::optional<std::pair<Allocation, double>> SingleItemAuction::declared(
    int, const Action& action) const {
  return std::make_pair(Allocation{1.0}, bid(action));
}

GreedyCombinatorialAuction::GreedyCombinatorialAuction(
    int items, double rank_exponent, PaymentStyle payment,
    std::vector<std::vector<Action>> grids)
    : Mechanism(std::move(grids)), items_(items), rank_exponent_(rank_exponent),
      payment_(payment) {
  if (items_ < 1 || items_ > 10) throw DomainError("greedy auction needs 1..10 items");
  if (rank_exponent_ < 0.0) throw DomainError("rank exponent must be nonnegative");
  for (int i = 0; i < num_players(); ++i)
    for (const auto& a : grid(i)) {
      if (a.size() != 2) throw DomainError("greedy actions are {mask, value}");
      const auto mask = static_cast<std::uint32_t>(std::lround(a[0]));
      if (mask >= (1u << items_)) throw DomainError("greedy action mask out of range");
    }
}

double GreedyCombinatorialAuction::score(const Action& action) const {
  const auto mask = static_cast<std::uint32_t>(std::lround(action[0]));
  if (mask == 0) return -1.0;
  return action[1] / std::pow(static_cast<double>(std::popcount(mask)), rank_exponent_);
}

std::vector<int> GreedyCombinatorialAuction::allocate(std::span<const Action> profile) const {
  const int n = num_players();
  std::vector<int> won(n, 0);
  std::vector<char> done(n, 0);
  std::uint32_t taken = 0;
  for (;;) {
    int pick = -1;
    double best = -kInf;
    for (int i = 0; i < n; ++i) {
      if (done[i]) continue;
      const auto mask = static_cast<std::uint32_t>(std::lround(profile[i][0]));
      if (mask == 0 || (mask & taken)) continue;
      const double s = score(profile[i]);
      if (s > best) {
        best = s;
        pick = i;
      }
    }
    if (pick < 0) break;
    const auto mask = static_cast<std::uint32_t>(std::lround(profile[pick][0]));
    won[pick] = static_cast<int>(mask);
    taken |= mask;
    done[pick] = 1;
  }
  return won;
}

double GreedyCombinatorialAuction::threshold(int player,
                                             std::span<const Action> profile) const {
  std::vector<Action> trial(profile.begin(), profile.end());
  const double size = std::popcount(static_cast<std::uint32_t>(std::lround(profile[player][0])));
  std::vector<double> candidates;
  for (int k = 0; k < num_players(); ++k)
    if (k != player && std::lround(profile[k][0]) != 0)
      candidates.push_back(score(profile[k]) * std::pow(size, rank_exponent_));
  return infimum_winning(candidates, [&](double theta) {
    trial[player][1] = theta;
    return allocate(trial)[player] != 0;
  });
}

Outcome GreedyCombinatorialAuction::run(std::span<const Action> profile) const {
  require_players(*this, profile);
  require_nonnegative(profile);
  const int n = num_players();
  for (const auto& a : profile)
    if (a.size() != 2) throw DomainError("greedy actions are {mask, value}");
  const auto won = allocate(profile);
  Outcome o = empty_outcome(n);
  for (int i = 0; i < n; ++i) {
    o.allocation[i] = {static_cast<double>(won[i])};
    if (won[i] == 0) continue;
    o.payments[i] = payment_ == PaymentStyle::kPayYourBid ? profile[i][1]
                                                          : threshold(i, profile);
  }
  return o;
}

OutcomeSpace GreedyCombinatorialAuction::outcome_space() const {
  const int n = num_players();
  OutcomeSpace s;
  std::size_t count = 1;
  for (int j = 0; j < items_; ++j) count *= n + 1;
  for (std::size_t code = 0; code < count; ++code) {
    std::vector<Allocation> x(n, Allocation{0.0});
    std::size_t c = code;
    std::vector<int> masks(n, 0);
    for (int j = 0; j < items_; ++j) {
      const int owner = static_cast<int>(c % (n + 1));
      c /= n + 1;
      if (owner > 0) masks[owner - 1] |= 1 << j;
    }
    for (int i = 0; i < n; ++i) x[i] = {static_cast<double>(masks[i])};
    s.feasible.push_back(std::move(x));
  }
  return s;
}

std::optional<double> GreedyCombinatorialAuction::willingness_to_pay_closed_form(
    int, const Action& action, const Allocation& allocation) const {
  const int mask = label_int(allocation);
  if (mask == 0) return 0.0;
  // Winning the declared set; the threshold approaches the declared value.
  return action[1];
}

std::vector<double> GreedyCombinatorialAuction::deviation_hints(
    int player, std::span<const Action> profile) const {
  std::vector<double> hints;
  for (int k = 0; k < num_players(); ++k) {
    if (k == player || std::lround(profile[k][0]) == 0) continue;
    for (int size = 1; size <= items_; ++size)
      hints.push_back(score(profile[k]) * std::pow(static_cast<double>(size), rank_exponent_));
  }
  return hints;
}

std::optional<std::pair<Allocation, double>> GreedyCombinatorialAuction::declared(
    int, const Action& action) const {
  const auto mask = std::lround(action[0]);
  if (mask == 0) return std::nullopt;
  return std::make_pair(Allocation{static_cast<double>(mask)}, action[1]);
}

std::string to_string(ClickModel model) {
  switch (model) {
    case ClickModel::kPerImpression: return "per_impression";
    case ClickModel::kMonotonePerClick: return "monotone";
    case ClickModel::kPositionIndependent: return "position_independent";
  }
  return "?";
}

void validate_ctrs(const std::vector<std::vector<double>>& ctrs) {
  const std::size_t n = ctrs.size();
  for (const auto& row : ctrs) {
    if (row.size() != n) throw DomainError("ctr matrix must be square (players x positions)");
    for (std::size_t j = 0; j < n; ++j) {
      if (!(row[j] > 0.0 && row[j] <= 1.0)) throw DomainError("ctrs must lie in (0, 1]");
      if (j > 0 && row[j] > row[j - 1] + 1e-12)
        throw DomainError("ctrs must be non-increasing in position");
    }
  }
}

std::vector<std::vector<double>> separable_ctrs(const std::vector<double>& alpha,
                                                const std::vector<double>& gamma) {
  if (alpha.size() != gamma.size()) throw DomainError("separable ctrs need n slot and n advertiser factors");
  std::vector<std::vector<double>> a(gamma.size(), std::vector<double>(alpha.size()));
  for (std::size_t i = 0; i < gamma.size(); ++i)
    for (std::size_t j = 0; j < alpha.size(); ++j) a[i][j] = alpha[j] * gamma[i];
  return a;
}

PositionAuction::PositionAuction(ClickModel model, std::vector<std::vector<double>> ctrs,
                                 PaymentStyle payment, std::vector<std::vector<Action>> grids)
    : Mechanism(std::move(grids)), model_(model), ctrs_(std::move(ctrs)), payment_(payment) {
  const int n = num_players();
  if (model_ == ClickModel::kPerImpression) {
    if (!ctrs_.empty()) throw DomainError("per-impression auctions take no ctrs");
    ctrs_.assign(n, std::vector<double>(n, 1.0));
  }
  if (static_cast<int>(ctrs_.size()) != n) throw DomainError("ctr matrix must have one row per player");
  validate_ctrs(ctrs_);
}

std::string PositionAuction::kind() const {
  return model_ == ClickModel::kPerImpression ? "position_per_impression" : "position_per_click";
}

std::vector<int> PositionAuction::assign(std::span<const Action> profile) const {
  const int n = num_players();
  std::vector<int> position(n, 0);
  for (int j = 1; j <= n; ++j) {
    int pick = -1;
    double best = -kInf;
    for (int i = 0; i < n; ++i) {
      if (position[i] != 0) continue;
      const double w = ctr(i, j) * bid(profile[i]);
      if (w > best) {
        best = w;
        pick = i;
      }
    }
    position[pick] = j;
  }
  return position;
}

double PositionAuction::threshold(int player, int position,
                                  std::span<const Action> profile) const {
  const int n = num_players();
  std::vector<Action> trial(profile.begin(), profile.end());
  std::vector<double> candidates;
  for (int k = 0; k < n; ++k) {
    if (k == player) continue;
    for (int l = 1; l <= n; ++l) candidates.push_back(ctr(k, l) * bid(profile[k]) / ctr(player, l));
  }
  return infimum_winning(candidates, [&](double b) {
    trial[player] = {b};
    return assign(trial)[player] <= position;
  });
}

Outcome PositionAuction::run(std::span<const Action> profile) const {
  require_players(*this, profile);
  require_nonnegative(profile);
  const int n = num_players();
  const auto position = assign(profile);
  Outcome o = empty_outcome(n);
  for (int i = 0; i < n; ++i) {
    const int j = position[i];
    o.allocation[i] = {static_cast<double>(j)};
    const double per_click = payment_ == PaymentStyle::kPayYourBid
                                 ? bid(profile[i])
                                 : threshold(i, j, profile);
    o.payments[i] = ctr(i, j) * per_click;
  }
  return o;
}

OutcomeSpace PositionAuction::outcome_space() const {
  const int n = num_players();
  std::vector<int> perm(n);
  std::iota(perm.begin(), perm.end(), 1);
  OutcomeSpace s;
  do {
    std::vector<Allocation> x(n);
    for (int i = 0; i < n; ++i) x[i] = {static_cast<double>(perm[i])};
    s.feasible.push_back(std::move(x));
  } while (std::next_permutation(perm.begin(), perm.end()));
  return s;
}

std::optional<double> PositionAuction::willingness_to_pay_closed_form(
    int player, const Action& action, const Allocation& allocation) const {
  const int j = label_int(allocation);
  if (payment_ == PaymentStyle::kPayYourBid) return ctr(player, j) * bid(action);
  // Threshold payments approach the own bid when the next player bids just
  // below; the last position is always reached and so never pays.
  if (j == num_players()) return 0.0;
  return ctr(player, j) * bid(action);
}

std::vector<double> PositionAuction::deviation_hints(int player,
                                                     std::span<const Action> profile) const {
  std::vector<double> hints;
  const int n = num_players();
  for (int k = 0; k < n; ++k) {
    if (k == player) continue;
    for (int l = 1; l <= n; ++l) hints.push_back(ctr(k, l) * bid(profile[k]) / ctr(player, l));
  }
  return hints;
}

PublicProjectAuction::PublicProjectAuction(int projects, std::vector<std::vector<Action>> grids)
    : Mechanism(std::move(grids)), projects_(projects) {
  if (projects_ < 1) throw DomainError("public project auction needs a project");
  for (int i = 0; i < num_players(); ++i)
    for (const auto& a : grid(i))
      if (static_cast<int>(a.size()) != projects_)
        throw DomainError("public project actions need one bid per project");
}

Outcome PublicProjectAuction::run(std::span<const Action> profile) const {
  require_players(*this, profile);
  require_nonnegative(profile);
  const int n = num_players();
  std::vector<double> totals(projects_, 0.0);
  for (const auto& a : profile) {
    if (static_cast<int>(a.size()) != projects_) throw DomainError("one bid per project expected");
    for (int j = 0; j < projects_; ++j) totals[j] += a[j];
  }
  const int chosen = argmax_first(totals);
  Outcome o = empty_outcome(n, chosen + 1.0);
  for (int i = 0; i < n; ++i) o.payments[i] = profile[i][chosen];
  return o;
}

OutcomeSpace PublicProjectAuction::outcome_space() const {
  OutcomeSpace s;
  for (int j = 1; j <= projects_; ++j)
    s.feasible.emplace_back(num_players(), Allocation{static_cast<double>(j)});
  return s;
}

std::optional<double> PublicProjectAuction::willingness_to_pay_closed_form(
    int, const Action& action, const Allocation& allocation) const {
  return action[label_int(allocation) - 1];
}

std::vector<double> PublicProjectAuction::deviation_hints(int player,
                                                          std::span<const Action> profile) const {
  std::vector<double> others(projects_, 0.0);
  for (int k = 0; k < num_players(); ++k)
    if (k != player)
      for (int j = 0; j < projects_; ++j) others[j] += profile[k][j];
  std::vector<double> hints;
  for (int a = 0; a < projects_; ++a)
    for (int b = 0; b < projects_; ++b)
      if (a != b) hints.push_back(others[b] - others[a]);
  return hints;
}

ProportionalBandwidth::ProportionalBandwidth(double capacity,
                                             std::vector<std::vector<Action>> grids)
    : Mechanism(std::move(grids)), capacity_(capacity) {
  if (!(capacity_ > 0.0)) throw DomainError("bandwidth capacity must be positive");
}

Outcome ProportionalBandwidth::run(std::span<const Action> profile) const {
  require_players(*this, profile);
  require_nonnegative(profile);
  const int n = num_players();
  double total = 0.0;
  for (const auto& a : profile) total += bid(a);
  Outcome o = empty_outcome(n);
  for (int i = 0; i < n; ++i) {
    o.payments[i] = bid(profile[i]);
    if (total > 0.0) o.allocation[i] = {bid(profile[i]) * capacity_ / total};
  }
  return o;
}

OutcomeSpace ProportionalBandwidth::outcome_space() const {
  throw DomainError("bandwidth shares are continuous; use optimum()");
}

Optimum ProportionalBandwidth::optimum(const ValuationProfile& profile) const {
  struct Segment {
    double slope;
    double length;
    int player;
  };
  std::vector<Segment> segments;
  for (int i = 0; i < static_cast<int>(profile.size()); ++i) {
    const auto* curve = dynamic_cast<const ConcaveCurveValuation*>(profile[i].get());
    if (!curve) throw DomainError("bandwidth optimum needs concave curve valuations");
    const auto& xs = curve->xs();
    const auto& ys = curve->ys();
    for (std::size_t k = 1; k < xs.size(); ++k) {
      const double lo = std::min(xs[k - 1], capacity_), hi = std::min(xs[k], capacity_);
      if (hi <= lo) break;
      segments.push_back({(ys[k] - ys[k - 1]) / (xs[k] - xs[k - 1]), hi - lo, i});
    }
  }
  // Concavity makes each player's segments appear in slope order, so a
  // stable sort by slope fills every curve from its origin.
  std::stable_sort(segments.begin(), segments.end(),
                   [](const Segment& a, const Segment& b) { return a.slope > b.slope; });
  Optimum best;
  best.allocation.assign(profile.size(), Allocation{0.0});
  double left = capacity_;
  for (const auto& s : segments) {
    if (left <= 0.0 || s.slope <= 0.0) break;
    const double take = std::min(left, s.length);
    best.allocation[s.player][0] += take;
    left -= take;
  }
  for (std::size_t i = 0; i < profile.size(); ++i)
    best.value += profile[i]->value(best.allocation[i]);
  return best;
}

std::optional<double> ProportionalBandwidth::willingness_to_pay_closed_form(
    int, const Action& action, const Allocation&) const {
  return bid(action);
}

std::vector<double> ProportionalBandwidth::piece_signature(const Outcome& outcome) const {
  std::vector<double> sig;
  for (const auto& x : outcome.allocation) sig.push_back(x[0] > 0.0 ? 1.0 : 0.0);
  return sig;
}

MultiUnitGreedy::MultiUnitGreedy(int units, PaymentStyle payment,
                                 std::vector<std::vector<Action>> grids)
    : Mechanism(std::move(grids)), units_(units), payment_(payment) {
  if (units_ < 1) throw DomainError("multi-unit auction needs a unit");
}

Outcome MultiUnitGreedy::run(std::span<const Action> profile) const {
  require_players(*this, profile);
  require_nonnegative(profile);
  const int n = num_players();
  for (const auto& a : profile) {
    if (static_cast<int>(a.size()) != units_)
      throw DomainError("multi-unit actions need one marginal bid per unit");
    for (int j = 1; j < units_; ++j)
      if (a[j] > a[j - 1] + kTolerance)
        throw DomainError("marginal bids must be non-increasing");
  }
  std::vector<int> count(n, 0);
  for (int left = units_; left > 0; --left) {
    int pick = -1;
    double best = 0.0;
    for (int i = 0; i < n; ++i) {
      if (count[i] >= units_) continue;
      const double m = profile[i][count[i]];
      if (m > best) {
        best = m;
        pick = i;
      }
    }
    if (pick < 0) break;
    ++count[pick];
  }
  double unallocated = 0.0;
  for (int i = 0; i < n; ++i)
    if (count[i] < units_) unallocated = std::max(unallocated, profile[i][count[i]]);
  Outcome o = empty_outcome(n);
  for (int i = 0; i < n; ++i) {
    o.allocation[i] = {static_cast<double>(count[i])};
    if (payment_ == PaymentStyle::kPayYourBid) {
      for (int j = 0; j < count[i]; ++j) o.payments[i] += profile[i][j];
    } else {
      o.payments[i] = count[i] * unallocated;
    }
  }
  return o;
}

OutcomeSpace unit_count_space(int players, int units) {
  OutcomeSpace s;
  std::vector<int> k(players, 0);
  for (;;) {
    if (std::accumulate(k.begin(), k.end(), 0) <= units) {
      std::vector<Allocation> x(players);
      for (int i = 0; i < players; ++i) x[i] = {static_cast<double>(k[i])};
      s.feasible.push_back(std::move(x));
    }
    int pos = players - 1;
    while (pos >= 0 && k[pos] == units) k[pos--] = 0;
    if (pos < 0) break;
    ++k[pos];
  }
  return s;
}

OutcomeSpace MultiUnitGreedy::outcome_space() const {
  return unit_count_space(num_players(), units_);
}

std::optional<double> MultiUnitGreedy::willingness_to_pay_closed_form(
    int, const Action& action, const Allocation& allocation) const {
  const int won = label_int(allocation);
  if (won == 0) return 0.0;
  if (payment_ == PaymentStyle::kPayYourBid) {
    double s = 0.0;
    for (int j = 0; j < won; ++j) s += action[j];
    return s;
  }
  // Every unallocated marginal is at most the last accepted one, which in
  // turn is at most the player's won-th marginal.
  return won * action[won - 1];
}

UniformPriceAuction::UniformPriceAuction(int units, std::vector<std::vector<Action>> grids)
    : Mechanism(std::move(grids)), units_(units) {
  if (units_ < 1) throw DomainError("uniform price auction needs a unit");
}

Outcome UniformPriceAuction::run(std::span<const Action> profile) const {
  require_players(*this, profile);
  require_nonnegative(profile);
  const int n = num_players();
  for (const auto& a : profile) {
    if (a.size() != 2) throw DomainError("uniform price actions are {quantity, bid}");
    const double q = a[0];
    if (q != std::floor(q) || q > units_) throw DomainError("quantity must be an integer in 0..k");
  }
  std::vector<int> order;
  for (int i = 0; i < n; ++i)
    if (profile[i][0] > 0) order.push_back(i);
  std::stable_sort(order.begin(), order.end(),
                   [&](int a, int b) { return profile[a][1] > profile[b][1]; });
  Outcome o = empty_outcome(n);
  int left = units_;
  double price = 0.0;
  std::size_t r = 0;
  bool partial = false;
  for (; r < order.size() && left > 0; ++r) {
    const int i = order[r];
    const int q = static_cast<int>(profile[i][0]);
    const int take = std::min(q, left);
    o.allocation[i] = {static_cast<double>(take)};
    left -= take;
    if (take < q) {
      price = profile[i][1];
      partial = true;
      ++r;
      break;
    }
  }
  if (!partial && r < order.size()) price = profile[order[r]][1];
  for (int i = 0; i < n; ++i) o.payments[i] = o.allocation[i][0] * price;
  return o;
}

OutcomeSpace UniformPriceAuction::outcome_space() const {
  return unit_count_space(num_players(), units_);
}

std::optional<double> UniformPriceAuction::willingness_to_pay_closed_form(
    int, const Action& action, const Allocation& allocation) const {
  return label_int(allocation) * action[1];
}

std::vector<double> UniformPriceAuction::deviation_hints(int player,
                                                         std::span<const Action> profile) const {
  std::vector<double> hints;
  for (int k = 0; k < num_players(); ++k)
    if (k != player) hints.push_back(profile[k][1]);
  return hints;
}

std::vector<std::vector<Action>> scalar_grids(int players, double cap, int points) {
  return std::vector<std::vector<Action>>(players, uniform_grid(cap, points));
}

std::vector<Action> greedy_declaration_grid(const std::vector<int>& masks, double cap,
                                            int points) {
  std::vector<Action> g{{0.0, 0.0}};
  for (int mask : masks) {
    if (mask <= 0) throw DomainError("declared sets must be nonempty");
    for (const auto& v : uniform_grid(cap, points)) g.push_back({static_cast<double>(mask), v[0]});
  }
  return g;
}

std::vector<Action> project_bid_grid(int projects, double cap, int points) {
  const auto base = uniform_grid(cap, points);
  std::vector<Action> g{Action{}};
  for (int j = 0; j < projects; ++j) {
    std::vector<Action> next;
    for (const auto& prefix : g)
      for (const auto& b : base) {
        Action a = prefix;
        a.push_back(b[0]);
        next.push_back(std::move(a));
      }
    g = std::move(next);
  }
  return g;
}

std::vector<Action> marginal_bid_grid(int units, double cap, int points) {
  const auto base = uniform_grid(cap, points);
  std::vector<Action> g;
  std::vector<int> idx(units, 0);
  // Non-increasing index sequences, enumerated in lexicographic order.
  for (;;) {
    bool ok = true;
    for (int j = 1; j < units; ++j) ok = ok && idx[j] <= idx[j - 1];
    if (ok) {
      Action a(units);
      for (int j = 0; j < units; ++j) a[j] = base[idx[j]][0];
      g.push_back(std::move(a));
    }
    int pos = units - 1;
    while (pos >= 0 && idx[pos] == points - 1) idx[pos--] = 0;
    if (pos < 0) break;
    ++idx[pos];
  }
  return g;
}

std::vector<Action> quantity_bid_grid(int units, double cap, int points) {
  std::vector<Action> g{{0.0, 0.0}};
  for (int q = 1; q <= units; ++q)
    for (const auto& b : uniform_grid(cap, points)) g.push_back({static_cast<double>(q), b[0]});
  return g;
}

double threshold_bid(const Mechanism& mechanism, int player, const Allocation& allocation,
                     std::span<const Action> profile) {
  const auto* direct = dynamic_cast<const DirectMechanism*>(&mechanism);
  if (!direct) throw DomainError(mechanism.kind() + " is not a direct mechanism");
  std::vector<std::pair<double, Action>> declarations;
  for (const auto& a : mechanism.grid(player)) {
    const auto d = direct->declared(player, a);
    if (d && d->first == allocation) declarations.emplace_back(d->second, a);
  }
  std::sort(declarations.begin(), declarations.end(),
            [](const auto& a, const auto& b) { return a.first < b.first; });
  std::vector<Action> trial(profile.begin(), profile.end());
  double tau = kInf;
  // Walk downward; tau is the lowest declaration above which every grid
  // declaration wins.
  for (auto it = declarations.rbegin(); it != declarations.rend(); ++it) {
    trial[player] = it->second;
    const bool wins = mechanism.run(trial).allocation[player] == allocation;
    if (it == declarations.rbegin() && !wins) return kInf;
    tau = it->first;
    if (!wins) break;
  }
  return tau;
}

double willingness_to_pay(const Mechanism& mechanism, int player, const Action& action,
                          const Allocation& allocation) {
  const int n = mechanism.num_players();
  std::vector<int> idx(n, 0);
  std::vector<Action> trial(n);
  trial[player] = action;
  double best = -kInf;
  for (;;) {
    for (int k = 0; k < n; ++k)
      if (k != player) trial[k] = mechanism.grid(k)[idx[k]];
    const Outcome o = mechanism.run(trial);
    if (o.allocation[player] == allocation) best = std::max(best, o.payments[player]);
    int pos = n - 1;
    while (pos >= 0 && (pos == player || idx[pos] + 1 == static_cast<int>(mechanism.grid(pos).size()))) {
      if (pos != player) idx[pos] = 0;
      --pos;
    }
    if (pos < 0) break;
    ++idx[pos];
  }
  return best;
}

double willingness_to_pay_sup(const Mechanism& mechanism, int player, const Action& action,
                              const Allocation& allocation) {
  if (auto c = mechanism.willingness_to_pay_closed_form(player, action, allocation)) return *c;
  return willingness_to_pay(mechanism, player, action, allocation);
}

void attach_willingness_to_pay(GameTable& table, const Mechanism& mechanism) {
  const int n = table.num_players;
  table.willingness.assign(table.num_profiles * n, 0.0);
  std::vector<int> idx(n);
  std::vector<Action> actions(n);
  std::map<std::pair<int, std::pair<int, Allocation>>, double> cache;
  for (std::size_t p = 0; p < table.num_profiles; ++p) {
    table.decode(p, idx);
    for (int i = 0; i < n; ++i) actions[i] = mechanism.grid(i)[idx[i]];
    const Outcome o = mechanism.run(actions);
    for (int i = 0; i < n; ++i) {
      const auto key = std::make_pair(i, std::make_pair(idx[i], o.allocation[i]));
      auto it = cache.find(key);
      if (it == cache.end())
        it = cache.emplace(key, willingness_to_pay_sup(mechanism, i, actions[i], o.allocation[i])).first;
      table.willingness[p * n + i] = it->second;
    }
  }
}

}  // namespace smoothmech
