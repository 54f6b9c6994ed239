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

#include "smoothmech/smoothness.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <sstream>
#include <thread>
#include <tuple>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "smoothmech/valuations.hpp"

namespace smoothmech {

Action BidEmbedding::at(double t) const {
  Action a = base;
  for (int c : coords) a.at(c) = t;
  return a;
}

DeviationDistribution DeviationDistribution::at_point(double b, BidEmbedding embed) {
  DeviationDistribution d;
  d.family = Family::kPoint;
  d.point = b;
  d.embed = std::move(embed);
  return d;
}

DeviationDistribution DeviationDistribution::uniform(double cap, BidEmbedding embed) {
  if (!(cap >= 0.0)) throw DomainError("uniform deviation needs cap >= 0");
  if (cap == 0.0) return at_point(0.0, std::move(embed));
  DeviationDistribution d;
  d.family = Family::kUniform;
  d.cap = cap;
  d.embed = std::move(embed);
  return d;
}

DeviationDistribution DeviationDistribution::reciprocal(double value, double beta,
                                                        BidEmbedding embed) {
  if (!(value >= 0.0) || !(beta > 0.0)) throw DomainError("reciprocal deviation needs value >= 0, beta > 0");
  if (value == 0.0) return at_point(0.0, std::move(embed));
  DeviationDistribution d;
  d.family = Family::kReciprocal;
  d.value = value;
  d.beta = beta;
  d.cap = value * -std::expm1(-1.0 / beta);
  d.embed = std::move(embed);
  return d;
}

DeviationDistribution DeviationDistribution::mix(
    std::vector<std::pair<double, DeviationDistribution>> parts) {
  double total = 0.0;
  for (const auto& [w, _] : parts) {
    if (!(w >= 0.0)) throw DomainError("mixture weights must be nonnegative");
    total += w;
  }
  if (std::abs(total - 1.0) > kTolerance) throw DomainError("mixture weights must sum to 1");
  std::erase_if(parts, [](const auto& p) { return p.first == 0.0; });
  if (parts.size() == 1) return parts.front().second;
  DeviationDistribution d;
  d.family = Family::kMixture;
  d.mixture = std::move(parts);
  return d;
}

DeviationDistribution DeviationDistribution::over_actions(
    std::vector<std::pair<double, Action>> actions) {
  double total = 0.0;
  for (const auto& [w, _] : actions) {
    if (!(w >= 0.0)) throw DomainError("discrete deviation weights must be nonnegative");
    total += w;
  }
  if (std::abs(total - 1.0) > kTolerance) throw DomainError("discrete deviation weights must sum to 1");
  DeviationDistribution d;
  d.family = Family::kDiscrete;
  d.discrete = std::move(actions);
  return d;
}

DeviationDistribution DeviationDistribution::custom(std::string label, Evaluator evaluator,
                                                    std::vector<Action> support) {
  DeviationDistribution d;
  d.family = Family::kCustom;
  d.label = std::move(label);
  d.evaluator = std::move(evaluator);
  d.custom_support = std::move(support);
  return d;
}

DeviationDistribution DeviationDistribution::withdraw(const Mechanism& m, int player) {
  return over_actions({{1.0, m.withdraw_action(player)}});
}

double DeviationDistribution::density(double t) const {
  if (t < 0.0 || t > cap) return 0.0;
  if (family == Family::kUniform) return 1.0 / cap;
  if (family == Family::kReciprocal) return beta / (value - t);
  throw DomainError("density is defined for continuous families only");
}

double DeviationDistribution::support_max() const {
  switch (family) {
    case Family::kPoint: return point;
    case Family::kUniform:
    case Family::kReciprocal: return cap;
    case Family::kMixture: {
      double m = 0.0;
      for (const auto& [_, d] : mixture) m = std::max(m, d.support_max());
      return m;
    }
    case Family::kDiscrete: {
      double m = 0.0;
      for (const auto& [_, a] : discrete)
        for (double x : a) m = std::max(m, x);
      return m;
    }
    case Family::kCustom: {
      double m = 0.0;
      for (const auto& a : custom_support)
        for (double x : a) m = std::max(m, x);
      return m;
    }
  }
  return 0.0;
}

double DeviationDistribution::total_mass() const {
  using boost::math::quadrature::gauss_kronrod;
  switch (family) {
    case Family::kPoint: return 1.0;
    case Family::kUniform:
    case Family::kReciprocal:
      return gauss_kronrod<double, 61>::integrate([&](double t) { return density(t); }, 0.0, cap,
                                                  10, 1e-14);
    case Family::kMixture: {
      double m = 0.0;
      for (const auto& [w, d] : mixture) m += w * d.total_mass();
      return m;
    }
    case Family::kDiscrete: {
      double m = 0.0;
      for (const auto& [w, _] : discrete) m += w;
      return m;
    }
    case Family::kCustom: return 1.0;
  }
  return 0.0;
}

std::string DeviationDistribution::describe() const {
  std::ostringstream s;
  s.precision(12);
  switch (family) {
    case Family::kPoint: s << "point(" << point << ")"; break;
    case Family::kUniform: s << "uniform(0, " << cap << ")"; break;
    case Family::kReciprocal:
      s << "reciprocal(v=" << value << ", beta=" << beta << ", cap=" << cap << ")";
      break;
    case Family::kMixture: {
      s << "mixture[";
      for (std::size_t k = 0; k < mixture.size(); ++k)
        s << (k ? ", " : "") << mixture[k].first << " " << mixture[k].second.describe();
      s << "]";
      break;
    }
    case Family::kDiscrete: s << "discrete(" << discrete.size() << " actions)"; break;
    case Family::kCustom: s << label; break;
  }
  return s.str();
}

namespace {

double evaluate(const Mechanism& m, const Valuation& v, std::vector<Action>& trial, int i,
                const Action& a) {
  trial[i] = a;
  const Outcome o = m.run(trial);
  return v.value(o.allocation[i]) - o.payments[i];
}

// Tail mass above b and the first moment above b for the continuous
// families.
std::pair<double, double> tail(const DeviationDistribution& d, double b) {
  if (b >= d.cap) return {0.0, 0.0};
  b = std::max(b, 0.0);
  if (d.family == DeviationDistribution::Family::kUniform)
    return {(d.cap - b) / d.cap, (d.cap * d.cap - b * b) / (2.0 * d.cap)};
  const double log_ratio = std::log((d.value - b) / (d.value - d.cap));
  return {d.beta * log_ratio, d.beta * (d.value * log_ratio - (d.cap - b))};
}

std::optional<double> single_item_closed_form(const Mechanism& m, const Valuation& v,
                                              const DeviationDistribution& d,
                                              std::span<const Action> profile, int i) {
  const auto* item = dynamic_cast<const SingleItemAuction*>(&m);
  if (!item || d.embed.coords != std::vector<int>{0} || d.embed.base.size() != 1)
    return std::nullopt;
  double b = 0.0;
  for (int k = 0; k < m.num_players(); ++k)
    if (k != i) b = std::max(b, profile[k].at(0));
  const std::vector<double> win{1.0}, lose{0.0};
  const double v1 = v.value(win), v0 = v.value(lose);
  const auto [pw, above] = tail(d, b);
  const double base = v1 * pw + v0 * (1.0 - pw);
  const auto& f = item->format();
  switch (f.kind) {
    case SingleItemFormat::Kind::kFirstPrice: return base - above;
    case SingleItemFormat::Kind::kAllPay: return base - tail(d, 0.0).second;
    case SingleItemFormat::Kind::kSecondPrice: return base - b * pw;
    case SingleItemFormat::Kind::kHybrid:
      return base - f.gamma * above - (1.0 - f.gamma) * b * pw;
  }
  return std::nullopt;
}

// Share levels where a concave curve changes slope, mapped back to the
// deviating bid.
std::vector<double> bandwidth_knots(const Mechanism& m, const Valuation& v,
                                    std::span<const Action> profile, int i) {
  const auto* bw = dynamic_cast<const ProportionalBandwidth*>(&m);
  const auto* curve = dynamic_cast<const ConcaveCurveValuation*>(&v);
  if (!bw || !curve) return {};
  double others = 0.0;
  for (int k = 0; k < m.num_players(); ++k)
    if (k != i) others += profile[k].at(0);
  std::vector<double> out;
  for (double x : curve->xs())
    if (x > 0.0 && x < bw->capacity()) out.push_back(x * others / (bw->capacity() - x));
  return out;
}

constexpr double kAbsoluteQuadratureTolerance = 1e-12;

template <class F>
double adaptive(const F& f, double a, double b, int depth) {
  using boost::math::quadrature::gauss_kronrod;
  double error = 0.0;
  const double whole = gauss_kronrod<double, 31>::integrate(f, a, b, 0, 0.0, &error);
  const double c = 0.5 * (a + b);
  // Pieces a few ulps wide cannot be split further.
  if (error <= kAbsoluteQuadratureTolerance * (b - a) || depth >= 30 || c <= a || c >= b ||
      b - a <= 1e-13 * std::max(1.0, std::abs(a)))
    return whole;
  return adaptive(f, a, c, depth + 1) + adaptive(f, c, b, depth + 1);
}

// Breakpoints of the deviating player's outcome over the support: the
// mechanism's hints plus bisected changes of the piece signature.
std::vector<double> find_breaks(const Mechanism& m, const Valuation* v,
                                const DeviationDistribution& d, std::span<const Action> profile,
                                int i, const EvalOptions& options) {
  std::vector<Action> trial(profile.begin(), profile.end());
  const double lo = 0.0, hi = d.cap;
  auto signature = [&](double t) {
    trial[i] = d.embed.at(t);
    return m.piece_signature(m.run(trial));
  };

  std::vector<double> breaks{lo, hi};
  auto hints = m.deviation_hints(i, profile);
  if (v) {
    const auto knots = bandwidth_knots(m, *v, profile, i);
    hints.insert(hints.end(), knots.begin(), knots.end());
  }
  for (double h : hints)
    if (h > lo && h < hi) breaks.push_back(h);

  std::vector<double> grid = breaks;
  for (int k = 1; k < options.scan_samples; ++k) grid.push_back(lo + (hi - lo) * k / options.scan_samples);
  std::sort(grid.begin(), grid.end());
  grid.erase(std::unique(grid.begin(), grid.end()), grid.end());

  std::vector<double> mids;
  std::vector<std::vector<double>> sigs;
  for (std::size_t k = 0; k + 1 < grid.size(); ++k) {
    mids.push_back(0.5 * (grid[k] + grid[k + 1]));
    sigs.push_back(signature(mids.back()));
  }
  for (std::size_t k = 0; k + 1 < mids.size(); ++k) {
    if (sigs[k] == sigs[k + 1]) continue;
    double l = mids[k], r = mids[k + 1];
    for (int it = 0; it < 200 && r - l > 1e-15 * std::max(1.0, r); ++it) {
      const double c = 0.5 * (l + r);
      if (c <= l || c >= r) break;
      (signature(c) == sigs[k] ? l : r) = c;
    }
    breaks.push_back(r);
  }
  std::sort(breaks.begin(), breaks.end());
  breaks.erase(std::unique(breaks.begin(), breaks.end()), breaks.end());
  return breaks;
}

template <class F>
double integrate_pieces(const F& integrand, const std::vector<double>& breaks) {
  using boost::math::quadrature::gauss_kronrod;
  double total = 0.0;
  for (std::size_t k = 0; k + 1 < breaks.size(); ++k) {
    if (breaks[k + 1] <= breaks[k]) continue;
    // Pieces are usually polynomial, where one rule is exact; recurse only
    // when the absolute error estimate is visible.
    double error = 0.0;
    double piece = gauss_kronrod<double, 31>::integrate(integrand, breaks[k], breaks[k + 1], 0,
                                                        0.0, &error);
    if (error > kAbsoluteQuadratureTolerance)
      piece = adaptive(integrand, breaks[k], breaks[k + 1], 0);
    total += piece;
    if (!std::isfinite(total))
      throw NumericError("deviation quadrature diverged on [" + std::to_string(breaks[k]) + ", " +
                         std::to_string(breaks[k + 1]) + "]");
  }
  return total;
}

double integrate_continuous(const Mechanism& m, const Valuation& v,
                            const DeviationDistribution& d, std::span<const Action> profile,
                            int i, const EvalOptions& options) {
  std::vector<Action> trial(profile.begin(), profile.end());
  const auto breaks = find_breaks(m, &v, d, profile, i, options);
  if (d.family == DeviationDistribution::Family::kReciprocal) {
    // With s = -log(value - t) the density becomes the constant beta, so the
    // pieces are smooth in s.
    std::vector<double> s;
    for (double b : breaks) s.push_back(-std::log(d.value - b));
    return integrate_pieces(
        [&](double x) {
          const double t = std::min(d.value - std::exp(-x), d.cap);
          return evaluate(m, v, trial, i, d.embed.at(t)) * d.beta;
        },
        s);
  }
  return integrate_pieces(
      [&](double t) { return evaluate(m, v, trial, i, d.embed.at(t)) * d.density(t); }, breaks);
}

// Probability of (a, b] under a continuous family.
double mass(const DeviationDistribution& d, double a, double b) {
  if (d.family == DeviationDistribution::Family::kUniform) return (b - a) / d.cap;
  return d.beta * std::log((d.value - a) / (d.value - b));
}

void merge_into(AllocationLaw& law, const Allocation& x, double p) {
  for (auto& [y, q] : law.outcomes)
    if (y == x) {
      q += p;
      return;
    }
  law.outcomes.emplace_back(x, p);
}

}  // namespace

double deviation_expected_utility(const Mechanism& mechanism, const Valuation& value,
                                  const DeviationDistribution& dist,
                                  std::span<const Action> profile, int player,
                                  const EvalOptions& options) {
  using Family = DeviationDistribution::Family;
  if (static_cast<int>(profile.size()) != mechanism.num_players())
    throw DomainError("deviation utility: profile has wrong number of players");
  std::vector<Action> trial(profile.begin(), profile.end());
  switch (dist.family) {
    case Family::kPoint:
      return evaluate(mechanism, value, trial, player, dist.embed.at(dist.point));
    case Family::kDiscrete: {
      double s = 0.0;
      for (const auto& [w, a] : dist.discrete) s += w * evaluate(mechanism, value, trial, player, a);
      return s;
    }
    case Family::kMixture: {
      double s = 0.0;
      for (const auto& [w, d] : dist.mixture)
        s += w * deviation_expected_utility(mechanism, value, d, profile, player, options);
      return s;
    }
    case Family::kCustom:
      return dist.evaluator(mechanism, value, profile, player, options);
    case Family::kUniform:
    case Family::kReciprocal:
      if (options.closed_form)
        if (auto c = single_item_closed_form(mechanism, value, dist, profile, player)) return *c;
      return integrate_continuous(mechanism, value, dist, profile, player, options);
  }
  return 0.0;
}

AllocationLaw allocation_law(const Mechanism& mechanism, const DeviationDistribution& dist,
                             std::span<const Action> profile, int player,
                             const EvalOptions& options) {
  using Family = DeviationDistribution::Family;
  AllocationLaw law;
  std::vector<Action> trial(profile.begin(), profile.end());
  auto add_action = [&](const Action& a, double w) {
    trial[player] = a;
    const Outcome o = mechanism.run(trial);
    merge_into(law, o.allocation[player], w);
    law.expected_payment += w * o.payments[player];
  };
  switch (dist.family) {
    case Family::kPoint: add_action(dist.embed.at(dist.point), 1.0); break;
    case Family::kDiscrete:
      for (const auto& [w, a] : dist.discrete) add_action(a, w);
      break;
    case Family::kMixture:
      for (const auto& [w, d] : dist.mixture) {
        const auto part = allocation_law(mechanism, d, profile, player, options);
        for (const auto& [x, p] : part.outcomes) merge_into(law, x, w * p);
        law.expected_payment += w * part.expected_payment;
      }
      break;
    case Family::kCustom:
      throw DomainError("allocation law is not available for custom deviations");
    case Family::kUniform:
    case Family::kReciprocal: {
      if (dynamic_cast<const ProportionalBandwidth*>(&mechanism))
        throw DomainError("allocation law needs piecewise-constant allocations");
      const auto breaks = find_breaks(mechanism, nullptr, dist, profile, player, options);
      for (std::size_t k = 0; k + 1 < breaks.size(); ++k) {
        if (breaks[k + 1] <= breaks[k]) continue;
        trial[player] = dist.embed.at(0.5 * (breaks[k] + breaks[k + 1]));
        merge_into(law, mechanism.run(trial).allocation[player], mass(dist, breaks[k], breaks[k + 1]));
      }
      law.expected_payment = integrate_pieces(
          [&](double t) {
            trial[player] = dist.embed.at(t);
            return mechanism.run(trial).payments[player] * dist.density(t);
          },
          breaks);
      break;
    }
  }
  return law;
}

double bandwidth_bid_scale() {
  const double mu = (3.0 + std::sqrt(3.0)) / 2.0;
  return 1.0 / (mu * (mu - 1.0));
}

DeviationDistribution canonical_deviation(const Mechanism& mechanism, const ValuationProfile& profile,
                                      int player, const Action&, const Optimum& optimum,
                                      const CanonicalDeviationOptions& options) {
  using D = DeviationDistribution;
  const int n = mechanism.num_players();
  if (static_cast<int>(profile.size()) != n || static_cast<int>(optimum.allocation.size()) != n)
    throw DomainError("canonical deviation: profile size mismatch");
  const Allocation& target = optimum.allocation[player];
  const Valuation& v = *profile[player];
  const double v_star = v.value(target);
  const int label = target.size() == 1 ? static_cast<int>(std::lround(target[0])) : 0;

  if (const auto* item = dynamic_cast<const SingleItemAuction*>(&mechanism)) {
    if (label != 1) return D::at_point(0.0);
    switch (item->format().kind) {
      case SingleItemFormat::Kind::kFirstPrice: return D::reciprocal(v_star, 1.0);
      case SingleItemFormat::Kind::kAllPay: return D::uniform(v_star);
      case SingleItemFormat::Kind::kSecondPrice: return D::at_point(v_star);
      case SingleItemFormat::Kind::kHybrid: {
        const double g = item->format().gamma;
        return D::mix({{g, D::reciprocal(v_star, 1.0)}, {1.0 - g, D::at_point(v_star)}});
      }
    }
  }
  if (dynamic_cast<const GreedyCombinatorialAuction*>(&mechanism)) {
    if (label == 0) return D::withdraw(mechanism, player);
    return D::reciprocal(v_star, options.beta, BidEmbedding{{static_cast<double>(label), 0.0}, {1}});
  }
  if (const auto* pos = dynamic_cast<const PositionAuction*>(&mechanism)) {
    const double per_click = v_star / pos->ctr(player, label);
    switch (pos->model()) {
      case ClickModel::kPerImpression: return D::uniform(v_star);
      case ClickModel::kMonotonePerClick: return D::uniform(per_click);
      case ClickModel::kPositionIndependent: return D::reciprocal(per_click, 1.0);
    }
  }
  if (const auto* pp = dynamic_cast<const PublicProjectAuction*>(&mechanism)) {
    return D::reciprocal(v_star, 1.0 / n, BidEmbedding{Action(pp->projects(), 0.0), {label - 1}});
  }
  if (dynamic_cast<const ProportionalBandwidth*>(&mechanism)) {
    return D::uniform(bandwidth_bid_scale() * v_star);
  }
  if (const auto* mu = dynamic_cast<const MultiUnitGreedy*>(&mechanism)) {
    if (label == 0) return D::withdraw(mechanism, player);
    BidEmbedding e{Action(mu->units(), 0.0), {}};
    for (int k = 0; k < label; ++k) e.coords.push_back(k);
    return D::reciprocal(v_star / label, 1.0, e);
  }
  if (dynamic_cast<const UniformPriceAuction*>(&mechanism)) {
    if (label == 0) return D::withdraw(mechanism, player);
    return D::reciprocal(v_star / label, 1.0, BidEmbedding{{static_cast<double>(label), 0.0}, {1}});
  }
  throw DomainError("no catalog deviation for mechanism '" + mechanism.kind() + "'");
}

DeviationSource canonical_deviation_source(CanonicalDeviationOptions options) {
  DeviationSource s;
  s.make = [options](const Mechanism& m, const ValuationProfile& v, int i, const Action& a,
                     const Optimum& opt) { return canonical_deviation(m, v, i, a, opt, options); };
  s.name = "canonical";
  return s;
}

namespace {

void decode(const Mechanism& m, std::size_t p, std::vector<int>& idx) {
  for (int i = m.num_players() - 1; i >= 0; --i) {
    idx[i] = static_cast<int>(p % m.grid(i).size());
    p /= m.grid(i).size();
  }
}

// Lexicographic index of the opponents' actions.
std::size_t opponent_index(const Mechanism& m, const std::vector<int>& idx, int i) {
  std::size_t r = 0;
  for (int k = 0; k < m.num_players(); ++k)
    if (k != i) r = r * m.grid(k).size() + idx[k];
  return r;
}

std::size_t opponent_count(const Mechanism& m, int i) {
  std::size_t r = 1;
  for (int k = 0; k < m.num_players(); ++k)
    if (k != i) r *= m.grid(k).size();
  return r;
}

std::vector<Action> actions_of(const Mechanism& m, const std::vector<int>& idx) {
  std::vector<Action> a(m.num_players());
  for (int k = 0; k < m.num_players(); ++k) a[k] = m.grid(k)[idx[k]];
  return a;
}

// Per-player deviation utilities indexed by opponent profile, for sources
// that ignore the player's own action.
std::vector<std::vector<double>> deviation_table(const Mechanism& m, const ValuationProfile& v,
                                                 const Optimum& opt, const DeviationSource& source,
                                                 const EvalOptions& eval) {
  const int n = m.num_players();
  std::vector<std::vector<double>> table(n);
  std::vector<int> idx(n);
  for (int i = 0; i < n; ++i) {
    const auto dist = source.make(m, v, i, m.grid(i)[0], opt);
    table[i].assign(opponent_count(m, i), 0.0);
    // Enumerate profiles with player i fixed at action 0.
    for (std::size_t p = 0; p < m.profile_count(); ++p) {
      decode(m, p, idx);
      if (idx[i] != 0) continue;
      const auto a = actions_of(m, idx);
      table[i][opponent_index(m, idx, i)] = deviation_expected_utility(m, *v[i], dist, a, i, eval);
    }
  }
  return table;
}

struct PerValuation {
  double margin = kInf;
  std::size_t worst = 0;
};

SmoothnessCertificate run_certificate(const Mechanism& m,
                                      const std::vector<ValuationProfile>& profiles, double lambda,
                                      double mu1, double mu2, bool weak,
                                      const DeviationSource& source,
                                      const CertifyOptions& options) {
  if (lambda < 0.0 || mu1 < 0.0 || mu2 < 0.0) throw DomainError("smoothness parameters must be >= 0");
  const std::size_t count = m.profile_count();
  if (count > kDefaultTableCap) throw SizeError("certify: joint grid too large", count, kDefaultTableCap);
  const int n = m.num_players();

  // Payment terms depend on the mechanism only.
  std::vector<double> charge(count, 0.0);
  {
    std::vector<int> idx(n);
    std::map<std::tuple<int, int, Allocation>, double> wtp;
    for (std::size_t p = 0; p < count; ++p) {
      decode(m, p, idx);
      const auto a = actions_of(m, idx);
      const Outcome o = m.run(a);
      for (int i = 0; i < n; ++i) {
        charge[p] += mu1 * o.payments[i];
        if (!weak || mu2 == 0.0) continue;
        const auto key = std::make_tuple(i, idx[i], o.allocation[i]);
        auto it = wtp.find(key);
        if (it == wtp.end())
          it = wtp.emplace(key, willingness_to_pay_sup(m, i, a[i], o.allocation[i])).first;
        charge[p] += mu2 * it->second;
      }
    }
  }

  std::vector<PerValuation> results(profiles.size());
  auto work = [&](std::size_t vi) {
    const auto& v = profiles[vi];
    if (static_cast<int>(v.size()) != n) throw DomainError("certify: valuation profile size mismatch");
    const Optimum opt = m.optimum(v);
    std::vector<int> idx(n);
    PerValuation r;
    if (!source.uses_own_action) {
      const auto table = deviation_table(m, v, opt, source, options.eval);
      for (std::size_t p = 0; p < count; ++p) {
        decode(m, p, idx);
        double s = charge[p] - lambda * opt.value;
        for (int i = 0; i < n; ++i) s += table[i][opponent_index(m, idx, i)];
        if (s < r.margin) r = {s, p};
      }
    } else {
      std::vector<std::vector<std::optional<DeviationDistribution>>> dists(n);
      for (int i = 0; i < n; ++i) dists[i].resize(m.grid(i).size());
      for (std::size_t p = 0; p < count; ++p) {
        decode(m, p, idx);
        const auto a = actions_of(m, idx);
        double s = charge[p] - lambda * opt.value;
        for (int i = 0; i < n; ++i) {
          auto& d = dists[i][idx[i]];
          if (!d) d = source.make(m, v, i, a[i], opt);
          s += deviation_expected_utility(m, *v[i], *d, a, i, options.eval);
        }
        if (s < r.margin) r = {s, p};
      }
    }
    results[vi] = r;
  };

  const int threads = std::max(1, std::min<int>(options.threads, static_cast<int>(profiles.size())));
  if (threads == 1) {
    for (std::size_t vi = 0; vi < profiles.size(); ++vi) work(vi);
  } else {
    std::vector<std::thread> pool;
    std::vector<std::exception_ptr> errors(threads);
    for (int t = 0; t < threads; ++t)
      pool.emplace_back([&, t] {
        try {
          for (std::size_t vi = t; vi < profiles.size(); vi += threads) work(vi);
        } catch (...) {
          errors[t] = std::current_exception();
        }
      });
    for (auto& th : pool) th.join();
    for (auto& e : errors)
      if (e) std::rethrow_exception(e);
  }

  SmoothnessCertificate c;
  c.mechanism = m.kind();
  c.deviation = source.name;
  c.weak = weak;
  c.lambda = lambda;
  c.mu1 = mu1;
  c.mu2 = mu2;
  c.valuations_checked = profiles.size();
  c.profiles_checked = count * profiles.size();
  for (std::size_t vi = 0; vi < results.size(); ++vi)
    if (results[vi].margin < c.margin) {
      c.margin = results[vi].margin;
      c.worst_valuation = vi;
      std::vector<int> idx(n);
      decode(m, results[vi].worst, idx);
      c.worst_profile = actions_of(m, idx);
    }
  c.pass = c.margin >= -options.tolerance;
  std::ostringstream note;
  note << "grid ";
  for (int i = 0; i < n; ++i) note << (i ? "x" : "") << m.grid(i).size();
  note << " actions; deviations integrated over continuous bids";
  c.grid_note = note.str();
  return c;
}

}  // namespace

SmoothnessCertificate certify(const Mechanism& mechanism,
                              const std::vector<ValuationProfile>& profiles, double lambda,
                              double mu, const DeviationSource& source,
                              const CertifyOptions& options) {
  return run_certificate(mechanism, profiles, lambda, mu, 0.0, false, source, options);
}

SmoothnessCertificate certify_weak(const Mechanism& mechanism,
                                   const std::vector<ValuationProfile>& profiles, double lambda,
                                   double mu1, double mu2, const DeviationSource& source,
                                   const CertifyOptions& options) {
  return run_certificate(mechanism, profiles, lambda, mu1, mu2, true, source, options);
}

namespace {

void support_actions(const DeviationDistribution& d, std::vector<Action>& out) {
  using Family = DeviationDistribution::Family;
  switch (d.family) {
    case Family::kPoint: out.push_back(d.embed.at(d.point)); break;
    case Family::kUniform:
    case Family::kReciprocal:
      for (int k = 0; k <= 16; ++k) out.push_back(d.embed.at(d.cap * k / 16.0));
      break;
    case Family::kMixture:
      for (const auto& [_, part] : d.mixture) support_actions(part, out);
      break;
    case Family::kDiscrete:
      for (const auto& [_, a] : d.discrete) out.push_back(a);
      break;
    case Family::kCustom:
      out.insert(out.end(), d.custom_support.begin(), d.custom_support.end());
      break;
  }
}

}  // namespace

ConservativeAudit check_conservative(const Mechanism& mechanism,
                                     const DeviationDistribution& dist, const Valuation& value,
                                     int player) {
  ConservativeAudit audit;
  audit.max_value = value.max_value();
  std::vector<Action> support;
  support_actions(dist, support);
  const int n = mechanism.num_players();
  std::vector<int> idx(n);
  for (const auto& a : support) {
    for (std::size_t p = 0; p < mechanism.profile_count(); ++p) {
      decode(mechanism, p, idx);
      if (idx[player] != 0) continue;
      auto trial = actions_of(mechanism, idx);
      trial[player] = a;
      const Outcome o = mechanism.run(trial);
      const double pay = std::max(o.payments[player],
                                  willingness_to_pay_sup(mechanism, player, a, o.allocation[player]));
      if (pay > audit.max_payment) {
        audit.max_payment = pay;
        if (pay > audit.max_value + kTolerance) {
          audit.pass = false;
          audit.witness_action = a;
          audit.witness_opponents = trial;
        }
      }
    }
  }
  return audit;
}

LambdaFit fit_lambda(const Mechanism& mechanism, const ValuationProfile& profile, double mu,
                     const DeviationSource& source, const EvalOptions& eval,
                     std::size_t max_rows) {
  const int n = mechanism.num_players();
  const GameTable table = to_normal_form(mechanism, profile);
  const Optimum opt = mechanism.optimum(profile);
  std::size_t columns = 1;
  std::vector<std::size_t> offset(n);
  for (int i = 0; i < n; ++i) {
    offset[i] = columns;
    columns += mechanism.grid(i).size() * (mechanism.grid(i).size() + 1);
  }
  const std::size_t rows = table.num_profiles + columns - 1;
  if (rows > max_rows) throw SizeError("fit_lambda: LP has too many rows", rows, max_rows);

  LambdaFit fit;
  fit.columns = columns;
  if (opt.value <= kTolerance) {
    fit.lambda = kInf;
    fit.status = lp::Status::kUnbounded;
    return fit;
  }

  std::vector<std::vector<double>> canonical;
  std::vector<std::vector<std::optional<DeviationDistribution>>> own(n);
  if (!source.uses_own_action) {
    canonical = deviation_table(mechanism, profile, opt, source, eval);
  } else {
    for (int i = 0; i < n; ++i) own[i].resize(mechanism.grid(i).size());
  }

  lp::LinearProgram program(lp::Sense::kMaximize, std::vector<double>(columns, 0.0));
  program.objective[0] = 1.0;
  std::vector<int> idx(n);
  for (std::size_t p = 0; p < table.num_profiles; ++p) {
    table.decode(p, idx);
    std::vector<double> row(columns, 0.0);
    row[0] = -opt.value;
    double rhs = 0.0;
    const auto actions = actions_of(mechanism, idx);
    for (int i = 0; i < n; ++i) {
      const std::size_t k = mechanism.grid(i).size();
      const std::size_t base = offset[i] + idx[i] * (k + 1);
      for (std::size_t c = 0; c < k; ++c)
        row[base + c] = table.u(table.with_action(p, i, static_cast<int>(c)), i);
      double dev;
      if (!source.uses_own_action) {
        dev = canonical[i][opponent_index(mechanism, idx, i)];
      } else {
        auto& d = own[i][idx[i]];
        if (!d) d = source.make(mechanism, profile, i, actions[i], opt);
        dev = deviation_expected_utility(mechanism, *profile[i], *d, actions, i, eval);
      }
      row[base + k] = dev;
      rhs -= mu * table.payment[p * n + i];
    }
    program.add(std::move(row), lp::Relation::kGreaterEqual, rhs);
  }
  for (int i = 0; i < n; ++i) {
    const std::size_t k = mechanism.grid(i).size();
    for (std::size_t a = 0; a < k; ++a) {
      std::vector<double> row(columns, 0.0);
      for (std::size_t c = 0; c <= k; ++c) row[offset[i] + a * (k + 1) + c] = 1.0;
      program.add(std::move(row), lp::Relation::kEqual, 1.0);
    }
  }
  fit.rows = program.constraints.size();
  const auto result = lp::solve(program);
  fit.status = result.status;
  fit.lambda = result.status == lp::Status::kOptimal ? result.value
               : result.status == lp::Status::kUnbounded ? kInf
                                                          : -kInf;
  return fit;
}

double poa_bound(double lambda, double mu) {
  if (lambda < 0.0 || mu < 0.0) throw DomainError("smoothness parameters must be >= 0");
  return lambda / std::max(mu, 1.0);
}

double weak_poa_bound(double lambda, double mu1, double mu2) {
  if (lambda < 0.0 || mu1 < 0.0 || mu2 < 0.0) throw DomainError("smoothness parameters must be >= 0");
  return lambda / (mu2 + std::max(mu1, 1.0));
}

}  // namespace smoothmech
