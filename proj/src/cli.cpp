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


#include "smoothmech/cli.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <sstream>

#include "smoothmech/budgets.hpp"
#include "smoothmech/composition.hpp"
#include "smoothmech/equilibrium.hpp"
#include "smoothmech/lp.hpp"
#include "smoothmech/mechanisms.hpp"
#include "smoothmech/smoothness.hpp"
#include "smoothmech/valuations.hpp"

namespace smoothmech::cli {
namespace {

using json = nlohmann::json;
using ojson = nlohmann::ordered_json;
using Keys = std::vector<std::string>;

// ---------------------------------------------------------------------------
// Schema helpers

[[noreturn]] void fail(const std::string& path, const std::string& message) {
  throw ConfigError(path + ": " + message);
}

std::string field(const std::string& path, const std::string& key) {
  return path.empty() ? key : path + "." + key;
}

std::string element(const std::string& path, std::size_t k) {
  return path + "[" + std::to_string(k) + "]";
}

void check_keys(const json& j, const std::string& path, const Keys& allowed,
                const Keys& required = {}) {
  if (!j.is_object()) fail(path, "expected an object");
  for (auto it = j.begin(); it != j.end(); ++it)
    if (std::find(allowed.begin(), allowed.end(), it.key()) == allowed.end())
      fail(field(path, it.key()), "unknown field");
  for (const auto& r : required)
    if (!j.contains(r)) fail(field(path, r), "required field missing");
}

double as_number(const json& j, const std::string& path) {
  if (j.is_number()) return j.get<double>();
  if (j.is_string() && j.get<std::string>() == "inf") return kInf;
  fail(path, "expected a number");
}

double number(const json& j, const std::string& key, const std::string& path,
              std::optional<double> fallback = std::nullopt) {
  if (!j.contains(key)) {
    if (fallback) return *fallback;
    fail(field(path, key), "required field missing");
  }
  return as_number(j.at(key), field(path, key));
}

long integer(const json& j, const std::string& key, const std::string& path,
             std::optional<long> fallback, long lo, long hi) {
  if (!j.contains(key)) {
    if (fallback) return *fallback;
    fail(field(path, key), "required field missing");
  }
  const auto& v = j.at(key);
  if (!v.is_number_integer()) fail(field(path, key), "expected an integer");
  const long x = v.get<long>();
  if (x < lo || x > hi)
    fail(field(path, key), "must lie in [" + std::to_string(lo) + ", " + std::to_string(hi) + "]");
  return x;
}

bool boolean(const json& j, const std::string& key, const std::string& path, bool fallback) {
  if (!j.contains(key)) return fallback;
  if (!j.at(key).is_boolean()) fail(field(path, key), "expected true or false");
  return j.at(key).get<bool>();
}

std::string text(const json& j, const std::string& key, const std::string& path,
                 std::optional<std::string> fallback = std::nullopt, const Keys& choices = {}) {
  std::string s;
  if (!j.contains(key)) {
    if (!fallback) fail(field(path, key), "required field missing");
    s = *fallback;
  } else {
    if (!j.at(key).is_string()) fail(field(path, key), "expected a string");
    s = j.at(key).get<std::string>();
  }
  if (!choices.empty() && std::find(choices.begin(), choices.end(), s) == choices.end()) {
    std::string list;
    for (const auto& c : choices) list += (list.empty() ? "" : ", ") + c;
    fail(field(path, key), "'" + s + "' is not one of {" + list + "}");
  }
  return s;
}

const json& array(const json& j, const std::string& key, const std::string& path,
                  bool nonempty = true) {
  if (!j.contains(key)) fail(field(path, key), "required field missing");
  const auto& a = j.at(key);
  if (!a.is_array()) fail(field(path, key), "expected an array");
  if (nonempty && a.empty()) fail(field(path, key), "must not be empty");
  return a;
}

std::vector<double> numbers(const json& a, const std::string& path) {
  if (!a.is_array()) fail(path, "expected an array of numbers");
  std::vector<double> out;
  for (std::size_t k = 0; k < a.size(); ++k) out.push_back(as_number(a[k], element(path, k)));
  return out;
}

// ---------------------------------------------------------------------------
// Output helpers

ojson num(double x) {
  if (std::isfinite(x)) return std::strtod(format_number(x).c_str(), nullptr);
  return format_number(x);
}

ojson nums(const std::vector<double>& xs) {
  ojson a = ojson::array();
  for (double x : xs) a.push_back(num(x));
  return a;
}

ojson actions(const std::vector<Action>& profile) {
  ojson a = ojson::array();
  for (const auto& x : profile) a.push_back(nums(x));
  return a;
}

std::string csv_escape(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) out += c == '"' ? std::string("\"\"") : std::string(1, c);
  return out + "\"";
}

const char* kCheckHeader = "label,check,index,value,relation,threshold,pass";

// One line per check in both the JSON run record and the CSV.
struct Recorder {
  std::string label;
  std::vector<std::string>* rows = nullptr;
  ojson checks = ojson::array();
  bool pass = true;

  void add(const std::string& check, long index, double value, const std::string& relation,
           double threshold, bool ok) {
    pass = pass && ok;
    ojson c;
    c["check"] = check;
    if (index >= 0) c["index"] = index;
    c["value"] = num(value);
    c["relation"] = relation;
    c["threshold"] = num(threshold);
    c["pass"] = ok;
    checks.push_back(c);
    rows->push_back(csv_escape(label) + "," + check + "," +
                    (index >= 0 ? std::to_string(index) : std::string()) + "," +
                    format_number(value) + "," + relation + "," + format_number(threshold) + "," +
                    (ok ? "true" : "false"));
  }
  void at_least(const std::string& check, long index, double value, double threshold) {
    add(check, index, value, ">=", threshold, value >= threshold);
  }
  void at_most(const std::string& check, long index, double value, double threshold) {
    add(check, index, value, "<=", threshold, value <= threshold);
  }
};

// ---------------------------------------------------------------------------
// Mechanisms

std::vector<std::vector<Action>> replicate(int players, const std::vector<Action>& grid) {
  return std::vector<std::vector<Action>>(players, grid);
}

MechanismPtr parse_mechanism(const json& j, const std::string& path);

std::vector<MechanismPtr> parse_components(const json& j, const std::string& path) {
  const auto& a = array(j, "components", path);
  std::vector<MechanismPtr> out;
  for (std::size_t k = 0; k < a.size(); ++k)
    out.push_back(parse_mechanism(a[k], element(field(path, "components"), k)));
  return out;
}

MechanismPtr parse_mechanism(const json& j, const std::string& path) {
  if (!j.is_object()) fail(path, "expected an object");
  const std::string kind =
      text(j, "kind", path, std::nullopt,
           {"single_item", "position", "greedy_combinatorial", "public_project",
            "proportional_bandwidth", "multi_unit_greedy", "uniform_price", "simultaneous",
            "sequential"});
  auto players = [&] { return static_cast<int>(integer(j, "players", path, 2, 1, 8)); };
  auto grid = [&](double& cap) {
    const std::string gp = field(path, "grid");
    if (!j.contains("grid")) fail(gp, "required field missing");
    check_keys(j.at("grid"), gp, {"cap", "points"}, {"points"});
    cap = number(j.at("grid"), "cap", gp, 1.0);
    if (!(cap > 0.0) || std::isinf(cap)) fail(field(gp, "cap"), "must be positive and finite");
    return static_cast<int>(integer(j.at("grid"), "points", gp, std::nullopt, 1, 1001));
  };
  auto payment = [&] {
    return payment_style_from_string(
        text(j, "payment", path, "pay_your_bid", {"pay_your_bid", "threshold"}));
  };
  double cap = 1.0;

  if (kind == "single_item") {
    check_keys(j, path, {"kind", "format", "gamma", "players", "grid"}, {"format", "grid"});
    const std::string f = text(j, "format", path, std::nullopt,
                               {"first_price", "all_pay", "second_price", "hybrid"});
    SingleItemFormat format = SingleItemFormat::first_price();
    if (f == "all_pay") format = SingleItemFormat::all_pay();
    if (f == "second_price") format = SingleItemFormat::second_price();
    if (f == "hybrid") {
      const double g = number(j, "gamma", path);
      if (!(g >= 0.0 && g <= 1.0)) fail(field(path, "gamma"), "must lie in [0, 1]");
      format = SingleItemFormat::hybrid(g);
    } else if (j.contains("gamma")) {
      fail(field(path, "gamma"), "only hybrid auctions take gamma");
    }
    const int n = players();
    const int points = grid(cap);
    return std::make_shared<SingleItemAuction>(format, scalar_grids(n, cap, points));
  }
  if (kind == "position") {
    check_keys(j, path, {"kind", "click_model", "payment", "ctrs", "separable", "players", "grid"},
               {"click_model", "grid"});
    const std::string model = text(j, "click_model", path, std::nullopt,
                                   {"per_impression", "monotone", "position_independent"});
    const int n = players();
    std::vector<std::vector<double>> ctrs;
    if (j.contains("ctrs") && j.contains("separable"))
      fail(field(path, "ctrs"), "give either ctrs or separable, not both");
    if (j.contains("ctrs")) {
      const auto& a = array(j, "ctrs", path);
      for (std::size_t k = 0; k < a.size(); ++k)
        ctrs.push_back(numbers(a[k], element(field(path, "ctrs"), k)));
    } else if (j.contains("separable")) {
      const std::string sp = field(path, "separable");
      check_keys(j.at("separable"), sp, {"alpha", "gamma"}, {"alpha", "gamma"});
      ctrs = separable_ctrs(numbers(j.at("separable").at("alpha"), field(sp, "alpha")),
                            numbers(j.at("separable").at("gamma"), field(sp, "gamma")));
    }
    ClickModel cm = ClickModel::kPerImpression;
    if (model == "monotone") cm = ClickModel::kMonotonePerClick;
    if (model == "position_independent") cm = ClickModel::kPositionIndependent;
    if (cm == ClickModel::kPerImpression && !ctrs.empty())
      fail(field(path, "ctrs"), "per-impression auctions take no ctrs");
    if (cm != ClickModel::kPerImpression && ctrs.empty())
      fail(field(path, "ctrs"), "per-click auctions need ctrs or separable");
    const auto style = payment();
    const int points = grid(cap);
    return std::make_shared<PositionAuction>(cm, ctrs, style, scalar_grids(n, cap, points));
  }
  if (kind == "greedy_combinatorial") {
    check_keys(j, path, {"kind", "items", "rank_exponent", "payment", "masks", "players", "grid"},
               {"items", "grid"});
    const int items = static_cast<int>(integer(j, "items", path, std::nullopt, 1, 4));
    const double rank = number(j, "rank_exponent", path, 0.0);
    std::vector<int> masks;
    if (j.contains("masks")) {
      const auto& a = array(j, "masks", path);
      for (std::size_t k = 0; k < a.size(); ++k) {
        if (!a[k].is_number_integer()) fail(element(field(path, "masks"), k), "expected an integer");
        const int mk = a[k].get<int>();
        if (mk < 1 || mk >= (1 << items))
          fail(element(field(path, "masks"), k), "not a nonempty subset of the items");
        masks.push_back(mk);
      }
    } else {
      for (int mk = 1; mk < (1 << items); ++mk) masks.push_back(mk);
    }
    const auto style = payment();
    const int n = players();
    const int points = grid(cap);
    return std::make_shared<GreedyCombinatorialAuction>(
        items, rank, style, replicate(n, greedy_declaration_grid(masks, cap, points)));
  }
  if (kind == "public_project") {
    check_keys(j, path, {"kind", "projects", "players", "grid"}, {"projects", "grid"});
    const int projects = static_cast<int>(integer(j, "projects", path, std::nullopt, 1, 6));
    const int n = players();
    const int points = grid(cap);
    return std::make_shared<PublicProjectAuction>(
        projects, replicate(n, project_bid_grid(projects, cap, points)));
  }
  if (kind == "proportional_bandwidth") {
    check_keys(j, path, {"kind", "capacity", "players", "grid"}, {"grid"});
    const double capacity = number(j, "capacity", path, 1.0);
    const int n = players();
    const int points = grid(cap);
    return std::make_shared<ProportionalBandwidth>(capacity, scalar_grids(n, cap, points));
  }
  if (kind == "multi_unit_greedy") {
    check_keys(j, path, {"kind", "units", "payment", "players", "grid"}, {"units", "grid"});
    const int units = static_cast<int>(integer(j, "units", path, std::nullopt, 1, 6));
    const auto style = payment();
    const int n = players();
    const int points = grid(cap);
    return std::make_shared<MultiUnitGreedy>(units, style,
                                             replicate(n, marginal_bid_grid(units, cap, points)));
  }
  if (kind == "uniform_price") {
    check_keys(j, path, {"kind", "units", "players", "grid"}, {"units", "grid"});
    const int units = static_cast<int>(integer(j, "units", path, std::nullopt, 1, 6));
    const int n = players();
    const int points = grid(cap);
    return std::make_shared<UniformPriceAuction>(
        units, replicate(n, quantity_bid_grid(units, cap, points)));
  }
  if (kind == "simultaneous") {
    check_keys(j, path, {"kind", "components", "cap"}, {"components"});
    const auto limit = static_cast<std::size_t>(
        integer(j, "cap", path, static_cast<long>(kDefaultJointGridCap), 1, 1'000'000));
    return std::make_shared<SimultaneousComposition>(parse_components(j, path), limit);
  }
  check_keys(j, path, {"kind", "components", "policy", "cap"}, {"components"});
  const auto policy = info_policy_from_string(
      text(j, "policy", path, "full_bids", {"full_bids", "own_outcome_only", "none"}));
  const auto limit = static_cast<std::size_t>(
      integer(j, "cap", path, static_cast<long>(kDefaultPlanCap), 1, 1'000'000));
  return std::make_shared<SequentialComposition>(parse_components(j, path), policy, limit);
}

// Outcome labels a player's tabulated valuation is defined on.
bool append_coordinates(const Mechanism& m, std::vector<Coordinate>& out) {
  auto chain = [](int lo, int hi, std::optional<int> bottom) {
    Coordinate c;
    for (int k = lo; k <= hi; ++k) c.labels.push_back(k);
    c.bottom = bottom;
    return c;
  };
  if (dynamic_cast<const SingleItemAuction*>(&m)) {
    out.push_back(chain(0, 1, 0));
  } else if (dynamic_cast<const PositionAuction*>(&m)) {
    out.push_back(chain(1, m.num_players(), std::nullopt));
  } else if (const auto* p = dynamic_cast<const PublicProjectAuction*>(&m)) {
    out.push_back(chain(1, p->projects(), std::nullopt));
  } else if (const auto* g = dynamic_cast<const GreedyCombinatorialAuction*>(&m)) {
    out.push_back(chain(0, (1 << g->items()) - 1, 0));
  } else if (const auto* u = dynamic_cast<const MultiUnitGreedy*>(&m)) {
    out.push_back(chain(0, u->units(), 0));
  } else if (const auto* q = dynamic_cast<const UniformPriceAuction*>(&m)) {
    out.push_back(chain(0, q->units(), 0));
  } else if (const auto* s = dynamic_cast<const SimultaneousComposition*>(&m)) {
    for (int j = 0; j < s->size(); ++j)
      if (!append_coordinates(s->component(j), out)) return false;
  } else if (const auto* r = dynamic_cast<const SequentialComposition*>(&m)) {
    for (int j = 0; j < r->size(); ++j)
      if (!append_coordinates(r->round(j), out)) return false;
  } else {
    return false;
  }
  return true;
}

std::optional<ProductSpace> natural_space(const Mechanism& m) {
  std::vector<Coordinate> coords;
  if (!append_coordinates(m, coords)) return std::nullopt;
  return ProductSpace(std::move(coords));
}

bool is_composed(const Mechanism& m) {
  return dynamic_cast<const SimultaneousComposition*>(&m) ||
         dynamic_cast<const SequentialComposition*>(&m);
}

DeviationSource source_for(const Mechanism& m, double beta) {
  CanonicalDeviationOptions o;
  o.beta = beta;
  if (dynamic_cast<const SimultaneousComposition*>(&m))
    return simultaneous_deviation_source(canonical_deviation_source(o));
  if (dynamic_cast<const SequentialComposition*>(&m))
    return sequential_deviation_source(canonical_deviation_source(o));
  return canonical_deviation_source(o);
}

// ---------------------------------------------------------------------------
// Valuations

ValuationPtr parse_valuation(const json& j, const std::string& path, const Mechanism& m,
                             const std::optional<ProductSpace>& space) {
  if (j.is_number()) {
    if (!space || space->dims() != 1 || space->extent(0) != 2 || space->coordinate(0).bottom != 0)
      fail(path, "a scalar valuation needs a single-item outcome space");
    return std::make_shared<TabulatedValuation>(*space, std::vector<double>{0.0, j.get<double>()});
  }
  if (j.is_array()) {
    if (!space) fail(path, "this mechanism has no tabulated outcome space");
    auto table = numbers(j, path);
    if (table.size() != space->size())
      fail(path, "expected " + std::to_string(space->size()) + " entries, one per outcome");
    return std::make_shared<TabulatedValuation>(*space, std::move(table));
  }
  if (j.is_object() && j.contains("xs")) {
    check_keys(j, path, {"xs", "ys"}, {"xs", "ys"});
    return std::make_shared<ConcaveCurveValuation>(numbers(j.at("xs"), field(path, "xs")),
                                                   numbers(j.at("ys"), field(path, "ys")));
  }
  check_keys(j, path, {"labels", "bottoms", "values"}, {"labels", "values"});
  const auto& labels = array(j, "labels", path);
  std::vector<Coordinate> coords;
  for (std::size_t k = 0; k < labels.size(); ++k)
    coords.push_back({numbers(labels[k], element(field(path, "labels"), k)), std::nullopt});
  if (j.contains("bottoms")) {
    const auto& b = array(j, "bottoms", path);
    if (b.size() != coords.size()) fail(field(path, "bottoms"), "one entry per coordinate");
    for (std::size_t k = 0; k < b.size(); ++k) {
      if (b[k].is_null()) continue;
      if (!b[k].is_number_integer()) fail(element(field(path, "bottoms"), k), "index or null");
      coords[k].bottom = b[k].get<int>();
    }
  }
  (void)m;
  return std::make_shared<TabulatedValuation>(ProductSpace(std::move(coords)),
                                              numbers(j.at("values"), field(path, "values")));
}

struct GeneratorParams {
  std::string kind;
  double scale = 1.0;
  int components = 2;
  int pieces = 2;
  std::vector<int> sets;
};

double draw(std::mt19937_64& rng, double scale) {
  return std::uniform_real_distribution<double>(0.05, 1.0)(rng) * scale;
}

// Per-coordinate values on a space, summed.
TabulatedValuation additive_any(const ProductSpace& space, std::mt19937_64& rng, double scale) {
  if (space.has_bottoms()) return random_additive(space, rng, scale);
  std::vector<std::vector<double>> w(space.dims());
  for (int j = 0; j < space.dims(); ++j)
    for (int d = 0; d < space.extent(j); ++d) w[j].push_back(draw(rng, scale));
  std::vector<double> table(space.size(), 0.0);
  for (std::size_t x = 0; x < space.size(); ++x)
    for (int j = 0; j < space.dims(); ++j) table[x] += w[j][space.digit(x, j)];
  return TabulatedValuation(space, std::move(table));
}

// Power transform of increasing per-coordinate weights; power < 1 gives
// diminishing returns along every chain.
TabulatedValuation chain_power(const ProductSpace& space, std::mt19937_64& rng, double scale,
                               double power) {
  std::vector<std::vector<double>> w(space.dims());
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int j = 0; j < space.dims(); ++j) {
    w[j].assign(space.extent(j), 0.0);
    for (int d = 1; d < space.extent(j); ++d) w[j][d] = w[j][d - 1] + u(rng);
  }
  std::vector<double> table(space.size());
  for (std::size_t x = 0; x < space.size(); ++x) {
    double s = 0.0;
    for (int j = 0; j < space.dims(); ++j) s += w[j][space.digit(x, j)];
    table[x] = scale * std::pow(s, power);
  }
  return TabulatedValuation(space, std::move(table));
}

ValuationPtr concave_chain(const Mechanism& m, const std::optional<ProductSpace>& space, int player,
                           const GeneratorParams& g, std::mt19937_64& rng,
                           const std::string& path) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  if (const auto* bw = dynamic_cast<const ProportionalBandwidth*>(&m)) {
    std::vector<double> xs{0.0}, ys{0.0};
    double slope = 2.0 * draw(rng, g.scale);
    for (int k = 1; k <= g.pieces; ++k) {
      xs.push_back(bw->capacity() * k / g.pieces);
      ys.push_back(ys.back() + slope * bw->capacity() / g.pieces);
      slope *= u(rng);
    }
    return std::make_shared<ConcaveCurveValuation>(xs, ys);
  }
  if (const auto* pos = dynamic_cast<const PositionAuction*>(&m)) {
    // Per-click value, non-increasing down the slots; constant when clicks do
    // not depend on the slot.
    const int n = m.num_players();
    std::vector<double> table;
    double a = draw(rng, g.scale);
    for (int j = 1; j <= n; ++j) {
      table.push_back(pos->ctr(player, j) * a);
      if (pos->model() != ClickModel::kPositionIndependent) a *= u(rng);
    }
    return std::make_shared<TabulatedValuation>(*space, std::move(table));
  }
  if (!space || !space->has_bottoms())
    fail(path, "concave_chain needs chain outcomes with a bottom or a bandwidth mechanism");
  if (dynamic_cast<const GreedyCombinatorialAuction*>(&m) || dynamic_cast<const PublicProjectAuction*>(&m))
    fail(path, "concave_chain does not apply to this mechanism");
  if (space->dims() > 1) return std::make_shared<TabulatedValuation>(chain_power(*space, rng, g.scale, 0.5));
  std::vector<double> table{0.0};
  double d = draw(rng, g.scale);
  for (int k = 1; k < space->extent(0); ++k) {
    table.push_back(table.back() + d);
    d *= u(rng);
  }
  return std::make_shared<TabulatedValuation>(*space, std::move(table));
}

ValuationPtr generate(const Mechanism& m, const std::optional<ProductSpace>& space, int player,
                      const GeneratorParams& g, std::mt19937_64& rng, const std::string& path) {
  if (g.kind == "concave_chain") return concave_chain(m, space, player, g, rng, path);
  if (!space) fail(path, "generator '" + g.kind + "' needs a tabulated outcome space");
  if (g.kind == "additive") return std::make_shared<TabulatedValuation>(additive_any(*space, rng, g.scale));
  if (g.kind == "single_minded") {
    const auto* gr = dynamic_cast<const GreedyCombinatorialAuction*>(&m);
    if (!gr) fail(path, "single_minded applies to greedy combinatorial auctions");
    std::vector<int> sets = g.sets;
    if (sets.empty())
      for (int mk = 1; mk < (1 << gr->items()); ++mk) sets.push_back(mk);
    const int want = sets[std::uniform_int_distribution<std::size_t>(0, sets.size() - 1)(rng)];
    const double value = draw(rng, g.scale);
    std::vector<double> table;
    for (int mk = 0; mk < (1 << gr->items()); ++mk) table.push_back((mk & want) == want ? value : 0.0);
    return std::make_shared<TabulatedValuation>(*space, std::move(table));
  }
  if (!space->has_bottoms()) fail(path, "generator '" + g.kind + "' needs outcomes with a bottom");
  if (g.kind == "submodular_random")
    return std::make_shared<TabulatedValuation>(random_submodular(*space, rng, g.scale));
  if (g.kind == "xos_random")
    return std::make_shared<TabulatedValuation>(random_xos(*space, g.components, rng, g.scale));
  return std::make_shared<TabulatedValuation>(random_unit_demand(*space, rng, g.scale));
}

const Keys kGenerators{"additive", "submodular_random", "xos_random", "unit_demand",
                       "concave_chain", "single_minded"};

std::vector<ValuationProfile> parse_profiles(const json& j, const std::string& path,
                                             const Mechanism& m, std::mt19937_64* rng) {
  const auto space = natural_space(m);
  const int n = m.num_players();
  std::vector<ValuationProfile> out;
  if (j.is_object() && j.contains("explicit")) {
    check_keys(j, path, {"explicit"});
    const std::string ep = field(path, "explicit");
    const auto& a = array(j, "explicit", path);
    for (std::size_t k = 0; k < a.size(); ++k) {
      const std::string pp = element(ep, k);
      if (!a[k].is_array() || static_cast<int>(a[k].size()) != n)
        fail(pp, "expected one valuation per player (" + std::to_string(n) + ")");
      ValuationProfile p;
      for (int i = 0; i < n; ++i) p.push_back(parse_valuation(a[k][i], element(pp, i), m, space));
      out.push_back(std::move(p));
    }
    return out;
  }
  check_keys(j, path, {"generator", "count", "scale", "components", "pieces", "sets"},
             {"generator", "count"});
  if (!rng) fail("seed", "required when generators are used");
  GeneratorParams g;
  g.kind = text(j, "generator", path, std::nullopt, kGenerators);
  g.scale = number(j, "scale", path, 1.0);
  if (!(g.scale > 0.0) || std::isinf(g.scale)) fail(field(path, "scale"), "must be positive");
  g.components = static_cast<int>(integer(j, "components", path, 2, 1, 16));
  g.pieces = static_cast<int>(integer(j, "pieces", path, 2, 1, 16));
  if (j.contains("sets"))
    for (double s : numbers(j.at("sets"), field(path, "sets"))) g.sets.push_back(static_cast<int>(s));
  const long count = integer(j, "count", path, std::nullopt, 1, 100000);
  for (long k = 0; k < count; ++k) {
    ValuationProfile p;
    for (int i = 0; i < n; ++i) p.push_back(generate(m, space, i, g, *rng, path));
    out.push_back(std::move(p));
  }
  return out;
}

double parse_bound(const json& j, const std::string& path) {
  if (j.is_number()) return j.get<double>();
  check_keys(j, path, {"lambda", "mu", "mu1", "mu2"}, {"lambda"});
  const double lambda = number(j, "lambda", path);
  if (j.contains("mu")) {
    if (j.contains("mu1") || j.contains("mu2")) fail(path, "give mu or (mu1, mu2)");
    return poa_bound(lambda, number(j, "mu", path));
  }
  return weak_poa_bound(lambda, number(j, "mu1", path), number(j, "mu2", path));
}

// ---------------------------------------------------------------------------
// Runs

struct Context {
  std::optional<std::uint64_t> seed;
  int threads = 1;
};

std::unique_ptr<std::mt19937_64> run_rng(const Context& ctx, std::size_t index) {
  if (!ctx.seed) return nullptr;
  std::seed_seq seq{static_cast<std::uint32_t>(*ctx.seed), static_cast<std::uint32_t>(*ctx.seed >> 32),
                    static_cast<std::uint32_t>(index)};
  return std::make_unique<std::mt19937_64>(seq);
}

using Task = std::function<void(Recorder&, ojson&)>;

ojson certificate_json(const SmoothnessCertificate& c) {
  ojson j;
  j["mechanism"] = c.mechanism;
  j["deviation"] = c.deviation;
  j["weak"] = c.weak;
  j["lambda"] = num(c.lambda);
  j["mu1"] = num(c.mu1);
  j["mu2"] = num(c.mu2);
  j["margin"] = num(c.margin);
  j["pass"] = c.pass;
  j["valuations_checked"] = c.valuations_checked;
  j["profiles_checked"] = c.profiles_checked;
  j["worst_valuation"] = c.worst_valuation;
  j["worst_profile"] = actions(c.worst_profile);
  if (!c.grid_note.empty()) j["grid_note"] = c.grid_note;
  return j;
}

ojson audit_json(const ConservativeAudit& a) {
  ojson j;
  j["pass"] = a.pass;
  j["max_payment"] = num(a.max_payment);
  j["max_value"] = num(a.max_value);
  if (!a.pass) {
    j["witness_action"] = nums(a.witness_action);
    j["witness_opponents"] = actions(a.witness_opponents);
  }
  return j;
}

ojson sparse(const std::vector<double>& p) {
  ojson a = ojson::array();
  for (std::size_t k = 0; k < p.size(); ++k)
    if (p[k] > 1e-12) a.push_back(ojson::array({k, num(p[k])}));
  return a;
}

const Keys kRunBase{"label", "note", "mechanism", "profiles"};

Keys with(Keys base, const Keys& more) {
  base.insert(base.end(), more.begin(), more.end());
  return base;
}

// Certificates at the requested parameters, plus optional conservativeness
// audits of the deviations at the optimum.
Task parse_certify(const json& j, const std::string& path, const Context& ctx, std::size_t index) {
  check_keys(j, path,
             with(kRunBase, {"lambda", "mu", "weak", "mu1", "mu2", "beta", "conservative", "tolerance"}),
             {"label", "mechanism", "profiles", "lambda"});
  auto mech = parse_mechanism(j.at("mechanism"), field(path, "mechanism"));
  auto rng = run_rng(ctx, index);
  auto profiles = parse_profiles(j.at("profiles"), field(path, "profiles"), *mech, rng.get());
  const bool weak = boolean(j, "weak", path, false);
  const double lambda = number(j, "lambda", path);
  double mu1 = 0.0, mu2 = 0.0;
  if (weak) {
    if (j.contains("mu")) fail(field(path, "mu"), "weak certificates take mu1 and mu2");
    mu1 = number(j, "mu1", path);
    mu2 = number(j, "mu2", path);
  } else {
    if (j.contains("mu1") || j.contains("mu2")) fail(field(path, "mu1"), "set weak to use mu1 and mu2");
    mu1 = number(j, "mu", path);
  }
  const double beta = number(j, "beta", path, 1.0);
  const bool conservative = boolean(j, "conservative", path, false);
  const double tolerance = number(j, "tolerance", path, kCertificateTolerance);
  const int threads = ctx.threads;
  return [=](Recorder& rec, ojson& detail) {
    const auto source = source_for(*mech, beta);
    CertifyOptions opts;
    opts.tolerance = tolerance;
    opts.threads = threads;
    const auto c = weak ? certify_weak(*mech, profiles, lambda, mu1, mu2, source, opts)
                        : certify(*mech, profiles, lambda, mu1, source, opts);
    detail["certificate"] = certificate_json(c);
    rec.add("certificate", -1, c.margin, ">=", -tolerance, c.pass);
    if (!conservative) return;
    ojson audits = ojson::array();
    for (std::size_t k = 0; k < profiles.size(); ++k) {
      const Optimum opt = mech->optimum(profiles[k]);
      double worst = -kInf;
      bool ok = true;
      for (int i = 0; i < mech->num_players(); ++i) {
        const auto dev = source.make(*mech, profiles[k], i, mech->grid(i)[0], opt);
        const auto a = check_conservative(*mech, dev, *profiles[k][i], i);
        worst = std::max(worst, a.max_payment - a.max_value);
        if (!a.pass) {
          ok = false;
          ojson w = audit_json(a);
          w["profile"] = k;
          w["player"] = i;
          audits.push_back(w);
        }
      }
      rec.add("conservative", static_cast<long>(k), worst, "<=", kTolerance, ok);
    }
    detail["conservative_failures"] = audits;
  };
}

Task parse_fit(const json& j, const std::string& path, const Context& ctx, std::size_t index) {
  check_keys(j, path, with(kRunBase, {"mu", "beta", "expected_lambda", "slack"}),
             {"label", "mechanism", "profiles", "mu", "expected_lambda"});
  auto mech = parse_mechanism(j.at("mechanism"), field(path, "mechanism"));
  auto rng = run_rng(ctx, index);
  auto profiles = parse_profiles(j.at("profiles"), field(path, "profiles"), *mech, rng.get());
  const double mu = number(j, "mu", path);
  const double beta = number(j, "beta", path, 1.0);
  const double expected = number(j, "expected_lambda", path);
  const double slack = number(j, "slack", path, 0.0);
  return [=](Recorder& rec, ojson& detail) {
    const auto source = source_for(*mech, beta);
    ojson fits = ojson::array();
    for (std::size_t k = 0; k < profiles.size(); ++k) {
      const auto f = fit_lambda(*mech, profiles[k], mu, source);
      const bool ok = f.status == lp::Status::kOptimal;
      fits.push_back({{"lambda", num(f.lambda)}, {"optimal", ok}, {"rows", f.rows}, {"columns", f.columns}});
      rec.add("fit_lambda", static_cast<long>(k), f.lambda, ">=", expected - slack,
              ok && f.lambda >= expected - slack);
    }
    detail["fits"] = fits;
  };
}

struct CeSpec {
  WelfareSense sense = WelfareSense::kMin;
  Refinement refinement = Refinement::kNone;
  bool coarse = false;
  double bound = 0.0;
  double tolerance = 1e-6;
};

// Extremal (coarse) CE welfare of one profile, checked against bound * OPT
// (min) or OPT (max).
void run_ce(const Mechanism& mech, const ValuationProfile& profile, long index,
            const CeSpec& spec, const std::string& prefix, Recorder& rec, ojson& out) {
  GameTable table = to_normal_form(mech, profile);
  if (spec.refinement == Refinement::kNoOverbidding) attach_willingness_to_pay(table, mech);
  const auto d = ce_extreme_welfare(table, spec.sense, spec.refinement, spec.coarse);
  const double opt = mech.optimum(profile).value;
  ojson r;
  r["kind"] = to_string(d.kind);
  r["optimum"] = num(opt);
  r["refinement_empty"] = d.refinement_empty;
  if (!d.refinement_empty) {
    r["welfare"] = num(d.welfare);
    r["revenue"] = num(d.revenue);
    r["ratio"] = num(opt > 0.0 ? d.welfare / opt : 1.0);
    r["incentive_residual"] = num(d.incentive_residual);
    r["distribution"] = sparse(d.probability);
  }
  out.push_back(r);
  if (d.refinement_empty) {
    rec.add(prefix + "refinement_empty", index, 1.0, "<=", 0.0, false);
  } else if (spec.sense == WelfareSense::kMin) {
    rec.at_least(prefix + "min_ce_welfare", index, d.welfare, spec.bound * opt - spec.tolerance);
  } else {
    rec.at_most(prefix + "max_ce_welfare", index, d.welfare, opt + spec.tolerance);
  }
}

CeSpec parse_ce_spec(const json& j, const std::string& path, bool bound_required) {
  CeSpec s;
  s.sense = text(j, "sense", path, "min", {"min", "max"}) == "min" ? WelfareSense::kMin
                                                                   : WelfareSense::kMax;
  s.refinement = text(j, "refinement", path, "none", {"none", "no_overbidding"}) == "none"
                     ? Refinement::kNone
                     : Refinement::kNoOverbidding;
  s.coarse = boolean(j, "coarse", path, false);
  if (j.contains("bound")) {
    s.bound = parse_bound(j.at("bound"), field(path, "bound"));
  } else if (bound_required && s.sense == WelfareSense::kMin) {
    fail(field(path, "bound"), "required for min-welfare checks");
  }
  s.tolerance = number(j, "tolerance", path, 1e-6);
  return s;
}

Task parse_ce(const json& j, const std::string& path, const Context& ctx, std::size_t index) {
  check_keys(j, path, with(kRunBase, {"sense", "refinement", "coarse", "bound", "tolerance"}),
             {"label", "mechanism", "profiles"});
  auto mech = parse_mechanism(j.at("mechanism"), field(path, "mechanism"));
  auto rng = run_rng(ctx, index);
  auto profiles = parse_profiles(j.at("profiles"), field(path, "profiles"), *mech, rng.get());
  const CeSpec spec = parse_ce_spec(j, path, true);
  return [=](Recorder& rec, ojson& detail) {
    ojson out = ojson::array();
    for (std::size_t k = 0; k < profiles.size(); ++k)
      run_ce(*mech, profiles[k], static_cast<long>(k), spec, "", rec, out);
    detail["equilibria"] = out;
  };
}

// Composed certificates; for sequential compositions optionally under every
// listed info policy, whose verdicts must agree.
Task parse_compose(const json& j, const std::string& path, const Context& ctx, std::size_t index) {
  check_keys(j, path, with(kRunBase, {"lambda", "mu", "policies", "ce"}),
             {"label", "mechanism", "profiles", "lambda", "mu"});
  const json& mj = j.at("mechanism");
  const std::string mp = field(path, "mechanism");
  auto base = parse_mechanism(mj, mp);
  if (!is_composed(*base)) fail(field(mp, "kind"), "compose needs a simultaneous or sequential mechanism");
  std::vector<std::pair<std::string, MechanismPtr>> variants;
  if (j.contains("policies")) {
    if (!dynamic_cast<const SequentialComposition*>(base.get()))
      fail(field(path, "policies"), "only sequential compositions take policies");
    const auto& a = array(j, "policies", path);
    for (std::size_t k = 0; k < a.size(); ++k) {
      if (!a[k].is_string()) fail(element(field(path, "policies"), k), "expected a policy name");
      json copy = mj;
      copy["policy"] = a[k];
      variants.emplace_back(a[k].get<std::string>(), parse_mechanism(copy, mp));
    }
  } else {
    variants.emplace_back(base->kind(), base);
  }
  auto rng = run_rng(ctx, index);
  auto profiles = parse_profiles(j.at("profiles"), field(path, "profiles"), *base, rng.get());
  const double lambda = number(j, "lambda", path);
  const double mu = number(j, "mu", path);
  std::optional<CeSpec> ce;
  std::size_t ce_profiles = 0;
  if (j.contains("ce")) {
    const std::string cp = field(path, "ce");
    check_keys(j.at("ce"), cp, {"bound", "profiles", "tolerance"}, {"bound"});
    ce = parse_ce_spec(j.at("ce"), cp, true);
    ce_profiles = static_cast<std::size_t>(integer(j.at("ce"), "profiles", cp, 1, 1, 1000));
  }
  const int threads = ctx.threads;
  return [=](Recorder& rec, ojson& detail) {
    ojson per = ojson::array();
    std::vector<bool> verdicts;
    for (const auto& [name, mech] : variants) {
      CertifyOptions opts;
      opts.threads = threads;
      const auto c = certify(*mech, profiles, lambda, mu, source_for(*mech, 1.0), opts);
      verdicts.push_back(c.pass);
      ojson v;
      v["variant"] = name;
      v["certificate"] = certificate_json(c);
      rec.add(name + ":certificate", -1, c.margin, ">=", -kCertificateTolerance, c.pass);
      if (ce) {
        ojson eq = ojson::array();
        for (std::size_t k = 0; k < std::min(ce_profiles, profiles.size()); ++k)
          run_ce(*mech, profiles[k], static_cast<long>(k), *ce, name + ":", rec, eq);
        v["equilibria"] = eq;
      }
      per.push_back(v);
    }
    detail["variants"] = per;
    if (variants.size() > 1) {
      const bool same = std::all_of(verdicts.begin(), verdicts.end(),
                                    [&](bool b) { return b == verdicts.front(); });
      rec.add("identical_verdicts", -1, same ? 1.0 : 0.0, ">=", 1.0, same);
    }
  };
}

Task parse_learn(const json& j, const std::string& path, const Context& ctx, std::size_t index) {
  check_keys(j, path, with(kRunBase, {"rounds", "sampled", "max_regret", "compare_ce", "bound"}),
             {"label", "mechanism", "profiles", "rounds"});
  auto mech = parse_mechanism(j.at("mechanism"), field(path, "mechanism"));
  auto rng = run_rng(ctx, index);
  auto profiles = parse_profiles(j.at("profiles"), field(path, "profiles"), *mech, rng.get());
  const auto rounds = static_cast<std::size_t>(integer(j, "rounds", path, std::nullopt, 1, 100'000'000));
  const bool sampled = boolean(j, "sampled", path, false);
  const double max_regret = number(j, "max_regret", path, kInf);
  const bool compare = boolean(j, "compare_ce", path, true);
  std::optional<double> bound;
  if (j.contains("bound")) bound = parse_bound(j.at("bound"), field(path, "bound"));
  LearnOptions opts;
  opts.seed = ctx.seed.value_or(0) + index;
  opts.sampled = sampled;
  return [=](Recorder& rec, ojson& detail) {
    ojson out = ojson::array();
    for (std::size_t k = 0; k < profiles.size(); ++k) {
      const long idx = static_cast<long>(k);
      const GameTable table = to_normal_form(*mech, profiles[k]);
      const auto d = swap_regret_learn(table, rounds, opts);
      double total = 0.0;
      for (std::size_t i = 0; i < d.swap_regret.size(); ++i) {
        total += d.swap_regret[i];
        rec.at_most("swap_regret_p" + std::to_string(i), idx, d.swap_regret[i], max_regret);
      }
      ojson r;
      r["rounds"] = d.rounds;
      r["welfare"] = num(d.welfare);
      r["revenue"] = num(d.revenue);
      r["swap_regret"] = nums(d.swap_regret);
      r["incentive_residual"] = num(d.incentive_residual);
      const double opt = mech->optimum(profiles[k]).value;
      r["optimum"] = num(opt);
      if (compare) {
        const auto ce = ce_extreme_welfare(table, WelfareSense::kMin);
        r["min_ce_welfare"] = num(ce.welfare);
        rec.at_least("welfare_vs_min_ce", idx, d.welfare, ce.welfare - total - 1e-6);
      }
      if (bound) {
        const auto poa = verify_poa(d, mech->num_players(), opt, *bound);
        rec.add("poa", idx, poa.ratio, ">=", poa.bound - poa.slack, poa.pass);
      }
      out.push_back(r);
    }
    detail["learned"] = out;
  };
}

Task parse_bayes(const json& j, const std::string& path, const Context& ctx, std::size_t index) {
  check_keys(j, path,
             {"label", "note", "mechanism", "types", "priors", "max_iters", "damping",
              "max_epsilon", "bound", "bluffing"},
             {"label", "mechanism", "types", "priors"});
  auto mech = parse_mechanism(j.at("mechanism"), field(path, "mechanism"));
  const auto space = natural_space(*mech);
  const int n = mech->num_players();
  BayesianGame game;
  const auto& types = array(j, "types", path);
  const auto& priors = array(j, "priors", path);
  if (static_cast<int>(types.size()) != n) fail(field(path, "types"), "one type list per player");
  if (static_cast<int>(priors.size()) != n) fail(field(path, "priors"), "one prior per player");
  for (int i = 0; i < n; ++i) {
    const std::string tp = element(field(path, "types"), i);
    if (!types[i].is_array() || types[i].empty()) fail(tp, "expected a nonempty array");
    std::vector<ValuationPtr> ts;
    for (std::size_t t = 0; t < types[i].size(); ++t)
      ts.push_back(parse_valuation(types[i][t], element(tp, t), *mech, space));
    game.types.push_back(ts);
    game.priors.push_back(numbers(priors[i], element(field(path, "priors"), i)));
  }
  try {
    game.validate(n);
  } catch (const DomainError& e) {
    fail(field(path, "priors"), e.what());
  }
  BayesOptions opts;
  opts.max_iters = static_cast<int>(integer(j, "max_iters", path, 2000, 1, 1'000'000));
  opts.damping = number(j, "damping", path, 0.5);
  if (!(opts.damping > 0.0 && opts.damping <= 1.0)) fail(field(path, "damping"), "must lie in (0, 1]");
  opts.seed = ctx.seed.value_or(0) + index;
  const double max_eps = number(j, "max_epsilon", path, kInf);
  std::optional<double> bound;
  if (j.contains("bound")) bound = parse_bound(j.at("bound"), field(path, "bound"));
  const bool bluffing = boolean(j, "bluffing", path, false);
  return [=](Recorder& rec, ojson& detail) {
    const auto r = bayes_best_response(*mech, game, opts);
    detail["epsilon"] = num(r.epsilon);
    detail["welfare"] = num(r.welfare);
    detail["expected_optimum"] = num(r.expected_optimum);
    detail["iterations"] = r.iterations;
    ojson strategy = ojson::array();
    for (const auto& per_player : r.strategy) {
      ojson p = ojson::array();
      for (const auto& mix : per_player) p.push_back(nums(mix));
      strategy.push_back(p);
    }
    detail["strategy"] = strategy;
    ojson util = ojson::array();
    for (const auto& u : r.utility) util.push_back(nums(u));
    detail["interim_utility"] = util;
    rec.at_most("epsilon", -1, r.epsilon, max_eps);
    if (bound)
      rec.at_least("welfare", -1, r.welfare, *bound * r.expected_optimum - n * r.epsilon - 1e-6);
    if (bluffing) {
      const auto b = check_bluffing(*mech, game, r, source_for(*mech, 1.0));
      detail["bluffing"] = {{"max_gain", num(b.max_gain)},
                            {"max_continuous_gain", num(b.max_continuous_gain)},
                            {"player", b.player},
                            {"type", b.type}};
      rec.at_most("bluffing_gain", -1, b.max_gain, r.epsilon + 1e-9);
    }
  };
}

Task parse_budget(const json& j, const std::string& path, const Context& ctx, std::size_t index) {
  check_keys(j, path, with(kRunBase, {"budgets", "lambda", "mu", "expect", "tolerance"}),
             {"label", "mechanism", "profiles", "budgets", "lambda", "mu"});
  auto mech = parse_mechanism(j.at("mechanism"), field(path, "mechanism"));
  auto rng = run_rng(ctx, index);
  auto profiles = parse_profiles(j.at("profiles"), field(path, "profiles"), *mech, rng.get());
  const BudgetProfile budgets = numbers(array(j, "budgets", path), field(path, "budgets"));
  try {
    validate_budgets(budgets, mech->num_players());
  } catch (const DomainError& e) {
    fail(field(path, "budgets"), e.what());
  }
  const double lambda = number(j, "lambda", path);
  const double mu = number(j, "mu", path);
  const bool expect_refusal = text(j, "expect", path, "pass", {"pass", "refused"}) == "refused";
  const double tolerance = number(j, "tolerance", path, 1e-6);
  return [=](Recorder& rec, ojson& detail) {
    const auto source = source_for(*mech, 1.0);
    if (expect_refusal) {
      std::string reason;
      try {
        certify_effective_bound(*mech, profiles.front(), budgets, lambda, mu, source);
      } catch (const DomainError& e) {
        reason = e.what();
      }
      detail["refusal"] = reason;
      rec.add("refused", -1, reason.empty() ? 0.0 : 1.0, ">=", 1.0, !reason.empty());
      return;
    }
    ojson out = ojson::array();
    for (std::size_t k = 0; k < profiles.size(); ++k) {
      const long idx = static_cast<long>(k);
      const auto r = certify_effective_bound(*mech, profiles[k], budgets, lambda, mu, source);
      ojson o;
      o["refused"] = r.refused;
      if (!r.reason.empty()) o["reason"] = r.reason;
      if (r.refused) {
        o["audit"] = audit_json(r.audit);
        o["audit_player"] = r.audit_player;
        rec.add("conservative", idx, 0.0, ">=", 1.0, false);
        out.push_back(o);
        continue;
      }
      o["effective_optimum"] = num(r.effective_optimum);
      o["bound"] = num(r.bound);
      o["refinement_empty"] = r.refinement_empty;
      o["min_welfare"] = num(r.min_welfare);
      o["min_effective_welfare"] = num(r.min_effective_welfare);
      o["ratio"] = num(r.ratio);
      out.push_back(o);
      if (r.refinement_empty) {
        rec.add("refinement_empty", idx, 1.0, "<=", 0.0, false);
        continue;
      }
      rec.at_least("min_budget_ce_welfare", idx, r.min_welfare,
                   r.bound * r.effective_optimum - tolerance);
    }
    detail["instances"] = out;
  };
}

// ---------------------------------------------------------------------------
// Valuation hierarchy corpus

double cover_oracle_beta(const TabulatedValuation& v) {
  const auto& s = v.space();
  double beta = 1.0;
  for (std::size_t target = 0; target < s.size(); ++target) {
    if (v.at(target) <= 1e-12) continue;
    lp::LinearProgram prog(lp::Sense::kMinimize, v.table());
    for (int j = 0; j < s.dims(); ++j) {
      std::vector<double> row(s.size(), 0.0);
      for (std::size_t x = 0; x < s.size(); ++x)
        if (s.digit(x, j) == s.digit(target, j)) row[x] = 1.0;
      prog.add(row, lp::Relation::kGreaterEqual, 1.0);
    }
    const auto r = lp::solve(prog);
    if (r.status != lp::Status::kOptimal) throw NumericError("cover LP did not solve");
    beta = std::max(beta, v.at(target) / r.value);
  }
  return beta;
}

const Keys kValuationKinds{"additive",      "submodular_random", "xos_random",  "unit_demand",
                           "concave_chain", "convex_chain",      "random_table"};

const char* kValuationHeader =
    "label,index,kind,dims,size,beta,oracle_beta,submodular_beta,subadditive_beta,harmonic,"
    "diminishing,lattice_submodular,cap_error,pass";

struct ValuationsRun {
  long count = 0;
  int max_dims = 3, max_extent = 3, budgets = 3;
  long min_per_check = 1;
  Keys kinds;
};

Task parse_valuations(const json& j, const std::string& path, const Context& ctx, std::size_t index,
                      std::vector<std::string>* rows) {
  check_keys(j, path,
             {"label", "note", "count", "max_dims", "max_extent", "kinds", "budgets", "min_per_check"},
             {"label", "count"});
  ValuationsRun v;
  v.count = integer(j, "count", path, std::nullopt, 1, 100000);
  v.max_dims = static_cast<int>(integer(j, "max_dims", path, 3, 1, 4));
  v.max_extent = static_cast<int>(integer(j, "max_extent", path, 3, 2, 4));
  v.budgets = static_cast<int>(integer(j, "budgets", path, 3, 0, 100));
  v.min_per_check = integer(j, "min_per_check", path, 1, 0, 100000);
  if (j.contains("kinds")) {
    const auto& a = array(j, "kinds", path);
    for (std::size_t k = 0; k < a.size(); ++k) {
      const std::string kp = element(field(path, "kinds"), k);
      if (!a[k].is_string()) fail(kp, "expected a generator name");
      const auto name = a[k].get<std::string>();
      if (std::find(kValuationKinds.begin(), kValuationKinds.end(), name) == kValuationKinds.end())
        fail(kp, "unknown generator '" + name + "'");
      v.kinds.push_back(name);
    }
  } else {
    v.kinds = kValuationKinds;
  }
  auto shared_rng = std::shared_ptr<std::mt19937_64>(run_rng(ctx, index).release());
  if (!shared_rng) fail("seed", "required when generators are used");
  const std::string label = text(j, "label", path);
  return [=](Recorder& rec, ojson& detail) {
    auto& rng = *shared_rng;
    std::uniform_int_distribution<int> dims(1, v.max_dims), extent(2, v.max_extent);
    long fractional = 0, submodular = 0, subadditive = 0, diminishing = 0, capped = 0, bad = 0;
    ojson failures = ojson::array();
    for (long t = 0; t < v.count; ++t) {
      std::vector<Coordinate> cs(dims(rng));
      for (auto& c : cs) {
        const int e = extent(rng);
        for (int k = 0; k < e; ++k) c.labels.push_back(k);
        c.bottom = 0;
      }
      const ProductSpace space(cs);
      const std::string kind = v.kinds[t % v.kinds.size()];
      const TabulatedValuation val = [&] {
        if (kind == "additive") return random_additive(space, rng);
        if (kind == "submodular_random") return random_submodular(space, rng);
        if (kind == "xos_random") return random_xos(space, 3, rng);
        if (kind == "unit_demand") return random_unit_demand(space, rng);
        if (kind == "concave_chain") return chain_power(space, rng, 1.0, 0.5);
        if (kind == "convex_chain") return chain_power(space, rng, 1.0, 1.8);
        return random_table(space, rng);
      }();
      std::vector<std::string> why;
      const auto rep = xos_from_fractional(val);
      const double oracle = cover_oracle_beta(val);
      ++fractional;
      if (std::abs(rep.beta - oracle) > 1e-6) why.push_back("beta disagrees with the cover LP");
      if (!verify_xos(rep, val).pass) why.push_back("fractional XOS representation fails");

      std::string sub_beta, add_beta, dim, lat, cap_err;
      const auto classes = check_set_classes(val);
      if (classes.set_monotone && classes.set_submodular) {
        ++submodular;
        const auto r = xos_from_submodular(val);
        sub_beta = format_number(r.beta);
        if (r.beta > 1.0 + 1e-12 || !verify_xos(r, val).pass)
          why.push_back("submodular construction is not an exact XOS representation");
      }
      const double h = harmonic_number(space.dims());
      if (classes.set_monotone && classes.set_subadditive) {
        ++subadditive;
        const auto r = xos_from_subadditive(val);
        add_beta = format_number(r.beta);
        if (r.beta > h + 1e-9 || !verify_xos(r, val).pass)
          why.push_back("subadditive construction exceeds the harmonic bound");
      }
      const auto lattice = chain_orders(space);
      if (is_monotone(val, lattice)) {
        ++diminishing;
        const auto d = check_diminishing(val, lattice);
        dim = d.diminishing ? "true" : "false";
        lat = d.lattice_submodular ? "true" : "false";
        if (d.diminishing != d.lattice_submodular)
          why.push_back("diminishing returns and lattice submodularity disagree");
      }
      if (rep.beta <= 1.0 + 1e-9 && v.budgets > 0) {
        ++capped;
        std::uniform_real_distribution<double> b(0.0, 1.5 * val.max_value() + 0.1);
        double err = 0.0;
        for (int k = 0; k < v.budgets; ++k) {
          const double budget = b(rng);
          const auto c = cap_xos(rep, space, budget);
          for (std::size_t x = 0; x < space.size(); ++x)
            err = std::max(err, std::abs(c.evaluate(space, x) - std::min(val.at(x), budget)));
        }
        cap_err = format_number(err);
        if (err > 1e-9) why.push_back("capped XOS differs from min(v, B)");
      }
      if (!why.empty()) {
        ++bad;
        ojson f{{"index", t}, {"kind", kind}, {"reasons", why}};
        failures.push_back(f);
      }
      rows->push_back(csv_escape(label) + "," + std::to_string(t) + "," + kind + "," +
                      std::to_string(space.dims()) + "," + std::to_string(space.size()) + "," +
                      format_number(rep.beta) + "," + format_number(oracle) + "," + sub_beta + "," +
                      add_beta + "," + format_number(h) + "," + dim + "," + lat + "," + cap_err +
                      "," + (why.empty() ? "true" : "false"));
    }
    detail["instances"] = v.count;
    detail["counts"] = {{"fractional", fractional}, {"submodular", submodular},
                        {"subadditive", subadditive}, {"diminishing", diminishing},
                        {"capping", capped}};
    detail["failures"] = failures;
    rec.pass = rec.pass && bad == 0;
    auto need = [&](const char* name, long seen) {
      if (seen < v.min_per_check) rec.pass = false;
      ojson c{{"check", std::string("instances:") + name}, {"value", seen},
              {"relation", ">="}, {"threshold", v.min_per_check}, {"pass", seen >= v.min_per_check}};
      rec.checks.push_back(c);
    };
    need("fractional", fractional);
    need("submodular", submodular);
    need("subadditive", subadditive);
    need("diminishing", diminishing);
    need("capping", capped);
    rec.checks.push_back(ojson{{"check", "failed_instances"}, {"value", bad}, {"relation", "<="},
                               {"threshold", 0}, {"pass", bad == 0}});
  };
}

// ---------------------------------------------------------------------------
// Hybrid sweep

const char* kSweepHeader = "label,gamma,lambda,mu1,mu2,weak_poa_bound,margin,pass";

Task parse_sweep(const json& j, const std::string& path, const Context& ctx, std::size_t index,
                 std::vector<std::string>* rows) {
  check_keys(j, path, {"label", "note", "players", "grid", "profiles", "gammas", "expected"},
             {"label", "grid", "profiles", "gammas"});
  const std::string label = text(j, "label", path);
  const std::vector<double> gammas = numbers(array(j, "gammas", path), field(path, "gammas"));
  for (std::size_t k = 0; k < gammas.size(); ++k)
    if (!(gammas[k] >= 0.0 && gammas[k] <= 1.0))
      fail(element(field(path, "gammas"), k), "gamma must lie in [0, 1]");
  // A first-price shell of the same shape parses the profiles.
  json shell{{"kind", "single_item"}, {"format", "first_price"}, {"grid", j.at("grid")}};
  if (j.contains("players")) shell["players"] = j.at("players");
  std::vector<MechanismPtr> mechs;
  for (double g : gammas) {
    json spec = shell;
    spec["format"] = "hybrid";
    spec["gamma"] = g;
    mechs.push_back(parse_mechanism(spec, path));
  }
  auto rng = run_rng(ctx, index);
  auto profiles = parse_profiles(j.at("profiles"), field(path, "profiles"), *mechs.front(), rng.get());
  struct Expected { double gamma, bound, tolerance; };
  std::vector<Expected> expected;
  if (j.contains("expected")) {
    const auto& a = array(j, "expected", path);
    for (std::size_t k = 0; k < a.size(); ++k) {
      const std::string ep = element(field(path, "expected"), k);
      check_keys(a[k], ep, {"gamma", "bound", "tolerance"}, {"gamma", "bound", "tolerance"});
      const Expected e{number(a[k], "gamma", ep), number(a[k], "bound", ep),
                       number(a[k], "tolerance", ep)};
      if (std::find(gammas.begin(), gammas.end(), e.gamma) == gammas.end())
        fail(field(ep, "gamma"), "not among the swept gammas");
      expected.push_back(e);
    }
  }
  const int threads = ctx.threads;
  return [=](Recorder& rec, ojson& detail) {
    const double e1 = 1.0 - std::exp(-1.0);
    ojson curve = ojson::array();
    for (std::size_t k = 0; k < gammas.size(); ++k) {
      const double g = gammas[k];
      const double lambda = g * e1 + (1 - g) * (1 - g);
      const double mu2 = (1 - g) * (1 - g);
      const double bound = weak_poa_bound(lambda, 1.0, mu2);
      CertifyOptions opts;
      opts.threads = threads;
      const auto c = certify_weak(*mechs[k], profiles, lambda, 1.0, mu2, canonical_deviation_source(), opts);
      rows->push_back(csv_escape(label) + "," + format_number(g) + "," + format_number(lambda) +
                      ",1," + format_number(mu2) + "," + format_number(bound) + "," +
                      format_number(c.margin) + "," + (c.pass ? "true" : "false"));
      ojson point{{"gamma", num(g)}, {"lambda", num(lambda)}, {"mu1", 1}, {"mu2", num(mu2)},
                  {"weak_poa_bound", num(bound)}, {"certificate", certificate_json(c)}};
      curve.push_back(point);
      rec.pass = rec.pass && c.pass;
      rec.checks.push_back(ojson{{"check", "weak_certificate"}, {"gamma", num(g)},
                                 {"value", num(c.margin)}, {"relation", ">="},
                                 {"threshold", num(-kCertificateTolerance)}, {"pass", c.pass}});
      for (const auto& e : expected) {
        if (e.gamma != g) continue;
        const bool ok = std::abs(bound - e.bound) <= e.tolerance;
        rec.pass = rec.pass && ok;
        rec.checks.push_back(ojson{{"check", "bound"}, {"gamma", num(g)}, {"value", num(bound)},
                                   {"relation", "within"}, {"threshold", num(e.bound)},
                                   {"tolerance", num(e.tolerance)}, {"pass", ok}});
      }
    }
    detail["curve"] = curve;
  };
}

}  // namespace

// ---------------------------------------------------------------------------

std::string format_number(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.12g", x == 0.0 ? 0.0 : x);
  return buf;
}

const std::vector<std::string>& subcommands() {
  static const std::vector<std::string> names{"certify", "fit",     "ce",         "learn",
                                              "bayes",   "budget",  "compose",    "valuations",
                                              "hybrid-sweep"};
  return names;
}

Report run_experiment(const std::string& subcommand, const nlohmann::json& config,
                      const RunOptions& options) {
  const auto& names = subcommands();
  if (std::find(names.begin(), names.end(), subcommand) == names.end())
    throw ConfigError("unknown subcommand '" + subcommand + "'");
  check_keys(config, "config", {"description", "seed", "runs"}, {"runs"});
  Context ctx;
  ctx.threads = options.threads;
  if (config.contains("seed")) {
    if (!config.at("seed").is_number_unsigned()) fail("seed", "expected an unsigned integer");
    ctx.seed = config.at("seed").get<std::uint64_t>();
  }
  if (options.seed) ctx.seed = options.seed;
  const auto& runs = array(config, "runs", "config");

  std::vector<std::string> rows;
  std::vector<std::pair<std::string, Task>> tasks;
  for (std::size_t k = 0; k < runs.size(); ++k) {
    const std::string path = element("runs", k);
    const json& r = runs[k];
    if (!r.is_object()) fail(path, "expected an object");
    const std::string label = text(r, "label", path);
    Task t;
    if (subcommand == "certify") t = parse_certify(r, path, ctx, k);
    else if (subcommand == "fit") t = parse_fit(r, path, ctx, k);
    else if (subcommand == "ce") t = parse_ce(r, path, ctx, k);
    else if (subcommand == "learn") t = parse_learn(r, path, ctx, k);
    else if (subcommand == "bayes") t = parse_bayes(r, path, ctx, k);
    else if (subcommand == "budget") t = parse_budget(r, path, ctx, k);
    else if (subcommand == "compose") t = parse_compose(r, path, ctx, k);
    else if (subcommand == "valuations") t = parse_valuations(r, path, ctx, k, &rows);
    else t = parse_sweep(r, path, ctx, k, &rows);
    tasks.emplace_back(label, std::move(t));
  }

  Report report;
  report.pass = true;
  report.result["subcommand"] = subcommand;
  if (config.contains("description")) report.result["description"] = config.at("description");
  if (ctx.seed) report.result["seed"] = *ctx.seed;
  ojson out = ojson::array();
  for (auto& [label, task] : tasks) {
    Recorder rec;
    rec.label = label;
    rec.rows = &rows;
    ojson detail;
    task(rec, detail);
    ojson run;
    run["label"] = label;
    run["pass"] = rec.pass;
    run["checks"] = rec.checks;
    for (auto it = detail.begin(); it != detail.end(); ++it) run[it.key()] = it.value();
    out.push_back(run);
    report.pass = report.pass && rec.pass;
  }
  report.result["pass"] = report.pass;
  report.result["runs"] = out;

  std::string header = kCheckHeader;
  if (subcommand == "valuations") header = kValuationHeader;
  if (subcommand == "hybrid-sweep") header = kSweepHeader;
  report.csv = header + std::string("\n");
  for (const auto& row : rows) report.csv += row + "\n";
  return report;
}

nlohmann::json load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read config '" + path + "'");
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
}

void write_report(const Report& report, const std::string& subcommand, const std::string& out) {
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(out, ec);
  if (ec) throw std::runtime_error("cannot create output directory '" + out + "': " + ec.message());
  const fs::path dir(out);
  {
    std::ofstream f(dir / (subcommand + ".json"));
    if (!f) throw std::runtime_error("cannot write " + (dir / (subcommand + ".json")).string());
    f << report.result.dump(2) << "\n";
  }
  std::ofstream f(dir / (subcommand + ".csv"));
  if (!f) throw std::runtime_error("cannot write " + (dir / (subcommand + ".csv")).string());
  f << report.csv;
}

}  // namespace smoothmech::cli
