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

#include "smoothmech/valuations.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <sstream>

#include "smoothmech/lp.hpp"

namespace smoothmech {

ProductSpace::ProductSpace(std::vector<Coordinate> coordinates)
    : coords_(std::move(coordinates)) {
  if (coords_.empty()) throw DomainError("product space needs a coordinate");
  if (coords_.size() > 31) throw DomainError("product space has too many coordinates");
  strides_.assign(coords_.size(), 1);
  size_ = 1;
  for (int j = dims() - 1; j >= 0; --j) {
    const auto& c = coords_[j];
    if (c.labels.empty()) throw DomainError("coordinate with no labels");
    if (c.bottom && (*c.bottom < 0 || *c.bottom >= extent(j)))
      throw DomainError("bottom index out of range");
    strides_[j] = size_;
    if (size_ > std::numeric_limits<std::size_t>::max() / c.labels.size())
      throw SizeError("product space too large", 0, 0);
    size_ *= c.labels.size();
  }
}

std::size_t ProductSpace::index(std::span<const int> digits) const {
  std::size_t idx = 0;
  for (int j = 0; j < dims(); ++j) idx += strides_[j] * digits[j];
  return idx;
}

void ProductSpace::decode(std::size_t point, std::span<int> digits) const {
  for (int j = 0; j < dims(); ++j) {
    digits[j] = static_cast<int>(point / strides_[j]);
    point %= strides_[j];
  }
}

std::optional<std::size_t> ProductSpace::find(std::span<const double> labels) const {
  if (static_cast<int>(labels.size()) != dims()) return std::nullopt;
  std::size_t idx = 0;
  for (int j = 0; j < dims(); ++j) {
    const auto& ls = coords_[j].labels;
    int d = -1;
    for (int k = 0; k < static_cast<int>(ls.size()); ++k) {
      if (std::fabs(ls[k] - labels[j]) <= kTolerance) {
        d = k;
        break;
      }
    }
    if (d < 0) return std::nullopt;
    idx += strides_[j] * d;
  }
  return idx;
}

Allocation ProductSpace::labels(std::size_t point) const {
  Allocation out(dims());
  for (int j = 0; j < dims(); ++j) out[j] = coords_[j].labels[digit(point, j)];
  return out;
}

bool ProductSpace::has_bottoms() const {
  return std::all_of(coords_.begin(), coords_.end(),
                     [](const Coordinate& c) { return c.bottom.has_value(); });
}

std::size_t ProductSpace::bottom_point() const {
  if (!has_bottoms()) throw DomainError("space has no bottoms");
  std::size_t idx = 0;
  for (int j = 0; j < dims(); ++j) idx += strides_[j] * *coords_[j].bottom;
  return idx;
}

std::size_t ProductSpace::restrict(std::size_t point, std::uint32_t mask) const {
  for (int j = 0; j < dims(); ++j) {
    if (mask & (1u << j)) continue;
    if (!coords_[j].bottom) throw DomainError("restrict: coordinate has no bottom");
    point = with_digit(point, j, *coords_[j].bottom);
  }
  return point;
}

bool ProductSpace::operator==(const ProductSpace& other) const {
  if (dims() != other.dims()) return false;
  for (int j = 0; j < dims(); ++j) {
    if (coords_[j].labels != other.coords_[j].labels ||
        coords_[j].bottom != other.coords_[j].bottom)
      return false;
  }
  return true;
}

ProductSpace chain_space(int dims, int extent) {
  std::vector<Coordinate> cs(dims);
  for (auto& c : cs) {
    for (int k = 0; k < extent; ++k) c.labels.push_back(k);
    c.bottom = 0;
  }
  return ProductSpace(std::move(cs));
}

TabulatedValuation::TabulatedValuation(ProductSpace space,
                                       std::vector<double> table)
    : space_(std::move(space)), table_(std::move(table)) {
  if (table_.size() != space_.size())
    throw DomainError("valuation table size does not match its space");
  for (double& v : table_) {
    if (!std::isfinite(v)) throw DomainError("valuation values must be finite");
    if (v < -kTolerance) throw DomainError("valuation values must be nonnegative");
    if (v < 0.0) v = 0.0;
  }
  if (space_.has_bottoms() && std::fabs(table_[space_.bottom_point()]) > kTolerance)
    throw DomainError("valuation must be zero at the all-bottom outcome");
}

double TabulatedValuation::value(std::span<const double> allocation) const {
  const auto idx = space_.find(allocation);
  if (!idx) throw DomainError("unknown allocation label");
  return table_[*idx];
}

double TabulatedValuation::max_value() const {
  return *std::max_element(table_.begin(), table_.end());
}

ConcaveCurveValuation::ConcaveCurveValuation(std::vector<double> xs,
                                             std::vector<double> ys)
    : xs_(std::move(xs)), ys_(std::move(ys)) {
  if (xs_.size() < 2 || xs_.size() != ys_.size())
    throw DomainError("concave curve needs at least two matching breakpoints");
  if (xs_[0] != 0.0 || std::fabs(ys_[0]) > kTolerance)
    throw DomainError("concave curve must start at (0, 0)");
  double slope = kInf;
  for (std::size_t k = 1; k < xs_.size(); ++k) {
    if (!(xs_[k] > xs_[k - 1])) throw DomainError("concave curve breakpoints must increase");
    const double s = (ys_[k] - ys_[k - 1]) / (xs_[k] - xs_[k - 1]);
    if (s < -kTolerance) throw DomainError("concave curve must be nondecreasing");
    if (s > slope + kTolerance) throw DomainError("concave curve must be concave");
    slope = s;
  }
}

double ConcaveCurveValuation::at(double share) const {
  if (share <= 0.0) return 0.0;
  if (share >= xs_.back()) return ys_.back();
  const auto it = std::upper_bound(xs_.begin(), xs_.end(), share);
  const std::size_t k = static_cast<std::size_t>(it - xs_.begin());
  const double w = (share - xs_[k - 1]) / (xs_[k] - xs_[k - 1]);
  return ys_[k - 1] + w * (ys_[k] - ys_[k - 1]);
}

double ConcaveCurveValuation::value(std::span<const double> allocation) const {
  if (allocation.size() != 1) throw DomainError("bandwidth allocation must be one share");
  if (allocation[0] < -kTolerance || allocation[0] > xs_.back() + kTolerance)
    throw DomainError("bandwidth share outside [0, C]");
  return at(allocation[0]);
}

double AdditiveComponent::evaluate(const ProductSpace& space,
                                   std::size_t point) const {
  double s = 0.0;
  for (int j = 0; j < space.dims(); ++j) s += values[j][space.digit(point, j)];
  return s;
}

double XosRepresentation::evaluate(const ProductSpace& space,
                                   std::size_t point) const {
  double best = 0.0;
  for (const auto& c : components) best = std::max(best, c.evaluate(space, point));
  return best;
}

std::size_t XosRepresentation::argmax(const ProductSpace& space,
                                      std::size_t point) const {
  if (components.empty()) throw DomainError("XOS representation has no components");
  std::size_t best = 0;
  double best_value = -kInf;
  for (std::size_t l = 0; l < components.size(); ++l) {
    const double v = components[l].evaluate(space, point);
    if (v > best_value + kTolerance) {
      best_value = v;
      best = l;
    }
  }
  return best;
}

CoordinateOrder order_from_pairs(int size,
                                 const std::vector<std::pair<int, int>>& pairs) {
  CoordinateOrder o;
  o.geq.assign(size, std::vector<char>(size, 0));
  for (int a = 0; a < size; ++a) o.geq[a][a] = 1;
  for (auto [a, b] : pairs) {
    if (a < 0 || b < 0 || a >= size || b >= size)
      throw DomainError("order pair out of range");
    o.geq[a][b] = 1;
  }
  for (int k = 0; k < size; ++k)
    for (int a = 0; a < size; ++a)
      for (int b = 0; b < size; ++b)
        if (o.geq[a][k] && o.geq[k][b]) o.geq[a][b] = 1;
  for (int a = 0; a < size; ++a)
    for (int b = 0; b < size; ++b)
      if (a != b && o.geq[a][b] && o.geq[b][a])
        throw DomainError("order is not antisymmetric");

  // Meet: the greatest common lower bound, if any; join symmetrically.
  auto bound = [&](int a, int b, bool lower) -> int {
    std::vector<int> common;
    for (int c = 0; c < size; ++c) {
      const bool ok = lower ? (o.geq[a][c] && o.geq[b][c]) : (o.geq[c][a] && o.geq[c][b]);
      if (ok) common.push_back(c);
    }
    for (int c : common) {
      bool extreme = true;
      for (int d : common) extreme = extreme && (lower ? o.geq[c][d] : o.geq[d][c]);
      if (extreme) return c;
    }
    return -1;
  };
  std::vector<std::vector<int>> meet(size, std::vector<int>(size));
  std::vector<std::vector<int>> join(size, std::vector<int>(size));
  for (int a = 0; a < size; ++a) {
    for (int b = 0; b < size; ++b) {
      meet[a][b] = bound(a, b, true);
      join[a][b] = bound(a, b, false);
      if (meet[a][b] < 0 || join[a][b] < 0) return o;
    }
  }
  o.meet = std::move(meet);
  o.join = std::move(join);
  return o;
}

CoordinateOrder chain_order(int size) {
  std::vector<std::pair<int, int>> pairs;
  for (int a = 1; a < size; ++a) pairs.emplace_back(a, a - 1);
  return order_from_pairs(size, pairs);
}

PartialOrderSpec chain_orders(const ProductSpace& space) {
  PartialOrderSpec spec;
  for (int j = 0; j < space.dims(); ++j) spec.coords.push_back(chain_order(space.extent(j)));
  return spec;
}

bool PartialOrderSpec::is_lattice() const {
  return std::all_of(coords.begin(), coords.end(),
                     [](const CoordinateOrder& o) { return o.is_lattice(); });
}

bool PartialOrderSpec::is_distributive() const {
  if (!is_lattice()) return false;
  for (const auto& o : coords) {
    const int n = static_cast<int>(o.geq.size());
    for (int a = 0; a < n; ++a)
      for (int b = 0; b < n; ++b)
        for (int c = 0; c < n; ++c)
          if (o.meet[a][o.join[b][c]] != o.join[o.meet[a][b]][o.meet[a][c]])
            return false;
  }
  return true;
}

bool PartialOrderSpec::geq(const ProductSpace& space, std::size_t a,
                           std::size_t b) const {
  for (int j = 0; j < space.dims(); ++j)
    if (!coords[j].geq[space.digit(a, j)][space.digit(b, j)]) return false;
  return true;
}

std::size_t PartialOrderSpec::meet(const ProductSpace& space, std::size_t a,
                                   std::size_t b) const {
  std::size_t out = a;
  for (int j = 0; j < space.dims(); ++j)
    out = space.with_digit(out, j, coords[j].meet[space.digit(a, j)][space.digit(b, j)]);
  return out;
}

std::size_t PartialOrderSpec::join(const ProductSpace& space, std::size_t a,
                                   std::size_t b) const {
  std::size_t out = a;
  for (int j = 0; j < space.dims(); ++j)
    out = space.with_digit(out, j, coords[j].join[space.digit(a, j)][space.digit(b, j)]);
  return out;
}

namespace {

void check_domain(const TabulatedValuation& v) {
  if (v.space().size() > kValuationDomainCap)
    throw SizeError("valuation domain " + std::to_string(v.space().size()) +
                        " exceeds cap " + std::to_string(kValuationDomainCap),
                    v.space().size(), kValuationDomainCap);
}

// Solves max sum_j t_j s.t. sum_{j in match(x)} t_j <= v(x) for all x,
// t >= 0, where match(x) is the set of coordinates on which x covers x*.
// Rows sharing a match pattern collapse to the tightest one.
template <class Covers>
std::vector<double> cover_dual(const TabulatedValuation& v, std::size_t target,
                               Covers covers) {
  const auto& space = v.space();
  const int m = space.dims();
  std::vector<double> tightest(std::size_t{1} << m, kInf);
  for (std::size_t x = 0; x < space.size(); ++x) {
    std::uint32_t mask = 0;
    for (int j = 0; j < m; ++j)
      if (covers(j, space.digit(x, j), space.digit(target, j))) mask |= 1u << j;
    tightest[mask] = std::min(tightest[mask], v.at(x));
  }
  lp::LinearProgram prog(lp::Sense::kMaximize, std::vector<double>(m, 1.0));
  for (std::uint32_t mask = 1; mask < tightest.size(); ++mask) {
    if (tightest[mask] == kInf) continue;
    std::vector<double> row(m, 0.0);
    for (int j = 0; j < m; ++j)
      if (mask & (1u << j)) row[j] = 1.0;
    prog.add(row, lp::Relation::kLessEqual, tightest[mask]);
  }
  const auto res = lp::solve(prog);
  if (res.status != lp::Status::kOptimal)
    throw NumericError("cover LP did not reach an optimum: " + lp::to_string(res.status));
  std::vector<double> t = res.point;
  for (double& x : t) x = std::max(0.0, x);
  return t;
}

double ratio(double value, double represented) {
  if (value <= kTolerance) return 1.0;
  if (represented <= kTolerance) return kInf;
  return std::max(1.0, value / represented);
}

// Tight beta for a representation (1 when it is exact).
double tight_beta(const XosRepresentation& rep, const TabulatedValuation& v) {
  double beta = 1.0;
  for (std::size_t x = 0; x < v.space().size(); ++x)
    beta = std::max(beta, ratio(v.at(x), rep.evaluate(v.space(), x)));
  return beta;
}

AdditiveComponent zero_component(const ProductSpace& space) {
  AdditiveComponent c;
  for (int j = 0; j < space.dims(); ++j) c.values.emplace_back(space.extent(j), 0.0);
  return c;
}

template <class Covers>
XosRepresentation xos_from_cover(const TabulatedValuation& v, Covers covers) {
  check_domain(v);
  const auto& space = v.space();
  XosRepresentation rep;
  rep.beta = 1.0;
  for (std::size_t x = 0; x < space.size(); ++x) {
    const auto t = cover_dual(v, x, covers);
    AdditiveComponent c = zero_component(space);
    for (int j = 0; j < space.dims(); ++j)
      for (int d = 0; d < space.extent(j); ++d)
        if (covers(j, d, space.digit(x, j))) c.values[j][d] = t[j];
    rep.component_of.push_back(rep.components.size());
    rep.components.push_back(std::move(c));
    double sum = 0.0;
    for (double tj : t) sum += tj;
    rep.beta = std::max(rep.beta, ratio(v.at(x), sum));
  }
  return rep;
}

std::string mask_string(std::uint32_t mask, int m) {
  std::string s = "{";
  bool first = true;
  for (int j = 0; j < m; ++j) {
    if (!(mask & (1u << j))) continue;
    if (!first) s += ",";
    s += std::to_string(j + 1);
    first = false;
  }
  return s + "}";
}

std::string point_string(const ProductSpace& space, std::size_t x) {
  std::ostringstream os;
  os << "(";
  const auto ls = space.labels(x);
  for (std::size_t j = 0; j < ls.size(); ++j) os << (j ? "," : "") << ls[j];
  os << ")";
  return os.str();
}

void require_bottoms(const TabulatedValuation& v) {
  if (!v.space().has_bottoms())
    throw DomainError("operation requires bottom labels on every coordinate");
}

}  // namespace

double check_fractionally_subadditive(const TabulatedValuation& v) {
  return xos_from_fractional(v).beta;
}

XosRepresentation xos_from_fractional(const TabulatedValuation& v) {
  auto rep = xos_from_cover(v, [](int, int d, int target) { return d == target; });
  const auto check = verify_xos(rep, v, 1e-7);
  if (!check.pass)
    throw NumericError("fractional XOS construction failed its sandwich check");
  return rep;
}

XosRepresentation xos_monotone(const TabulatedValuation& v,
                               const PartialOrderSpec& order) {
  const auto& space = v.space();
  if (static_cast<int>(order.coords.size()) != space.dims())
    throw DomainError("order dimension differs from the valuation's space");
  std::size_t hi = 0, lo = 0;
  if (!is_monotone(v, order, &hi, &lo))
    throw DomainError("valuation is not monotone: v" + point_string(space, hi) +
                      " < v" + point_string(space, lo));
  auto rep = xos_from_cover(v, [&](int j, int d, int target) {
    return order.coords[j].geq[d][target] != 0;
  });
  if (!verify_xos(rep, v, 1e-7).pass)
    throw NumericError("monotone XOS construction failed its sandwich check");
  return rep;
}

XosRepresentation xos_from_submodular(const TabulatedValuation& v) {
  require_bottoms(v);
  check_domain(v);
  const auto classes = check_set_classes(v);
  if (!classes.set_monotone)
    throw DomainError("valuation is not set-monotone: " + classes.monotone_witness);
  if (!classes.set_submodular)
    throw DomainError("valuation is not set-submodular: " + classes.submodular_witness);
  const auto& space = v.space();
  const int m = space.dims();
  XosRepresentation rep;
  for (std::size_t x = 0; x < space.size(); ++x) {
    AdditiveComponent c = zero_component(space);
    std::uint32_t prefix = 0;
    for (int j = 0; j < m; ++j) {
      const double before = v.at(space.restrict(x, prefix));
      prefix |= 1u << j;
      c.values[j][space.digit(x, j)] = v.at(space.restrict(x, prefix)) - before;
    }
    rep.component_of.push_back(rep.components.size());
    rep.components.push_back(std::move(c));
  }
  rep.beta = 1.0;
  const auto check = verify_xos(rep, v, 1e-7);
  if (!check.pass)
    throw NumericError("marginal XOS construction failed its sandwich check at " +
                       point_string(space, check.witness));
  return rep;
}

double harmonic_number(int m) {
  double h = 0.0;
  for (int k = 1; k <= m; ++k) h += 1.0 / k;
  return h;
}

XosRepresentation xos_from_subadditive(const TabulatedValuation& v) {
  require_bottoms(v);
  check_domain(v);
  const auto classes = check_set_classes(v);
  if (!classes.set_monotone)
    throw DomainError("valuation is not set-monotone: " + classes.monotone_witness);
  if (!classes.set_subadditive)
    throw DomainError("valuation is not set-subadditive: " + classes.subadditive_witness);
  const auto& space = v.space();
  const int m = space.dims();
  const double hm = harmonic_number(m);
  const std::uint32_t full = (1u << m) - 1;

  // Candidate sets ordered by size, then lexicographically by element list.
  std::vector<std::uint32_t> order;
  for (std::uint32_t a = 1; a <= full; ++a) order.push_back(a);
  auto elements = [m](std::uint32_t a) {
    std::vector<int> e;
    for (int j = 0; j < m; ++j)
      if (a & (1u << j)) e.push_back(j);
    return e;
  };
  std::stable_sort(order.begin(), order.end(), [&](std::uint32_t a, std::uint32_t b) {
    const int pa = std::popcount(a), pb = std::popcount(b);
    if (pa != pb) return pa < pb;
    return elements(a) < elements(b);
  });

  XosRepresentation rep;
  for (std::size_t x = 0; x < space.size(); ++x) {
    AdditiveComponent c = zero_component(space);
    std::uint32_t covered = 0;
    while (covered != full) {
      std::uint32_t pick = 0;
      double best = kInf;
      for (std::uint32_t a : order) {
        const int fresh = std::popcount(a & ~covered);
        if (fresh == 0) continue;
        const double r = v.at(space.restrict(x, a)) / fresh;
        if (r < best - 1e-12) {
          best = r;
          pick = a;
        }
      }
      const std::uint32_t added = pick & ~covered;
      const double share = v.at(space.restrict(x, pick)) / (std::popcount(added) * hm);
      for (int j = 0; j < m; ++j)
        if (added & (1u << j)) c.values[j][space.digit(x, j)] = share;
      covered |= pick;
    }
    rep.component_of.push_back(rep.components.size());
    rep.components.push_back(std::move(c));
  }
  rep.beta = tight_beta(rep, v);
  if (rep.beta > hm + 1e-9)
    throw NumericError("subadditive XOS construction exceeded the harmonic bound");
  if (!verify_xos(rep, v, 1e-7).pass)
    throw NumericError("subadditive XOS construction failed its sandwich check");
  return rep;
}

bool is_monotone(const TabulatedValuation& v, const PartialOrderSpec& order,
                 std::size_t* witness_hi, std::size_t* witness_lo) {
  const auto& space = v.space();
  for (std::size_t a = 0; a < space.size(); ++a) {
    for (std::size_t b = 0; b < space.size(); ++b) {
      if (a == b || !order.geq(space, a, b)) continue;
      if (v.at(a) < v.at(b) - kTolerance) {
        if (witness_hi) *witness_hi = a;
        if (witness_lo) *witness_lo = b;
        return false;
      }
    }
  }
  return true;
}

DiminishingReport check_diminishing(const TabulatedValuation& v,
                                    const PartialOrderSpec& lattice) {
  const auto& space = v.space();
  if (!lattice.is_lattice()) throw DomainError("check_diminishing needs lattice tables");
  if (static_cast<int>(lattice.coords.size()) != space.dims())
    throw DomainError("lattice dimension differs from the valuation's space");
  check_domain(v);
  DiminishingReport report;
  const std::size_t n = space.size();
  for (std::size_t y = 0; y < n && report.diminishing; ++y) {
    for (std::size_t z = 0; z < n && report.diminishing; ++z) {
      if (!lattice.geq(space, z, y)) continue;
      for (std::size_t t = 0; t < n; ++t) {
        const double gain_y = v.at(lattice.join(space, t, y)) - v.at(y);
        const double gain_z = v.at(lattice.join(space, t, z)) - v.at(z);
        if (gain_y < gain_z - kTolerance) {
          report.diminishing = false;
          report.diminishing_witness = {t, y, z};
          break;
        }
      }
    }
  }
  for (std::size_t a = 0; a < n && report.lattice_submodular; ++a) {
    for (std::size_t b = a + 1; b < n; ++b) {
      const double lhs = v.at(lattice.join(space, a, b)) + v.at(lattice.meet(space, a, b));
      if (lhs > v.at(a) + v.at(b) + kTolerance) {
        report.lattice_submodular = false;
        report.submodular_witness = {a, b};
        break;
      }
    }
  }
  return report;
}

XosRepresentation xos_lattice_capped_marginals(const TabulatedValuation& v,
                                               const PartialOrderSpec& lattice) {
  require_bottoms(v);
  const auto& space = v.space();
  if (!lattice.is_distributive())
    throw DomainError("capped marginals need a distributive lattice");
  std::size_t hi = 0, lo = 0;
  if (!is_monotone(v, lattice, &hi, &lo))
    throw DomainError("valuation is not monotone: v" + point_string(space, hi) +
                      " < v" + point_string(space, lo));
  const auto dim = check_diminishing(v, lattice);
  if (!dim.diminishing) {
    const auto& w = dim.diminishing_witness;
    throw DomainError("valuation lacks diminishing marginal returns at t=" +
                      point_string(space, w[0]) + ", y=" + point_string(space, w[1]) +
                      ", z=" + point_string(space, w[2]));
  }
  const int m = space.dims();
  XosRepresentation rep;
  for (std::size_t x = 0; x < space.size(); ++x) {
    AdditiveComponent c = zero_component(space);
    std::uint32_t prefix = 0;
    for (int j = 0; j < m; ++j) {
      const std::size_t base = space.restrict(x, prefix);
      const double before = v.at(base);
      const int xj = space.digit(x, j);
      for (int d = 0; d < space.extent(j); ++d) {
        const int capped = lattice.coords[j].meet[d][xj];
        c.values[j][d] = v.at(space.with_digit(base, j, capped)) - before;
      }
      prefix |= 1u << j;
    }
    // Each component must itself have diminishing returns on its chain.
    for (int j = 0; j < m; ++j) {
      const auto& o = lattice.coords[j];
      const int e = space.extent(j);
      for (int y = 0; y < e; ++y)
        for (int z = 0; z < e; ++z) {
          if (!o.geq[z][y]) continue;
          for (int t = 0; t < e; ++t) {
            const double gy = c.values[j][o.join[t][y]] - c.values[j][y];
            const double gz = c.values[j][o.join[t][z]] - c.values[j][z];
            if (gy < gz - 1e-7)
              throw NumericError("capped marginal component lost diminishing returns");
          }
        }
    }
    rep.component_of.push_back(rep.components.size());
    rep.components.push_back(std::move(c));
  }
  rep.beta = 1.0;
  if (!verify_xos(rep, v, 1e-7).pass)
    throw NumericError("capped marginal construction failed its sandwich check");
  return rep;
}

TabulatedValuation cap_valuation(const TabulatedValuation& v, double budget) {
  if (!(budget >= 0.0)) throw DomainError("budget must be nonnegative");
  std::vector<double> table = v.table();
  for (double& x : table) x = std::min(x, budget);
  return TabulatedValuation(v.space(), std::move(table));
}

XosRepresentation cap_xos(const XosRepresentation& rep, const ProductSpace& space,
                          double budget) {
  if (rep.beta > 1.0 + 1e-9)
    throw DomainError("cap_xos requires an exact XOS representation (beta = 1)");
  if (!(budget >= 0.0)) throw DomainError("budget must be nonnegative");
  const int m = space.dims();
  XosRepresentation out;
  out.beta = 1.0;
  for (std::size_t x = 0; x < space.size(); ++x) {
    const auto& c = rep.components[rep.argmax(space, x)];
    AdditiveComponent capped = zero_component(space);
    double prefix = 0.0;
    for (int j = 0; j < m; ++j) {
      const double own = c.values[j][space.digit(x, j)];
      const double room = std::max(0.0, budget - prefix);
      for (int d = 0; d < space.extent(j); ++d)
        capped.values[j][d] = std::min({c.values[j][d], own, room});
      prefix += own;
    }
    out.component_of.push_back(out.components.size());
    out.components.push_back(std::move(capped));
  }
  return out;
}

XosCheck verify_xos(const XosRepresentation& rep, const TabulatedValuation& v,
                    double tolerance) {
  XosCheck check;
  const auto& space = v.space();
  for (std::size_t x = 0; x < space.size(); ++x) {
    const double r = rep.evaluate(space, x);
    if (r > v.at(x) + tolerance) {
      check = {false, x, "upper", r - v.at(x)};
      return check;
    }
    if (v.at(x) > rep.beta * r + tolerance) {
      check = {false, x, "lower", v.at(x) - rep.beta * r};
      return check;
    }
  }
  return check;
}

SetClasses check_set_classes(const TabulatedValuation& v) {
  require_bottoms(v);
  check_domain(v);
  const auto& space = v.space();
  const int m = space.dims();
  const std::uint32_t full = (1u << m) - 1;
  SetClasses out;
  std::vector<double> w(full + 1);
  for (std::size_t x = 0; x < space.size(); ++x) {
    for (std::uint32_t s = 0; s <= full; ++s) w[s] = v.at(space.restrict(x, s));
    const std::string at = "x=" + point_string(space, x);
    for (std::uint32_t s = 0; s <= full; ++s) {
      for (std::uint32_t t = 0; t <= full; ++t) {
        if (out.set_subadditive && w[s] + w[t] < w[s | t] - kTolerance) {
          out.set_subadditive = false;
          out.subadditive_witness =
              at + ", S1=" + mask_string(s, m) + ", S2=" + mask_string(t, m);
        }
        if ((s & t) != s) continue;
        if (out.set_monotone && w[s] > w[t] + kTolerance) {
          out.set_monotone = false;
          out.monotone_witness = at + ", S=" + mask_string(s, m) + ", T=" + mask_string(t, m);
        }
        for (int j = 0; j < m && out.set_submodular; ++j) {
          const std::uint32_t bit = 1u << j;
          if (t & bit) continue;
          if (w[s | bit] - w[s] < w[t | bit] - w[t] - kTolerance) {
            out.set_submodular = false;
            out.submodular_witness = at + ", S=" + mask_string(s, m) + ", T=" +
                                     mask_string(t, m) + ", j=" + std::to_string(j + 1);
          }
        }
      }
    }
  }
  return out;
}

namespace {

std::vector<double> zero_at_bottom(const ProductSpace& space, std::vector<double> table) {
  if (space.has_bottoms()) table[space.bottom_point()] = 0.0;
  return table;
}

std::vector<std::vector<double>> random_weights(const ProductSpace& space,
                                                std::mt19937_64& rng, double scale) {
  std::uniform_real_distribution<double> u(0.0, scale);
  std::vector<std::vector<double>> w(space.dims());
  for (int j = 0; j < space.dims(); ++j) {
    w[j].resize(space.extent(j));
    for (int d = 0; d < space.extent(j); ++d) w[j][d] = u(rng);
    if (space.coordinate(j).bottom) w[j][*space.coordinate(j).bottom] = 0.0;
  }
  return w;
}

}  // namespace

TabulatedValuation random_additive(const ProductSpace& space, std::mt19937_64& rng,
                                   double scale) {
  const auto w = random_weights(space, rng, scale);
  std::vector<double> table(space.size());
  for (std::size_t x = 0; x < space.size(); ++x)
    for (int j = 0; j < space.dims(); ++j) table[x] += w[j][space.digit(x, j)];
  return TabulatedValuation(space, zero_at_bottom(space, std::move(table)));
}

TabulatedValuation random_xos(const ProductSpace& space, int components,
                              std::mt19937_64& rng, double scale) {
  std::vector<double> table(space.size(), 0.0);
  for (int l = 0; l < components; ++l) {
    const auto w = random_weights(space, rng, scale);
    for (std::size_t x = 0; x < space.size(); ++x) {
      double s = 0.0;
      for (int j = 0; j < space.dims(); ++j) s += w[j][space.digit(x, j)];
      table[x] = std::max(table[x], s);
    }
  }
  return TabulatedValuation(space, zero_at_bottom(space, std::move(table)));
}

TabulatedValuation random_submodular(const ProductSpace& space, std::mt19937_64& rng,
                                     double scale) {
  const auto w = random_weights(space, rng, 1.5);
  std::uniform_real_distribution<double> curvature(0.3, 2.0);
  const double c = curvature(rng);
  std::vector<double> table(space.size());
  for (std::size_t x = 0; x < space.size(); ++x) {
    double s = 0.0;
    for (int j = 0; j < space.dims(); ++j) s += w[j][space.digit(x, j)];
    table[x] = scale * (1.0 - std::exp(-c * s)) / c;
  }
  return TabulatedValuation(space, zero_at_bottom(space, std::move(table)));
}

TabulatedValuation random_table(const ProductSpace& space, std::mt19937_64& rng,
                                double scale) {
  std::uniform_real_distribution<double> u(0.0, scale);
  std::vector<double> table(space.size());
  for (double& x : table) x = u(rng);
  return TabulatedValuation(space, zero_at_bottom(space, std::move(table)));
}

TabulatedValuation random_lattice_submodular(const ProductSpace& space,
                                             std::mt19937_64& rng, double scale) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<std::vector<double>> w(space.dims());
  for (int j = 0; j < space.dims(); ++j) {
    w[j].assign(space.extent(j), 0.0);
    for (int d = 1; d < space.extent(j); ++d) w[j][d] = w[j][d - 1] + u(rng);
  }
  const double c = 0.3 + 1.7 * u(rng);
  std::vector<double> table(space.size());
  for (std::size_t x = 0; x < space.size(); ++x) {
    double s = 0.0;
    for (int j = 0; j < space.dims(); ++j) s += w[j][space.digit(x, j)];
    table[x] = scale * (1.0 - std::exp(-c * s)) / c;
  }
  return TabulatedValuation(space, zero_at_bottom(space, std::move(table)));
}

}  // namespace smoothmech
