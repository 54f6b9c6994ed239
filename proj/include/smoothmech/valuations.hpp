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

#ifndef SMOOTHMECH_VALUATIONS_HPP_
#define SMOOTHMECH_VALUATIONS_HPP_

#include <cstddef>
#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "smoothmech/model.hpp"

namespace smoothmech {

// One coordinate of a product outcome space: finite labels, optional bottom.
struct Coordinate {
  std::vector<double> labels;
  std::optional<int> bottom;  // index into labels
};

// Finite product space X = X_1 x ... x X_m; points are addressed by a flat
// index with coordinate 0 most significant.
class ProductSpace {
 public:
  ProductSpace() = default;
  explicit ProductSpace(std::vector<Coordinate> coordinates);

  int dims() const { return static_cast<int>(coords_.size()); }
  std::size_t size() const { return size_; }
  const Coordinate& coordinate(int j) const { return coords_[j]; }
  int extent(int j) const { return static_cast<int>(coords_[j].labels.size()); }

  std::size_t index(std::span<const int> digits) const;
  void decode(std::size_t point, std::span<int> digits) const;
  int digit(std::size_t point, int j) const {
    return static_cast<int>((point / strides_[j]) % coords_[j].labels.size());
  }
  std::size_t with_digit(std::size_t point, int j, int d) const {
    return point + strides_[j] * d - strides_[j] * digit(point, j);
  }
  std::optional<std::size_t> find(std::span<const double> labels) const;
  Allocation labels(std::size_t point) const;

  bool has_bottoms() const;
  // Point with every coordinate at bottom; requires has_bottoms().
  std::size_t bottom_point() const;
  // x_S: x on coordinates in `mask`, bottom elsewhere.
  std::size_t restrict(std::size_t point, std::uint32_t mask) const;

  bool operator==(const ProductSpace& other) const;

 private:
  std::vector<Coordinate> coords_;
  std::vector<std::size_t> strides_;
  std::size_t size_ = 0;
};

// Single coordinate {0, 1, ..., n-1} with bottom 0.
ProductSpace chain_space(int dims, int extent);

class TabulatedValuation : public Valuation {
 public:
  TabulatedValuation(ProductSpace space, std::vector<double> table);

  double value(std::span<const double> allocation) const override;
  double max_value() const override;

  double at(std::size_t point) const { return table_[point]; }
  const std::vector<double>& table() const { return table_; }
  const ProductSpace& space() const { return space_; }

 private:
  ProductSpace space_;
  std::vector<double> table_;
};

using TabulatedPtr = std::shared_ptr<const TabulatedValuation>;

// Concave piecewise-linear value of a continuous share in [0, C], v(0) = 0.
class ConcaveCurveValuation : public Valuation {
 public:
  // xs strictly increasing from 0; ys[0] == 0; slopes non-increasing.
  ConcaveCurveValuation(std::vector<double> xs, std::vector<double> ys);

  double value(std::span<const double> allocation) const override;
  double max_value() const override { return ys_.back(); }
  double at(double share) const;

  const std::vector<double>& xs() const { return xs_; }
  const std::vector<double>& ys() const { return ys_; }

 private:
  std::vector<double> xs_;
  std::vector<double> ys_;
};

// Per-coordinate value functions indexed by label position.
struct AdditiveComponent {
  std::vector<std::vector<double>> values;
  double evaluate(const ProductSpace& space, std::size_t point) const;
};

struct XosRepresentation {
  std::vector<AdditiveComponent> components;
  double beta = 1.0;
  // Index of the component associated with each outcome, when the
  // construction produces one component per outcome.
  std::vector<std::size_t> component_of;

  double evaluate(const ProductSpace& space, std::size_t point) const;
  // Component attaining the maximum at `point` (first on ties).
  std::size_t argmax(const ProductSpace& space, std::size_t point) const;
};

// Coordinate-wise partial orders; geq[j][a][b] is true iff a >= b on X_j.
// Meet and join tables are derived when every pair has them.
struct CoordinateOrder {
  std::vector<std::vector<char>> geq;
  std::vector<std::vector<int>> meet;
  std::vector<std::vector<int>> join;
  bool is_lattice() const { return !meet.empty(); }
};

struct PartialOrderSpec {
  std::vector<CoordinateOrder> coords;

  bool is_lattice() const;
  bool is_distributive() const;
  bool geq(const ProductSpace& space, std::size_t a, std::size_t b) const;
  std::size_t meet(const ProductSpace& space, std::size_t a, std::size_t b) const;
  std::size_t join(const ProductSpace& space, std::size_t a, std::size_t b) const;
};

// Reflexive-transitive closure of `pairs` (a, b) meaning a >= b.
CoordinateOrder order_from_pairs(int size,
                                 const std::vector<std::pair<int, int>>& pairs);
// Label positions ordered as a chain: index k >= index l iff k >= l.
CoordinateOrder chain_order(int size);
PartialOrderSpec chain_orders(const ProductSpace& space);

inline constexpr std::size_t kValuationDomainCap = 4096;

double check_fractionally_subadditive(const TabulatedValuation& v);
XosRepresentation xos_from_fractional(const TabulatedValuation& v);
XosRepresentation xos_from_submodular(const TabulatedValuation& v);
XosRepresentation xos_from_subadditive(const TabulatedValuation& v);
XosRepresentation xos_monotone(const TabulatedValuation& v,
                               const PartialOrderSpec& order);
XosRepresentation xos_lattice_capped_marginals(const TabulatedValuation& v,
                                               const PartialOrderSpec& lattice);

struct DiminishingReport {
  bool diminishing = true;
  bool lattice_submodular = true;
  // (t, y, z) for a diminishing-returns failure; (x, x~, -) otherwise.
  std::vector<std::size_t> diminishing_witness;
  std::vector<std::size_t> submodular_witness;
  bool holds() const { return diminishing; }
};
DiminishingReport check_diminishing(const TabulatedValuation& v,
                                    const PartialOrderSpec& lattice);

TabulatedValuation cap_valuation(const TabulatedValuation& v, double budget);
XosRepresentation cap_xos(const XosRepresentation& rep,
                          const ProductSpace& space, double budget);

struct XosCheck {
  bool pass = true;
  std::size_t witness = 0;
  std::string side;  // "upper" (component exceeds v) or "lower"
  double gap = 0.0;
};
XosCheck verify_xos(const XosRepresentation& rep, const TabulatedValuation& v,
                    double tolerance = 1e-7);

struct SetClasses {
  bool set_monotone = true;
  bool set_subadditive = true;
  bool set_submodular = true;
  std::string monotone_witness;
  std::string subadditive_witness;
  std::string submodular_witness;
};
SetClasses check_set_classes(const TabulatedValuation& v);
bool is_monotone(const TabulatedValuation& v, const PartialOrderSpec& order,
                 std::size_t* witness_hi = nullptr,
                 std::size_t* witness_lo = nullptr);

double harmonic_number(int m);

// Random generators over a space with bottoms.
TabulatedValuation random_additive(const ProductSpace& space, std::mt19937_64& rng,
                                   double scale = 1.0);
TabulatedValuation random_xos(const ProductSpace& space, int components,
                              std::mt19937_64& rng, double scale = 1.0);
// Set-monotone, set-submodular valuation: a concave function of an additive
// weight of the non-bottom coordinates.
TabulatedValuation random_submodular(const ProductSpace& space,
                                     std::mt19937_64& rng, double scale = 1.0);
TabulatedValuation random_table(const ProductSpace& space, std::mt19937_64& rng,
                                double scale = 1.0);
// Monotone, diminishing-returns valuation on a product of chains.
TabulatedValuation random_lattice_submodular(const ProductSpace& space,
                                             std::mt19937_64& rng,
                                             double scale = 1.0);

}  // namespace smoothmech

#endif  // SMOOTHMECH_VALUATIONS_HPP_
