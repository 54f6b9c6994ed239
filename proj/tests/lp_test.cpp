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

#include "smoothmech/lp.hpp"

#include <cmath>
#include <random>
#include <vector>

#include "doctest.h"

namespace smoothmech::lp {
namespace {

// Brute-force vertex enumeration for max c.x s.t. A x <= b, x >= 0 in
// dimension 2 or 3. Independent of the simplex path.
double vertex_oracle(const std::vector<std::vector<double>>& a,
                     const std::vector<double>& b, const std::vector<double>& c) {
  const std::size_t n = c.size();
  std::vector<std::vector<double>> rows = a;
  std::vector<double> rhs = b;
  for (std::size_t j = 0; j < n; ++j) {
    std::vector<double> e(n, 0.0);
    e[j] = -1.0;
    rows.push_back(e);
    rhs.push_back(0.0);
  }
  double best = -kInf;
  const std::size_t m = rows.size();
  std::vector<std::size_t> pick(n);
  auto solve_square = [&](std::vector<std::vector<double>> mtx,
                          std::vector<double> y, std::vector<double>& x) {
    for (std::size_t col = 0; col < n; ++col) {
      std::size_t piv = col;
      for (std::size_t r = col; r < n; ++r) {
        if (std::fabs(mtx[r][col]) > std::fabs(mtx[piv][col])) piv = r;
      }
      if (std::fabs(mtx[piv][col]) < 1e-12) return false;
      std::swap(mtx[piv], mtx[col]);
      std::swap(y[piv], y[col]);
      for (std::size_t r = 0; r < n; ++r) {
        if (r == col) continue;
        const double f = mtx[r][col] / mtx[col][col];
        for (std::size_t k = 0; k < n; ++k) mtx[r][k] -= f * mtx[col][k];
        y[r] -= f * y[col];
      }
    }
    x.resize(n);
    for (std::size_t r = 0; r < n; ++r) x[r] = y[r] / mtx[r][r];
    return true;
  };
  std::vector<bool> mask(m, false);
  std::fill(mask.begin(), mask.begin() + static_cast<long>(n), true);
  do {
    std::vector<std::vector<double>> mtx;
    std::vector<double> y;
    for (std::size_t r = 0; r < m; ++r) {
      if (mask[r]) {
        mtx.push_back(rows[r]);
        y.push_back(rhs[r]);
      }
    }
    std::vector<double> x;
    if (!solve_square(mtx, y, x)) continue;
    bool feasible = true;
    for (std::size_t r = 0; r < m && feasible; ++r) {
      double lhs = 0.0;
      for (std::size_t j = 0; j < n; ++j) lhs += rows[r][j] * x[j];
      feasible = lhs <= rhs[r] + 1e-9;
    }
    if (!feasible) continue;
    double val = 0.0;
    for (std::size_t j = 0; j < n; ++j) val += c[j] * x[j];
    best = std::max(best, val);
  } while (std::prev_permutation(mask.begin(), mask.end()));
  return best;
}

TEST_CASE("small maximization from the XOS cover dual") {
  LinearProgram p(Sense::kMaximize, {1.0, 1.0});
  p.add({1.0, 0.0}, Relation::kLessEqual, 1.0);
  p.add({0.0, 1.0}, Relation::kLessEqual, 1.0);
  p.add({1.0, 1.0}, Relation::kLessEqual, 1.5);
  const Result r = solve(p);
  REQUIRE(r.status == Status::kOptimal);
  CHECK(r.value == doctest::Approx(1.5).epsilon(1e-12));
  CHECK(r.point[0] + r.point[1] == doctest::Approx(1.5));
}

TEST_CASE("infeasible and unbounded programs are reported") {
  LinearProgram infeasible(Sense::kMinimize, {0.0});
  infeasible.add({1.0}, Relation::kGreaterEqual, 1.0);
  infeasible.add({1.0}, Relation::kLessEqual, 0.0);
  CHECK(solve(infeasible).status == Status::kInfeasible);

  LinearProgram unbounded(Sense::kMaximize, {1.0});
  CHECK(solve(unbounded).status == Status::kUnbounded);
}

TEST_CASE("equality rows, free variables and finite bounds") {
  // min x - y s.t. x + y = 2, x free, -1 <= y <= 3
  LinearProgram p(Sense::kMinimize, {1.0, -1.0});
  p.set_bounds(0, -kInf, kInf);
  p.set_bounds(1, -1.0, 3.0);
  p.add({1.0, 1.0}, Relation::kEqual, 2.0);
  const Result r = solve(p);
  REQUIRE(r.status == Status::kOptimal);
  CHECK(r.value == doctest::Approx(-4.0));
  CHECK(r.point[0] == doctest::Approx(-1.0));
  CHECK(r.point[1] == doctest::Approx(3.0));
}

TEST_CASE("dimension cap and malformed programs throw") {
  LinearProgram p(Sense::kMaximize, {1.0, 2.0, 3.0});
  Options tiny;
  tiny.max_variables = 2;
  CHECK_THROWS_AS(solve(p, tiny), SizeError);
  p.add({1.0}, Relation::kLessEqual, 1.0);
  CHECK_THROWS_AS(solve(p), DomainError);
}

TEST_CASE("random programs agree with vertex enumeration and weak duality") {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> coef(-1.0, 2.0);
  std::uniform_real_distribution<double> pos(0.5, 3.0);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 2 + trial % 2;
    const std::size_t m = 2 + trial % 4;
    std::vector<std::vector<double>> a(m, std::vector<double>(n));
    std::vector<double> b(m), c(n);
    for (auto& row : a) {
      for (double& x : row) x = coef(rng);
    }
    for (double& x : b) x = pos(rng);
    for (double& x : c) x = coef(rng);
    // Box rows keep every instance bounded.
    for (std::size_t j = 0; j < n; ++j) {
      std::vector<double> e(n, 0.0);
      e[j] = 1.0;
      a.push_back(e);
      b.push_back(4.0);
    }
    LinearProgram p(Sense::kMaximize, c);
    for (std::size_t r = 0; r < a.size(); ++r) {
      p.add(a[r], Relation::kLessEqual, b[r]);
    }
    const Result r = solve(p);
    REQUIRE(r.status == Status::kOptimal);
    CHECK(r.value == doctest::Approx(vertex_oracle(a, b, c)).epsilon(1e-9));
    for (std::size_t row = 0; row < a.size(); ++row) {
      double lhs = 0.0;
      for (std::size_t j = 0; j < n; ++j) lhs += a[row][j] * r.point[j];
      CHECK(lhs <= b[row] + 1e-7);
    }
    // The reported duals form a feasible dual point bounding the primal.
    double dual_value = 0.0;
    for (std::size_t row = 0; row < a.size(); ++row) {
      CHECK(r.duals[row] >= -1e-9);
      dual_value += b[row] * r.duals[row];
    }
    for (std::size_t j = 0; j < n; ++j) {
      double reduced = 0.0;
      for (std::size_t row = 0; row < a.size(); ++row) {
        reduced += a[row][j] * r.duals[row];
      }
      CHECK(reduced >= c[j] - 1e-7);
    }
    CHECK(dual_value == doctest::Approx(r.value).epsilon(1e-6));
  }
}

TEST_CASE("degenerate cycling-prone program terminates") {
  // Beale's classic cycling example under Dantzig's rule.
  LinearProgram p(Sense::kMaximize, {0.75, -20.0, 0.5, -6.0});
  p.add({0.25, -8.0, -1.0, 9.0}, Relation::kLessEqual, 0.0);
  p.add({0.5, -12.0, -0.5, 3.0}, Relation::kLessEqual, 0.0);
  p.add({0.0, 0.0, 1.0, 0.0}, Relation::kLessEqual, 1.0);
  const Result r = solve(p);
  REQUIRE(r.status == Status::kOptimal);
  CHECK(r.value == doctest::Approx(1.25));
}

TEST_CASE("solving twice is bit-identical") {
  LinearProgram p(Sense::kMinimize, {2.0, 3.0, 1.0});
  p.add({1.0, 1.0, 1.0}, Relation::kEqual, 1.0);
  p.add({1.0, -1.0, 0.0}, Relation::kGreaterEqual, 0.1);
  const Result a = solve(p);
  const Result b = solve(p);
  CHECK(a.value == b.value);
  CHECK(a.point == b.point);
}

}  // namespace
}  // namespace smoothmech::lp
