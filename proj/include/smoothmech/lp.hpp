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

#ifndef SMOOTHMECH_LP_HPP_
#define SMOOTHMECH_LP_HPP_

#include <cstddef>
#include <string>
#include <vector>

#include "smoothmech/common.hpp"

namespace smoothmech::lp {

enum class Sense { kMaximize, kMinimize };
enum class Relation { kLessEqual, kGreaterEqual, kEqual };

struct Constraint {
  std::vector<double> coefficients;
  Relation relation = Relation::kLessEqual;
  double rhs = 0.0;
};

// A dense linear program. Variables default to the bounds [0, +inf).
struct LinearProgram {
  Sense sense = Sense::kMaximize;
  std::vector<double> objective;
  std::vector<Constraint> constraints;
  std::vector<double> lower;
  std::vector<double> upper;

  LinearProgram() = default;
  LinearProgram(Sense s, std::vector<double> c);

  std::size_t num_variables() const { return objective.size(); }
  void add(std::vector<double> coefficients, Relation relation, double rhs);
  void set_bounds(std::size_t var, double lo, double hi);
  // Throws DomainError on inconsistent dimensions or non-finite data.
  void validate() const;
};

enum class Status { kOptimal, kInfeasible, kUnbounded };

std::string to_string(Status status);

struct Result {
  Status status = Status::kInfeasible;
  double value = 0.0;
  std::vector<double> point;
  // Marginal value of each constraint's rhs, in the program's own sense.
  std::vector<double> duals;
  std::size_t iterations = 0;
};

struct Options {
  std::size_t max_variables = 20000;
  std::size_t max_rows = 20000;
  double pivot_tolerance = 1e-9;
  double feasibility_tolerance = 1e-9;
  std::size_t max_iterations = 5'000'000;
};

// Two-phase dense tableau simplex: Dantzig pricing, with Bland's rule during
// runs of degenerate pivots.
Result solve(const LinearProgram& program, const Options& options = {});

}  // namespace smoothmech::lp

#endif  // SMOOTHMECH_LP_HPP_
